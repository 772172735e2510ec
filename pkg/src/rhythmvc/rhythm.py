"""Speaker rhythm profiles: speaking rates and gamma duration models.

A profile holds two global rates (syllable nuclei per second and sonorant
segments per second, both over speech time only) and gamma models of the
duration distributions: one for syllables, one per speech type.  Durations
move between speakers through the source CDF and the target inverse CDF,
which preserves each duration's probability rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma, gammainc, gammaln, polygamma

from .envelope import SyllableSegmentation, detect_extrema, sonority_envelope, syllable_segments
from .featureio import FeatureMatrix, Waveform
from .segmenter import SegmenterModel, SpeechType, TypedSegments, dp_segment, frame_log_probs, speech_regions

MIN_GAMMA_SAMPLES = 10
CDF_CLAMP = 1e-4
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-10


@dataclass(frozen=True)
class GammaModel:
    """Gamma(shape, scale) duration model fitted to n samples; scale in seconds."""

    shape: float
    scale: float
    n: int = 0

    def __post_init__(self) -> None:
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def mode(self) -> float:
        return (self.shape - 1.0) * self.scale if self.shape > 1.0 else 0.0

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        pos = x > 0
        xv = x[pos]
        log_pdf = (
            (self.shape - 1.0) * np.log(xv)
            - xv / self.scale
            - gammaln(self.shape)
            - self.shape * math.log(self.scale)
        )
        out[pos] = np.exp(log_pdf)
        if self.shape == 1.0:
            out[x == 0] = 1.0 / self.scale
        return out

    def cdf(self, x: float) -> float:
        """Regularized lower incomplete gamma at x / scale."""
        if x <= 0:
            return 0.0
        return float(gammainc(self.shape, x / self.scale))

    def ppf(self, u: float) -> float:
        """Inverse CDF by bracketed root-finding, accurate to ~1e-12 relative."""
        if not 0.0 < u < 1.0:
            raise ValueError("probability must lie strictly inside (0, 1)")

        def f(x: float) -> float:
            return self.cdf(x) - u

        hi = self.scale * max(self.shape, 1.0)
        lo = hi
        for _ in range(2000):
            if f(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise RuntimeError("failed to bracket the quantile from above")
        for _ in range(2000):
            if f(lo) <= 0.0 or lo < 1e-280:
                break
            lo *= 0.5
        return float(brentq(f, lo, hi, rtol=1e-12, maxiter=200))

    def log_likelihood(self, durations) -> float:
        d = np.asarray(durations, dtype=np.float64)
        return float(
            np.sum(
                (self.shape - 1.0) * np.log(d)
                - d / self.scale
                - gammaln(self.shape)
                - self.shape * math.log(self.scale)
            )
        )

    def to_dict(self) -> dict:
        return {"shape": float(self.shape), "scale": float(self.scale), "n": int(self.n)}

    @classmethod
    def from_dict(cls, payload: dict) -> "GammaModel":
        return cls(float(payload["shape"]), float(payload["scale"]), int(payload["n"]))


def fit_gamma(durations, min_samples: int = MIN_GAMMA_SAMPLES) -> GammaModel:
    """Maximum-likelihood gamma fit of positive durations.

    The shape estimate starts from the closed-form approximation
    ``k0 = (3 - s + sqrt((s - 3)^2 + 24 s)) / (12 s)`` with
    ``s = ln(mean) - mean(ln d)`` and is refined by Newton iterations on
    ``ln k - digamma(k) = s``; the scale is ``mean / k``.  If Newton fails to
    converge the method-of-moments estimate is used instead.
    """
    d = np.asarray(durations, dtype=np.float64)
    if d.size < min_samples:
        raise ValueError(f"need at least {min_samples} durations, got {d.size}")
    if np.any(d <= 0):
        raise ValueError("durations must be positive")
    if np.unique(d).size < 2:
        raise ValueError("durations are all equal; cannot fit a gamma model")

    mean = float(d.mean())
    s = math.log(mean) - float(np.mean(np.log(d)))
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)

    converged = False
    for _ in range(NEWTON_MAX_ITER):
        f = math.log(k) - float(digamma(k)) - s
        fprime = 1.0 / k - float(polygamma(1, k))
        step = f / fprime
        k_next = k - step
        if not math.isfinite(k_next) or k_next <= 0:
            k_next = k / 2.0
        if abs(k_next - k) <= NEWTON_TOL * k:
            k = k_next
            converged = True
            break
        k = k_next

    if converged:
        return GammaModel(k, mean / k, n=int(d.size))
    variance = float(d.var())
    return GammaModel(mean * mean / variance, variance / mean, n=int(d.size))


def moments_gamma(durations) -> GammaModel:
    """Method-of-moments estimate: shape = m^2 / v, scale = v / m."""
    d = np.asarray(durations, dtype=np.float64)
    mean = float(d.mean())
    variance = float(d.var())
    if variance <= 0:
        raise ValueError("zero variance")
    return GammaModel(mean * mean / variance, variance / mean, n=int(d.size))


def map_duration(d: float, src: GammaModel, tgt: GammaModel, clamp: float = CDF_CLAMP) -> float:
    """Map a duration to the target distribution at the same probability rank.

    The rank is the source CDF value, clamped to [clamp, 1 - clamp] so tail
    durations cannot produce unbounded outputs.
    """
    if d <= 0:
        raise ValueError("duration must be positive")
    u = min(max(src.cdf(d), clamp), 1.0 - clamp)
    return tgt.ppf(u)


@dataclass
class RhythmProfile:
    """Per-speaker rhythm statistics used to drive conversion."""

    speaker_id: str
    syllable_rate: float
    sonorant_rate: float
    syllable_gamma: GammaModel | None = None
    per_type_gamma: dict[SpeechType, GammaModel] = field(default_factory=dict)
    frame_rate: float = 50.0

    MODEL_KIND = "rhythm_profile"

    def __post_init__(self) -> None:
        if self.syllable_rate < 0 or self.sonorant_rate < 0:
            raise ValueError("rates must be >= 0")

    def to_dict(self) -> dict:
        return {
            "speaker_id": self.speaker_id,
            "frame_rate": float(self.frame_rate),
            "syllable_rate": float(self.syllable_rate),
            "sonorant_rate": float(self.sonorant_rate),
            "syllable_gamma": self.syllable_gamma.to_dict() if self.syllable_gamma else None,
            "per_type_gamma": {
                t.name.lower(): g.to_dict() for t, g in sorted(self.per_type_gamma.items())
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RhythmProfile":
        syl = payload["syllable_gamma"]
        return cls(
            speaker_id=str(payload["speaker_id"]),
            syllable_rate=float(payload["syllable_rate"]),
            sonorant_rate=float(payload["sonorant_rate"]),
            syllable_gamma=GammaModel.from_dict(syl) if syl else None,
            per_type_gamma={
                SpeechType[name.upper()]: GammaModel.from_dict(g)
                for name, g in payload["per_type_gamma"].items()
            },
            frame_rate=float(payload["frame_rate"]),
        )


def compute_rates(
    syllable_segs: list[SyllableSegmentation],
    typed_segs: list[TypedSegments],
    frame_rate: float,
) -> tuple[float, float]:
    """Pooled speaking rates: syllable nuclei and sonorant segments per second
    of speech time.  Utterances without any speech region contribute nothing."""
    if len(syllable_segs) != len(typed_segs):
        raise ValueError("per-utterance lists must have equal length")
    if not syllable_segs:
        raise ValueError("need at least one utterance")
    total_peaks = 0
    total_sonorants = 0
    total_time = 0.0
    for syl, typed in zip(syllable_segs, typed_segs):
        regions = speech_regions(typed)
        speech_time = sum(end - start for start, end in regions) / frame_rate
        if speech_time <= 0:
            continue
        total_time += speech_time
        total_peaks += int(syl.nuclei.size)
        total_sonorants += sum(1 for seg in typed.segments if seg.label == SpeechType.SONORANT)
    if total_time <= 0:
        raise ValueError("zero speech time across the corpus")
    return total_peaks / total_time, total_sonorants / total_time


def build_profile(
    utterances: list[tuple[FeatureMatrix, Waveform]],
    segmenter: SegmenterModel,
    speaker_id: str = "",
    frame_rate: float = 50.0,
    gamma: float = 3.0,
    min_samples: int = MIN_GAMMA_SAMPLES,
) -> RhythmProfile:
    """Analyze a speaker's utterances into a rhythm profile.

    Each utterance is typed by the segmenter, its envelope extrema are
    filtered to the speech regions, and syllable durations (peak to peak)
    plus per-type segment durations are pooled before fitting the gamma
    models.  Gamma fields stay empty when too few durations are observed.
    """
    if not utterances:
        raise ValueError("empty corpus")
    syllable_per_utt: list[SyllableSegmentation] = []
    typed_per_utt: list[TypedSegments] = []
    syllable_durations: list[float] = []
    type_durations: dict[SpeechType, list[float]] = {t: [] for t in SpeechType}

    for feat, wave in utterances:
        typed = dp_segment(frame_log_probs(feat, segmenter), gamma)
        regions = speech_regions(typed)
        env = sonority_envelope(wave, frame_rate)
        extrema = detect_extrema(env, regions)
        syl = syllable_segments(extrema, "peak_to_peak", feat.n_frames, frame_rate)
        syllable_per_utt.append(syl)
        typed_per_utt.append(typed)
        syllable_durations.extend(syl.durations.tolist())
        for seg in typed.segments:
            type_durations[seg.label].append((seg.end - seg.start) / frame_rate)

    syllable_rate, sonorant_rate = compute_rates(syllable_per_utt, typed_per_utt, frame_rate)
    per_type = {}
    for label, durs in type_durations.items():
        model = _try_fit(durs, min_samples)
        if model is not None:
            per_type[label] = model
    return RhythmProfile(
        speaker_id=speaker_id,
        syllable_rate=syllable_rate,
        sonorant_rate=sonorant_rate,
        syllable_gamma=_try_fit(syllable_durations, min_samples),
        per_type_gamma=per_type,
        frame_rate=frame_rate,
    )


def _try_fit(durations: list[float], min_samples: int) -> GammaModel | None:
    if len(durations) < min_samples:
        return None
    try:
        return fit_gamma(durations, min_samples=min_samples)
    except ValueError:
        return None
