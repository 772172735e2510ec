"""Rhythm conversion by per-interval time-stretching, and kNN voice conversion.

Rhythm conversion builds a stretch plan (intervals with factors), stretches
each interval of the feature sequence independently, and concatenates the
results.  Voice conversion replaces every source frame with a weighted
average of its nearest target-speaker frames under cosine distance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .envelope import SyllableSegmentation, detect_extrema, sonority_envelope, syllable_segments
from .featureio import FeatureMatrix, Waveform
from .rhythm import RhythmProfile, map_duration
from .segmenter import SegmenterModel, TypedSegments, dp_segment, frame_log_probs, speech_regions

logger = logging.getLogger(__name__)

FACTOR_MIN = 0.25
FACTOR_MAX = 4.0
DEFAULT_K = 8
WEIGHT_EPS = 1e-8

RHYTHM_MODES = ("syllable_global", "syllable_fine", "urhythmic_global", "urhythmic_fine")
GLOBAL_MODES = ("syllable_global", "urhythmic_global")


@dataclass
class StretchPlan:
    """Ordered (start_frame, end_frame, factor) entries partitioning [0, T)."""

    entries: list[tuple[int, int, float]]

    def to_dicts(self) -> list[dict]:
        return [
            {"start_frame": s, "end_frame": e, "factor": f} for s, e, f in self.entries
        ]


@dataclass
class UnitDatabase:
    """Pool of target-speaker frames with cached norms for cosine matching."""

    units: np.ndarray
    norms: np.ndarray

    @property
    def n_units(self) -> int:
        return self.units.shape[0]

    @property
    def dim(self) -> int:
        return self.units.shape[1]


def time_stretch(feat: FeatureMatrix, factor: float, interp: str = "linear") -> FeatureMatrix:
    """Resample the frame axis to ``round(T * factor)`` frames.

    Output frame i reads source position ``i * (T - 1) / (T' - 1)``, linearly
    interpolated per dimension ("nearest" snaps to the closest frame).
    Integer positions copy source rows exactly, so factor 1 is the identity.
    """
    if factor <= 0:
        raise ValueError("stretch factor must be positive")
    n = feat.n_frames
    if n < 1:
        raise ValueError("need at least one frame")
    n_out = max(1, int(round(n * factor)))
    data = feat.data
    if n_out == 1:
        return FeatureMatrix(data[:1].copy(), feat.frame_rate)
    if n == 1:
        return FeatureMatrix(np.repeat(data, n_out, axis=0), feat.frame_rate)

    pos = np.arange(n_out) * ((n - 1) / (n_out - 1))
    if interp == "nearest":
        return FeatureMatrix(data[np.rint(pos).astype(np.intp)].copy(), feat.frame_rate)
    if interp != "linear":
        raise ValueError(f"unknown interpolation mode {interp!r}")
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    out = data[lo] * (1.0 - frac[:, None]) + data[hi] * frac[:, None]
    out = out.astype(data.dtype, copy=False)
    exact = frac == 0.0
    if exact.any():
        out[exact] = data[lo[exact]]
    return FeatureMatrix(out, feat.frame_rate)


def rhythm_convert(
    feat: FeatureMatrix,
    syllable_segs: SyllableSegmentation | None,
    typed_segs: TypedSegments | None,
    src: RhythmProfile,
    tgt: RhythmProfile,
    mode: str,
    factor_min: float = FACTOR_MIN,
    factor_max: float = FACTOR_MAX,
    interp: str = "linear",
) -> tuple[FeatureMatrix, StretchPlan]:
    """Convert the rhythm of a feature sequence from src to tgt.

    Global modes stretch the whole utterance by the rate ratio (syllable or
    sonorant based).  Fine modes map each segment's duration through the
    source CDF / target inverse CDF of the matching gamma models; frames not
    covered by a syllable segment keep factor 1.  Factors are clamped to
    [factor_min, factor_max].
    """
    if mode not in RHYTHM_MODES:
        raise ValueError(f"unknown rhythm mode {mode!r} (expected one of {RHYTHM_MODES})")
    n = feat.n_frames
    if n == 0:
        raise ValueError("empty feature matrix")
    rate = feat.frame_rate

    entries: list[tuple[int, int, float]] = []
    if mode == "syllable_global":
        entries.append((0, n, _rate_ratio(src.syllable_rate, tgt.syllable_rate, "syllable")))
    elif mode == "urhythmic_global":
        entries.append((0, n, _rate_ratio(src.sonorant_rate, tgt.sonorant_rate, "sonorant")))
    elif mode == "syllable_fine":
        if syllable_segs is None:
            raise ValueError("syllable_fine requires a syllable segmentation")
        if src.syllable_gamma is None or tgt.syllable_gamma is None:
            raise ValueError("syllable_fine requires fitted syllable duration models")
        cursor = 0
        for start, end in syllable_segs.segments:
            start, end = max(0, start), min(n, end)
            if end <= start:
                continue
            if start > cursor:
                entries.append((cursor, start, 1.0))
            d = (end - start) / rate
            mapped = map_duration(d, src.syllable_gamma, tgt.syllable_gamma)
            entries.append((start, end, mapped / d))
            cursor = end
        if cursor < n:
            entries.append((cursor, n, 1.0))
    else:  # urhythmic_fine
        if typed_segs is None:
            raise ValueError("urhythmic_fine requires a typed segmentation")
        for seg in typed_segs.segments:
            start, end = max(0, seg.start), min(n, seg.end)
            if end <= start:
                continue
            src_model = src.per_type_gamma.get(seg.label)
            tgt_model = tgt.per_type_gamma.get(seg.label)
            if src_model is None or tgt_model is None:
                raise ValueError(f"missing duration model for class {seg.label.name.lower()}")
            d = (end - start) / rate
            mapped = map_duration(d, src_model, tgt_model)
            entries.append((start, end, mapped / d))
        if not entries:
            raise ValueError("typed segmentation covers no frames")

    entries = [(s, e, float(np.clip(f, factor_min, factor_max))) for s, e, f in entries]
    pieces = [
        time_stretch(FeatureMatrix(feat.data[s:e], rate), f, interp=interp).data
        for s, e, f in entries
    ]
    return FeatureMatrix(np.concatenate(pieces), rate), StretchPlan(entries)


def _rate_ratio(src_rate: float, tgt_rate: float, name: str) -> float:
    if src_rate <= 0 or tgt_rate <= 0:
        raise ValueError(f"{name} rates must be positive for global conversion")
    return src_rate / tgt_rate


def _fine_mode_or_fallback(
    mode: str, typed_segs: TypedSegments, src: RhythmProfile, tgt: RhythmProfile
) -> str:
    """Degrade a fine mode to its global counterpart when a speaker lacks the
    duration models (too few observed segments to fit them)."""
    if mode == "syllable_fine":
        if src.syllable_gamma is not None and tgt.syllable_gamma is not None:
            return mode
        logger.warning("missing syllable duration model; falling back to syllable_global")
        return "syllable_global"
    needed = {seg.label for seg in typed_segs.segments}
    if needed <= src.per_type_gamma.keys() and needed <= tgt.per_type_gamma.keys():
        return mode
    logger.warning("missing per-type duration model; falling back to urhythmic_global")
    return "urhythmic_global"


# ---------------------------------------------------------------------------
# kNN voice conversion
# ---------------------------------------------------------------------------


def knn_index(target_feats: list[FeatureMatrix | np.ndarray], k: int = DEFAULT_K) -> UnitDatabase:
    """Pool target-speaker frames into a matching database.

    Zero-norm rows are dropped (cosine distance is undefined there) with a
    warning; the pool must keep at least k rows.
    """
    mats = [fm.data if isinstance(fm, FeatureMatrix) else np.asarray(fm) for fm in target_feats]
    mats = [m for m in mats if m.size]
    if not mats:
        raise ValueError("empty target set")
    units = np.ascontiguousarray(np.concatenate(mats), dtype=np.float32)
    norms = np.linalg.norm(units.astype(np.float64), axis=1)
    zero = norms == 0.0
    if zero.any():
        logger.warning("dropping %d zero-norm unit(s) from the database", int(zero.sum()))
        units, norms = units[~zero], norms[~zero]
    if units.shape[0] < k:
        raise ValueError(f"unit database has {units.shape[0]} rows; need at least k={k}")
    return UnitDatabase(units, norms)


def nearest_units(
    source: FeatureMatrix | np.ndarray, db: UnitDatabase, k: int = DEFAULT_K, chunk: int = 1024
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest database rows per source frame under cosine distance.

    Returns (indices, similarities), each (T, k), nearest first; distance
    ties break toward the lower database index.
    """
    x = source.data if isinstance(source, FeatureMatrix) else np.asarray(source)
    if x.ndim != 2 or x.shape[1] != db.dim:
        raise ValueError(f"source dim {x.shape[1:]} does not match database dim {db.dim}")
    if not 1 <= k <= db.n_units:
        raise ValueError(f"k={k} out of range for a database of {db.n_units} units")
    unit_dirs = db.units.astype(np.float64) / db.norms[:, None]
    idx = np.empty((x.shape[0], k), dtype=np.intp)
    sims = np.empty((x.shape[0], k), dtype=np.float64)
    for start in range(0, x.shape[0], chunk):
        block = x[start : start + chunk].astype(np.float64)
        norms = np.linalg.norm(block, axis=1, keepdims=True)
        np.maximum(norms, 1e-300, out=norms)
        sim = (block / norms) @ unit_dirs.T
        order = np.argsort(1.0 - sim, axis=1, kind="stable")[:, :k]
        idx[start : start + chunk] = order
        sims[start : start + chunk] = np.take_along_axis(sim, order, axis=1)
    return idx, sims


def knn_convert(
    source: FeatureMatrix,
    db: UnitDatabase,
    k: int = DEFAULT_K,
    weighting: str = "similarity",
    return_details: bool = False,
):
    """Replace each source frame by a weighted average of its k nearest units.

    Similarity weighting shifts the selected similarities to be nonnegative
    (w_i = sim_i - min_j sim_j + eps) and normalizes; "uniform" averages the
    neighbors equally.
    """
    if weighting not in ("similarity", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    idx, sims = nearest_units(source, db, k)
    if weighting == "uniform":
        weights = np.full_like(sims, 1.0 / k)
    else:
        weights = sims - sims.min(axis=1, keepdims=True) + WEIGHT_EPS
        weights /= weights.sum(axis=1, keepdims=True)
    neighbors = db.units[idx].astype(np.float64)
    out = np.einsum("tk,tkd->td", weights, neighbors).astype(source.data.dtype, copy=False)
    result = FeatureMatrix(out, source.frame_rate)
    if return_details:
        return result, idx, weights
    return result


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def convert_pipeline(
    feat: FeatureMatrix,
    wave: Waveform | None,
    segmenter: SegmenterModel | None,
    src_profile: RhythmProfile | None,
    tgt_profile: RhythmProfile | None,
    rhythm_mode: str | None = None,
    voice: bool = False,
    db: UnitDatabase | None = None,
    k: int = DEFAULT_K,
    gamma: float = 3.0,
    factor_min: float = FACTOR_MIN,
    factor_max: float = FACTOR_MAX,
    interp: str = "linear",
) -> tuple[FeatureMatrix, StretchPlan | None]:
    """Apply rhythm conversion (optional) then voice conversion (optional).

    Either stage may be the identity; the stretch plan (when any) is logged
    and returned for inspection.
    """
    if rhythm_mode in (None, "none"):
        rhythm_mode = None
    elif rhythm_mode not in RHYTHM_MODES:
        raise ValueError(f"unknown rhythm mode {rhythm_mode!r}")
    if voice and db is None:
        raise ValueError("voice conversion requires a unit database")
    if rhythm_mode and (src_profile is None or tgt_profile is None):
        raise ValueError("rhythm conversion requires source and target profiles")

    out = feat
    plan = None
    if rhythm_mode:
        syllable_segs = None
        typed_segs = None
        if rhythm_mode not in GLOBAL_MODES:
            if segmenter is None:
                raise ValueError(f"{rhythm_mode} requires a segmenter model")
            typed_segs = dp_segment(frame_log_probs(feat, segmenter), gamma)
            rhythm_mode = _fine_mode_or_fallback(rhythm_mode, typed_segs, src_profile, tgt_profile)
            if rhythm_mode == "syllable_fine":
                if wave is None:
                    raise ValueError("syllable_fine requires the source waveform")
                env = sonority_envelope(wave, feat.frame_rate)
                extrema = detect_extrema(env, speech_regions(typed_segs))
                syllable_segs = syllable_segments(
                    extrema, "peak_to_peak", feat.n_frames, feat.frame_rate
                )
        out, plan = rhythm_convert(
            out,
            syllable_segs,
            typed_segs,
            src_profile,
            tgt_profile,
            rhythm_mode,
            factor_min=factor_min,
            factor_max=factor_max,
            interp=interp,
        )
        logger.info(
            "stretch plan (%s): %d entries, %d -> %d frames",
            rhythm_mode,
            len(plan.entries),
            feat.n_frames,
            out.n_frames,
        )
    if voice:
        out = knn_convert(out, db, k)
    return out, plan
