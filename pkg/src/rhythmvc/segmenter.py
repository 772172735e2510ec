"""Clustering-based speech-type segmentation.

A codebook trained on frame features is grouped into three speech types
(silence, sonorant, obstruent).  Frames get per-type log-probabilities by
comparing against the codebook, and a dynamic program merges frames into
typed segments, with a penalty constant controlling segment length.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.special import logsumexp

from .featureio import FeatureMatrix, Waveform

N_CLUSTERS = 100
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-4
SILENCE_MARGIN_DB = 40.0
VOICING_THRESHOLD = 0.45
VOICING_LO_HZ = 50.0
VOICING_HI_HZ = 400.0
SEGMENT_PENALTY = 3.0

Interval = tuple[int, int]


class SpeechType(enum.IntEnum):
    SILENCE = 0
    SONORANT = 1
    OBSTRUENT = 2


@dataclass
class SegmenterModel:
    """Codebook centroids, their speech-type assignment, and the softmax temperature."""

    centroids: np.ndarray
    class_of: np.ndarray
    temperature: float
    seed: int = 0

    MODEL_KIND = "segmenter"

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        self.class_of = np.asarray(self.class_of, dtype=np.intp)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 3:
            raise ValueError("need a 2-D codebook with at least 3 centroids")
        if self.class_of.shape != (self.centroids.shape[0],):
            raise ValueError("class_of must assign exactly one class per centroid")
        present = set(int(c) for c in np.unique(self.class_of))
        if present != {int(t) for t in SpeechType}:
            raise ValueError("all three speech types must be non-empty")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def to_dict(self) -> dict:
        return {
            "n_centroids": self.n_centroids,
            "dim": self.dim,
            "temperature": float(self.temperature),
            "seed": int(self.seed),
            "class_of": [SpeechType(int(c)).name.lower() for c in self.class_of],
            "centroids": self.centroids.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SegmenterModel":
        class_of = [SpeechType[name.upper()] for name in payload["class_of"]]
        model = cls(
            centroids=np.asarray(payload["centroids"], dtype=np.float64),
            class_of=np.asarray(class_of, dtype=np.intp),
            temperature=float(payload["temperature"]),
            seed=int(payload.get("seed", 0)),
        )
        if model.n_centroids != int(payload["n_centroids"]):
            raise ValueError("centroid count does not match file header")
        return model


@dataclass
class Segment:
    start: int
    end: int
    label: SpeechType
    mean_logp: float


@dataclass
class TypedSegments:
    """Contiguous typed partition of [0, T)."""

    segments: list[Segment]

    @property
    def n_frames(self) -> int:
        return self.segments[-1].end if self.segments else 0


# ---------------------------------------------------------------------------
# codebook training
# ---------------------------------------------------------------------------


def _pairwise_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x2 = np.sum(np.square(x), axis=1)[:, None]
    y2 = np.sum(np.square(y), axis=1)[None, :]
    d2 = x2 + y2 - 2.0 * (x @ y.T)
    return np.maximum(d2, 0.0)


def _kmeans(
    x: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations with k-means++ seeding; stops on relative inertia change."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = np.sum(np.square(x - centers[0]), axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = x[rng.integers(n)]
        else:
            centers[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum(np.square(x - centers[j]), axis=1))

    prev_inertia = np.inf
    assign = np.zeros(n, dtype=np.intp)
    for _ in range(max_iter):
        dists = _pairwise_sq_dists(x, centers)
        assign = dists.argmin(axis=1)
        inertia = float(dists[np.arange(n), assign].sum())
        if prev_inertia - inertia <= tol * max(prev_inertia, 1e-300) and np.isfinite(prev_inertia):
            break
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, x)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        for j in np.flatnonzero(~nonempty):
            # classic fix: reseat an empty cluster on the worst-served point
            far = int(np.argmax(dists[np.arange(n), assign]))
            centers[j] = x[far]
            assign[far] = j
        prev_inertia = inertia
    return centers, assign


def _frame_slices(n_samples: int, n_frames: int, hop: float) -> np.ndarray:
    bounds = np.round(np.arange(n_frames + 1) * hop).astype(np.intp)
    return np.clip(bounds, 0, n_samples)


def _low_energy_mask(
    wave: Waveform, n_frames: int, frame_rate: float, margin_db: float
) -> np.ndarray:
    hop = wave.sample_rate / frame_rate
    bounds = _frame_slices(wave.samples.size, n_frames, hop)
    sq = np.concatenate(([0.0], np.cumsum(np.square(wave.samples))))
    energy = sq[bounds[1:]] - sq[bounds[:-1]]
    counts = np.maximum(np.diff(bounds), 1)
    frame_rms = np.sqrt(energy / counts)
    peak = frame_rms.max()
    return frame_rms < peak * 10.0 ** (-margin_db / 20.0)


def _voiced_mask(
    wave: Waveform,
    n_frames: int,
    frame_rate: float,
    lo_hz: float = VOICING_LO_HZ,
    hi_hz: float = VOICING_HI_HZ,
    threshold: float = VOICING_THRESHOLD,
    chunk: int = 2048,
) -> np.ndarray:
    """Mark frames whose normalized autocorrelation peaks above the threshold
    at some lag in the [lo_hz, hi_hz] pitch range."""
    sr = wave.sample_rate
    lag_hi = int(np.ceil(sr / lo_hz))
    lag_lo = max(1, int(np.floor(sr / hi_hz)))
    win = 2 * lag_hi
    half = win // 2
    hop = sr / frame_rate
    padded = np.concatenate((np.zeros(half), wave.samples, np.zeros(win)))
    centers = np.round((np.arange(n_frames) + 0.5) * hop).astype(np.intp)
    nfft = 1 << int(np.ceil(np.log2(2 * win)))

    voiced = np.zeros(n_frames, dtype=bool)
    offsets = np.arange(win)
    for start in range(0, n_frames, chunk):
        idx = centers[start : start + chunk]
        frames = padded[idx[:, None] + offsets[None, :]]
        spec = np.fft.rfft(frames, nfft, axis=1)
        raw = np.fft.irfft(np.abs(spec) ** 2, nfft, axis=1)[:, :win]
        csq = np.concatenate(
            (np.zeros((frames.shape[0], 1)), np.cumsum(np.square(frames), axis=1)), axis=1
        )
        total = csq[:, -1:]
        lags = np.arange(lag_lo, min(lag_hi, win - 1) + 1)
        e_head = csq[:, win - lags]
        e_tail = total - csq[:, lags]
        norm = np.sqrt(np.maximum(e_head * e_tail, 0.0)) + 1e-12
        r = raw[:, lags] / norm
        voiced[start : start + chunk] = r.max(axis=1) > threshold
    return voiced


def fit_segmenter(
    corpus: list[tuple[FeatureMatrix, Waveform]],
    k: int = N_CLUSTERS,
    seed: int = 0,
    frame_rate: float | None = None,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
    silence_margin_db: float = SILENCE_MARGIN_DB,
    voicing_threshold: float = VOICING_THRESHOLD,
) -> SegmenterModel:
    """Train the speech-type segmenter on aligned (features, waveform) pairs.

    The codebook is trained with seeded k-means, centroids are grouped into
    three clusters by Ward-linkage agglomeration, and the groups are labeled
    against two acoustic references: the group overlapping low-energy frames
    the most becomes silence, the remaining group overlapping voiced frames
    the most becomes sonorant, the last one obstruent.
    """
    if not corpus:
        raise ValueError("empty corpus")
    x = np.concatenate([fm.data for fm, _ in corpus]).astype(np.float64)
    if x.shape[0] < 10 * k:
        raise ValueError(
            f"corpus too small: {x.shape[0]} frames for k={k} (need at least {10 * k})"
        )
    if frame_rate is None:
        frame_rate = corpus[0][0].frame_rate

    rng = np.random.default_rng(seed)
    centroids, assign = _kmeans(x, k, rng, max_iter=max_iter, tol=tol)

    groups = fcluster(linkage(centroids, method="ward"), t=3, criterion="maxclust") - 1
    if np.unique(groups).size < 3:
        raise ValueError("degenerate clustering: centroid grouping yielded fewer than 3 groups")

    low_energy = np.concatenate(
        [_low_energy_mask(wv, fm.n_frames, frame_rate, silence_margin_db) for fm, wv in corpus]
    )
    voiced = np.concatenate(
        [
            _voiced_mask(wv, fm.n_frames, frame_rate, threshold=voicing_threshold)
            for fm, wv in corpus
        ]
    )
    if not low_energy.any():
        raise ValueError("no low-energy frames in corpus; silence reference is empty")

    frame_group = groups[assign]
    silence_frac = [float(np.mean(low_energy[frame_group == g])) for g in range(3)]
    silence_group = int(np.argmax(silence_frac))
    rest = [g for g in range(3) if g != silence_group]
    voiced_frac = {g: float(np.mean(voiced[frame_group == g])) for g in rest}
    sonorant_group = max(rest, key=lambda g: (voiced_frac[g], -g))
    obstruent_group = next(g for g in rest if g != sonorant_group)

    label_of_group = {
        silence_group: SpeechType.SILENCE,
        sonorant_group: SpeechType.SONORANT,
        obstruent_group: SpeechType.OBSTRUENT,
    }
    class_of = np.asarray([label_of_group[int(g)] for g in groups], dtype=np.intp)

    diffs = _pairwise_sq_dists(centroids, centroids)
    temperature = float(np.median(diffs[np.triu_indices(k, 1)]))
    return SegmenterModel(centroids, class_of, temperature, seed=seed)


# ---------------------------------------------------------------------------
# per-frame class log-probabilities and DP segmentation
# ---------------------------------------------------------------------------


def frame_log_probs(feat: FeatureMatrix, model: SegmenterModel) -> np.ndarray:
    """Per-frame log-probability of each speech type, shape (T, 3).

    Frame-to-centroid affinities are a softmax over negative squared
    distances scaled by the model temperature; class probabilities sum the
    affinities of the class's centroids.
    """
    if feat.dim != model.dim:
        raise ValueError(f"feature dim {feat.dim} does not match model dim {model.dim}")
    n = feat.n_frames
    out = np.empty((n, 3), dtype=np.float64)
    if n == 0:
        return out
    x = feat.data.astype(np.float64)
    logits = -_pairwise_sq_dists(x, model.centroids) / model.temperature
    denom = logsumexp(logits, axis=1)
    for cls in SpeechType:
        out[:, cls] = logsumexp(logits[:, model.class_of == cls], axis=1) - denom
    return out


def dp_segment(logp: np.ndarray, gamma: float = SEGMENT_PENALTY) -> TypedSegments:
    """Optimal typed partition of the frame sequence.

    Minimizes, over all partitions, the sum of per-segment costs
    ``gamma + sum_t -logp[t, class]`` with each segment classed by its best
    type.  Cost ties prefer fewer segments, then earlier boundaries.
    Adjacent same-class segments are merged in the output.
    """
    logp = np.asarray(logp, dtype=np.float64)
    if logp.ndim != 2 or logp.shape[1] != 3:
        raise ValueError("expected a (T, 3) log-probability matrix")
    n = logp.shape[0]
    if n < 1:
        raise ValueError("need at least one frame")
    if gamma < 0:
        raise ValueError("segment penalty must be >= 0")

    neg_prefix = np.vstack((np.zeros(3), np.cumsum(-logp, axis=0)))
    cost = np.full(n + 1, np.inf)
    cost[0] = 0.0
    n_segs = np.zeros(n + 1, dtype=np.intp)
    parent = np.zeros(n + 1, dtype=np.intp)
    for j in range(1, n + 1):
        data = (neg_prefix[j] - neg_prefix[:j]).min(axis=1)
        cand = cost[:j] + gamma + data
        best = cand.min()
        ties = np.flatnonzero(cand == best)
        i = int(ties[np.argmin(n_segs[ties])]) if ties.size > 1 else int(ties[0])
        cost[j] = cand[i]
        parent[j] = i
        n_segs[j] = n_segs[i] + 1

    bounds = [n]
    while bounds[-1] > 0:
        bounds.append(int(parent[bounds[-1]]))
    bounds.reverse()

    segments: list[Segment] = []
    for start, end in zip(bounds[:-1], bounds[1:]):
        totals = neg_prefix[end] - neg_prefix[start]
        label = SpeechType(int(np.argmin(totals)))
        if segments and segments[-1].label == label:
            segments[-1] = _merged(segments[-1], end, neg_prefix)
        else:
            segments.append(Segment(start, end, label, -totals[label] / (end - start)))
    return TypedSegments(segments)


def _merged(seg: Segment, new_end: int, neg_prefix: np.ndarray) -> Segment:
    total = neg_prefix[new_end, seg.label] - neg_prefix[seg.start, seg.label]
    return Segment(seg.start, new_end, seg.label, -total / (new_end - seg.start))


def speech_regions(typed: TypedSegments) -> list[Interval]:
    """Union of sonorant and obstruent intervals, touching intervals coalesced."""
    regions: list[Interval] = []
    for seg in typed.segments:
        if seg.label == SpeechType.SILENCE:
            continue
        if regions and regions[-1][1] == seg.start:
            regions[-1] = (regions[-1][0], seg.end)
        else:
            regions.append((seg.start, seg.end))
    return regions


def segments_to_dicts(typed: TypedSegments) -> list[dict]:
    """JSON-friendly view of a typed segmentation."""
    return [
        {
            "start_frame": seg.start,
            "end_frame": seg.end,
            "class": seg.label.name.lower(),
            "mean_logp": seg.mean_logp,
        }
        for seg in typed.segments
    ]
