"""Sonority envelope and unsupervised syllable segmentation.

Syllable nuclei show up as peaks of a slow band-energy contour of the
waveform, onsets as the valleys between them.  Extrema detected in
non-speech regions can be filtered out, and segments are taken between
consecutive extrema of one kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, find_peaks, sosfiltfilt

from .featureio import Waveform

DEFAULT_BANDS = 8
BAND_LO_HZ = 300.0
BAND_HI_HZ = 5000.0
SMOOTH_HZ = 10.0
PEAK_PROMINENCE = 0.1
MIN_PEAK_DISTANCE_S = 0.1

MIN_ENVELOPE_SECONDS = 0.05

Interval = tuple[int, int]


@dataclass
class Envelope:
    """Per-frame nonnegative sonority amplitude."""

    values: np.ndarray
    frame_rate: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def n_frames(self) -> int:
        return self.values.size


@dataclass
class ExtremaSet:
    """Envelope peaks (nuclei) and valleys (onsets), as ascending frame indices."""

    peaks: np.ndarray
    valleys: np.ndarray

    def __post_init__(self) -> None:
        self.peaks = np.asarray(self.peaks, dtype=np.intp)
        self.valleys = np.asarray(self.valleys, dtype=np.intp)


@dataclass
class SyllableSegmentation:
    """Syllable intervals between consecutive extrema of one kind."""

    mode: str
    segments: list[Interval]
    durations: np.ndarray
    frame_rate: float
    nuclei: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    @property
    def n_segments(self) -> int:
        return len(self.segments)


def sonority_envelope(
    wave: Waveform,
    frame_rate: float = 50.0,
    n_bands: int = DEFAULT_BANDS,
    lo_hz: float = BAND_LO_HZ,
    hi_hz: float = BAND_HI_HZ,
    smooth_hz: float = SMOOTH_HZ,
) -> Envelope:
    """Compute the per-frame sonority envelope of a mono waveform.

    The signal goes through a bank of ``n_bands`` second-order band-pass
    filters with log-spaced edges in [lo_hz, hi_hz]; the rectified band
    outputs are summed, smoothed with a low-pass in the theta range
    (``smooth_hz``), sampled at frame centers, and floored at zero.  All
    filtering is zero-phase so extrema stay aligned with the features.
    """
    x = wave.samples
    if x.size == 0:
        raise ValueError("empty waveform")
    if x.size < int(MIN_ENVELOPE_SECONDS * wave.sample_rate):
        raise ValueError(
            f"waveform too short for envelope analysis (< {MIN_ENVELOPE_SECONDS} s)"
        )
    edges = np.geomspace(lo_hz, hi_hz, n_bands + 1)
    acc = np.zeros_like(x)
    for b in range(n_bands):
        sos = butter(1, (edges[b], edges[b + 1]), btype="bandpass", fs=wave.sample_rate, output="sos")
        acc += np.abs(sosfiltfilt(sos, x))
    sos_lp = butter(2, smooth_hz, btype="lowpass", fs=wave.sample_rate, output="sos")
    smoothed = sosfiltfilt(sos_lp, acc)

    hop = wave.sample_rate / frame_rate
    n_frames = max(1, int(round(x.size / hop)))
    centers = np.minimum(np.round((np.arange(n_frames) + 0.5) * hop), x.size - 1).astype(np.intp)
    return Envelope(np.maximum(smoothed[centers], 0.0), frame_rate)


def detect_extrema(
    env: Envelope,
    speech_regions: list[Interval] | None = None,
    prominence: float = PEAK_PROMINENCE,
    min_distance_s: float = MIN_PEAK_DISTANCE_S,
) -> ExtremaSet:
    """Find syllable nuclei (peaks) and onsets (valleys) in the envelope.

    Peaks need a prominence of at least ``prominence`` times the envelope
    range and a spacing of ``min_distance_s``.  Valleys are the minima
    between consecutive peaks plus one on each utterance edge.  When
    ``speech_regions`` is given, extrema outside it are discarded and
    interleaving is re-established by collapsing same-kind runs onto the
    more extreme point.
    """
    v = env.values
    empty = np.empty(0, dtype=np.intp)
    if v.size == 0:
        return ExtremaSet(empty, empty)
    span = float(v.max() - v.min())
    if span <= 0.0:
        return ExtremaSet(empty, empty)

    distance = max(1, int(round(min_distance_s * env.frame_rate)))
    peaks, _ = find_peaks(v, prominence=prominence * span, distance=distance)

    valleys = []
    if peaks.size:
        first, last = peaks[0], peaks[-1]
        if first > 0:
            valleys.append(int(np.argmin(v[:first])))
        for a, b in zip(peaks[:-1], peaks[1:]):
            if b - a > 1:
                valleys.append(int(a + 1 + np.argmin(v[a + 1 : b])))
        if last < v.size - 1:
            valleys.append(int(last + 1 + np.argmin(v[last + 1 :])))
    valleys = np.asarray(sorted(valleys), dtype=np.intp)

    if speech_regions is not None:
        peaks = _inside_regions(peaks, speech_regions)
        valleys = _inside_regions(valleys, speech_regions)
        peaks, valleys = _reinterleave(v, peaks, valleys)
    return ExtremaSet(peaks, valleys)


def _inside_regions(indices: np.ndarray, regions: list[Interval]) -> np.ndarray:
    if indices.size == 0:
        return indices
    keep = np.zeros(indices.size, dtype=bool)
    for start, end in regions:
        keep |= (indices >= start) & (indices < end)
    return indices[keep]


def _reinterleave(v: np.ndarray, peaks: np.ndarray, valleys: np.ndarray):
    """Collapse consecutive same-kind extrema onto the more extreme point."""
    marks = [(int(i), True) for i in peaks] + [(int(i), False) for i in valleys]
    marks.sort()
    out_p, out_v = [], []
    i = 0
    while i < len(marks):
        j = i
        while j + 1 < len(marks) and marks[j + 1][1] == marks[i][1]:
            j += 1
        run = [idx for idx, _ in marks[i : j + 1]]
        if marks[i][1]:
            out_p.append(max(run, key=lambda idx: v[idx]))
        else:
            out_v.append(min(run, key=lambda idx: v[idx]))
        i = j + 1
    return np.asarray(out_p, dtype=np.intp), np.asarray(out_v, dtype=np.intp)


def syllable_segments(
    extrema: ExtremaSet,
    mode: str,
    total_frames: int,
    frame_rate: float,
) -> SyllableSegmentation:
    """Derive syllable intervals from consecutive peaks (or valleys).

    With fewer than two extrema of the requested kind the segmentation is
    empty.  Material before the first and after the last extremum is not
    part of any segment.
    """
    if total_frames < 1:
        raise ValueError("total_frames must be >= 1")
    if mode == "peak_to_peak":
        points = extrema.peaks
    elif mode == "valley_to_valley":
        points = extrema.valleys
    else:
        raise ValueError(f"unknown segmentation mode {mode!r}")
    points = points[points < total_frames]
    nuclei = extrema.peaks[extrema.peaks < total_frames]
    if points.size < 2:
        return SyllableSegmentation(mode, [], np.empty(0), frame_rate, nuclei)
    segments = [(int(a), int(b)) for a, b in zip(points[:-1], points[1:])]
    durations = np.diff(points).astype(np.float64) / frame_rate
    return SyllableSegmentation(mode, segments, durations, frame_rate, nuclei)


def dump_extrema(env: Envelope, extrema: ExtremaSet) -> str:
    """Render envelope and extrema as TSV (frame_index, value, is_peak, is_valley)."""
    peaks = set(int(i) for i in extrema.peaks)
    valleys = set(int(i) for i in extrema.valleys)
    lines = ["frame_index\tvalue\tis_peak\tis_valley"]
    for i, val in enumerate(env.values):
        lines.append(f"{i}\t{val:.8g}\t{int(i in peaks)}\t{int(i in valleys)}")
    return "\n".join(lines) + "\n"
