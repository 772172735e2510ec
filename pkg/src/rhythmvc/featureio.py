"""Audio and feature-file I/O.

This module is the file-format boundary of the toolkit: WAV audio in, NPY
feature matrices and JSON model files in and out.  Feature matrices stand in
for the frame-level representations produced by an external speech encoder;
nothing here touches neural networks.
"""

from __future__ import annotations

import ast
import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_LEVEL_DB = -20.0
DEFAULT_FRAME_RATE = 50.0
SILENCE_RMS_FLOOR = 1e-8

NPY_MAGIC = b"\x93NUMPY"
NPY_ALIGN = 64

SCHEMA_VERSION = 1


class FileFormatError(ValueError):
    """Raised for unreadable, corrupt, or unsupported files."""


@dataclass
class Waveform:
    """Mono waveform; samples are dimensionless amplitudes, nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("waveform must be mono (1-D)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def rms(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(np.square(self.samples))))


@dataclass
class FeatureMatrix:
    """T x D matrix of frame-level features at a fixed frame rate."""

    data: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {self.data.shape}")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def load_audio(
    path: str | Path,
    target_rate: int = DEFAULT_SAMPLE_RATE,
    target_level_db: float = DEFAULT_LEVEL_DB,
    resample_beta: float = 5.0,
) -> Waveform:
    """Load a WAV file as a level-normalized mono waveform.

    Stereo input is downmixed by channel mean, the signal is resampled with a
    polyphase windowed-sinc filter, and gain is applied so the RMS level is
    ``target_level_db`` dBFS.  All-silent input is returned unchanged.

    Parameters
    ----------
    path : path to a RIFF/WAVE file (PCM 8/16/24/32 bit or IEEE float).
    target_rate : output sample rate in Hz.
    target_level_db : output RMS level in dBFS.
    resample_beta : kaiser beta of the resampling low-pass (quality knob).
    """
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:  # scipy raises bare ValueError on malformed RIFF
        raise FileFormatError(f"{path}: unreadable or unsupported WAV file ({exc})") from exc
    if data.size == 0:
        raise FileFormatError(f"{path}: empty audio")
    if data.ndim == 2:
        if data.shape[1] > 2:
            raise FileFormatError(f"{path}: {data.shape[1]} channels unsupported (expected 1-2)")
        data = data.mean(axis=1)
    elif data.ndim != 1:
        raise FileFormatError(f"{path}: unsupported sample layout")

    x = _to_float(data, path)
    if not np.all(np.isfinite(x)):
        raise FileFormatError(f"{path}: non-finite samples")

    if rate != target_rate:
        frac = Fraction(target_rate, int(rate))
        x = resample_poly(x, frac.numerator, frac.denominator, window=("kaiser", resample_beta))

    rms = math.sqrt(float(np.mean(np.square(x)))) if x.size else 0.0
    if rms > SILENCE_RMS_FLOOR:
        gain = 10.0 ** ((target_level_db - 20.0 * math.log10(rms)) / 20.0)
        x = x * gain
    return Waveform(x, target_rate)


def _to_float(data: np.ndarray, path: str | Path) -> np.ndarray:
    kind = data.dtype.kind
    if kind == "f":
        return data.astype(np.float64)
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if kind == "i":
        # 24-bit PCM arrives as int32 padded into the high bytes
        return data.astype(np.float64) / float(2 ** (8 * data.dtype.itemsize - 1))
    raise FileFormatError(f"{path}: unsupported sample encoding {data.dtype}")


# ---------------------------------------------------------------------------
# NPY feature matrices
# ---------------------------------------------------------------------------


def write_feature_matrix(matrix: FeatureMatrix | np.ndarray, path: str | Path) -> None:
    """Write a feature matrix as an NPY v1.0 file (little-endian float32, C order)."""
    data = matrix.data if isinstance(matrix, FeatureMatrix) else np.asarray(matrix)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite feature values")
    arr = np.ascontiguousarray(data, dtype="<f4")
    header = "{'descr': '<f4', 'fortran_order': False, 'shape': (%d, %d), }" % arr.shape
    base = len(NPY_MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * ((-base) % NPY_ALIGN) + "\n"
    with open(path, "wb") as fh:
        fh.write(NPY_MAGIC)
        fh.write(b"\x01\x00")
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("latin1"))
        fh.write(arr.tobytes(order="C"))


def read_feature_matrix(path: str | Path, frame_rate: float | None = None) -> FeatureMatrix:
    """Read a 2-D float NPY file (format versions 1.0 and 2.0).

    The frame rate comes from the ``frame_rate`` argument, else from a JSON
    sidecar (``<file>.json`` with a ``frame_rate`` key), else the default of
    50 frames per second.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 10 or raw[:6] != NPY_MAGIC:
        raise FileFormatError(f"{path}: not an NPY file (bad magic)")
    major, minor = raw[6], raw[7]
    if (major, minor) == (1, 0):
        (hlen,) = struct.unpack_from("<H", raw, 8)
        offset = 10
    elif (major, minor) == (2, 0):
        (hlen,) = struct.unpack_from("<I", raw, 8)
        offset = 12
    else:
        raise FileFormatError(f"{path}: unsupported NPY version {major}.{minor}")
    header_bytes = raw[offset : offset + hlen]
    if len(header_bytes) < hlen:
        raise FileFormatError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(header_bytes.decode("latin1"))
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = header["shape"]
    except Exception as exc:
        raise FileFormatError(f"{path}: malformed NPY header") from exc
    try:
        dtype = np.dtype(descr)
    except TypeError as exc:
        raise FileFormatError(f"{path}: unsupported element type {descr!r}") from exc
    if dtype.kind != "f" or dtype.itemsize not in (4, 8):
        raise FileFormatError(f"{path}: expected 32/64-bit float data, got {descr!r}")
    if not (isinstance(shape, tuple) and len(shape) == 2):
        raise FileFormatError(f"{path}: expected a 2-D array, got shape {shape}")
    n_frames, dim = int(shape[0]), int(shape[1])
    need = n_frames * dim * dtype.itemsize
    payload = raw[offset + hlen :]
    if len(payload) < need:
        raise FileFormatError(f"{path}: truncated payload ({len(payload)} of {need} bytes)")
    arr = np.frombuffer(payload[:need], dtype=dtype)
    arr = arr.reshape((n_frames, dim), order="F" if fortran else "C")
    arr = np.ascontiguousarray(arr)

    if frame_rate is None:
        frame_rate = _sidecar_frame_rate(path)
    return FeatureMatrix(arr, frame_rate)


def _sidecar_frame_rate(path: str | Path) -> float:
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            return float(meta["frame_rate"])
        except (KeyError, ValueError, json.JSONDecodeError):
            pass
    return DEFAULT_FRAME_RATE


# ---------------------------------------------------------------------------
# Model files (JSON with a schema version)
# ---------------------------------------------------------------------------


def save_model(model, path: str | Path) -> None:
    """Serialize a segmenter model or rhythm profile as versioned JSON."""
    kind = getattr(model, "MODEL_KIND", None)
    if kind is None or not hasattr(model, "to_dict"):
        raise TypeError(f"cannot serialize object of type {type(model).__name__}")
    payload = {"schema_version": SCHEMA_VERSION, "kind": kind}
    payload.update(model.to_dict())
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    """Load a model written by :func:`save_model`; the kind is self-described."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not a JSON model file") from exc
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FileFormatError(
            f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )
    kind = payload.get("kind")
    try:
        if kind == "segmenter":
            from .segmenter import SegmenterModel

            return SegmenterModel.from_dict(payload)
        if kind == "rhythm_profile":
            from .rhythm import RhythmProfile

            return RhythmProfile.from_dict(payload)
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing model field {exc}") from exc
    raise FileFormatError(f"{path}: unknown model kind {kind!r}")
