"""Run configuration: every tunable constant of the pipeline in one
serializable place, so a batch run is reproducible from a single file."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

CONFIG_ENV_VAR = "RHYTHMVC_CONFIG"


@dataclass
class RunConfig:
    # paths
    feature_dir: str | None = None
    audio_dir: str | None = None
    segmenter_path: str | None = None
    src_profile: str | None = None
    tgt_profile: str | None = None
    out_dir: str = "out"

    # audio front end
    sample_rate: int = 16000
    target_level_db: float = -20.0
    resample_beta: float = 5.0  # kaiser beta of the windowed-sinc low-pass

    # feature matrices
    frame_rate: float = 50.0
    feature_dim: int = 1024  # informational default; any D is accepted

    # sonority envelope / syllable nuclei
    envelope_bands: int = 8
    envelope_lo_hz: float = 300.0
    envelope_hi_hz: float = 5000.0
    envelope_smooth_hz: float = 10.0
    peak_prominence: float = 0.1  # fraction of envelope range
    min_peak_distance_s: float = 0.1

    # speech-type segmenter
    n_clusters: int = 100
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-4
    silence_margin_db: float = 40.0
    voicing_threshold: float = 0.45
    voicing_lo_hz: float = 50.0
    voicing_hi_hz: float = 400.0
    gamma: float = 3.0

    # rhythm models
    min_gamma_samples: int = 10
    cdf_clamp: float = 1e-4

    # conversion
    k_neighbors: int = 8
    factor_min: float = 0.25
    factor_max: float = 4.0
    stretch_interp: str = "linear"  # "linear" or "nearest"

    seed: int = 0

    def validate(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if not 0 < self.envelope_lo_hz < self.envelope_hi_hz < self.sample_rate / 2:
            raise ValueError("envelope band edges must satisfy 0 < lo < hi < Nyquist")
        if self.envelope_bands < 1:
            raise ValueError("envelope_bands must be >= 1")
        if not 0 < self.peak_prominence <= 1:
            raise ValueError("peak_prominence must be in (0, 1]")
        if self.n_clusters < 3:
            raise ValueError("n_clusters must be >= 3")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.factor_min <= 1 <= self.factor_max:
            raise ValueError("stretch clamps must satisfy 0 < factor_min <= 1 <= factor_max")
        if self.stretch_interp not in ("linear", "nearest"):
            raise ValueError("stretch_interp must be 'linear' or 'nearest'")
        if not 0 < self.cdf_clamp < 0.5:
            raise ValueError("cdf_clamp must be in (0, 0.5)")
        if self.min_gamma_samples < 2:
            raise ValueError("min_gamma_samples must be >= 2")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        payload = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**payload)
        cfg.validate()
        return cfg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "RunConfig":
        """Load from an explicit path, else from $RHYTHMVC_CONFIG, else defaults."""
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR)
        if path is None:
            return cls()
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
