"""Unsupervised rhythm and voice conversion for frame-level speech features.

The pipeline: load audio and feature matrices, segment speech into three
types with a clustered codebook, find syllable nuclei on the sonority
envelope, model speaker rhythm with rates and gamma duration distributions,
then convert rhythm by time-stretching and voice by kNN unit matching.
"""

from .config import RunConfig
from .convert import (
    StretchPlan,
    UnitDatabase,
    convert_pipeline,
    knn_convert,
    knn_index,
    nearest_units,
    rhythm_convert,
    time_stretch,
)
from .envelope import (
    Envelope,
    ExtremaSet,
    SyllableSegmentation,
    detect_extrema,
    sonority_envelope,
    syllable_segments,
)
from .featureio import (
    FeatureMatrix,
    FileFormatError,
    Waveform,
    load_audio,
    load_model,
    read_feature_matrix,
    save_model,
    write_feature_matrix,
)
from .metrics import RateReport, WerReport, rate_report, wer
from .rhythm import (
    GammaModel,
    RhythmProfile,
    build_profile,
    compute_rates,
    fit_gamma,
    map_duration,
    moments_gamma,
)
from .segmenter import (
    SegmenterModel,
    SpeechType,
    TypedSegments,
    dp_segment,
    fit_segmenter,
    frame_log_probs,
    speech_regions,
)

__version__ = "0.1.0"

__all__ = [
    "Envelope",
    "ExtremaSet",
    "FeatureMatrix",
    "FileFormatError",
    "GammaModel",
    "RateReport",
    "RhythmProfile",
    "RunConfig",
    "SegmenterModel",
    "SpeechType",
    "StretchPlan",
    "SyllableSegmentation",
    "TypedSegments",
    "UnitDatabase",
    "Waveform",
    "WerReport",
    "build_profile",
    "compute_rates",
    "convert_pipeline",
    "detect_extrema",
    "dp_segment",
    "fit_gamma",
    "fit_segmenter",
    "frame_log_probs",
    "knn_convert",
    "knn_index",
    "load_audio",
    "load_model",
    "map_duration",
    "moments_gamma",
    "nearest_units",
    "rate_report",
    "read_feature_matrix",
    "rhythm_convert",
    "save_model",
    "sonority_envelope",
    "speech_regions",
    "syllable_segments",
    "time_stretch",
    "wer",
    "write_feature_matrix",
]
