from .extract import DEFAULT_LAYER, DEFAULT_MODEL, ExtractionSpec, extract

__all__ = ["DEFAULT_LAYER", "DEFAULT_MODEL", "ExtractionSpec", "extract"]
