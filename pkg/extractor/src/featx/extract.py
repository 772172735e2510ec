"""Dump hidden-layer features from a pretrained speech encoder.

One NPY file (little-endian float32, shape T x D) per input WAV, plus a JSON
manifest recording the model, the layer index, and per-file frame counts.
The files use the same array format the conversion toolkit reads, so this
package is the only place with neural-network dependencies.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import torch
from scipy.io import wavfile
from scipy.signal import resample_poly
from transformers import WavLMModel

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "microsoft/wavlm-large"
DEFAULT_LAYER = 6
ENCODER_SAMPLE_RATE = 16000


@dataclass
class ExtractionSpec:
    audio_paths: list[str | Path]
    out_dir: str | Path
    model: str = DEFAULT_MODEL
    layer: int = DEFAULT_LAYER
    device: str = "cpu"


def _load_wav_16k(path: str | Path) -> np.ndarray:
    rate, data = wavfile.read(str(path))
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype.kind == "i":
        data = data.astype(np.float64) / float(2 ** (8 * data.dtype.itemsize - 1))
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    else:
        data = data.astype(np.float64)
    if data.size and rate != ENCODER_SAMPLE_RATE:
        frac = Fraction(ENCODER_SAMPLE_RATE, int(rate))
        data = resample_poly(data, frac.numerator, frac.denominator)
    return data.astype(np.float32)


def _load_model(name_or_path: str, layer: int, device: str) -> WavLMModel:
    try:
        model = WavLMModel.from_pretrained(name_or_path)
    except Exception as exc:
        raise RuntimeError(f"failed to load encoder {name_or_path!r}: {exc}") from exc
    depth = model.config.num_hidden_layers
    if not 0 <= layer <= depth:
        raise ValueError(f"layer {layer} out of range for a {depth}-layer encoder")
    return model.to(device).eval()


def extract(spec: ExtractionSpec) -> dict:
    """Run the encoder over every input file; returns (and writes) the manifest."""
    model = _load_model(spec.model, spec.layer, spec.device)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = {
        "model": str(spec.model),
        "layer": spec.layer,
        "hidden_size": model.config.hidden_size,
        "sample_rate": ENCODER_SAMPLE_RATE,
        "files": [],
        "skipped": [],
    }
    for audio_path in spec.audio_paths:
        audio_path = Path(audio_path)
        samples = _load_wav_16k(audio_path)
        if samples.size == 0:
            logger.warning("skipping %s: empty audio", audio_path)
            manifest["skipped"].append({"audio": str(audio_path), "reason": "empty audio"})
            continue
        with torch.inference_mode():
            batch = torch.from_numpy(samples)[None, :].to(spec.device)
            outputs = model(input_values=batch, output_hidden_states=True)
        feats = outputs.hidden_states[spec.layer][0].cpu().numpy()
        feats = np.ascontiguousarray(feats, dtype="<f4")
        out_path = out_dir / (audio_path.stem + ".npy")
        np.save(out_path, feats)
        manifest["files"].append(
            {
                "audio": str(audio_path),
                "path": str(out_path),
                "frames": int(feats.shape[0]),
                "dim": int(feats.shape[1]),
            }
        )
        logger.info("%s -> %s (%d x %d)", audio_path.name, out_path.name, *feats.shape)

    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")
    return manifest


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("audio", nargs="+", help="input WAV files")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--model", default=DEFAULT_MODEL)
    parser.add_argument("--layer", type=int, default=DEFAULT_LAYER)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)
    spec = ExtractionSpec(
        audio_paths=args.audio,
        out_dir=args.out_dir,
        model=args.model,
        layer=args.layer,
        device=args.device,
    )
    manifest = extract(spec)
    print(f"wrote {len(manifest['files'])} feature files to {args.out_dir}")
    if manifest["skipped"]:
        print(f"skipped {len(manifest['skipped'])} inputs", file=sys.stderr)


if __name__ == "__main__":
    main()
