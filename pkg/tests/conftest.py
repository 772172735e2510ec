"""Shared synthetic fixtures.

The synthetic world pairs waveforms built from three acoustic states
(silence = zeros, sonorant = an amplitude-modulated tone, obstruent = white
noise) with feature frames drawn from three well-separated Gaussian blobs,
so segmenter training has a known ground truth.
"""

from __future__ import annotations

import numpy as np
import pytest

from rhythmvc import FeatureMatrix, Waveform, fit_segmenter

SR = 16000
FRAME_RATE = 50.0
FEATURE_DIM = 4

BLOB_MEANS = {
    "sil": np.array([0.0, 0.0, 0.0, 0.0]),
    "son": np.array([6.0, 0.0, 0.0, 0.0]),
    "obs": np.array([0.0, 6.0, 0.0, 0.0]),
}
BLOB_STD = 0.15

# equal time per state so the codebook splits evenly across the three blobs
TRAIN_STATES = [
    ("sil", 0.5),
    ("son", 0.3),
    ("obs", 0.5),
    ("son", 0.2),
    ("sil", 0.3),
    ("obs", 0.3),
    ("son", 0.3),
]


def am_tone(
    duration: float = 10.0,
    sr: int = SR,
    carrier_hz: float = 1000.0,
    am_hz: float = 4.0,
    amplitude: float = 0.3,
) -> Waveform:
    """Tone fully amplitude-modulated at am_hz: one envelope peak per cycle."""
    t = np.arange(int(round(duration * sr))) / sr
    x = amplitude * 0.5 * (1.0 - np.cos(2 * np.pi * am_hz * t)) * np.sin(2 * np.pi * carrier_hz * t)
    return Waveform(x, sr)


def state_waveform(kind: str, duration: float, rng, am_hz: float = 4.0) -> np.ndarray:
    n = int(round(duration * SR))
    t = np.arange(n) / SR
    if kind == "sil":
        return np.zeros(n)
    if kind == "son":
        return 0.3 * 0.5 * (1.0 - np.cos(2 * np.pi * am_hz * t)) * np.sin(2 * np.pi * 1000.0 * t)
    return 0.1 * rng.standard_normal(n)


def make_utterance(states, rng, am_hz: float = 4.0):
    """Aligned (features, waveform, per-frame state labels)."""
    waves, feats, labels = [], [], []
    for kind, duration in states:
        waves.append(state_waveform(kind, duration, rng, am_hz))
        n_frames = int(round(duration * FRAME_RATE))
        feats.append(rng.normal(BLOB_MEANS[kind], BLOB_STD, size=(n_frames, FEATURE_DIM)))
        labels.extend([kind] * n_frames)
    feat = FeatureMatrix(np.concatenate(feats).astype(np.float32), FRAME_RATE)
    return feat, Waveform(np.concatenate(waves), SR), labels


def speech_corpus(rng, n_utterances: int = 6, states=TRAIN_STATES):
    return [make_utterance(states, rng) for _ in range(n_utterances)]


@pytest.fixture(scope="session")
def world():
    """A trained synthetic segmenter plus its training corpus with labels."""
    rng = np.random.default_rng(7)
    train = speech_corpus(rng)
    model = fit_segmenter([(f, w) for f, w, _ in train], k=9, seed=0)
    return model, train
