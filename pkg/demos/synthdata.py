"""Synthetic speech stand-ins shared by the demo scripts.

Waveforms are built from three acoustic states (silence, an
amplitude-modulated tone standing in for sonorants, white noise for
obstruents).  Feature frames come from three separated Gaussian blobs, one
per state, so the unsupervised pipeline has a visible ground truth.
"""

import numpy as np

from rhythmvc import FeatureMatrix, Waveform

SR = 16000
FRAME_RATE = 50.0

BLOB_MEANS = {
    "sil": np.array([0.0, 0.0, 0.0, 0.0]),
    "son": np.array([6.0, 0.0, 0.0, 0.0]),
    "obs": np.array([0.0, 6.0, 0.0, 0.0]),
}

TRAIN_STATES = [
    ("sil", 0.5),
    ("son", 0.3),
    ("obs", 0.5),
    ("son", 0.2),
    ("sil", 0.3),
    ("obs", 0.3),
    ("son", 0.3),
]


def am_tone(duration=10.0, carrier_hz=1000.0, am_hz=4.0, amplitude=0.3):
    t = np.arange(int(round(duration * SR))) / SR
    x = amplitude * 0.5 * (1 - np.cos(2 * np.pi * am_hz * t)) * np.sin(2 * np.pi * carrier_hz * t)
    return Waveform(x, SR)


def make_utterance(states, rng, am_hz=4.0):
    waves, feats = [], []
    for kind, duration in states:
        n = int(round(duration * SR))
        t = np.arange(n) / SR
        if kind == "sil":
            waves.append(np.zeros(n))
        elif kind == "son":
            waves.append(
                0.3 * 0.5 * (1 - np.cos(2 * np.pi * am_hz * t)) * np.sin(2 * np.pi * 1000.0 * t)
            )
        else:
            waves.append(0.1 * rng.standard_normal(n))
        n_frames = int(round(duration * FRAME_RATE))
        feats.append(rng.normal(BLOB_MEANS[kind], 0.15, size=(n_frames, 4)))
    feat = FeatureMatrix(np.concatenate(feats).astype(np.float32), FRAME_RATE)
    return feat, Waveform(np.concatenate(waves), SR)


def speaker_corpus(rng, n_utterances=4, speech_seconds=7.0, am_hz=4.0):
    """Utterances of one long 'speech' stretch framed by silence; am_hz sets
    the nucleus rate in syllables per second."""
    states = [("sil", 0.5), ("son", speech_seconds), ("sil", 0.5)]
    return [make_utterance(states, rng, am_hz=am_hz) for _ in range(n_utterances)]
