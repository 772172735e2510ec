#!/usr/bin/env python3
"""Unsupervised speech-type segmentation on synthetic utterances.

The segmenter clusters feature frames into a small codebook, groups the
centroids into three speech types against acoustic references (quiet frames
-> silence, periodic frames -> sonorant), and a dynamic program merges
frames into typed segments.  The penalty constant trades boundary count
against per-frame fit.
"""

import numpy as np

from rhythmvc import dp_segment, fit_segmenter, frame_log_probs, speech_regions
from synthdata import TRAIN_STATES, make_utterance

rng = np.random.default_rng(7)
corpus = [make_utterance(TRAIN_STATES, rng) for _ in range(6)]

model = fit_segmenter(corpus, k=9, seed=0)
print(f"codebook: {model.n_centroids} centroids, temperature {model.temperature:.2f}")
for label in sorted(set(model.class_of)):
    count = int(np.sum(model.class_of == label))
    print(f"  class {label}: {count} centroids")

feat, wave = make_utterance(TRAIN_STATES, rng)
logp = frame_log_probs(feat, model)
print(f"\nframe log-probabilities: {logp.shape}, rows sum to "
      f"{np.exp(logp).sum(axis=1).mean():.6f} in probability domain")

for penalty in (0.0, 3.0, 30.0):
    typed = dp_segment(logp, gamma=penalty)
    print(f"\npenalty {penalty}: {len(typed.segments)} segments")
    for seg in typed.segments[:8]:
        print(
            f"  [{seg.start:3d}, {seg.end:3d}) {seg.label.name.lower():9s}"
            f" mean logp {seg.mean_logp:7.3f}"
        )

typed = dp_segment(logp, gamma=3.0)
print("\nspeech regions (sonorant+obstruent):", speech_regions(typed))
