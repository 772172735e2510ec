#!/usr/bin/env python3
"""Sonority envelope and syllable nuclei on a synthetic 'speech' tone.

A tone amplitude-modulated at 4 Hz mimics a speaker producing four
syllables per second: every modulation cycle bumps the envelope, so we
expect one detected peak per cycle.
"""

import numpy as np

from rhythmvc import detect_extrema, sonority_envelope, syllable_segments
from synthdata import am_tone

wave = am_tone(duration=10.0, am_hz=4.0)
print(f"waveform: {wave.duration:.1f} s at {wave.sample_rate} Hz")

env = sonority_envelope(wave, frame_rate=50.0)
extrema = detect_extrema(env)
print(f"envelope frames: {env.n_frames}")
print(f"peaks (nuclei): {extrema.peaks.size}   valleys (onsets): {extrema.valleys.size}")

segments = syllable_segments(extrema, "peak_to_peak", env.n_frames, 50.0)
durations = segments.durations
print(f"syllable segments: {segments.n_segments}")
print(f"mean duration: {durations.mean():.3f} s  ->  {1 / durations.mean():.2f} syllables/s")

print("\nfirst five segments (frames):")
for start, end in segments.segments[:5]:
    print(f"  [{start:4d}, {end:4d})  {(end - start) / 50.0:.2f} s")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(10, 3))
    ax.plot(np.arange(env.n_frames) / 50.0, env.values, lw=1, label="envelope")
    ax.plot(extrema.peaks / 50.0, env.values[extrema.peaks], "r^", ms=5, label="nuclei")
    ax.plot(extrema.valleys / 50.0, env.values[extrema.valleys], "gv", ms=5, label="onsets")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("sonority")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig("envelope_demo.png", dpi=120)
    print("\nwrote envelope_demo.png")
except ImportError:
    pass
