import numpy as np
import pytest
from scipy.spatial.distance import pdist

from rhythmvc import (
    FeatureMatrix,
    SegmenterModel,
    SpeechType,
    Waveform,
    dp_segment,
    fit_segmenter,
    frame_log_probs,
    speech_regions,
)
from rhythmvc.segmenter import Segment, TypedSegments

from conftest import SR, make_utterance, speech_corpus

NAME_OF = {SpeechType.SILENCE: "sil", SpeechType.SONORANT: "son", SpeechType.OBSTRUENT: "obs"}


def brute_force_cost(logp: np.ndarray, gamma: float) -> float:
    """Exhaustive minimum over all boundary sets and per-segment classes."""
    n = logp.shape[0]
    neg = -logp
    best = np.inf
    for mask in range(2 ** (n - 1)):
        bounds = [0] + [i + 1 for i in range(n - 1) if (mask >> i) & 1] + [n]
        cost = sum(
            gamma + min(neg[s:e, c].sum() for c in range(3))
            for s, e in zip(bounds[:-1], bounds[1:])
        )
        best = min(best, cost)
    return best


def segments_cost(typed: TypedSegments, logp: np.ndarray, gamma: float) -> float:
    return sum(gamma + (-logp[s.start : s.end, s.label]).sum() for s in typed.segments)


class TestFitSegmenter:
    def test_blob_recovery_and_labels(self, world):
        model, train = world
        assert model.n_centroids == 9
        assert set(int(c) for c in model.class_of) == {0, 1, 2}
        correct = total = 0
        for feat, _, labels in train:
            pred = frame_log_probs(feat, model).argmax(axis=1)
            correct += sum(NAME_OF[SpeechType(p)] == l for p, l in zip(pred, labels))
            total += len(labels)
        assert correct / total > 0.98

    def test_hundred_centroids_three_classes(self):
        rng = np.random.default_rng(21)
        corpus = [(f, w) for f, w, _ in speech_corpus(rng, n_utterances=9)]
        model = fit_segmenter(corpus, k=100, seed=1)
        assert model.n_centroids == 100
        assert all(np.any(model.class_of == t) for t in SpeechType)

    def test_corpus_too_small(self):
        rng = np.random.default_rng(3)
        feat, wave, _ = make_utterance([("son", 0.5)], rng)
        with pytest.raises(ValueError, match="too small"):
            fit_segmenter([(feat, wave)], k=100)

    def test_no_low_energy_frames(self):
        # loud everywhere: an unmodulated tone plus noise leaves no quiet frames
        rng = np.random.default_rng(5)
        t = np.arange(4 * SR) / SR
        loud = 0.3 * np.sin(2 * np.pi * 700 * t) + 0.1 * rng.standard_normal(t.size)
        sizes = (67, 67, 66)  # exactly 4 s of frames at 50 Hz
        blobs = np.concatenate(
            [
                rng.normal(mu, 0.1, size=(size, 4))
                for mu, size in zip(([0] * 4, [6, 0, 0, 0], [0, 6, 0, 0]), sizes)
            ]
        )
        corpus = [(FeatureMatrix(blobs.astype(np.float32), 50.0), Waveform(loud[: 4 * SR], SR))]
        with pytest.raises(ValueError, match="low-energy"):
            fit_segmenter(corpus, k=9, seed=0)

    def test_model_validation(self):
        with pytest.raises(ValueError, match="non-empty"):
            SegmenterModel(np.zeros((4, 2)), np.array([0, 0, 1, 1]), 1.0)
        with pytest.raises(ValueError, match="temperature"):
            SegmenterModel(np.zeros((3, 2)), np.array([0, 1, 2]), 0.0)


class TestFrameLogProbs:
    def test_rows_sum_to_one(self, world):
        model, train = world
        logp = frame_log_probs(train[0][0], model)
        sums = np.exp(logp).sum(axis=1)
        assert np.max(np.abs(sums - 1.0)) < 1e-9

    def test_sharp_at_centroid_with_small_temperature(self, world):
        model, _ = world
        tau = 1e-3 * np.median(pdist(model.centroids, "sqeuclidean"))
        sharp = SegmenterModel(model.centroids, model.class_of, tau, seed=model.seed)
        son_centroid = model.centroids[np.flatnonzero(model.class_of == SpeechType.SONORANT)[0]]
        feat = FeatureMatrix(son_centroid[None, :].astype(np.float32), 50.0)
        probs = np.exp(frame_log_probs(feat, sharp))
        assert probs[0, SpeechType.SONORANT] > 0.99

    def test_equidistant_centroids_give_class_size_ratio(self):
        centroids = np.eye(6)
        model = SegmenterModel(centroids, np.array([0, 0, 1, 1, 1, 2]), temperature=1.0)
        feat = FeatureMatrix(np.zeros((1, 6), dtype=np.float32), 50.0)
        probs = np.exp(frame_log_probs(feat, model))
        assert np.allclose(probs[0], [2 / 6, 3 / 6, 1 / 6], atol=1e-12)

    def test_empty_input(self, world):
        model, _ = world
        out = frame_log_probs(FeatureMatrix(np.zeros((0, model.dim), np.float32), 50.0), model)
        assert out.shape == (0, 3)

    def test_dimension_mismatch(self, world):
        model, _ = world
        with pytest.raises(ValueError, match="dim"):
            frame_log_probs(FeatureMatrix(np.zeros((4, model.dim + 1), np.float32), 50.0), model)

    def test_translation_invariance(self, world):
        model, train = world
        shift = np.full(model.dim, 3.25)
        shifted = SegmenterModel(
            model.centroids + shift, model.class_of, model.temperature, seed=model.seed
        )
        feat = train[0][0]
        moved = FeatureMatrix(feat.data + shift.astype(np.float32), feat.frame_rate)
        a = frame_log_probs(feat, model)
        b = frame_log_probs(moved, shifted)
        assert np.allclose(a, b, atol=1e-9)


class TestDpSegment:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            n = int(rng.integers(1, 13))
            logp = np.log(rng.dirichlet(np.ones(3), size=n))
            for gamma in (0.0, 0.7, 3.0):
                typed = dp_segment(logp, gamma)
                assert segments_cost(typed, logp, gamma) == pytest.approx(
                    brute_force_cost(logp, gamma), abs=1e-9
                )

    def test_count_non_increasing_in_gamma(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            logp = np.log(rng.dirichlet(np.ones(3), size=20))
            counts = [len(dp_segment(logp, g).segments) for g in (0.0, 0.5, 1.0, 3.0, 10.0)]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_single_frame(self):
        logp = np.log(np.array([[0.1, 0.7, 0.2]]))
        typed = dp_segment(logp, 3.0)
        assert len(typed.segments) == 1
        seg = typed.segments[0]
        assert (seg.start, seg.end, seg.label) == (0, 1, SpeechType.SONORANT)

    def test_huge_gamma_forces_single_segment(self):
        rng = np.random.default_rng(29)
        logp = np.log(rng.dirichlet(np.ones(3), size=30))
        typed = dp_segment(logp, gamma=30 * np.abs(logp).max())
        assert len(typed.segments) == 1
        seg = typed.segments[0]
        assert seg.label == SpeechType(int(np.argmin((-logp).sum(axis=0))))

    def test_tie_prefers_fewer_segments(self):
        # uniform rows make every partition cost-equal at gamma 0
        logp = np.log(np.full((12, 3), 1 / 3))
        typed = dp_segment(logp, gamma=0.0)
        assert len(typed.segments) == 1

    def test_adjacent_same_class_merged(self):
        logp = np.log(np.array([[0.8, 0.1, 0.1]] * 10))
        typed = dp_segment(logp, gamma=0.0)
        assert len(typed.segments) == 1
        assert typed.segments[0].label == SpeechType.SILENCE

    def test_mean_logp_recorded(self):
        logp = np.log(np.array([[0.5, 0.25, 0.25], [0.5, 0.25, 0.25]]))
        typed = dp_segment(logp, gamma=3.0)
        assert typed.segments[0].mean_logp == pytest.approx(np.log(0.5))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            dp_segment(np.zeros((0, 3)), 3.0)
        with pytest.raises(ValueError):
            dp_segment(np.zeros((4, 3)), -1.0)
        with pytest.raises(ValueError):
            dp_segment(np.zeros((4, 2)), 3.0)

    def test_recovers_constructed_boundaries(self, world):
        model, train = world
        feat, _, labels = train[0]
        typed = dp_segment(frame_log_probs(feat, model), 3.0)
        rebuilt = []
        for seg in typed.segments:
            rebuilt.extend([NAME_OF[seg.label]] * (seg.end - seg.start))
        agreement = np.mean([a == b for a, b in zip(rebuilt, labels)])
        assert agreement > 0.97


class TestSpeechRegions:
    def _typed(self, spec):
        segments, start = [], 0
        for label, length in spec:
            segments.append(Segment(start, start + length, label, 0.0))
            start += length
        return TypedSegments(segments)

    def test_middle_region(self):
        typed = self._typed(
            [
                (SpeechType.SILENCE, 5),
                (SpeechType.SONORANT, 10),
                (SpeechType.OBSTRUENT, 5),
                (SpeechType.SILENCE, 5),
            ]
        )
        assert speech_regions(typed) == [(5, 20)]

    def test_all_silence(self):
        assert speech_regions(self._typed([(SpeechType.SILENCE, 25)])) == []

    def test_alternating(self):
        typed = self._typed(
            [(SpeechType.SONORANT, 5), (SpeechType.SILENCE, 5), (SpeechType.SONORANT, 5)]
        )
        assert speech_regions(typed) == [(0, 5), (10, 15)]

    def test_regions_and_silence_tile_everything(self, world):
        model, train = world
        for feat, _, _ in train[:3]:
            typed = dp_segment(frame_log_probs(feat, model), 3.0)
            regions = speech_regions(typed)
            silences = [
                (s.start, s.end) for s in typed.segments if s.label == SpeechType.SILENCE
            ]
            covered = sorted(regions + silences)
            assert covered[0][0] == 0
            assert covered[-1][1] == feat.n_frames
            assert all(a[1] == b[0] for a, b in zip(covered, covered[1:]))
