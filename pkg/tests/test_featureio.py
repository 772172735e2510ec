import json
import math
import struct

import numpy as np
import pytest
from scipy.io import wavfile

from rhythmvc import (
    FeatureMatrix,
    FileFormatError,
    GammaModel,
    RhythmProfile,
    SegmenterModel,
    SpeechType,
    load_audio,
    load_model,
    read_feature_matrix,
    save_model,
    write_feature_matrix,
)

RNG = np.random.default_rng(11)


def _write_pcm24(path, rate, samples):
    """Minimal RIFF writer for 24-bit PCM (scipy cannot write it)."""
    ints = np.clip(np.round(samples * (2**23 - 1)), -(2**23), 2**23 - 1).astype(np.int32)
    frames = b"".join(int(v).to_bytes(3, "little", signed=True) for v in ints)
    byte_rate = rate * 3
    fmt = struct.pack("<HHIIHH", 1, 1, rate, byte_rate, 3, 24)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(frames)) + frames
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


class TestLoadAudio:
    def test_stereo_441k_to_16k_mono(self, tmp_path):
        rate = 44100
        t = np.arange(rate) / rate
        left = 0.4 * np.sin(2 * np.pi * 440 * t)
        right = 0.2 * np.sin(2 * np.pi * 440 * t)
        path = tmp_path / "stereo.wav"
        wavfile.write(path, rate, np.stack([left, right], axis=1).astype(np.float32))
        wave = load_audio(path)
        assert wave.sample_rate == 16000
        assert wave.samples.ndim == 1
        assert abs(wave.duration - 1.0) < 0.01

    def test_full_scale_sine_gain(self, tmp_path):
        t = np.arange(16000) / 16000
        x = np.sin(2 * np.pi * 400 * t).astype(np.float32)
        path = tmp_path / "sine.wav"
        wavfile.write(path, 16000, x)
        # input RMS is -3.01 dBFS, so a -16.99 dB gain lands at -20 dBFS
        assert abs(20 * math.log10(1 / math.sqrt(2)) - (-3.01)) < 0.01
        wave = load_audio(path)
        level_db = 20 * math.log10(wave.rms())
        assert abs(level_db - (-20.0)) < 0.1

    def test_silence_left_untouched(self, tmp_path):
        path = tmp_path / "zeros.wav"
        wavfile.write(path, 16000, np.zeros(8000, dtype=np.float32))
        wave = load_audio(path)
        assert np.all(wave.samples == 0.0)

    def test_idempotent_on_conformant_audio(self, tmp_path):
        t = np.arange(32000) / 16000
        x = (0.05 * np.sin(2 * np.pi * 320 * t) + 0.02 * np.sin(2 * np.pi * 1150 * t)).astype(
            np.float32
        )
        first = tmp_path / "a.wav"
        wavfile.write(first, 16000, x)
        wave1 = load_audio(first)
        second = tmp_path / "b.wav"
        wavfile.write(second, 16000, wave1.samples.astype(np.float32))
        wave2 = load_audio(second)
        rms_diff = np.sqrt(np.mean((wave1.samples - wave2.samples) ** 2))
        assert rms_diff < 1e-6

    @pytest.mark.parametrize("encoding", ["pcm16", "pcm24", "float32"])
    def test_pcm_encodings_agree(self, tmp_path, encoding):
        t = np.arange(16000) / 16000
        x = 0.25 * np.sin(2 * np.pi * 500 * t)
        path = tmp_path / f"{encoding}.wav"
        if encoding == "pcm16":
            wavfile.write(path, 16000, (x * 32767).astype(np.int16))
        elif encoding == "pcm24":
            _write_pcm24(path, 16000, x)
        else:
            wavfile.write(path, 16000, x.astype(np.float32))
        wave = load_audio(path)
        # all encodings normalize to the same level
        assert abs(20 * math.log10(wave.rms()) - (-20.0)) < 0.1

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "garbage.wav"
        path.write_bytes(b"definitely not RIFF data")
        with pytest.raises(FileFormatError):
            load_audio(path)

    def test_empty_audio_rejected(self, tmp_path):
        path = tmp_path / "empty.wav"
        wavfile.write(path, 16000, np.zeros(0, dtype=np.float32))
        with pytest.raises(FileFormatError, match="empty"):
            load_audio(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_audio(tmp_path / "nope.wav")


class TestFeatureMatrixFiles:
    @pytest.mark.parametrize("shape", [(120, 1024), (1, 1), (0, 16), (7, 3)])
    def test_round_trip_bit_exact(self, tmp_path, shape):
        data = RNG.standard_normal(shape).astype(np.float32)
        path = tmp_path / "feat.npy"
        write_feature_matrix(FeatureMatrix(data, 50.0), path)
        back = read_feature_matrix(path)
        assert back.data.dtype == np.float32
        assert np.array_equal(back.data, data)

    def test_numpy_reads_our_files(self, tmp_path):
        data = RNG.standard_normal((30, 8)).astype(np.float32)
        path = tmp_path / "ours.npy"
        write_feature_matrix(data, path)
        assert np.array_equal(np.load(path), data)

    def test_we_read_numpy_files(self, tmp_path):
        data = RNG.standard_normal((30, 8)).astype(np.float32)
        path = tmp_path / "theirs.npy"
        np.save(path, data)
        assert np.array_equal(read_feature_matrix(path).data, data)

    def test_float64_files_accepted(self, tmp_path):
        data = RNG.standard_normal((5, 4))
        path = tmp_path / "f8.npy"
        np.save(path, data)
        assert np.array_equal(read_feature_matrix(path).data, data)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "tiny.npy"
        write_feature_matrix(np.zeros((3, 2), dtype=np.float32), path)
        raw = path.read_bytes()
        assert raw[:6] == b"\x93NUMPY"
        assert raw[6:8] == b"\x01\x00"
        (hlen,) = struct.unpack_from("<H", raw, 8)
        assert (10 + hlen) % 64 == 0
        assert 10 + hlen == 128  # small header pads to two 64-byte blocks
        assert len(raw) == 128 + 3 * 2 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.npy"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FileFormatError, match="magic"):
            read_feature_matrix(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.npy"
        write_feature_matrix(RNG.standard_normal((10, 4)).astype(np.float32), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-17])
        with pytest.raises(FileFormatError, match="truncated"):
            read_feature_matrix(path)

    def test_non_2d_rejected(self, tmp_path):
        path = tmp_path / "vec.npy"
        np.save(path, np.zeros(8, dtype=np.float32))
        with pytest.raises(FileFormatError, match="2-D"):
            read_feature_matrix(path)

    def test_non_float_rejected(self, tmp_path):
        path = tmp_path / "ints.npy"
        np.save(path, np.zeros((4, 4), dtype=np.int32))
        with pytest.raises(FileFormatError, match="float"):
            read_feature_matrix(path)

    def test_nan_rejected_before_writing(self, tmp_path):
        data = np.zeros((4, 4), dtype=np.float32)
        data[1, 2] = np.nan
        path = tmp_path / "nan.npy"
        with pytest.raises(ValueError, match="non-finite"):
            write_feature_matrix(data, path)
        assert not path.exists()

    def test_sidecar_frame_rate(self, tmp_path):
        path = tmp_path / "feat.npy"
        write_feature_matrix(np.zeros((4, 4), dtype=np.float32), path)
        assert read_feature_matrix(path).frame_rate == 50.0
        (tmp_path / "feat.npy.json").write_text(json.dumps({"frame_rate": 100.0}))
        assert read_feature_matrix(path).frame_rate == 100.0
        assert read_feature_matrix(path, frame_rate=25.0).frame_rate == 25.0


class TestModelFiles:
    def _profile(self):
        return RhythmProfile(
            speaker_id="spk1",
            syllable_rate=3.847261039481726,
            sonorant_rate=1.2039481726354872,
            syllable_gamma=GammaModel(4.172635487192837, 0.06123456789012345, 412),
            per_type_gamma={
                SpeechType.SONORANT: GammaModel(2.5, 0.08, 97),
                SpeechType.SILENCE: GammaModel(1.1, 0.3, 33),
            },
            frame_rate=50.0,
        )

    def test_profile_round_trip(self, tmp_path):
        profile = self._profile()
        path = tmp_path / "profile.json"
        save_model(profile, path)
        back = load_model(path)
        assert back.speaker_id == profile.speaker_id
        for a, b in [
            (back.syllable_rate, profile.syllable_rate),
            (back.sonorant_rate, profile.sonorant_rate),
            (back.syllable_gamma.shape, profile.syllable_gamma.shape),
            (back.syllable_gamma.scale, profile.syllable_gamma.scale),
            (
                back.per_type_gamma[SpeechType.SONORANT].scale,
                profile.per_type_gamma[SpeechType.SONORANT].scale,
            ),
        ]:
            assert abs(a - b) <= 1e-12 * abs(b)

    def test_segmenter_round_trip(self, tmp_path):
        model = SegmenterModel(
            centroids=RNG.standard_normal((5, 3)),
            class_of=np.array([0, 1, 2, 1, 1]),
            temperature=0.7236182736451,
            seed=42,
        )
        path = tmp_path / "segmenter.json"
        save_model(model, path)
        back = load_model(path)
        assert np.array_equal(back.class_of, model.class_of)
        assert np.max(np.abs(back.centroids - model.centroids)) == 0.0
        assert back.temperature == model.temperature
        assert back.seed == 42

    def test_file_declares_centroid_count(self, tmp_path):
        model = SegmenterModel(
            centroids=RNG.standard_normal((100, 4)),
            class_of=np.array([0] * 34 + [1] * 33 + [2] * 33),
            temperature=1.0,
        )
        path = tmp_path / "segmenter.json"
        save_model(model, path)
        payload = json.loads(path.read_text())
        assert payload["n_centroids"] == 100
        assert payload["schema_version"] == 1

    def test_unknown_schema_version(self, tmp_path):
        path = tmp_path / "future.json"
        path.write_text(json.dumps({"schema_version": 99, "kind": "segmenter"}))
        with pytest.raises(FileFormatError, match="99"):
            load_model(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text(json.dumps({"schema_version": 1, "kind": "rhythm_profile"}))
        with pytest.raises(FileFormatError, match="missing"):
            load_model(path)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"schema_version": 1, "kind": "mystery"}))
        with pytest.raises(FileFormatError, match="kind"):
            load_model(path)

    def test_unserializable_object(self, tmp_path):
        with pytest.raises(TypeError):
            save_model({"not": "a model"}, tmp_path / "x.json")
