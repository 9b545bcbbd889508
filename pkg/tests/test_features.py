import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speechmood.audio import AudioBuffer, WavFormatError, read_wav, write_wav
from speechmood.features import (
    FUNCTIONALS_REGISTRY,
    DegenerateFeatureError,
    FilterbankConfigError,
    LogMfbExtractor,
    SequenceScaler,
    frame_count,
    frame_signal,
    functionals,
    log_mfb,
    mel,
    mel_filterbank,
    mel_to_hz,
    zscore_apply,
    zscore_fit,
)

RATE = 8000


def tone(freq_hz, duration_s=1.0, amplitude=0.3, rate=RATE):
    t = np.arange(int(duration_s * rate)) / rate
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), rate)


class TestWavIO:
    def test_silence_round_trip(self, tmp_path):
        path = tmp_path / "s.wav"
        write_wav(path, AudioBuffer(np.zeros(8000), RATE))
        buf = read_wav(path)
        assert buf.samples.shape == (8000,)
        assert np.all(buf.samples == 0.0)

    def test_full_scale_square_wave(self, tmp_path):
        path = tmp_path / "sq.wav"
        sq = np.where(np.arange(4000) % 50 < 25, 1.0, -1.0)
        write_wav(path, AudioBuffer(sq, RATE))
        buf = read_wav(path)
        assert np.all(np.abs(np.abs(buf.samples) - 1.0) < 1.0 / 32768 + 1e-9)

    def test_stereo_rejected(self, tmp_path):
        import wave

        path = tmp_path / "st.wav"
        with wave.open(str(path), "wb") as w:
            w.setnchannels(2)
            w.setsampwidth(2)
            w.setframerate(RATE)
            w.writeframes(b"\x00\x00" * 64)
        with pytest.raises(WavFormatError, match="channels"):
            read_wav(path)

    def test_wrong_rate_rejected(self, tmp_path):
        import wave

        path = tmp_path / "r.wav"
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16000)
            w.writeframes(b"\x00\x00" * 64)
        with pytest.raises(WavFormatError, match="rate"):
            read_wav(path)


class TestFraming:
    def test_exact_one_frame(self):
        assert frame_count(200) == 1

    def test_one_short(self):
        assert frame_count(199) == 0

    def test_one_second(self):
        # floor((8000 - 200) / 80) + 1
        assert frame_count(8000) == 98

    @given(st.integers(0, 80000))
    @settings(max_examples=200, deadline=None)
    def test_never_reads_past_buffer(self, n):
        frames = frame_signal(np.arange(n, dtype=float))
        assert frames.shape == (frame_count(n), 200)
        if frames.size:
            assert frames[-1, -1] <= n - 1


class TestMelFilterbank:
    def test_mel_anchor_values(self):
        assert mel(0.0) == 0.0
        assert mel(700.0) == pytest.approx(2595.0 * math.log10(2.0), abs=1e-9)

    def test_mel_strictly_increasing(self):
        f = np.linspace(0, 4000, 500)
        assert np.all(np.diff(mel(f)) > 0)

    def test_mel_inverse(self):
        f = np.linspace(0, 4000, 50)
        assert np.allclose(mel_to_hz(mel(f)), f, atol=1e-6)

    def test_shape_and_coverage(self):
        fb = mel_filterbank()
        assert fb.shape == (40, 129)
        assert np.all(fb >= 0)
        assert np.all(fb.sum(axis=1) > 0)
        # every interior bin is covered by at least one filter
        freqs = np.fft.rfftfreq(256, d=1.0 / RATE)
        interior = (freqs > 0) & (freqs < 4000)
        assert np.all(fb[:, interior].sum(axis=0) > 0)

    def test_too_many_filters_rejected(self):
        with pytest.raises(FilterbankConfigError):
            mel_filterbank(n_filters=120, n_fft=256)

    def test_tone_sweep_argmax_monotone(self):
        freqs = np.linspace(200, 3500, 12)
        argmaxes = []
        for f in freqs:
            seq = log_mfb(tone(f))
            argmaxes.append(int(np.argmax(seq.frames.mean(axis=0))))
        assert all(b >= a for a, b in zip(argmaxes, argmaxes[1:]))


class TestLogMfb:
    def test_silence_hits_floor(self):
        seq = log_mfb(AudioBuffer(np.zeros(8000), RATE))
        assert np.all(seq.frames == math.log(1e-10))

    def test_one_second_shape(self):
        assert log_mfb(tone(440)).frames.shape == (98, 40)

    def test_empty_audio_empty_sequence(self):
        seq = log_mfb(AudioBuffer(np.zeros(0), RATE))
        assert seq.frames.shape == (0, 40)

    def test_finite_for_arbitrary_input(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, 5000) * 1e-8
        assert np.isfinite(log_mfb(AudioBuffer(x, RATE)).frames).all()

    def test_tone_peaks_at_nearest_filter(self):
        # brute force over filter center frequencies
        fb = mel_filterbank()
        freqs = np.fft.rfftfreq(256, d=1.0 / RATE)
        centers = freqs[np.argmax(fb, axis=1)]
        seq = log_mfb(tone(1000))
        row_argmax = int(np.argmax(seq.frames.mean(axis=0)))
        assert abs(centers[row_argmax] - 1000) == pytest.approx(np.min(np.abs(centers - 1000)), abs=40)


class TestZScore:
    def test_fit_then_apply_standardizes(self):
        rng = np.random.default_rng(1)
        seqs = [rng.standard_normal((50, 40)) * 3 + 1 for _ in range(4)]
        stats = zscore_fit(seqs)
        pooled = np.concatenate([zscore_apply(s, stats) for s in seqs])
        assert np.max(np.abs(pooled.mean(axis=0))) < 1e-9
        assert np.max(np.abs(pooled.std(axis=0) - 1)) < 1e-9

    def test_forced_arithmetic(self):
        from speechmood.features import NormStats

        stats = NormStats(mean=np.array([2.0]), std=np.array([2.0]))
        assert zscore_apply(np.array([[4.0]]), stats)[0, 0] == 1.0

    def test_constant_feature_rejected(self):
        seqs = [np.ones((10, 3)), np.ones((5, 3))]
        with pytest.raises(DegenerateFeatureError, match="dimension"):
            zscore_fit(seqs)

    def test_scaler_estimator(self):
        from sklearn.exceptions import NotFittedError

        rng = np.random.default_rng(2)
        scaler = SequenceScaler()
        with pytest.raises(NotFittedError):
            scaler.transform(rng.standard_normal((4, 4)))
        X = [rng.standard_normal((20, 4)) for _ in range(3)]
        out = scaler.fit(X).transform(X)
        assert len(out) == 3 and out[0].shape == (20, 4)
        assert scaler.get_params() == {}


class TestFunctionals:
    def test_registry_is_88_unique_names(self):
        assert len(FUNCTIONALS_REGISTRY) == 88
        assert len(set(FUNCTIONALS_REGISTRY)) == 88

    def test_silence_invalid_zero_vector(self):
        fv = functionals(AudioBuffer(np.zeros(8000), RATE))
        assert not fv.valid
        assert np.all(fv.values == 0.0)

    def test_tone_f0_recovered(self):
        fv = functionals(tone(150.0, duration_s=2.0))
        assert fv.valid
        idx = FUNCTIONALS_REGISTRY.index("f0_hz_mean")
        assert abs(fv.values[idx] - 150.0) <= 5.0

    def test_constant_tone_energy_std_near_zero(self):
        fv = functionals(tone(200.0, duration_s=1.5))
        idx = FUNCTIONALS_REGISTRY.index("log_energy_std")
        assert abs(fv.values[idx]) < 1e-2  # windowing ripple only

    def test_deterministic(self):
        buf = tone(173.0, duration_s=1.2)
        a = functionals(buf).values
        b = functionals(buf).values
        assert np.array_equal(a, b)

    def test_extractor_wrapper_shapes(self):
        ext = LogMfbExtractor()
        out = ext.fit(None).transform(tone(300))
        assert out.shape == (98, 40)
