"""Acoustic features: framing, mel filterbank, log mel-filterbank sequences,
per-dimension z-normalization, and a fixed-length functionals vector.

Frame grid is 25 ms / 10 ms (200 / 80 samples at 8 kHz) throughout; the same
grid is shared by the speech activity detector so masks line up with feature
sequences frame for frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.fft
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .audio import AudioBuffer

__all__ = [
    "FRAME_LEN", "FRAME_SHIFT", "SAMPLE_RATE", "N_FFT", "N_FILTERS", "LOG_FLOOR",
    "frame_count", "frame_signal", "mel", "mel_to_hz", "mel_filterbank",
    "LogMfbSequence", "log_mfb", "NormStats", "zscore_fit", "zscore_apply",
    "FunctionalsVector", "functionals", "FUNCTIONALS_REGISTRY",
    "LogMfbExtractor", "FunctionalsExtractor", "SequenceScaler",
    "FilterbankConfigError", "DegenerateFeatureError",
    "frame_log_energy", "frame_voicing",
]

SAMPLE_RATE = 8000
FRAME_LEN = 200      # 25 ms at 8 kHz
FRAME_SHIFT = 80     # 10 ms at 8 kHz
N_FFT = 256
N_FILTERS = 40
LOG_FLOOR = 1e-10

# Autocorrelation pitch-search window, 60..300 Hz at 8 kHz.
F0_MIN_HZ = 60.0
F0_MAX_HZ = 300.0
_LAG_MIN = int(math.ceil(SAMPLE_RATE / F0_MAX_HZ))   # 27
_LAG_MAX = int(math.floor(SAMPLE_RATE / F0_MIN_HZ))  # 133

VOICING_THRESHOLD = 0.45
ACTIVE_RMS_THRESHOLD = 1e-4


class FilterbankConfigError(ValueError):
    """Filterbank resolution too coarse: some filter has empty support."""


class DegenerateFeatureError(ValueError):
    """A feature dimension has zero variance on the fit set."""


def frame_count(n_samples: int, frame_len: int = FRAME_LEN, shift: int = FRAME_SHIFT) -> int:
    """Number of full analysis frames in a signal of ``n_samples`` samples."""
    if frame_len < 1 or shift < 1:
        raise ValueError("frame_len and shift must be >= 1")
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // shift + 1


def frame_signal(samples: np.ndarray, frame_len: int = FRAME_LEN, shift: int = FRAME_SHIFT) -> np.ndarray:
    """Slice a signal into overlapping frames, shape (T, frame_len).

    Never reads past the buffer: the trailing partial frame is dropped.
    """
    samples = np.asarray(samples, dtype=np.float64)
    t = frame_count(samples.size, frame_len, shift)
    if t == 0:
        return np.empty((0, frame_len))
    idx = np.arange(frame_len)[None, :] + shift * np.arange(t)[:, None]
    return samples[idx]


def mel(f_hz):
    """Hz -> mel, 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (np.power(10.0, np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int = N_FILTERS, n_fft: int = N_FFT,
                   f_lo: float = 0.0, f_hi: float = 4000.0,
                   sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular mel filterbank, shape (n_filters, n_fft // 2 + 1).

    Peaks are equally spaced on the mel axis; each triangle has unit peak.
    Raises FilterbankConfigError if any filter covers no FFT bin.
    """
    if not 0 <= f_lo < f_hi <= sample_rate / 2:
        raise ValueError(f"need 0 <= f_lo < f_hi <= Nyquist, got f_lo={f_lo}, f_hi={f_hi}")
    edges_hz = mel_to_hz(np.linspace(mel(f_lo), mel(f_hi), n_filters + 2))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    fb = np.zeros((n_filters, freqs.size))
    for i in range(n_filters):
        left, center, right = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (freqs - left) / (center - left)
        falling = (right - freqs) / (right - center)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
        if not (fb[i] > 0).any():
            raise FilterbankConfigError(
                f"filter {i} (peak {center:.1f} Hz) has empty support; "
                f"reduce n_filters or increase n_fft")
    return fb


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(mean=np.asarray(d["mean"], dtype=np.float64),
                   std=np.asarray(d["std"], dtype=np.float64))


@dataclass
class LogMfbSequence:
    frames: np.ndarray                      # (T, 40)
    frame_len_ms: float = 25.0
    frame_shift_ms: float = 10.0
    norm_stats: Optional[NormStats] = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("log-MFB frames must be finite")

    def __len__(self) -> int:
        return self.frames.shape[0]


_FILTERBANK_CACHE: dict = {}


def _default_filterbank() -> np.ndarray:
    key = (N_FILTERS, N_FFT, SAMPLE_RATE)
    if key not in _FILTERBANK_CACHE:
        _FILTERBANK_CACHE[key] = mel_filterbank()
    return _FILTERBANK_CACHE[key]


def _magnitude_spectra(frames: np.ndarray, n_fft: int = N_FFT) -> np.ndarray:
    if frames.shape[0] == 0:
        return np.empty((0, n_fft // 2 + 1))
    windowed = frames * np.hamming(frames.shape[1])
    return np.abs(np.fft.rfft(windowed, n=n_fft, axis=1))


def log_mfb(audio: AudioBuffer) -> LogMfbSequence:
    """40-dim log mel-filterbank sequence on the 25 ms / 10 ms grid.

    Each frame: Hamming window, 256-point magnitude spectrum (frames are
    zero-padded from 200 samples), triangular filterbank energies, natural
    log floored at 1e-10.  Empty audio yields an empty (0, 40) sequence.
    """
    frames = frame_signal(audio.samples)
    spectra = _magnitude_spectra(frames)
    energies = spectra @ _default_filterbank().T
    return LogMfbSequence(frames=np.log(np.maximum(energies, LOG_FLOOR)))


def zscore_fit(sequences: Iterable, *, on_constant: str = "error") -> NormStats:
    """Fit per-dimension z-normalization statistics pooled over all rows.

    Accepts LogMfbSequence objects or plain 2-D arrays (so the same code
    normalizes functionals matrices).  Zero variance in any dimension raises
    DegenerateFeatureError naming the dimension; with on_constant="unit" the
    dimension instead gets unit scale, mapping it to constant zero (useful
    for functionals like active_fraction that saturate on clean corpora).
    """
    if on_constant not in ("error", "unit"):
        raise ValueError(f"on_constant must be 'error' or 'unit', got {on_constant!r}")
    mats = [s.frames if isinstance(s, LogMfbSequence) else np.asarray(s, dtype=np.float64)
            for s in sequences]
    mats = [m for m in mats if m.shape[0] > 0]
    if not mats:
        raise ValueError("z-normalization fit set is empty")
    pooled = np.concatenate(mats, axis=0)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    bad = np.flatnonzero(std == 0.0)
    if bad.size:
        if on_constant == "error":
            raise DegenerateFeatureError(f"zero variance in feature dimension(s) {bad.tolist()}")
        std = std.copy()
        std[bad] = 1.0
    return NormStats(mean=mean, std=std)


def zscore_apply(seq, stats: NormStats):
    """Apply (x - mean) / std per dimension; preserves the input's type."""
    if isinstance(seq, LogMfbSequence):
        return LogMfbSequence(frames=(seq.frames - stats.mean) / stats.std,
                              frame_len_ms=seq.frame_len_ms,
                              frame_shift_ms=seq.frame_shift_ms,
                              norm_stats=stats)
    arr = np.asarray(seq, dtype=np.float64)
    return (arr - stats.mean) / stats.std


# ---------------------------------------------------------------------------
# Frame-level descriptors shared by the functionals vector and the SAD.

def frame_log_energy(frames: np.ndarray) -> np.ndarray:
    """Natural log of per-frame mean power, floored at 1e-10."""
    if frames.shape[0] == 0:
        return np.empty(0)
    power = np.mean(frames**2, axis=1)
    return np.log(np.maximum(power, LOG_FLOOR))


def frame_voicing(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame voicing strength and best pitch lag via autocorrelation.

    Strength is the normalized cross-correlation peak over lags covering
    60..300 Hz, so a perfectly periodic frame scores ~1 regardless of lag.
    Returns (strength, lag) arrays of length T.
    """
    t, n = frames.shape if frames.ndim == 2 else (0, FRAME_LEN)
    if t == 0:
        return np.empty(0), np.empty(0, dtype=int)
    x = frames - frames.mean(axis=1, keepdims=True)
    sq = x**2
    # prefix sums for the lag-dependent normalization terms
    csum = np.concatenate([np.zeros((t, 1)), np.cumsum(sq, axis=1)], axis=1)
    lags = np.arange(_LAG_MIN, min(_LAG_MAX, n - 1) + 1)
    scores = np.empty((t, lags.size))
    for idx, k in enumerate(lags):
        num = np.sum(x[:, : n - k] * x[:, k:], axis=1)
        e_head = csum[:, n - k] - csum[:, 0]
        e_tail = csum[:, n] - csum[:, k]
        scores[:, idx] = num / np.sqrt(np.maximum(e_head * e_tail, 1e-20))
    best = np.argmax(scores, axis=1)
    strength = scores[np.arange(t), best]
    return strength, lags[best]


def _spectral_descriptors(spectra: np.ndarray, sample_rate: int = SAMPLE_RATE):
    freqs = np.fft.rfftfreq(N_FFT, d=1.0 / sample_rate)
    mag_sum = np.maximum(spectra.sum(axis=1), 1e-20)
    centroid = (spectra @ freqs) / mag_sum
    flux = np.zeros(spectra.shape[0])
    if spectra.shape[0] > 1:
        flux[1:] = np.sqrt(np.sum(np.diff(spectra, axis=0) ** 2, axis=1))
    logmag = np.log(np.maximum(spectra, 1e-12))
    fc = freqs - freqs.mean()
    slope = (logmag @ fc) / float(fc @ fc)
    power = np.maximum(spectra**2, 1e-20)
    flatness = np.exp(np.mean(np.log(power), axis=1)) / np.mean(power, axis=1)
    return centroid, flux, slope, flatness


_DESCRIPTOR_NAMES = (
    "log_energy", "f0_hz", "voicing", "spectral_centroid", "spectral_flux",
    "spectral_slope", "spectral_flatness",
    "cepstrum_0", "cepstrum_1", "cepstrum_2", "cepstrum_3",
)
_FUNCTIONAL_NAMES = ("mean", "std", "p20", "p50", "p80", "range", "slope")
_GLOBAL_NAMES = (
    "voiced_fraction", "active_fraction", "duration_s", "log_n_frames",
    "zcr_mean", "zcr_std", "energy_mean_all", "energy_std_all",
    "energy_p50_all", "voiced_run_rate", "voicing_mean_all",
)

FUNCTIONALS_REGISTRY: tuple[str, ...] = tuple(
    f"{d}_{f}" for d in _DESCRIPTOR_NAMES for f in _FUNCTIONAL_NAMES
) + _GLOBAL_NAMES

assert len(FUNCTIONALS_REGISTRY) == 88


@dataclass
class FunctionalsVector:
    values: np.ndarray
    feature_names: tuple[str, ...] = FUNCTIONALS_REGISTRY
    valid: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.feature_names),):
            raise ValueError(f"expected {len(self.feature_names)} values, got shape {self.values.shape}")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")


def _apply_functionals(series: np.ndarray, times: np.ndarray) -> list[float]:
    out = [float(series.mean()), float(series.std())]
    out.extend(float(v) for v in np.percentile(series, [20, 50, 80]))
    out.append(float(series.max() - series.min()))
    if series.size >= 2 and times.max() > times.min():
        tc = times - times.mean()
        out.append(float((series - series.mean()) @ tc / (tc @ tc)))
    else:
        out.append(0.0)
    return out


def functionals(audio: AudioBuffer) -> FunctionalsVector:
    """Fixed-length 88-entry functionals vector over frame-level descriptors.

    Pitch-dependent descriptors (f0, voicing) are summarized over voiced
    frames; the remaining descriptors over active (non-silent) frames.  All
    entries are listed, in order, in FUNCTIONALS_REGISTRY.  Audio with no
    voiced frames yields a zero vector flagged invalid.
    """
    if audio.samples.size == 0:
        return FunctionalsVector(values=np.zeros(88), valid=False)
    frames = frame_signal(audio.samples)
    t = frames.shape[0]
    if t == 0:
        return FunctionalsVector(values=np.zeros(88), valid=False)

    energy = frame_log_energy(frames)
    strength, lag = frame_voicing(frames)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    active = rms > ACTIVE_RMS_THRESHOLD
    voiced = active & (strength >= VOICING_THRESHOLD)
    if not voiced.any():
        return FunctionalsVector(values=np.zeros(88), valid=False)

    spectra = _magnitude_spectra(frames)
    centroid, flux, slope, flatness = _spectral_descriptors(spectra)
    mfb = np.log(np.maximum(spectra @ _default_filterbank().T, LOG_FLOOR))
    cepstra = scipy.fft.dct(mfb, type=2, norm="ortho", axis=1)[:, :4]
    f0 = SAMPLE_RATE / lag.astype(np.float64)

    times = np.arange(t) * (FRAME_SHIFT / SAMPLE_RATE)
    descriptors = {
        "log_energy": (energy, active),
        "f0_hz": (f0, voiced),
        "voicing": (strength, voiced),
        "spectral_centroid": (centroid, active),
        "spectral_flux": (flux, active),
        "spectral_slope": (slope, active),
        "spectral_flatness": (flatness, active),
        "cepstrum_0": (cepstra[:, 0], active),
        "cepstrum_1": (cepstra[:, 1], active),
        "cepstrum_2": (cepstra[:, 2], active),
        "cepstrum_3": (cepstra[:, 3], active),
    }
    values: list[float] = []
    for name in _DESCRIPTOR_NAMES:
        series, mask = descriptors[name]
        values.extend(_apply_functionals(series[mask], times[mask]))

    zcr = np.mean(np.abs(np.diff(np.signbit(frames), axis=1)), axis=1)
    runs = np.flatnonzero(np.diff(np.concatenate([[0], voiced.astype(int), [0]])) == 1).size
    duration = audio.duration_s
    values.extend([
        float(voiced.mean()),
        float(active.mean()),
        float(duration),
        float(math.log(t)),
        float(zcr.mean()),
        float(zcr.std()),
        float(energy.mean()),
        float(energy.std()),
        float(np.percentile(energy, 50)),
        float(runs / duration),
        float(strength.mean()),
    ])
    return FunctionalsVector(values=np.asarray(values))


# ---------------------------------------------------------------------------
# Estimator-style wrappers so the extractors compose with sklearn pipelines.

class LogMfbExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer: AudioBuffer -> (T, 40) log-MFB matrix."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        if isinstance(X, AudioBuffer):
            return log_mfb(X).frames
        return [log_mfb(a).frames for a in X]


class FunctionalsExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer: AudioBuffer(s) -> 88-entry functionals row(s)."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        if isinstance(X, AudioBuffer):
            return functionals(X).values
        return np.stack([functionals(a).values for a in X])


class SequenceScaler(TransformerMixin, BaseEstimator):
    """Per-dimension z-normalization fit on pooled training frames.

    Fit on a list of (T, D) sequences or one (N, D) matrix; transform applies
    the learned statistics elementwise, preserving sequence boundaries.
    """

    def fit(self, X, y=None):
        if isinstance(X, np.ndarray) and X.ndim == 2:
            X = [X]
        self.stats_ = zscore_fit(X)
        return self

    def transform(self, X):
        if not hasattr(self, "stats_"):
            raise NotFittedError("SequenceScaler is not fitted")
        if isinstance(X, (np.ndarray, LogMfbSequence)):
            return zscore_apply(X, self.stats_)
        return [zscore_apply(x, self.stats_) for x in X]
