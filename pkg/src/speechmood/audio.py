"""WAV ingestion for the 8 kHz telephone-speech pipeline.

Only mono 16-bit PCM at 8 kHz is accepted; anything else is a format error
naming the offending field.  No resampling, no codecs.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["AudioBuffer", "WavFormatError", "read_wav", "write_wav", "PIPELINE_RATE_HZ"]

PIPELINE_RATE_HZ = 8000
_INT16_FULL_SCALE = 32768.0


class WavFormatError(ValueError):
    """The WAV file does not match the pipeline input contract."""


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.isfinite(samples).all():
            raise ValueError("samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def slice_seconds(self, start_s: float, end_s: float) -> "AudioBuffer":
        i = max(0, int(round(start_s * self.sample_rate_hz)))
        j = min(self.samples.size, int(round(end_s * self.sample_rate_hz)))
        return AudioBuffer(self.samples[i:j], self.sample_rate_hz)


def read_wav(path, expected_rate_hz: int = PIPELINE_RATE_HZ) -> AudioBuffer:
    """Read a mono 16-bit PCM WAV file, scaling samples to [-1, 1]."""
    p = Path(path)
    try:
        with wave.open(str(p), "rb") as w:
            n_channels = w.getnchannels()
            sampwidth = w.getsampwidth()
            rate = w.getframerate()
            n_frames = w.getnframes()
            if n_channels != 1:
                raise WavFormatError(f"{p}: channels must be 1 (mono), got {n_channels}")
            if sampwidth != 2:
                raise WavFormatError(f"{p}: sample width must be 16-bit, got {8 * sampwidth}-bit")
            if rate != expected_rate_hz:
                raise WavFormatError(f"{p}: sample rate must be {expected_rate_hz} Hz, got {rate}")
            raw = w.readframes(n_frames)
    except wave.Error as e:
        raise WavFormatError(f"{p}: not a readable PCM WAV file: {e}") from e
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _INT16_FULL_SCALE
    return AudioBuffer(samples, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    """Write an AudioBuffer as mono 16-bit PCM, clipping to full scale."""
    clipped = np.clip(audio.samples, -1.0, 32767.0 / _INT16_FULL_SCALE)
    pcm = np.round(clipped * _INT16_FULL_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(audio.sample_rate_hz)
        w.writeframes(pcm.tobytes())
