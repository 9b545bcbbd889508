"""Unsupervised speech activity detection and contiguous segment formation.

Three per-frame cues (log energy, autocorrelation voicing strength, negated
spectral flatness) are z-normalized over the call, fused into a single score
by the leading principal component, median-smoothed, and thresholded by a
deterministic 1-D 2-means split.  No training, no tuning data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.signal
from sklearn.base import BaseEstimator

from .audio import AudioBuffer
from .corpus import MAX_CALL_S, MAX_SEGMENT_S, MIN_SEGMENT_S, Segment
from .features import (
    FRAME_LEN,
    FRAME_SHIFT,
    SAMPLE_RATE,
    _magnitude_spectra,
    _spectral_descriptors,
    frame_log_energy,
    frame_signal,
    frame_voicing,
)

__all__ = ["SadConfig", "SpeechMask", "sad", "form_segments", "two_means_threshold",
           "SpeechActivityDetector"]


@dataclass(frozen=True)
class SadConfig:
    smoothing_frames: int = 11
    merge_gap_s: float = 0.3
    min_segment_s: float = MIN_SEGMENT_S
    max_segment_s: float = MAX_SEGMENT_S

    def __post_init__(self):
        if self.smoothing_frames < 1 or self.smoothing_frames % 2 == 0:
            raise ValueError(f"smoothing window must be odd and >= 1, got {self.smoothing_frames}")
        if not self.min_segment_s < self.max_segment_s:
            raise ValueError("min_segment_s must be < max_segment_s")
        if self.merge_gap_s < 0:
            raise ValueError("merge_gap_s must be >= 0")


@dataclass
class SpeechMask:
    """Per-frame speech booleans on the same 25 ms / 10 ms grid as log-MFB."""

    frames: np.ndarray
    n_samples: int
    sample_rate_hz: int = SAMPLE_RATE

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=bool)

    def __len__(self) -> int:
        return self.frames.size

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


def two_means_threshold(scores: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Deterministic 1-D 2-means split; True marks the high-score cluster.

    Centroids start at the min and max of the scores, so identical inputs
    always yield identical assignments.
    """
    scores = np.asarray(scores, dtype=np.float64)
    lo, hi = float(scores.min()), float(scores.max())
    if lo == hi:
        return np.zeros(scores.size, dtype=bool)
    for _ in range(max_iter):
        # 1-D nearest-centroid assignment is just a midpoint threshold.
        high = scores > (lo + hi) / 2.0
        new_lo = float(scores[~high].mean()) if (~high).any() else lo
        new_hi = float(scores[high].mean()) if high.any() else hi
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return scores > (lo + hi) / 2.0


def sad(audio: AudioBuffer, cfg: SadConfig = SadConfig()) -> SpeechMask:
    """Per-frame speech/nonspeech mask over a whole call."""
    if audio.duration_s > MAX_CALL_S:
        raise ValueError(f"call longer than {MAX_CALL_S:.0f} s is excluded from segmentation")
    frames = frame_signal(audio.samples)
    t = frames.shape[0]
    if t < 3:
        return SpeechMask(frames=np.zeros(t, dtype=bool), n_samples=audio.samples.size,
                          sample_rate_hz=audio.sample_rate_hz)

    energy = frame_log_energy(frames)
    voicing, _ = frame_voicing(frames)
    _, _, _, flatness = _spectral_descriptors(_magnitude_spectra(frames))
    cues = np.stack([energy, voicing, -flatness], axis=1)

    stds = cues.std(axis=0)
    # relative floor: digital silence leaves rounding dust in the flatness cue
    usable = stds > 1e-8 * np.maximum(1.0, np.abs(cues.mean(axis=0)))
    if not usable.any():
        warnings.warn("all SAD cues are numerically constant; returning all-nonspeech mask")
        return SpeechMask(frames=np.zeros(t, dtype=bool), n_samples=audio.samples.size,
                          sample_rate_hz=audio.sample_rate_hz)
    z = (cues[:, usable] - cues[:, usable].mean(axis=0)) / stds[usable]

    # Fuse cues along the leading principal component, oriented so the combo
    # score rises with log energy.
    cov = (z.T @ z) / t
    _, eigvecs = np.linalg.eigh(cov)
    score = z @ eigvecs[:, -1]
    # z columns follow cue order, so when the energy cue is usable it is
    # column 0; without it there is no orientation anchor and the sign stays.
    if usable[0] and float(score @ z[:, 0]) < 0:
        score = -score

    window = min(cfg.smoothing_frames, t if t % 2 == 1 else t - 1)
    smooth = scipy.signal.medfilt(score, kernel_size=window)
    return SpeechMask(frames=two_means_threshold(smooth), n_samples=audio.samples.size,
                      sample_rate_hz=audio.sample_rate_hz)


def _speech_runs(mask: np.ndarray, merge_gap_frames: int) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    start = None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, mask.size - 1))
    if merge_gap_frames <= 0 or len(runs) < 2:
        return runs
    merged = [runs[0]]
    for s, e in runs[1:]:
        ps, pe = merged[-1]
        if s - pe - 1 <= merge_gap_frames:
            merged[-1] = (ps, e)
        else:
            merged.append((s, e))
    return merged


def form_segments(mask: SpeechMask, cfg: SadConfig = SadConfig(), *,
                  call_id: str = "", eligibility: bool = True) -> list[Segment]:
    """Maximal speech runs -> time segments, bridging short nonspeech gaps.

    In eligibility mode, runs outside [min_segment_s, max_segment_s] are
    dropped; raw mode keeps everything.  Segment times are clamped inside
    [0, call duration], and a run reaching the final frame extends to the
    call end so full-speech calls map to the full duration.
    """
    shift_s = FRAME_SHIFT / mask.sample_rate_hz
    frame_len_s = FRAME_LEN / mask.sample_rate_hz
    gap_frames = int(round(cfg.merge_gap_s / shift_s))
    spans = []
    for first, last in _speech_runs(mask.frames, gap_frames):
        start = first * shift_s
        end = last * shift_s + frame_len_s
        if last == mask.frames.size - 1:
            end = max(end, mask.duration_s)
        end = min(end, mask.duration_s)
        if eligibility and not (cfg.min_segment_s <= end - start <= cfg.max_segment_s):
            continue
        spans.append((start, end))
    prefix = f"{call_id}:" if call_id else ""
    return [Segment(segment_id=f"{prefix}seg{i:04d}", call_id=call_id, start_s=s, end_s=e)
            for i, (s, e) in enumerate(spans)]


class SpeechActivityDetector(BaseEstimator):
    """Estimator-style wrapper: predict(audio) -> SpeechMask.

    The detector is unsupervised, so fit is a no-op kept for pipeline
    compatibility.
    """

    def __init__(self, smoothing_frames: int = 11, merge_gap_s: float = 0.3,
                 min_segment_s: float = MIN_SEGMENT_S, max_segment_s: float = MAX_SEGMENT_S):
        self.smoothing_frames = smoothing_frames
        self.merge_gap_s = merge_gap_s
        self.min_segment_s = min_segment_s
        self.max_segment_s = max_segment_s

    def _config(self) -> SadConfig:
        return SadConfig(smoothing_frames=self.smoothing_frames, merge_gap_s=self.merge_gap_s,
                         min_segment_s=self.min_segment_s, max_segment_s=self.max_segment_s)

    def fit(self, X=None, y=None):
        return self

    def predict(self, audio: AudioBuffer) -> SpeechMask:
        return sad(audio, self._config())

    def segments(self, audio: AudioBuffer, *, call_id: str = "", eligibility: bool = True) -> list[Segment]:
        return form_segments(self.predict(audio), self._config(),
                             call_id=call_id, eligibility=eligibility)
