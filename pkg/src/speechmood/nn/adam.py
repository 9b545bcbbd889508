"""Adam optimizer with bias correction, operating on flat parameter dicts."""

from __future__ import annotations

import numpy as np

__all__ = ["AdamState", "adam_step", "TrainingDivergedError"]


class TrainingDivergedError(RuntimeError):
    """A non-finite gradient was encountered; training aborts with context."""


class AdamState:
    def __init__(self, params: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, t: int, lr: float = 1e-4,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam update, in place on ``params`` and ``state``; t counts from 1."""
    if t < 1:
        raise ValueError("step counter t must be >= 1")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in params.items():
        g = grads[name]
        if not np.isfinite(g).all():
            raise TrainingDivergedError(
                f"non-finite gradient in {name!r} at step {t} "
                f"(|g|_max={np.nanmax(np.abs(g)):.3g})")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
