"""Differentiable models built directly on numpy arrays.

Two architectures, both scalar-output regressors:

* FfnnNet: dense tanh stack over a fixed-length feature vector.
* ConvPoolNet: 1-D time convolutions (valid padding) over a variable-length
  feature sequence, ReLU, masked global max pooling over the valid output
  steps, then a dense ReLU stack.

Parameters live in a flat name->array dict so the optimizer and the
finite-difference gradient checker can treat every model uniformly.
Backward passes return exact analytic gradients of the batch loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "xavier_uniform", "FfnnConfig", "ConvPoolConfig", "FfnnNet", "ConvPoolNet",
    "pad_sequences", "batch_mse_loss", "TooShortInputError",
]

# Hyperparameter grids validated in the reference experiments.  Config
# classes accept other values (the bundled synthetic corpus needs far smaller
# models than clinical-scale data); these tuples seed the default search grid.
FFNN_LAYER_GRID = (2, 4, 8)
FFNN_WIDTH_GRID = (200, 400, 800)
CONVPOOL_LAYER_GRID = (2, 3)
CONVPOOL_CHANNEL_GRID = (200, 400)
CONVPOOL_KERNEL_GRID = (4, 8)


class TooShortInputError(ValueError):
    """Sequence too short to survive the valid-padding convolution stack."""


def xavier_uniform(fan_in: int, fan_out: int, rng: np.random.Generator,
                   shape: tuple | None = None) -> np.ndarray:
    """Xavier (Glorot) uniform init: U[-L, L], L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be >= 1")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape if shape is not None else (fan_in, fan_out))


@dataclass(frozen=True)
class FfnnConfig:
    n_hidden_layers: int = 2
    width: int = 200
    n_inputs: int = 88

    def __post_init__(self):
        if self.n_hidden_layers < 1 or self.width < 1 or self.n_inputs < 1:
            raise ValueError("layer count, width and input size must be >= 1")

    def to_dict(self) -> dict:
        return {"arch": "ffnn", "n_hidden_layers": self.n_hidden_layers,
                "width": self.width, "n_inputs": self.n_inputs}


@dataclass(frozen=True)
class ConvPoolConfig:
    n_layers: int = 2           # conv count = dense count by construction
    channels: int = 200
    kernel_len: int = 4
    n_input_channels: int = 40

    def __post_init__(self):
        if self.n_layers < 1 or self.channels < 1 or self.kernel_len < 1:
            raise ValueError("layer count, channels and kernel length must be >= 1")

    @property
    def min_input_len(self) -> int:
        return self.n_layers * (self.kernel_len - 1) + 1

    def to_dict(self) -> dict:
        return {"arch": "convpool", "n_layers": self.n_layers, "channels": self.channels,
                "kernel_len": self.kernel_len, "n_input_channels": self.n_input_channels}


def pad_sequences(seqs: list[np.ndarray], dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad variable-length (T_i, D) sequences to (B, T_max, D).

    Returns the padded batch and the valid lengths; pooling later masks the
    padded steps so they can never win the max.
    """
    if not seqs:
        raise ValueError("empty batch")
    lengths = np.array([s.shape[0] for s in seqs], dtype=np.int64)
    t_max = int(lengths.max())
    d = seqs[0].shape[1]
    out = np.zeros((len(seqs), t_max, d), dtype=dtype)
    for i, s in enumerate(seqs):
        if s.shape[1] != d:
            raise ValueError(f"inconsistent feature dimension: {s.shape[1]} vs {d}")
        out[i, : s.shape[0]] = s
    return out, lengths


def batch_mse_loss(preds: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over the batch and its gradient w.r.t. preds.

    Training minimizes MSE (RMSE's monotone transform, so the selected optima
    coincide); RMSE stays the reported metric.
    """
    diff = preds - targets
    loss = float(np.mean(diff**2))
    return loss, 2.0 * diff / diff.size


class FfnnNet:
    """Dense tanh stack with a linear scalar output."""

    def __init__(self, config: FfnnConfig, rng: np.random.Generator, dtype=np.float64):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        fan_in = config.n_inputs
        for i in range(config.n_hidden_layers):
            self.params[f"hidden{i}.W"] = xavier_uniform(fan_in, config.width, rng).astype(self.dtype)
            self.params[f"hidden{i}.b"] = np.zeros(config.width, dtype=self.dtype)
            fan_in = config.width
        self.params["out.W"] = xavier_uniform(fan_in, 1, rng).astype(self.dtype)
        self.params["out.b"] = np.zeros(1, dtype=self.dtype)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.config.n_inputs:
            raise ValueError(f"expected (B, {self.config.n_inputs}) input, got {x.shape}")
        activations = [x]
        h = x
        for i in range(self.config.n_hidden_layers):
            h = np.tanh(h @ self.params[f"hidden{i}.W"] + self.params[f"hidden{i}.b"])
            activations.append(h)
        out = (h @ self.params["out.W"] + self.params["out.b"]).ravel()
        self._cache = activations
        return out

    def backward(self, dout: np.ndarray) -> dict[str, np.ndarray]:
        activations = self._cache
        if activations is None:
            raise RuntimeError("backward called before forward")
        grads: dict[str, np.ndarray] = {}
        d = np.asarray(dout, dtype=self.dtype).reshape(-1, 1)
        h_last = activations[-1]
        grads["out.W"] = h_last.T @ d
        grads["out.b"] = d.sum(axis=0)
        dh = d @ self.params["out.W"].T
        for i in range(self.config.n_hidden_layers - 1, -1, -1):
            a = activations[i + 1]
            dpre = dh * (1.0 - a * a)       # tanh'(z) = 1 - tanh(z)^2
            grads[f"hidden{i}.W"] = activations[i].T @ dpre
            grads[f"hidden{i}.b"] = dpre.sum(axis=0)
            dh = dpre @ self.params[f"hidden{i}.W"].T
        return grads


class ConvPoolNet:
    """Valid 1-D convolutions over time, masked global max pool, dense stack.

    Convolution weights are (K, C_in, C_out); Xavier fans follow the usual
    convolutional convention (receptive field times channel count).
    """

    def __init__(self, config: ConvPoolConfig, rng: np.random.Generator, dtype=np.float64):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        k = config.kernel_len
        c_in = config.n_input_channels
        for i in range(config.n_layers):
            self.params[f"conv{i}.W"] = xavier_uniform(
                k * c_in, k * config.channels, rng, shape=(k, c_in, config.channels)
            ).astype(self.dtype)
            self.params[f"conv{i}.b"] = np.zeros(config.channels, dtype=self.dtype)
            c_in = config.channels
        for i in range(config.n_layers):
            self.params[f"dense{i}.W"] = xavier_uniform(config.channels, config.channels, rng).astype(self.dtype)
            self.params[f"dense{i}.b"] = np.zeros(config.channels, dtype=self.dtype)
        self.params["out.W"] = xavier_uniform(config.channels, 1, rng).astype(self.dtype)
        self.params["out.b"] = np.zeros(1, dtype=self.dtype)
        self._cache = None

    def _conv_forward(self, h: np.ndarray, layer: int) -> np.ndarray:
        w = self.params[f"conv{layer}.W"]
        k = w.shape[0]
        t_out = h.shape[1] - k + 1
        pre = np.tile(self.params[f"conv{layer}.b"], (h.shape[0], t_out, 1))
        for off in range(k):
            pre += h[:, off : off + t_out, :] @ w[off]
        return pre

    def forward(self, x: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        cfg = self.config
        x = np.asarray(x, dtype=self.dtype)
        lengths = np.asarray(lengths, dtype=np.int64)
        if x.ndim != 3 or x.shape[2] != cfg.n_input_channels:
            raise ValueError(f"expected (B, T, {cfg.n_input_channels}) input, got {x.shape}")
        if (lengths < cfg.min_input_len).any():
            raise TooShortInputError(
                f"valid length must be >= {cfg.min_input_len} for {cfg.n_layers} "
                f"conv layers with kernel {cfg.kernel_len}; got min {int(lengths.min())}")
        if x.shape[1] < cfg.min_input_len:
            raise TooShortInputError("padded batch shorter than the conv stack's receptive field")

        conv_inputs = []
        relu_masks = []
        h = x
        valid = lengths.copy()
        for i in range(cfg.n_layers):
            conv_inputs.append(h)
            pre = self._conv_forward(h, i)
            mask = pre > 0
            relu_masks.append(mask)
            h = np.where(mask, pre, 0.0)
            valid = valid - cfg.kernel_len + 1

        # Masked global max over the valid output steps; padded steps are set
        # to -inf so they can never win, and argmax (first occurrence) gives
        # the deterministic tie-break for the backward routing.
        steps = np.arange(h.shape[1])
        invalid = steps[None, :] >= valid[:, None]
        masked = np.where(invalid[:, :, None], -np.inf, h)
        pool_arg = masked.argmax(axis=1)                      # (B, C)
        pooled = np.take_along_axis(masked, pool_arg[:, None, :], axis=1)[:, 0, :]

        dense_acts = [pooled]
        g = pooled
        for i in range(cfg.n_layers):
            pre = g @ self.params[f"dense{i}.W"] + self.params[f"dense{i}.b"]
            g = np.maximum(pre, 0.0)
            dense_acts.append(g)
        out = (g @ self.params["out.W"] + self.params["out.b"]).ravel()

        self._cache = (conv_inputs, relu_masks, h, pool_arg, dense_acts)
        return out

    def backward(self, dout: np.ndarray) -> dict[str, np.ndarray]:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        conv_inputs, relu_masks, conv_out, pool_arg, dense_acts = self._cache
        cfg = self.config
        grads: dict[str, np.ndarray] = {}

        d = np.asarray(dout, dtype=self.dtype).reshape(-1, 1)
        grads["out.W"] = dense_acts[-1].T @ d
        grads["out.b"] = d.sum(axis=0)
        dg = d @ self.params["out.W"].T
        for i in range(cfg.n_layers - 1, -1, -1):
            dpre = dg * (dense_acts[i + 1] > 0)
            grads[f"dense{i}.W"] = dense_acts[i].T @ dpre
            grads[f"dense{i}.b"] = dpre.sum(axis=0)
            dg = dpre @ self.params[f"dense{i}.W"].T

        # Route pooled gradients back to each channel's argmax time step.
        dconv = np.zeros_like(conv_out)
        b_idx = np.arange(conv_out.shape[0])[:, None]
        c_idx = np.arange(conv_out.shape[2])[None, :]
        dconv[b_idx, pool_arg, c_idx] = dg

        for i in range(cfg.n_layers - 1, -1, -1):
            dpre = dconv * relu_masks[i]
            w = self.params[f"conv{i}.W"]
            k = w.shape[0]
            t_out = dpre.shape[1]
            h_in = conv_inputs[i]
            dw = np.empty_like(w)
            for off in range(k):
                dw[off] = np.einsum("bti,btc->ic", h_in[:, off : off + t_out, :], dpre)
            grads[f"conv{i}.W"] = dw
            grads[f"conv{i}.b"] = dpre.sum(axis=(0, 1))
            if i > 0:
                dh = np.zeros_like(h_in)
                for off in range(k):
                    dh[:, off : off + t_out, :] += dpre @ w[off].T
                dconv = dh
        return grads
