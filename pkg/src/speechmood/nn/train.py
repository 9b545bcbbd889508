"""Minibatch training loop with epoch-level validation-CCC model selection,
and the on-disk model artifact (JSON header + flat little-endian float32
weight blob).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..metrics import UndefinedMetricError, ccc
from .adam import AdamState, adam_step
from .core import (
    ConvPoolConfig,
    ConvPoolNet,
    FfnnConfig,
    FfnnNet,
    batch_mse_loss,
    pad_sequences,
)

__all__ = ["TrainConfig", "ModelArtifact", "train", "save_artifact", "load_artifact",
           "default_max_epochs"]

_PREDICT_CHUNK = 256


def default_max_epochs(arch: str) -> int:
    return {"ffnn": 100, "convpool": 15}[arch]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64
    max_epochs: int = 100
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")

    def to_dict(self) -> dict:
        return {
            "optimizer": "adam", "learning_rate": self.learning_rate,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "loss": "rmse", "init": "xavier_uniform",
            "batch_size": self.batch_size, "max_epochs": self.max_epochs,
            "seed": self.seed, "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        keys = ("learning_rate", "beta1", "beta2", "eps", "batch_size",
                "max_epochs", "seed", "dtype")
        return cls(**{k: d[k] for k in keys if k in d})


def _build_net(config, rng, dtype):
    if isinstance(config, FfnnConfig):
        return FfnnNet(config, rng, dtype=dtype)
    if isinstance(config, ConvPoolConfig):
        return ConvPoolNet(config, rng, dtype=dtype)
    raise TypeError(f"unknown model config type {type(config).__name__}")


def _config_from_dict(d: dict):
    if d["arch"] == "ffnn":
        return FfnnConfig(n_hidden_layers=d["n_hidden_layers"], width=d["width"],
                          n_inputs=d["n_inputs"])
    if d["arch"] == "convpool":
        return ConvPoolConfig(n_layers=d["n_layers"], channels=d["channels"],
                              kernel_len=d["kernel_len"],
                              n_input_channels=d["n_input_channels"])
    raise ValueError(f"unknown arch {d['arch']!r}")


def _forward_batch(net, X, idx, dtype):
    if isinstance(net, FfnnNet):
        if isinstance(X, np.ndarray):
            return net.forward(X[idx])
        return net.forward(np.stack([np.asarray(X[i], dtype=dtype) for i in idx]))
    batch, lengths = pad_sequences([X[i] for i in idx], dtype=dtype)
    return net.forward(batch, lengths)


def _predict_with_net(net, X, dtype) -> np.ndarray:
    n = len(X)
    out = np.empty(n)
    for start in range(0, n, _PREDICT_CHUNK):
        idx = np.arange(start, min(start + _PREDICT_CHUNK, n))
        out[idx] = _forward_batch(net, X, idx, dtype)
    return out


@dataclass
class ModelArtifact:
    """A trained model: topology, best-epoch weights, and training history."""

    arch: str
    config: dict
    train_config: dict
    weights: dict[str, np.ndarray]
    history: dict = field(default_factory=dict)
    best_epoch: int = 1

    def __post_init__(self):
        for name, w in self.weights.items():
            if not np.isfinite(w).all():
                raise ValueError(f"non-finite weights in {name!r}")

    def _net(self):
        cfg = _config_from_dict(self.config)
        rng = np.random.default_rng(0)
        net = _build_net(cfg, rng, np.float64)
        for name in net.params:
            net.params[name] = self.weights[name].astype(np.float64)
        return net

    def predict(self, X) -> np.ndarray:
        """Scalar predictions; X is (N, D) for ffnn, list of (T, 40) for convpool."""
        return _predict_with_net(self._net(), X, np.float64)

    @property
    def best_val_ccc(self) -> Optional[float]:
        recorded = self.history.get("val_ccc", [])
        if not recorded or self.best_epoch > len(recorded):
            return None
        return recorded[self.best_epoch - 1]


def train(model_config: Union[FfnnConfig, ConvPoolConfig], train_config: TrainConfig,
          X_train, y_train, X_val, y_val) -> ModelArtifact:
    """Train with Adam on shuffled minibatches; keep the weights of the epoch
    with the highest validation CCC.

    The caller is responsible for making train and validation disjoint by
    subject; this function only enforces that both splits are nonempty.
    """
    if len(X_train) == 0 or len(X_val) == 0:
        raise ValueError("train and validation splits must both be nonempty")
    if len(X_train) != len(y_train) or len(X_val) != len(y_val):
        raise ValueError("features and labels must have matching lengths")

    dtype = np.dtype(train_config.dtype)
    rng = np.random.default_rng(train_config.seed)
    net = _build_net(model_config, rng, dtype)
    state = AdamState(net.params)
    y_train = np.asarray(y_train, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if isinstance(net, FfnnNet):
        X_train = np.asarray(X_train, dtype=dtype)
        X_val = np.asarray(X_val, dtype=dtype)
    else:
        X_train = [np.asarray(x, dtype=dtype) for x in X_train]
        X_val = [np.asarray(x, dtype=dtype) for x in X_val]

    n = len(y_train)
    step = 0
    train_loss_history: list[float] = []
    val_ccc_history: list[Optional[float]] = []
    best_key = -np.inf
    best_epoch = 1
    best_weights = {k: v.copy() for k, v in net.params.items()}

    for epoch in range(1, train_config.max_epochs + 1):
        order = rng.permutation(n)
        sq_err_sum = 0.0
        for start in range(0, n, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            preds = _forward_batch(net, X_train, idx, dtype)
            loss, dpred = batch_mse_loss(preds, y_train[idx])
            sq_err_sum += loss * idx.size
            grads = net.backward(dpred)
            step += 1
            adam_step(net.params, grads, state, step,
                      lr=train_config.learning_rate, beta1=train_config.beta1,
                      beta2=train_config.beta2, eps=train_config.eps)
        train_loss_history.append(float(np.sqrt(sq_err_sum / n)))

        val_preds = _predict_with_net(net, X_val, dtype)
        try:
            val_score = float(ccc(val_preds, y_val))
        except UndefinedMetricError:
            val_score = None
        val_ccc_history.append(val_score)
        key = -np.inf if val_score is None else val_score
        if key > best_key or epoch == 1:
            best_key = key
            best_epoch = epoch
            best_weights = {k: v.copy() for k, v in net.params.items()}

    return ModelArtifact(
        arch=model_config.to_dict()["arch"],
        config=model_config.to_dict(),
        train_config=train_config.to_dict(),
        weights={k: v.astype(np.float32) for k, v in best_weights.items()},
        history={"train_loss": train_loss_history, "val_ccc": val_ccc_history},
        best_epoch=best_epoch,
    )


def save_artifact(artifact: ModelArtifact, out_dir) -> None:
    """Write model.json (header) and weights.f32 (flat little-endian blob)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = sorted(artifact.weights)
    header = {
        "arch": artifact.arch,
        "config": artifact.config,
        "train_config": artifact.train_config,
        "history": artifact.history,
        "best_epoch": artifact.best_epoch,
        "weights": [{"name": n, "shape": list(artifact.weights[n].shape)} for n in names],
        "dtype": "float32",
        "byte_order": "little",
    }
    (out / "model.json").write_text(json.dumps(header, sort_keys=True, indent=2) + "\n",
                                    encoding="utf-8")
    blob = b"".join(artifact.weights[n].astype("<f4").tobytes() for n in names)
    (out / "weights.f32").write_bytes(blob)


def load_artifact(model_dir) -> ModelArtifact:
    p = Path(model_dir)
    header = json.loads((p / "model.json").read_text(encoding="utf-8"))
    raw = np.frombuffer((p / "weights.f32").read_bytes(), dtype="<f4")
    weights = {}
    offset = 0
    for entry in header["weights"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        weights[entry["name"]] = raw[offset : offset + size].reshape(shape).copy()
        offset += size
    if offset != raw.size:
        raise ValueError(f"{p}: weight blob has {raw.size} values, header expects {offset}")
    return ModelArtifact(
        arch=header["arch"], config=header["config"], train_config=header["train_config"],
        weights=weights, history=header["history"], best_epoch=header["best_epoch"],
    )
