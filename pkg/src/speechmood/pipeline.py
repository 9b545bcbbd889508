"""Glue between the corpus, feature caches, labels, and the CV harness.

Normalization statistics are fit on the training folds only and travel with
the trained model, so validation and test data are never part of the fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Manifest
from .features import NormStats, zscore_apply, zscore_fit
from .labels import SegmentLabel
from .nn import ConvPoolConfig, FfnnConfig, ModelArtifact, TrainConfig, load_artifact, save_artifact, train
from .nn.core import (
    CONVPOOL_CHANNEL_GRID,
    CONVPOOL_KERNEL_GRID,
    CONVPOOL_LAYER_GRID,
    FFNN_LAYER_GRID,
    FFNN_WIDTH_GRID,
)
__all__ = ["assemble_dataset", "NormalizedModel", "make_trainer", "default_grid",
           "grid_from_dicts", "save_model_dir", "load_model_dir"]


def assemble_dataset(manifest: Manifest, features: Mapping[str, np.ndarray],
                     labels: Sequence[SegmentLabel], target: str) -> dict:
    """subject_id -> (list of feature arrays, label array) for one target.

    Joins on segment id; excluded labels and segments without cached
    features are skipped.
    """
    if target not in ("activation", "valence"):
        raise ValueError(f"unknown target {target!r}")
    call_subject = {c.call_id: c.subject_id for c in manifest.calls}
    seg_subject = {s.segment_id: call_subject[s.call_id] for s in manifest.segments}
    out: dict[str, tuple[list, list]] = {}
    for label in labels:
        if label.excluded or label.segment_id not in features:
            continue
        subject = seg_subject.get(label.segment_id)
        if subject is None:
            continue
        xs, ys = out.setdefault(subject, ([], []))
        xs.append(features[label.segment_id])
        ys.append(getattr(label, target))
    return {s: (xs, np.asarray(ys)) for s, (xs, ys) in out.items()}


@dataclass
class NormalizedModel:
    """A trained artifact plus the train-fold normalization it expects."""

    artifact: ModelArtifact
    stats: NormStats

    @property
    def best_val_ccc(self) -> Optional[float]:
        return self.artifact.best_val_ccc

    def _normalize(self, X):
        if self.artifact.arch == "ffnn":
            mat = X if isinstance(X, np.ndarray) and X.ndim == 2 else np.stack([np.asarray(x) for x in X])
            return zscore_apply(mat, self.stats)
        return [zscore_apply(np.asarray(x), self.stats) for x in X]

    def predict(self, X) -> np.ndarray:
        return self.artifact.predict(self._normalize(X))


def make_trainer(train_config: TrainConfig):
    """Adapter matching run_experiment's trainer signature.

    Fits z-normalization on the pooled training items, applies it to train
    and validation, and returns a NormalizedModel carrying both.
    """

    def trainer(config, x_train, y_train, x_val, y_val, seed) -> NormalizedModel:
        cfg = TrainConfig(learning_rate=train_config.learning_rate,
                          beta1=train_config.beta1, beta2=train_config.beta2,
                          eps=train_config.eps, batch_size=train_config.batch_size,
                          max_epochs=train_config.max_epochs, seed=seed,
                          dtype=train_config.dtype)
        # constant dimensions (e.g. a saturated functionals entry) map to
        # constant zero instead of failing the whole fold
        if isinstance(config, FfnnConfig):
            stats = zscore_fit([np.stack([np.asarray(x) for x in x_train])],
                               on_constant="unit")
            xt = np.stack([zscore_apply(np.asarray(x), stats) for x in x_train])
            xv = np.stack([zscore_apply(np.asarray(x), stats) for x in x_val])
        else:
            stats = zscore_fit([np.asarray(x) for x in x_train], on_constant="unit")
            xt = [zscore_apply(np.asarray(x), stats) for x in x_train]
            xv = [zscore_apply(np.asarray(x), stats) for x in x_val]
        artifact = train(config, cfg, xt, y_train, xv, y_val)
        return NormalizedModel(artifact=artifact, stats=stats)

    return trainer


def default_grid(arch: str) -> list:
    if arch == "ffnn":
        return [FfnnConfig(n_hidden_layers=l, width=w)
                for l in FFNN_LAYER_GRID for w in FFNN_WIDTH_GRID]
    if arch == "convpool":
        return [ConvPoolConfig(n_layers=l, channels=c, kernel_len=k)
                for l in CONVPOOL_LAYER_GRID for c in CONVPOOL_CHANNEL_GRID
                for k in CONVPOOL_KERNEL_GRID]
    raise ValueError(f"unknown arch {arch!r}")


def grid_from_dicts(arch: str, dicts: Sequence[dict]) -> list:
    if arch not in ("ffnn", "convpool"):
        raise ValueError(f"unknown arch {arch!r}")
    out = []
    for d in dicts:
        d = {k: v for k, v in d.items() if k != "arch"}
        out.append(FfnnConfig(**d) if arch == "ffnn" else ConvPoolConfig(**d))
    return out


def save_model_dir(model: NormalizedModel, out_dir) -> None:
    save_artifact(model.artifact, out_dir)
    (Path(out_dir) / "norm.json").write_text(
        json.dumps(model.stats.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def load_model_dir(model_dir) -> NormalizedModel:
    artifact = load_artifact(model_dir)
    stats = NormStats.from_dict(json.loads((Path(model_dir) / "norm.json").read_text(encoding="utf-8")))
    return NormalizedModel(artifact=artifact, stats=stats)
