"""Repeated cross-validation orchestration: per-run random fold partitions,
round-robin test/validation/train rotation, grid selection by validation CCC,
and the folds-by-runs result matrix with its reporting rule (mean over all
entries, spread as the mean within-run standard deviation).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .metrics import UndefinedMetricError, ccc, pcc, rmse

__all__ = ["FoldPlan", "build_fold_plans", "FoldSplit", "iter_splits",
           "ExperimentResult", "run_experiment", "save_fold_plans", "load_fold_plans",
           "METRIC_NAMES"]

METRIC_NAMES = ("pcc", "ccc", "rmse")
_METRIC_FNS = {"pcc": pcc, "ccc": ccc, "rmse": rmse}
FOLD_SIZE = 2


@dataclass(frozen=True)
class FoldPlan:
    run_index: int                              # 1-based
    folds: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        seen = [s for f in self.folds for s in f]
        if len(set(seen)) != len(seen):
            raise ValueError(f"run {self.run_index}: folds are not a partition")
        if any(len(f) != FOLD_SIZE for f in self.folds):
            raise ValueError(f"run {self.run_index}: every fold must hold {FOLD_SIZE} subjects")

    @property
    def n_folds(self) -> int:
        return len(self.folds)


def build_fold_plans(subject_ids: Sequence[str], seed: int, n_runs: int = 5) -> list[FoldPlan]:
    """One independent random partition of the subjects per run.

    Subjects are paired into folds of two; an odd subject count is a
    configuration error.  Deterministic given the seed.
    """
    subjects = list(subject_ids)
    if len(subjects) < 2 * FOLD_SIZE:
        raise ValueError(f"need at least {2 * FOLD_SIZE} subjects, got {len(subjects)}")
    if len(subjects) % FOLD_SIZE != 0:
        raise ValueError(f"subject count must be a multiple of {FOLD_SIZE}, got {len(subjects)}")
    rng = np.random.default_rng(seed)
    plans = []
    for run in range(1, n_runs + 1):
        order = [subjects[i] for i in rng.permutation(len(subjects))]
        folds = tuple(tuple(order[i : i + FOLD_SIZE]) for i in range(0, len(order), FOLD_SIZE))
        plans.append(FoldPlan(run_index=run, folds=folds))
    return plans


@dataclass(frozen=True)
class FoldSplit:
    run_index: int
    test_fold: int
    test_subjects: tuple[str, ...]
    val_subjects: tuple[str, ...]
    train_subjects: tuple[str, ...]


def iter_splits(plan: FoldPlan) -> list[FoldSplit]:
    """Round-robin rotation: each fold is tested once; the next fold (cyclic)
    tunes parameters and early stopping; the rest train."""
    out = []
    k = plan.n_folds
    if k < 3:
        raise ValueError(f"round-robin rotation needs >= 3 folds (test/val/train), got {k}")
    for i in range(k):
        val = (i + 1) % k
        train = tuple(s for j in range(k) if j not in (i, val) for s in plan.folds[j])
        out.append(FoldSplit(run_index=plan.run_index, test_fold=i,
                             test_subjects=plan.folds[i], val_subjects=plan.folds[val],
                             train_subjects=train))
    return out


def save_fold_plans(plans: list[FoldPlan], path) -> None:
    doc = {"runs": [{"run": p.run_index, "folds": [list(f) for f in p.folds]} for p in plans]}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_fold_plans(path) -> list[FoldPlan]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [FoldPlan(run_index=r["run"], folds=tuple(tuple(f) for f in r["folds"]))
            for r in doc["runs"]]


@dataclass
class ExperimentResult:
    """Folds-by-runs matrices per metric, plus the chosen config per cell."""

    metric_matrices: dict                       # metric -> (k, n_runs) array, NaN = undefined
    best_configs: dict                          # (run, fold) -> config dict
    artifacts: dict = field(default_factory=dict)   # (run, fold) -> trained model
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        """Experiment mean (over all entries) and the mean within-run std."""
        out = {}
        for metric, mat in self.metric_matrices.items():
            mean = float(np.nanmean(mat))
            run_stds = []
            for r in range(mat.shape[1]):
                col = mat[:, r]
                col = col[~np.isnan(col)]
                if col.size >= 2:
                    run_stds.append(col.std(ddof=1))
            spread = float(np.mean(run_stds)) if run_stds else float("nan")
            out[metric] = {"mean": mean, "spread": spread,
                           "n_entries": int(np.sum(~np.isnan(mat)))}
        return out

    def to_dict(self) -> dict:
        return {
            "matrices": {m: [[None if np.isnan(v) else float(v) for v in row] for row in mat]
                         for m, mat in self.metric_matrices.items()},
            "summary": self.summary(),
            "best_configs": {f"run{r}_fold{f}": cfg for (r, f), cfg in self.best_configs.items()},
            "warnings": self.warnings,
        }


def _training_seed(base_seed: int, run: int, fold: int, config_index: int) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(run, fold, config_index))
    return int(ss.generate_state(1)[0])


def run_experiment(plans: Sequence[FoldPlan],
                   grid: Sequence,
                   data: Mapping[str, tuple],
                   trainer: Callable,
                   base_seed: int = 0,
                   keep_artifacts: bool = True) -> ExperimentResult:
    """Run the full repeated-CV protocol for one target dimension.

    ``data`` maps subject_id -> (X, y).  ``trainer(config, X_train, y_train,
    X_val, y_val, seed)`` returns a fitted model exposing ``best_val_ccc`` and
    ``predict(X)``.  For every (run, test fold): each grid config is trained
    on the train folds, the config (and its best epoch, handled inside the
    trainer) is chosen by validation CCC, and the winner is scored once on
    the test fold.
    """
    if not grid:
        raise ValueError("empty hyperparameter grid")
    missing = [s for p in plans for f in p.folds for s in f if s not in data]
    if missing:
        raise ValueError(f"data is missing subjects: {sorted(set(missing))}")

    k = plans[0].n_folds
    n_runs = len(plans)
    mats = {m: np.full((k, n_runs), np.nan) for m in METRIC_NAMES}
    best_configs: dict = {}
    artifacts: dict = {}
    warns: list[str] = []

    def gather(subjects):
        xs: list = []
        ys: list = []
        for s in subjects:
            x, y = data[s]
            xs.extend(x)
            ys.extend(np.asarray(y, dtype=float).tolist())
        return xs, np.asarray(ys)

    for plan in plans:
        for split in iter_splits(plan):
            x_train, y_train = gather(split.train_subjects)
            x_val, y_val = gather(split.val_subjects)
            x_test, y_test = gather(split.test_subjects)
            best = None
            for ci, config in enumerate(grid):
                seed = _training_seed(base_seed, plan.run_index, split.test_fold, ci)
                model = trainer(config, x_train, y_train, x_val, y_val, seed)
                score = model.best_val_ccc
                key = -np.inf if score is None else score
                if best is None or key > best[0]:
                    best = (key, ci, config, model)
            _, _, config, model = best
            best_configs[(plan.run_index, split.test_fold)] = (
                config.to_dict() if hasattr(config, "to_dict") else dict(config))
            if keep_artifacts:
                artifacts[(plan.run_index, split.test_fold)] = model
            preds = np.asarray(model.predict(x_test), dtype=float)
            for metric in METRIC_NAMES:
                try:
                    mats[metric][split.test_fold, plan.run_index - 1] = _METRIC_FNS[metric](preds, y_test)
                except UndefinedMetricError as e:
                    warns.append(f"run {plan.run_index} fold {split.test_fold} {metric}: {e}")
    return ExperimentResult(metric_matrices=mats, best_configs=best_configs,
                            artifacts=artifacts, warnings=warns)
