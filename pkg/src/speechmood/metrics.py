"""Regression agreement metrics (PCC, CCC, RMSE) and the corrected paired
t-test used to compare systems under repeated cross-validation.

All moments are population moments (divide by n), so ``ccc(x, y)`` matches
the textbook concordance definition exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stats import student_t_two_sided_p

__all__ = [
    "pcc",
    "ccc",
    "rmse",
    "UndefinedMetricError",
    "corrected_paired_ttest",
    "CorrectedTTestResult",
]


class UndefinedMetricError(ValueError):
    """Raised instead of silently propagating NaN when a metric is undefined."""


def _check_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("metric inputs must be 1-D")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.size < 2:
        raise ValueError("metrics need at least 2 points")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("metric inputs must be finite")
    return x, y


def pcc(x, y) -> float:
    """Pearson correlation coefficient."""
    x, y = _check_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise UndefinedMetricError("zero variance input; PCC undefined")
    return float((xc @ yc) / math.sqrt(vx * vy))


def ccc(x, y) -> float:
    """Concordance correlation coefficient.

    2*cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2), penalizing both
    decorrelation and location/scale disagreement.
    """
    x, y = _check_pair(x, y)
    mx = x.mean()
    my = y.mean()
    vx = float(np.mean((x - mx) ** 2))
    vy = float(np.mean((y - my) ** 2))
    cov = float(np.mean((x - mx) * (y - my)))
    denom = vx + vy + (mx - my) ** 2
    if vx == 0.0 or vy == 0.0:
        raise UndefinedMetricError("zero variance input; CCC undefined")
    return float(2.0 * cov / denom)


def rmse(x, y) -> float:
    """Root mean squared error between prediction and target series."""
    x, y = _check_pair(x, y)
    return float(math.sqrt(np.mean((x - y) ** 2)))


@dataclass(frozen=True)
class CorrectedTTestResult:
    statistic: float
    p_value: float
    df: float
    mean_difference: float
    degenerate: bool = False


def corrected_paired_ttest(diffs, test_to_train_ratio: float = 0.25, df: float = 6.0) -> CorrectedTTestResult:
    """Corrected paired t-test over a folds-by-runs matrix of differences.

    t = m / sqrt((1/n + ratio) * s^2) where m is the mean difference, s^2 the
    unbiased variance over all n entries, and ratio the test-to-train size
    ratio correcting for overlapping training sets.  With ratio 0 this reduces
    to the classical resampled paired t statistic.  Default df is 6, matching
    the fold count convention; both knobs are configurable.
    """
    d = np.asarray(diffs, dtype=float).ravel()
    if d.size < 2:
        raise ValueError("need at least 2 paired differences")
    if test_to_train_ratio < 0:
        raise ValueError("test_to_train_ratio must be >= 0")
    m = float(d.mean())
    var = float(d.var(ddof=1))
    # Identical entries can leave rounding dust in the variance; anything at
    # accumulated-epsilon scale is still degenerate.
    if var <= (16.0 * np.finfo(float).eps * max(1.0, abs(m))) ** 2:
        if m == 0.0:
            return CorrectedTTestResult(statistic=0.0, p_value=1.0, df=df, mean_difference=0.0)
        # All differences identical and nonzero: infinitely significant under
        # the model, but flagged so callers do not mistake it for a clean result.
        return CorrectedTTestResult(
            statistic=math.copysign(math.inf, m), p_value=0.0, df=df,
            mean_difference=m, degenerate=True,
        )
    t = m / math.sqrt((1.0 / d.size + test_to_train_ratio) * var)
    return CorrectedTTestResult(
        statistic=t, p_value=student_t_two_sided_p(t, df), df=df, mean_difference=m,
    )
