"""Statistical primitives: Student-t / F tails, Welch's t-test, one-way ANOVA,
and the Tukey-Kramer posthoc test.

p-values for t and F statistics are computed through the regularized
incomplete beta function evaluated by continued fractions, so no external
table or interpolation is involved.  The only embedded table is the
studentized-range critical values used by Tukey-Kramer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "regularized_incomplete_beta",
    "student_t_cdf",
    "student_t_two_sided_p",
    "f_sf",
    "welch_ttest",
    "pearson_significance",
    "one_way_anova",
    "tukey_kramer",
    "studentized_range_crit",
    "TTestResult",
    "AnovaResult",
    "DegenerateStatisticError",
]


class DegenerateStatisticError(ValueError):
    """A statistic is undefined for the given data (e.g. zero variance)."""


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (modified Lentz).
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0 and b > 0):
        raise ValueError(f"beta parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the expansion on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom (df > 0, real)."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        raise ValueError("t statistic is NaN")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return half_tail if t < 0 else 1.0 - half_tail


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value, P(|T| >= |t|)."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_sf(x: float, df1: float, df2: float) -> float:
    """P(F >= x) for the F distribution; used for ANOVA p-values."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("F degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float

    @property
    def significant_01(self) -> bool:
        return self.p_value < 0.01


def welch_ttest(a, b) -> TTestResult:
    """Two-sided Welch's t-test (unequal variances) for two samples."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("Welch's t-test requires at least 2 observations per group")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    sa = va / a.size
    sb = vb / b.size
    denom = sa + sb
    if denom == 0.0:
        raise DegenerateStatisticError("both groups have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(denom)
    df = denom**2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    return TTestResult(statistic=float(t), df=float(df), p_value=student_t_two_sided_p(float(t), float(df)))


def pearson_significance(r: float, n: int) -> TTestResult:
    """Significance of a Pearson correlation via t = r * sqrt((n-2)/(1-r^2))."""
    if n < 3:
        raise ValueError("correlation significance needs n >= 3")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation out of range: {r}")
    df = n - 2
    if abs(r) == 1.0:
        return TTestResult(statistic=math.inf if r > 0 else -math.inf, df=df, p_value=0.0)
    t = r * math.sqrt(df / (1.0 - r * r))
    return TTestResult(statistic=t, df=df, p_value=student_t_two_sided_p(t, df))


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    p_value: float
    df_between: int
    df_within: int
    ms_within: float
    group_means: tuple[float, ...]
    group_sizes: tuple[int, ...]


def one_way_anova(groups) -> AnovaResult:
    """One-way fixed-effects ANOVA over ``groups`` (each a 1-D sample)."""
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("ANOVA needs at least two groups")
    if any(g.size < 2 for g in arrays):
        raise ValueError("every ANOVA group needs at least 2 observations")
    n_total = sum(g.size for g in arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    if ss_within == 0.0:
        raise DegenerateStatisticError("zero within-group variance; ANOVA F undefined")
    msb = ss_between / df_between
    msw = ss_within / df_within
    f = msb / msw
    return AnovaResult(
        f_statistic=float(f),
        p_value=f_sf(float(f), df_between, df_within),
        df_between=df_between,
        df_within=df_within,
        ms_within=float(msw),
        group_means=tuple(float(g.mean()) for g in arrays),
        group_sizes=tuple(int(g.size) for g in arrays),
    )


# Upper 1% critical values of the studentized range q(k, df), k = 2..12.
# Exact numerical integration of the studentized-range distribution is out of
# scope; intermediate df are handled by interpolation linear in log(df).
_Q_CRIT_001_DF = (10.0, 20.0, 30.0, 60.0, 120.0, math.inf)
_Q_CRIT_001 = {
    2: (4.4820, 4.0239, 3.8891, 3.7622, 3.7016, 3.6428),
    3: (5.2702, 4.6392, 4.4549, 4.2822, 4.1999, 4.1203),
    4: (5.7686, 5.0180, 4.7992, 4.5944, 4.4970, 4.4028),
    5: (6.1361, 5.2933, 5.0476, 4.8178, 4.7085, 4.6028),
    6: (6.4275, 5.5095, 5.2418, 4.9913, 4.8722, 4.7570),
    7: (6.6690, 5.6876, 5.4012, 5.1330, 5.0055, 4.8822),
    8: (6.8749, 5.8389, 5.5361, 5.2525, 5.1176, 4.9872),
    9: (7.0544, 5.9703, 5.6531, 5.3558, 5.2143, 5.0775),
    10: (7.2133, 6.0865, 5.7563, 5.4466, 5.2992, 5.1566),
    11: (7.3559, 6.1905, 5.8485, 5.5276, 5.3748, 5.2270),
    12: (7.4850, 6.2846, 5.9318, 5.6007, 5.4429, 5.2902),
}


def studentized_range_crit(k: int, df: float) -> float:
    """Critical value q*(alpha=0.01) for k groups and ``df`` within-group dof.

    df below the table floor (10) clamps to the df=10 column, which is
    conservative-leaning for this use (larger critical value).
    """
    if k < 2 or k > 12:
        raise ValueError(f"k must be in 2..12, got {k}")
    if df <= 0:
        raise ValueError("df must be positive")
    row = _Q_CRIT_001[k]
    knots = _Q_CRIT_001_DF
    if df <= knots[0]:
        return row[0]
    if math.isinf(df) or df >= knots[-2]:
        # log-interpolate between the df=120 column and the infinite-df limit
        # using 1/df as the coordinate (log(df) is unusable at infinity).
        if math.isinf(df):
            return row[-1]
        w = (1.0 / knots[-2] - 1.0 / df) / (1.0 / knots[-2])
        return row[-2] + w * (row[-1] - row[-2])
    for i in range(len(knots) - 2):
        lo, hi = knots[i], knots[i + 1]
        if lo <= df <= hi:
            w = (math.log(df) - math.log(lo)) / (math.log(hi) - math.log(lo))
            return row[i] + w * (row[i + 1] - row[i])
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class TukeyKramerResult:
    significant_pairs: tuple[tuple[int, int], ...]
    q_statistics: dict = field(repr=False)
    critical_value: float = 0.0
    n_candidate_pairs: int = 0


def tukey_kramer(anova: AnovaResult, alpha: float = 0.01) -> TukeyKramerResult:
    """Tukey-Kramer pairwise comparisons after a one-way ANOVA.

    q_ij = |m_i - m_j| / sqrt((MSW / 2) * (1/n_i + 1/n_j)), compared against
    the studentized-range critical value for k groups at the within-group df.
    Only alpha = 0.01 is supported (the embedded table's level).
    """
    if alpha != 0.01:
        raise ValueError("only alpha=0.01 is supported")
    k = len(anova.group_means)
    crit = studentized_range_crit(k, anova.df_within)
    if anova.ms_within <= 0.0:
        raise DegenerateStatisticError("zero within-group variance")
    qs = {}
    sig = []
    for i in range(k):
        for j in range(i + 1, k):
            se = math.sqrt((anova.ms_within / 2.0) * (1.0 / anova.group_sizes[i] + 1.0 / anova.group_sizes[j]))
            q = abs(anova.group_means[i] - anova.group_means[j]) / se
            qs[(i, j)] = q
            if q > crit:
                sig.append((i, j))
    return TukeyKramerResult(
        significant_pairs=tuple(sig),
        q_statistics=qs,
        critical_value=crit,
        n_candidate_pairs=k * (k - 1) // 2,
    )
