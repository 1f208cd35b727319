"""Small, dependency-free statistics kernel.

Everything here works on plain floats / numpy arrays and returns frozen
dataclasses. Tail probabilities go through a continued-fraction evaluation
of the regularized incomplete beta function, so no scipy is needed at
runtime (scipy is only used as an oracle in the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, InsufficientDataError

BETACF_TOL = 1e-12
BETACF_MAX_ITER = 300
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )


def betainc(a: float, b: float, x: float, xc: float | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    ``xc`` is 1 - x when the caller can form it without cancellation.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if xc is None:
        xc = 1.0 - x
    if x <= 0.0:
        return 0.0
    if xc <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(xc)
    )
    front = math.exp(log_front)
    # The fraction converges fast only below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, xc) / b


def student_t_tail(t: float, df: float) -> float:
    """Upper-tail probability P(T >= t) for Student's t with `df` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0:
        return 0.5
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if df == 1:
        return 0.5 - math.atan(t) / math.pi
    if df == 2:
        return 0.5 - t / (2.0 * math.sqrt(2.0 + t * t))
    denom = df + t * t
    half = 0.5 * betainc(0.5 * df, 0.5, df / denom, t * t / denom)
    return half if t > 0 else 1.0 - half


def student_t_two_sided(t: float, df: float) -> float:
    return min(1.0, 2.0 * student_t_tail(abs(t), df))


def f_tail(f: float, df1: float, df2: float) -> float:
    """Upper-tail probability P(F >= f) of the F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = df2 + df1 * f
    return betainc(0.5 * df2, 0.5 * df1, df2 / denom, df1 * f / denom)


@dataclass(frozen=True)
class RegressionFit:
    n: int
    slope: float
    intercept: float
    se_slope: float
    se_intercept: float
    r_squared: float
    t_stat: float
    p_two_sided: float

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def ols_fit(x: Sequence[float], y: Sequence[float]) -> RegressionFit:
    """Simple least-squares line y = a + b x with the usual slope inference.

    The slope test is H0: b = 0 against Student's t on n - 2 degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    n = x.size
    if n < 3:
        raise DegenerateInputError(f"need at least 3 points for a line fit, got {n}")
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateInputError("x values are all equal")
    syy = float(dy @ dy)
    sxy = float(dx @ dy)
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = dy - slope * dx
    rss = max(float(resid @ resid), 0.0)
    s2 = rss / (n - 2)
    se_slope = math.sqrt(s2 / sxx)
    se_intercept = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    r_squared = 1.0 if syy == 0.0 else min(1.0, max(0.0, 1.0 - rss / syy))
    if se_slope > 0:
        t_stat = slope / se_slope
        p = student_t_two_sided(t_stat, n - 2)
    elif slope == 0:
        t_stat, p = 0.0, 1.0
    else:
        t_stat, p = math.copysign(math.inf, slope), 0.0
    return RegressionFit(
        n=int(n),
        slope=slope,
        intercept=intercept,
        se_slope=se_slope,
        se_intercept=se_intercept,
        r_squared=r_squared,
        t_stat=t_stat,
        p_two_sided=p,
    )


@dataclass(frozen=True)
class SlopeComparison:
    t: float
    df: int
    p_one_sided: float
    p_two_sided: float


def compare_slopes(fit1: RegressionFit, fit2: RegressionFit) -> SlopeComparison:
    """Test H0: b1 = b2 for two independently fitted lines.

    t = (b1 - b2) / sqrt(se1^2 + se2^2) on n1 + n2 - 4 degrees of freedom.
    `p_one_sided` is the tail beyond |t|, i.e. the smaller of the two tails.
    """
    df = fit1.n + fit2.n - 4
    if df < 1:
        raise InsufficientDataError(f"n1 + n2 - 4 = {df} degrees of freedom")
    denom = math.hypot(fit1.se_slope, fit2.se_slope)
    if denom == 0.0:
        raise DegenerateInputError("both slope standard errors are zero")
    t = (fit1.slope - fit2.slope) / denom
    upper = student_t_tail(t, df)
    p_one = min(upper, 1.0 - upper)
    return SlopeComparison(t=t, df=df, p_one_sided=p_one, p_two_sided=min(1.0, 2.0 * p_one))


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_two_sided: float
    p_one_sided: float  # P(T >= t), i.e. H1: mean(a) > mean(b)


def two_sample_t(a: Sequence[float], b: Sequence[float], variant: str = "pooled") -> TTestResult:
    """Two-sample t test for a difference in means (pooled or Welch)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise InsufficientDataError(f"each sample needs >= 2 values (got {na}, {nb})")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()
    if variant == "pooled":
        df = na + nb - 2
        sp2 = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    elif variant == "welch":
        qa, qb = va / na, vb / nb
        se = math.sqrt(qa + qb)
        if se > 0:
            df = (qa + qb) ** 2 / (qa**2 / (na - 1) + qb**2 / (nb - 1))
        else:
            df = float(na + nb - 2)
    else:
        raise ValueError(f"unknown t-test variant {variant!r}")
    if se == 0.0:
        raise DegenerateInputError("zero combined variance")
    t = diff / se
    return TTestResult(
        statistic=t,
        df=float(df),
        p_two_sided=student_t_two_sided(t, df),
        p_one_sided=student_t_tail(t, df),
    )


@dataclass(frozen=True)
class AnovaResult:
    f: float
    df_between: int
    df_within: int
    p_value: float


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    groups = [np.asarray(g, dtype=float) for g in groups]
    k = len(groups)
    if k < 2:
        raise InsufficientDataError("ANOVA needs at least 2 groups")
    if any(g.size < 2 for g in groups):
        raise InsufficientDataError("every ANOVA group needs >= 2 values")
    n_total = sum(g.size for g in groups)
    grand = np.concatenate(groups).mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    df_b, df_w = k - 1, n_total - k
    if ss_within == 0.0:
        raise DegenerateInputError("zero within-group variance")
    f = (ss_between / df_b) / (ss_within / df_w)
    return AnovaResult(f=f, df_between=df_b, df_within=df_w, p_value=f_tail(f, df_b, df_w))
