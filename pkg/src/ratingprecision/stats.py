"""Statistical kernels: normal, Student-t and F distributions, Welch's t-test,
Holm step-down adjustment.

The t and F distribution functions are written in terms of the regularized
incomplete beta function, evaluated with a modified Lentz continued fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DomainError

_SQRT2 = math.sqrt(2.0)
_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float
    p_value: float

    __test__ = False  # keep pytest from collecting this as a test class


def normal_cdf(z):
    """Standard normal CDF. Accepts a scalar or an array."""
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(-float(z) / _SQRT2)
    return _normal_cdf_vec(np.asarray(z, dtype=float))


_normal_cdf_vec = np.vectorize(lambda z: 0.5 * math.erfc(-z / _SQRT2), otypes=[float])


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
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
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise DomainError(f"betainc needs a, b > 0 (got a={a}, b={b})")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t distribution with ``df`` degrees of freedom."""
    if not df > 0:
        raise DomainError(f"degrees of freedom must be > 0, got {df}")
    t = float(t)
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    if t == 0.0:
        return 0.5
    # tail = P(T > |t|) = I_x(df/2, 1/2) / 2 with x = df / (df + t^2)
    t2 = t * t
    x = df / (df + t2)
    if x > 0.9:
        # evaluate via the complement to keep precision when t is small
        tail = 0.5 * (1.0 - betainc(0.5, df / 2.0, t2 / (df + t2)))
    else:
        tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def student_t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t); keeps precision for large ``t``."""
    return student_t_cdf(-t, df)


def student_t_ppf(q: float, df: float) -> float:
    """Quantile of Student's t distribution, by bisection on the CDF."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -student_t_ppf(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, df) < q:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the F distribution with ``(d1, d2)`` degrees of freedom."""
    if not (d1 > 0 and d2 > 0):
        raise DomainError(f"degrees of freedom must be > 0, got ({d1}, {d2})")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))


def f_sf(x: float, d1: float, d2: float) -> float:
    """Upper tail P(F > x), computed without cancellation."""
    if not (d1 > 0 and d2 > 0):
        raise DomainError(f"degrees of freedom must be > 0, got ({d1}, {d2})")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))


def welch_t_test(mean1, var1, n1, mean2, var2, n2) -> TestResult:
    """Two-sided Welch t-test from summary statistics.

    ``var1`` and ``var2`` are sample variances. When both are zero the test
    is degenerate: equal means give ``t=0, p=1``; different means give
    ``p=0`` with an infinite statistic.
    """
    if n1 < 2 or n2 < 2:
        raise DomainError(f"each sample needs n >= 2 (got {n1}, {n2})")
    if var1 < 0 or var2 < 0:
        raise DomainError("variances must be >= 0")
    s1 = var1 / n1
    s2 = var2 / n2
    se2 = s1 + s2
    diff = mean1 - mean2
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(0.0, float(n1 + n2 - 2), 1.0)
        return TestResult(math.copysign(math.inf, diff), float(n1 + n2 - 2), 0.0)
    t = diff / math.sqrt(se2)
    df = se2 * se2 / (s1 * s1 / (n1 - 1) + s2 * s2 / (n2 - 1))
    p = 2.0 * student_t_sf(abs(t), df)
    return TestResult(t, df, min(1.0, p))


def welch_t_test_samples(x1: Sequence[float], x2: Sequence[float]) -> TestResult:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return welch_t_test(
        float(x1.mean()), float(x1.var(ddof=1)), x1.size,
        float(x2.mean()), float(x2.var(ddof=1)), x2.size,
    )


def holm_adjust(p_values: Sequence[float], method: str = "holm") -> np.ndarray:
    """Family-wise multiplicity adjustment.

    ``method="holm"`` applies the Holm step-down procedure, ``"bonferroni"``
    the plain Bonferroni correction. Adjusted values are capped at 1.
    """
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise DomainError("p_values must be a 1-D sequence")
    if ((p < 0) | (p > 1) | np.isnan(p)).any():
        raise DomainError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return p.copy()
    if method == "bonferroni":
        return np.minimum(1.0, p * m)
    if method != "holm":
        raise DomainError(f"unknown adjustment method {method!r}")
    order = np.argsort(p, kind="stable")
    scaled = p[order] * (m - np.arange(m))
    stepped = np.minimum(1.0, np.maximum.accumulate(scaled))
    out = np.empty(m)
    out[order] = stepped
    return out
