"""Chi-square distribution via the regularized incomplete gamma function."""
from __future__ import annotations

import math

__all__ = ["gammainc_lower", "gammainc_upper", "chi2_cdf", "chi2_sf", "chi2_quantile"]

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 10_000


def _series(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _continued_fraction(a: float, x: float) -> float:
    # Q(a, x) by the modified Lentz algorithm
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _series(a, x))
    return max(0.0, 1.0 - _continued_fraction(a, x))


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _series(a, x))
    return min(1.0, _continued_fraction(a, x))


def chi2_cdf(x: float, df: int) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(x):
        return 1.0
    return gammainc_lower(df / 2.0, x / 2.0)


def chi2_sf(x: float, df: int) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(x):
        return 0.0
    return gammainc_upper(df / 2.0, x / 2.0)


def _pdf(x: float, df: int) -> float:
    k = df / 2.0
    if x <= 0:
        return 0.0
    return math.exp((k - 1.0) * math.log(x) - x / 2.0 - k * math.log(2.0) - math.lgamma(k))


def chi2_quantile(q: float, df: int, tol: float = 1e-12) -> float:
    """Inverse of :func:`chi2_cdf`.

    Starts from the Wilson-Hilferty approximation, brackets the root and
    refines with safeguarded Newton steps. For ``q > 1/2`` the upper tail is
    matched instead, which keeps precision for quantiles far in the tail.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if df <= 0:
        raise ValueError("df must be positive")
    upper = q > 0.5
    target = 1.0 - q if upper else q

    def f(x):
        return (chi2_sf(x, df) if upper else chi2_cdf(x, df)) - target

    sign = -1.0 if upper else 1.0  # f is decreasing in x for the upper tail

    # Wilson-Hilferty start from the normal quantile
    z = _norm_ppf(q)
    c = 2.0 / (9.0 * df)
    x = df * max(1.0 - c + z * math.sqrt(c), 1e-3) ** 3

    lo, hi = 0.0, max(x, 1.0)
    while sign * f(hi) < 0:
        lo, hi = hi, 2.0 * hi
    x = min(max(x, lo), hi)
    for _ in range(200):
        fx = f(x)
        if fx == 0.0:
            return x
        if sign * fx < 0:
            lo = x
        else:
            hi = x
        dens = _pdf(x, df)
        step = sign * fx / dens if dens > 0 else math.inf
        new = x - step
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - x) <= tol * max(1.0, x) or hi - lo <= tol * max(1.0, x):
            return new
        x = new
    return x


def _norm_ppf(p: float) -> float:
    # Acklam's rational approximation; only seeds the iteration
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    if p < 0.02425:
        q = math.sqrt(-2 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p > 1 - 0.02425:
        return -_norm_ppf(1 - p)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)
