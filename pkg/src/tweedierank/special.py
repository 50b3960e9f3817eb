"""Regularized incomplete gamma and beta functions.

Series / continued-fraction evaluations in the classic Numerical Recipes
arrangement (gser, gcf, betacf), vectorized over the argument. Working
accuracy is ~1e-13 relative, well inside the 1e-10 contract the distribution
engine and the t-test rely on.
"""

import math

import numpy as np

_EPS = 1e-15
_FPMIN = 1e-300
_MAX_ITER = 4000


def _check_gamma_domain(a, x):
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ValueError("shape parameter a must be positive and finite")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("argument x must be nonnegative and finite")


def _gser(a, x):
    """Lower series: P(a, x) for x < a + 1. Vector x, scalar a."""
    out = np.zeros_like(x)
    live = x > 0
    xs = x[live]
    ap = np.full_like(xs, a)
    total = np.full_like(xs, 1.0 / a)
    term = total.copy()
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= xs / ap
        total += term
        if np.all(np.abs(term) < np.abs(total) * _EPS):
            break
    else:
        raise RuntimeError("incomplete gamma series failed to converge")
    out[live] = total * np.exp(-xs + a * np.log(xs) - math.lgamma(a))
    return out


def _gcf(a, x):
    """Upper continued fraction (modified Lentz): Q(a, x) for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        np.copyto(d, _FPMIN, where=np.abs(d) < _FPMIN)
        c = b + an / c
        np.copyto(c, _FPMIN, where=np.abs(c) < _FPMIN)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    else:
        raise RuntimeError("incomplete gamma continued fraction failed to converge")
    return h * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _gammainc_column(a, x):
    """P(a, x) for scalar a > 0 and 1-d float array x >= 0."""
    out = np.empty_like(x)
    small = x < a + 1.0
    if np.any(small):
        out[small] = _gser(a, x[small])
    large = ~small
    if np.any(large):
        out[large] = 1.0 - _gcf(a, x[large])
    return out


def reg_lower_incomplete_gamma(a, x):
    """Regularized lower incomplete gamma function P(a, x).

    P(a, x) = gamma(a, x) / Gamma(a), the CDF of a unit-scale gamma law with
    shape ``a``. Accepts scalars or broadcastable arrays; ``a > 0``,
    ``x >= 0``.
    """
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    _check_gamma_domain(a_arr, x_arr)
    a_b, x_b = np.broadcast_arrays(a_arr, x_arr)
    out = np.empty(a_b.shape, dtype=float)
    flat_a = a_b.ravel()
    flat_x = x_b.ravel()
    flat_o = out.ravel()
    for av in np.unique(flat_a):
        mask = flat_a == av
        flat_o[mask] = _gammainc_column(float(av), flat_x[mask])
    if np.isscalar(a) and np.isscalar(x):
        return float(out)
    return out


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction failed to converge")


def _betainc_scalar(a, b, x):
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters a, b must be positive")
    if x < 0 or x > 1:
        raise ValueError("argument x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    # Symmetry switch keeps the continued fraction in its convergent regime.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def reg_incomplete_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Continued fraction with the usual symmetry switch; ``a, b > 0``,
    ``x`` in [0, 1]. Scalars or arrays.
    """
    if np.isscalar(a) and np.isscalar(b) and np.isscalar(x):
        return _betainc_scalar(float(a), float(b), float(x))
    return np.vectorize(_betainc_scalar, otypes=[float])(a, b, x)
