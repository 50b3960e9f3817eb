"""Two-sample Welch t-test with Satterthwaite degrees of freedom."""

import math
from typing import NamedTuple

import numpy as np

from .special import reg_incomplete_beta


class WelchResult(NamedTuple):
    t: float
    dof: float
    p: float


def welch_t_test(a, b):
    """Two-sided Welch test for a difference in means.

    Returns (t, dof, p). Sample variances use the n-1 convention; the p-value
    comes from the Student CDF via the regularized incomplete beta. Raises if
    either sample has fewer than two points or both variances are zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        raise ValueError("degenerate test: both samples have zero variance")
    sa = va / a.size
    sb = vb / b.size
    t = (a.mean() - b.mean()) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    # Two-sided: P(|T| > |t|) = I_x(dof/2, 1/2) with x = dof / (dof + t^2).
    x = dof / (dof + t * t)
    p = reg_incomplete_beta(dof / 2.0, 0.5, x)
    return WelchResult(t=float(t), dof=float(dof), p=float(min(max(p, 0.0), 1.0)))
