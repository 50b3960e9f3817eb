"""Taylor-basis loss decomposition and metric projection.

Near a positive target the four objectives are compared on the shared basis
f, f^2, f^3 with f = 1 - sqrt(pred). Regression losses are evaluated at
pred = (1 - f)^2; the classification losses take the square root of the same
prediction as their probability argument, which places all four on one axis
(their analytic continuation through probability 1 is used for f < 0).
Coefficients are extracted numerically by least squares on a small window
rather than transcribed from any printed expansion, with two guard orders
absorbing the truncation remainder.

The projection step solves for the vectors mapping per-loss coefficient rows
to observed watch-duration and conversion metrics, and ``compose_loss`` finds
mixture weights over a loss library whose combined coefficients align with a
target vector.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng
from .losses import LOGLOSS, LossKind, MSE, TWEEDIE, WEIGHTED


@dataclass(frozen=True)
class BasisCoeffs:
    """Extracted coefficients of a loss on the f-power basis at one target."""

    kind: LossKind
    target: float
    coeffs: tuple
    residual: float


@dataclass(frozen=True)
class MetricObservations:
    """Per-experiment coefficient rows with two observed metrics each."""

    coeff_matrix: np.ndarray
    watch_metric: np.ndarray
    conversion_metric: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeff_matrix, dtype=float)
        w = np.asarray(self.watch_metric, dtype=float)
        v = np.asarray(self.conversion_metric, dtype=float)
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValueError("coeff_matrix must be N x 3")
        if c.shape[0] < 3:
            raise ValueError("need at least 3 observation rows")
        if w.shape != (c.shape[0],) or v.shape != (c.shape[0],):
            raise ValueError("metric vectors must have one entry per row")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "coeff_matrix", c)
        object.__setattr__(self, "watch_metric", w)
        object.__setattr__(self, "conversion_metric", v)


def _expansion_loss(kind, target):
    """Loss as a function of f, without the runtime domain guards."""
    if kind.name == "tweedie":
        p = kind.power

        def fn(f):
            pred = (1.0 - f) ** 2
            return -target * pred ** (1.0 - p) / (1.0 - p) + pred ** (2.0 - p) / (2.0 - p)

        return fn
    if kind.name == "mse":
        return lambda f: ((1.0 - f) ** 2 - target) ** 2
    # Classification kinds at a positive target: click label 1, probability
    # argument sqrt(pred) = 1 - f, weighted by the target watch time.
    weight = target if kind.name == "weighted" else 1.0
    return lambda f: -weight * np.log(1.0 - f)


def fit_basis_coeffs(loss_fn, window=0.05, n_points=41, order=3):
    """Least-squares coefficients of loss_fn(f) - loss_fn(0) on f, ..., f^order.

    Two extra orders are fitted as guards so the truncation remainder does not
    contaminate the reported coefficients; the residual is the maximum
    absolute misfit of the full model on the window.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if n_points < 20:
        raise ValueError("n_points must be >= 20")
    if order < 1:
        raise ValueError("order must be >= 1")
    f = np.linspace(-window, window, n_points)
    d = np.asarray(loss_fn(f), dtype=float) - float(loss_fn(0.0))
    design = np.column_stack([f**k for k in range(1, order + 3)])
    coef, _, matrix_rank, _ = np.linalg.lstsq(design, d, rcond=None)
    if matrix_rank < design.shape[1]:
        raise ValueError("degenerate fit: singular design matrix")
    residual = float(np.max(np.abs(design @ coef - d)))
    return coef[:order], residual


def taylor_coeffs(kind, target, window=0.05, n_points=41, order=3):
    """Numeric basis coefficients of ``kind``'s loss at a positive target."""
    if target <= 0:
        raise ValueError("expansion target must be positive")
    coef, residual = fit_basis_coeffs(
        _expansion_loss(kind, target), window=window, n_points=n_points, order=order
    )
    return BasisCoeffs(kind=kind, target=float(target),
                       coeffs=tuple(float(c) for c in coef), residual=residual)


def sensitivity_compare(p=1.5):
    """Second-order coefficients (tweedie, logloss) at target 1.

    The tweedie coefficient dominates, confirming the higher sensitivity of
    the regression objective near a correct prediction.
    """
    tw = taylor_coeffs(LossKind("tweedie", power=p), 1.0)
    ll = taylor_coeffs(LOGLOSS, 1.0)
    return tw.coeffs[1], ll.coeffs[1]


class ProjectionSolution(NamedTuple):
    t_vector: np.ndarray
    v_vector: np.ndarray
    residuals: tuple


def solve_projection(obs):
    """Least-squares vectors mapping coefficient rows to the two metrics.

    Exact when the system is square and nonsingular; raises when the
    coefficient matrix is rank deficient.
    """
    c = obs.coeff_matrix
    if np.linalg.matrix_rank(c) < 3:
        raise ValueError("rank-deficient coefficient matrix")
    t, t_res, _, _ = np.linalg.lstsq(c, obs.watch_metric, rcond=None)
    v, v_res, _, _ = np.linalg.lstsq(c, obs.conversion_metric, rcond=None)
    t_ssr = float(t_res[0]) if t_res.size else float(np.sum((c @ t - obs.watch_metric) ** 2))
    v_ssr = float(v_res[0]) if v_res.size else float(np.sum((c @ v - obs.conversion_metric) ** 2))
    return ProjectionSolution(t_vector=t, v_vector=v, residuals=(t_ssr, v_ssr))


class ComposeResult(NamedTuple):
    weights: np.ndarray
    cosine: float


def compose_loss(t_vector, library):
    """Mixture weights over a loss library aligning with a target vector.

    Solves for the combination of library coefficient vectors closest in
    angle to ``t_vector`` and scales it to unit norm. Returns the weights and
    the achieved cosine similarity; a target orthogonal to the library span
    yields zero weights and cosine 0.
    """
    if not library:
        raise ValueError("library must be nonempty")
    t = np.asarray(t_vector, dtype=float)
    if t.size != 3 or not np.all(np.isfinite(t)) or np.allclose(t, 0.0):
        raise ValueError("t_vector must be a finite nonzero 3-vector")
    a = np.column_stack([np.asarray(bc.coeffs, dtype=float) for bc in library])
    if np.allclose(a, 0.0):
        raise ValueError("degenerate library: all coefficients are zero")
    w, _, _, _ = np.linalg.lstsq(a, t, rcond=None)
    combo = a @ w
    norm = float(np.linalg.norm(combo))
    if norm < 1e-12:
        return ComposeResult(weights=np.zeros(a.shape[1]), cosine=0.0)
    cosine = float(combo @ t / (norm * np.linalg.norm(t)))
    return ComposeResult(weights=w / norm, cosine=cosine)


def standard_library(power=1.5, target=1.0):
    """Basis coefficients of the four objectives at one target."""
    kinds = (LossKind("tweedie", power=power), LOGLOSS, WEIGHTED, MSE)
    return [taylor_coeffs(kind, target) for kind in kinds]


def plant_observations(t_vector, v_vector, n=12, noise_sd=0.0, seed=0):
    """Synthetic observation groups with known projection vectors.

    Coefficient rows are random mixtures of the four standard losses plus a
    small jitter; metrics are the planted linear responses with optional
    Gaussian noise. Stands in for online experiment groups, which do not
    exist at desk scale.
    """
    if n < 3:
        raise ValueError("need at least 3 observations")
    t = np.asarray(t_vector, dtype=float)
    v = np.asarray(v_vector, dtype=float)
    gen = rng.stream(seed, rng.PLANT)
    base = np.asarray([bc.coeffs for bc in standard_library()])
    mix = gen.random((n, base.shape[0]))
    c = mix @ base + gen.normal(0.0, 0.05, size=(n, 3))
    watch = c @ t + gen.normal(0.0, noise_sd, size=n)
    conversion = c @ v + gen.normal(0.0, noise_sd, size=n)
    return MetricObservations(coeff_matrix=c, watch_metric=watch,
                              conversion_metric=conversion)


def read_observations(path):
    """Rows of (c1, c2, c3, watch_metric, conversion_metric); '#' comments."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(",")
            if len(parts) != 5:
                raise ValueError(f"row {lineno}: expected 5 comma-separated values")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ValueError(f"row {lineno}: not numeric: {text!r}") from None
    if len(rows) < 3:
        raise ValueError("observations file must contain at least 3 rows")
    arr = np.asarray(rows)
    return MetricObservations(coeff_matrix=arr[:, :3], watch_metric=arr[:, 3],
                              conversion_metric=arr[:, 4])


def write_observations(obs, path, master_seed=None):
    with open(path, "w") as fh:
        if master_seed is not None:
            fh.write(f"# master_seed={master_seed}\n")
        fh.write("# c1,c2,c3,watch_metric,conversion_metric\n")
        for row, w, v in zip(obs.coeff_matrix, obs.watch_metric, obs.conversion_metric):
            fh.write(f"{float(row[0])!r},{float(row[1])!r},{float(row[2])!r},"
                     f"{float(w)!r},{float(v)!r}\n")
