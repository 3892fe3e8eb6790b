"""Empirical variance/correlation of smoothed curves, covariance shrinkage,
and positive-semidefinite repair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVarianceError, FuncbandError
from .grids import DesignGrid, EvalGrid, FunctionalSample

__all__ = [
    "CovarianceField",
    "CorrelationField",
    "ShrinkageSpec",
    "empirical_variance",
    "empirical_correlation",
    "schafer_strimmer_lambda",
    "shrink_correlation",
    "empirical_data_covariance",
    "psd_repair",
    "correlation_from_covariance",
]

_SYM_TOL = 1e-10


def _check_symmetric(table: np.ndarray, what: str) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise FuncbandError(f"{what} table must be square")
    scale = max(1.0, float(np.abs(table).max(initial=0.0)))
    if np.abs(table - table.T).max(initial=0.0) > _SYM_TOL * scale:
        raise FuncbandError(f"{what} table is not symmetric")
    return 0.5 * (table + table.T)


@dataclass(frozen=True)
class CovarianceField:
    """Symmetric covariance values C(x_a, x_b) on a grid."""

    grid: EvalGrid | DesignGrid
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", _check_symmetric(self.table, "covariance"))
        if self.table.shape[0] != self.grid.n_points:
            raise FuncbandError("covariance table size must match the grid")
        if np.any(np.diag(self.table) < 0):
            raise FuncbandError("covariance diagonal must be nonnegative")


@dataclass(frozen=True)
class CorrelationField:
    """Symmetric correlation values with unit diagonal, entries in [-1,1]."""

    grid: EvalGrid | DesignGrid
    table: np.ndarray

    def __post_init__(self):
        table = _check_symmetric(self.table, "correlation")
        if table.shape[0] != self.grid.n_points:
            raise FuncbandError("correlation table size must match the grid")
        table = np.clip(table, -1.0, 1.0)
        np.fill_diagonal(table, 1.0)
        object.__setattr__(self, "table", table)


@dataclass(frozen=True)
class ShrinkageSpec:
    """Shrinkage toward the identity correlation.

    ``intensity`` is the mixing weight lambda in [0,1]; None means estimate
    it from the data with the analytic (Schafer-Strimmer) formula.
    """

    intensity: float | None = None

    def __post_init__(self):
        if self.intensity is not None and not 0.0 <= self.intensity <= 1.0:
            raise FuncbandError("shrinkage intensity must lie in [0,1]")


def empirical_variance(curves: np.ndarray, mean: np.ndarray | None = None) -> np.ndarray:
    """Pointwise sample variance of the rows of ``curves`` with divisor n-1."""
    curves = np.asarray(curves, dtype=float)
    n = curves.shape[0]
    if n < 2:
        raise DegenerateVarianceError("variance estimation needs n >= 2 curves")
    if mean is None:
        mean = curves.mean(axis=0)
    dev = curves - mean[None, :]
    return (dev * dev).sum(axis=0) / (n - 1)


def empirical_correlation(
    curves: np.ndarray,
    grid,
    mean: np.ndarray | None = None,
    sigma2: np.ndarray | None = None,
) -> CorrelationField:
    """Empirical correlation of the rows of ``curves`` across grid points."""
    curves = np.asarray(curves, dtype=float)
    n = curves.shape[0]
    if mean is None:
        mean = curves.mean(axis=0)
    if sigma2 is None:
        sigma2 = empirical_variance(curves, mean)
    if np.any(sigma2 <= 0):
        j = int(np.argmin(sigma2))
        raise DegenerateVarianceError(f"zero variance at grid point index {j}")
    sigma = np.sqrt(sigma2)
    cross = curves.T @ curves - n * np.outer(mean, mean)
    table = cross / ((n - 1) * np.outer(sigma, sigma))
    return CorrelationField(grid=grid, table=table)


def schafer_strimmer_lambda(curves: np.ndarray) -> float:
    """Analytic shrinkage intensity toward the identity correlation.

    lambda = sum_{a != b} var_hat(r_ab) / sum_{a != b} r_ab^2, clipped to
    [0,1], with var_hat(r_ab) the empirical variance of the products of the
    standardized observations.
    """
    x = np.asarray(curves, dtype=float)
    n, m = x.shape
    if n < 3:
        return 1.0  # too few curves to estimate the estimator's variance
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        raise DegenerateVarianceError("zero variance column in shrinkage input")
    xs = (x - mean[None, :]) / sd[None, :]
    w_sum = xs.T @ xs                       # = (n-1) * r_ab
    w2_sum = (xs * xs).T @ (xs * xs)
    var_r = n / (n - 1.0) ** 3 * (w2_sum - w_sum * w_sum / n)
    r = w_sum / (n - 1.0)
    off = ~np.eye(m, dtype=bool)
    denom = float(np.sum(r[off] ** 2))
    if denom <= 0:
        return 1.0
    lam = float(np.sum(var_r[off])) / denom
    return min(max(lam, 0.0), 1.0)


def shrink_correlation(
    raw: CorrelationField, spec: ShrinkageSpec, curves: np.ndarray | None = None
) -> tuple[CorrelationField, float]:
    """Convex combination (1-lambda) raw + lambda I; returns (field, lambda)."""
    if spec.intensity is not None:
        lam = float(spec.intensity)
    else:
        if curves is None:
            raise FuncbandError("data-estimated shrinkage needs the underlying curves")
        lam = schafer_strimmer_lambda(curves)
    m = raw.table.shape[0]
    table = (1.0 - lam) * raw.table + lam * np.eye(m)
    return CorrelationField(grid=raw.grid, table=table), lam


def correlation_from_covariance(cov: CovarianceField) -> CorrelationField:
    diag = np.diag(cov.table)
    if np.any(diag <= 0):
        j = int(np.argmin(diag))
        raise DegenerateVarianceError(f"zero variance at grid point index {j}")
    sd = np.sqrt(diag)
    return CorrelationField(grid=cov.grid, table=cov.table / np.outer(sd, sd))


def empirical_data_covariance(
    sample: FunctionalSample, spec: ShrinkageSpec | None = None
) -> tuple[CovarianceField, float]:
    """Sample covariance of the raw data across units, optionally shrunk.

    Shrinkage acts on the correlation scale (variances preserved).  Returns
    (field, lambda); lambda is 0 when no shrinkage spec is given.
    """
    y = sample.values
    n = y.shape[0]
    if n < 2:
        raise DegenerateVarianceError("covariance estimation needs n >= 2 curves")
    dev = y - y.mean(axis=0)[None, :]
    cov = dev.T @ dev / (n - 1)
    if spec is None:
        return CovarianceField(grid=sample.grid, table=cov), 0.0
    diag = np.diag(cov)
    if np.any(diag <= 0):
        j = int(np.argmin(diag))
        raise DegenerateVarianceError(f"zero variance at design point index {j}")
    sd = np.sqrt(diag)
    corr = CorrelationField(grid=sample.grid, table=cov / np.outer(sd, sd))
    shrunk, lam = shrink_correlation(corr, spec, curves=y)
    table = shrunk.table * np.outer(sd, sd)
    return CovarianceField(grid=sample.grid, table=table), lam


def psd_repair(table: np.ndarray, correlation: bool = False) -> tuple[np.ndarray, float]:
    """Clip negative eigenvalues to zero and symmetrize.

    For correlation tables the diagonal is renormalized back to one.
    Returns (repaired table, clipped eigenvalue mass fraction).
    """
    table = _check_symmetric(table, "input")
    if not np.all(np.isfinite(table)):
        raise FuncbandError("non-finite entries in table")
    vals, vecs = np.linalg.eigh(table)
    total = float(np.abs(vals).sum())
    neg = float(np.abs(vals[vals < 0]).sum())
    if neg == 0.0:
        repaired = table
    else:
        clipped = np.maximum(vals, 0.0)
        repaired = (vecs * clipped[None, :]) @ vecs.T
        repaired = 0.5 * (repaired + repaired.T)
        if correlation:
            d = np.sqrt(np.maximum(np.diag(repaired), 0.0))
            if np.any(d <= 0):
                raise DegenerateVarianceError("repair zeroed a correlation diagonal entry")
            repaired = repaired / np.outer(d, d)
            np.fill_diagonal(repaired, 1.0)
    mass = neg / total if total > 0 else 0.0
    return repaired, mass
