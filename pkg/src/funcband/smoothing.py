"""Kernels, local linear weights, and curve smoothing.

The local linear estimate at x is the intercept of a kernel-weighted least
squares line (plane for d=2) fit through the data; it can be written as a
weighted average sum_j W_j(x) y_j whose weights sum to one and reproduce
linear functions exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GridError, IllPosedBandwidthError, SingularDesignError
from .grids import DesignGrid, DiscretizedCurve, EvalGrid, FunctionalSample

__all__ = [
    "Kernel",
    "epanechnikov",
    "truncated_gaussian",
    "kernel_by_name",
    "Bandwidth",
    "WeightVector",
    "local_linear_weights",
    "weight_matrix",
    "smooth_curve",
    "fit_mean",
    "MeanFit",
    "cv_score",
    "cv_bandwidth",
]

_DET_RTOL = 1e-10


@dataclass(frozen=True)
class Kernel:
    """Nonnegative kernel with support [-1,1]; applied per axis for d=2."""

    name: str
    profile: Callable[[np.ndarray], np.ndarray]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.where(np.abs(u) < 1.0, self.profile(u), 0.0)
        return out


def _epa(u):
    return 0.75 * np.maximum(1.0 - u * u, 0.0)


_GAUSS_NORM = None


def _tgauss(u):
    # standard normal density restricted to [-1,1], renormalized
    global _GAUSS_NORM
    if _GAUSS_NORM is None:
        from scipy.stats import norm

        _GAUSS_NORM = norm.cdf(1.0) - norm.cdf(-1.0)
    return np.exp(-0.5 * u * u) / (np.sqrt(2.0 * np.pi) * _GAUSS_NORM)


def epanechnikov() -> Kernel:
    return Kernel("epanechnikov", _epa)


def truncated_gaussian() -> Kernel:
    return Kernel("gauss", _tgauss)


def kernel_by_name(name: str) -> Kernel:
    name = name.lower()
    if name in ("epanechnikov", "epa"):
        return epanechnikov()
    if name in ("gauss", "gaussian", "truncated-gaussian"):
        return truncated_gaussian()
    raise GridError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class Bandwidth:
    """Per-axis positive bandwidths."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values or any(h <= 0 for h in self.values):
            raise GridError("bandwidths must be positive")

    @classmethod
    def of(cls, h, dim: int = 1) -> "Bandwidth":
        if isinstance(h, Bandwidth):
            if len(h.values) != dim:
                raise GridError(f"bandwidth has {len(h.values)} axes, expected {dim}")
            return h
        if np.isscalar(h):
            return cls(tuple(float(h) for _ in range(dim)))
        vals = tuple(float(v) for v in h)
        if len(vals) != dim:
            raise GridError(f"bandwidth has {len(vals)} axes, expected {dim}")
        return cls(vals)


@dataclass(frozen=True)
class WeightVector:
    """Sparse local linear weights at a single evaluation point."""

    x: tuple[float, ...]
    indices: np.ndarray
    weights: np.ndarray

    def dense(self, p: int) -> np.ndarray:
        out = np.zeros(p)
        out[self.indices] = self.weights
        return out


def _kernel_matrix(grid: DesignGrid, eval_pts: np.ndarray, h: Bandwidth, kernel: Kernel):
    """Kernel values and per-axis offsets for all (eval, design) pairs."""
    if grid.dim == 1:
        diff = grid.points[None, :] - eval_pts[:, None]
        k = kernel(diff / h.values[0])
        return k, (diff,)
    d1 = grid.points[None, :, 0] - eval_pts[:, None, 0]
    d2 = grid.points[None, :, 1] - eval_pts[:, None, 1]
    k = kernel(d1 / h.values[0]) * kernel(d2 / h.values[1])
    return k, (d1, d2)


def weight_matrix(
    grid: DesignGrid, eval: EvalGrid, h, kernel: Kernel | None = None
) -> np.ndarray:
    """Dense (m x p) matrix of local linear weights, rows = evaluation points.

    Raises IllPosedBandwidthError if some evaluation point has fewer than
    d+1 kernel-active design points, and SingularDesignError if the local
    moment matrix is singular there.
    """
    kernel = kernel or epanechnikov()
    if grid.dim != eval.dim:
        raise GridError("design and evaluation grids must share the dimension")
    h = Bandwidth.of(h, grid.dim)
    p = grid.n_points
    k, diffs = _kernel_matrix(grid, eval.points if grid.dim > 1 else eval.points, h, kernel)
    active = (k > 0).sum(axis=1)
    need = grid.dim + 1
    if np.any(active < need):
        i = int(np.argmin(active))
        raise IllPosedBandwidthError(
            f"only {int(active[i])} active design points at evaluation point index {i}; "
            f"need >= {need} (increase h)"
        )
    if grid.dim == 1:
        (d,) = diffs
        ph = p * h.values[0]
        s0 = k.sum(axis=1) / ph
        s1 = (d * k).sum(axis=1) / ph
        s2 = (d * d * k).sum(axis=1) / ph
        det = s0 * s2 - s1 * s1
        if np.any(det <= _DET_RTOL * (s0 * s2 + s1 * s1)):
            raise SingularDesignError("singular local design (coincident active points)")
        w = (s2[:, None] - d * s1[:, None]) * k / ph
        return w / w.sum(axis=1, keepdims=True)
    d1, d2 = diffs
    ph = p * h.values[0] * h.values[1]
    s00 = k.sum(axis=1) / ph
    s01 = (d1 * k).sum(axis=1) / ph
    s02 = (d2 * k).sum(axis=1) / ph
    s11 = (d1 * d1 * k).sum(axis=1) / ph
    s12 = (d1 * d2 * k).sum(axis=1) / ph
    s22 = (d2 * d2 * k).sum(axis=1) / ph
    # determinant of the 3x3 local moment matrix [[s00,s01,s02],[s01,s11,s12],[s02,s12,s22]]
    det3 = (
        s00 * (s11 * s22 - s12 * s12)
        - s01 * (s01 * s22 - s12 * s02)
        + s02 * (s01 * s12 - s11 * s02)
    )
    minor = s11 * s22 - s12 * s12
    minor_scale = s11 * s22 + s12 * s12
    det3_scale = (
        s00 * minor_scale
        + np.abs(s01) * (np.abs(s01) * s22 + np.abs(s12 * s02))
        + np.abs(s02) * (np.abs(s01 * s12) + s11 * np.abs(s02))
    )
    if np.any(det3 <= _DET_RTOL * det3_scale) or np.any(minor <= _DET_RTOL * minor_scale):
        raise SingularDesignError("singular local design (collinear active points)")
    w = (
        (s11 * s22 - s12 * s12)[:, None]
        + (s02 * s12 - s01 * s22)[:, None] * d1
        + (s01 * s12 - s02 * s11)[:, None] * d2
    ) * k / ph
    return w / w.sum(axis=1, keepdims=True)


def local_linear_weights(grid: DesignGrid, x, h, kernel: Kernel | None = None) -> WeightVector:
    """Local linear weights at a single point, in sparse form."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if grid.dim == 1:
        eval_grid = EvalGrid(dim=1, points=x_arr, axes=(x_arr,))
    else:
        pts = x_arr.reshape(1, 2)
        eval_grid = EvalGrid(dim=2, points=pts, axes=(pts[:, 0], pts[:, 1]))
    row = weight_matrix(grid, eval_grid, h, kernel)[0]
    idx = np.nonzero(row)[0]
    return WeightVector(x=tuple(x_arr.tolist()), indices=idx, weights=row[idx])


def smooth_curve(
    row: np.ndarray, grid: DesignGrid, eval: EvalGrid, h, kernel: Kernel | None = None
) -> DiscretizedCurve:
    """Local linear smooth of a single curve's raw values."""
    row = np.asarray(row, dtype=float)
    if row.shape != (grid.n_points,):
        raise GridError(f"row has length {row.shape}, expected ({grid.n_points},)")
    w = weight_matrix(grid, eval, h, kernel)
    return DiscretizedCurve(grid=eval, values=w @ row)


@dataclass(frozen=True)
class MeanFit:
    """Smoothed mean together with the per-curve smooths it averages."""

    grid: EvalGrid
    mean: np.ndarray        # (m,)
    curves: np.ndarray      # (n, m), row i = smooth of curve i
    weights: np.ndarray     # (m, p) weight matrix used

    @property
    def mean_curve(self) -> DiscretizedCurve:
        return DiscretizedCurve(grid=self.grid, values=self.mean)


def fit_mean(
    sample: FunctionalSample, eval: EvalGrid, h, kernel: Kernel | None = None
) -> MeanFit:
    """Smooth the sample mean; also returns the n per-curve smooths."""
    if sample.n_curves < 1:
        raise GridError("need at least one curve")
    w = weight_matrix(sample.grid, eval, h, kernel)
    curves = sample.values @ w.T
    return MeanFit(grid=eval, mean=curves.mean(axis=0), curves=curves, weights=w)


def cv_score(sample: FunctionalSample, h, kernel: Kernel | None = None) -> float:
    """Leave-one-curve-out cross validation score at the design points.

    CV(h) = sum_i sum_j (Y_ij - mu_hat^(-i)(x_j; h))^2 with mu_hat^(-i) the
    smoothed mean of the sample with curve i removed.
    """
    n = sample.n_curves
    if n < 2:
        raise GridError("cross validation needs n >= 2")
    grid = sample.grid
    if grid.dim == 1:
        eval = EvalGrid(dim=1, points=grid.points, axes=(grid.points,))
    else:
        eval = EvalGrid(dim=2, points=grid.points, axes=grid.axes)
    s = weight_matrix(grid, eval, h, kernel)  # (p, p)
    ybar = sample.column_means()
    smoothed_mean = s @ ybar
    smoothed_rows = sample.values @ s.T       # (n, p)
    # leave-one-out mean smooth: (n * S ybar - S y_i) / (n - 1)
    loo = (n * smoothed_mean[None, :] - smoothed_rows) / (n - 1)
    resid = sample.values - loo
    return float(np.sum(resid * resid))


def cv_bandwidth(
    sample: FunctionalSample, candidates: Sequence, kernel: Kernel | None = None
):
    """Pick the candidate bandwidth minimizing the leave-one-curve-out score.

    Ill-posed candidates are skipped with a warning; ties break toward the
    smallest bandwidth.  Returns (Bandwidth, scores dict).
    """
    cands = [Bandwidth.of(c, sample.grid.dim) for c in candidates]
    if not cands:
        raise GridError("empty candidate bandwidth list")
    cands.sort(key=lambda b: b.values)
    scores = {}
    best = None
    for b in cands:
        try:
            sc = cv_score(sample, b, kernel)
        except (IllPosedBandwidthError, SingularDesignError) as exc:
            warnings.warn(f"skipping ill-posed candidate h={b.values}: {exc}")
            continue
        scores[b.values] = sc
        if best is None or sc < scores[best.values]:
            best = b
    if best is None:
        raise IllPosedBandwidthError("all candidate bandwidths are ill-posed")
    return best, scores
