"""Design grids, evaluation grids, and functional samples.

A design grid holds the fixed measurement locations x_j in [0,1]^d, generated
by a product density: along axis k, point j solves F_k(x) = (j - 0.5) / p_k
where F_k is the CDF of a positive continuous density on [0,1].  Dimensions
d in {1, 2} are supported.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, SampleValidationError

__all__ = [
    "DesignGrid",
    "EvalGrid",
    "FunctionalSample",
    "DiscretizedCurve",
    "make_design_grid",
    "uniform_design_grid",
    "make_eval_grid",
    "validate_sample",
    "read_curves_csv",
    "write_curves_csv",
]

_BISECT_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DesignGrid:
    """Ordered design locations in [0,1]^dim on a product grid.

    ``points`` has shape (p,) for dim=1 or (p, 2) for dim=2, in row-major
    product order (last axis fastest).  ``axes`` holds the per-axis point
    sequences; ``density`` describes the generating density per axis
    ("uniform", a tabulated (grid, values) pair, or None when the grid was
    read from a file and the density is unknown).
    """

    dim: int
    points: np.ndarray
    axes: tuple[np.ndarray, ...]
    sizes: tuple[int, ...]
    density: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        object.__setattr__(self, "axes", tuple(_readonly(a) for a in self.axes))
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if int(np.prod(self.sizes)) != self.n_points:
            raise GridError("total point count must equal the product of per-axis sizes")
        for axis in self.axes:
            if axis.size and (axis.min() < 0.0 or axis.max() > 1.0):
                raise GridError("design points must lie in [0,1]")
            if np.any(np.diff(axis) <= 0):
                raise GridError("design points must be strictly increasing per axis")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def coords(self) -> np.ndarray:
        """Points as a (p, dim) array regardless of dim."""
        pts = self.points
        return pts[:, None] if self.dim == 1 else pts


@dataclass(frozen=True)
class EvalGrid:
    """Ordered evaluation locations in [0,1]^dim."""

    dim: int
    points: np.ndarray
    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        object.__setattr__(self, "axes", tuple(_readonly(a) for a in self.axes))
        if self.n_points == 0:
            raise GridError("evaluation grid must be nonempty")
        for axis in self.axes:
            if axis.min() < 0.0 or axis.max() > 1.0:
                raise GridError("evaluation points must lie in [0,1]")
            if np.any(np.diff(axis) <= 0):
                raise GridError("evaluation points must be strictly increasing per axis")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def coords(self) -> np.ndarray:
        pts = self.points
        return pts[:, None] if self.dim == 1 else pts


@dataclass(frozen=True)
class DiscretizedCurve:
    """Values of one function on an evaluation grid."""

    grid: EvalGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (self.grid.n_points,):
            raise GridError("curve values must match the grid size")
        if not np.all(np.isfinite(self.values)):
            raise GridError("curve values must be finite")


@dataclass(frozen=True)
class FunctionalSample:
    """n discretized curves observed on a common design grid."""

    grid: DesignGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    def column_means(self) -> np.ndarray:
        return self.values.mean(axis=0)


def _tabulated_cdf(grid: np.ndarray, values: np.ndarray):
    """Renormalized CDF of a piecewise-linear tabulated density on [0,1]."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise GridError("tabulated density grid must be strictly increasing with >= 2 points")
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise GridError("tabulated density grid must span [0,1]")
    if values.shape != grid.shape:
        raise GridError("tabulated density values must match its grid")
    if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
        raise GridError("density values must be positive and finite")
    # cumulative trapezoid; piecewise-quadratic CDF of the interpolated density
    seg = 0.5 * (values[1:] + values[:-1]) * np.diff(grid)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]

    def cdf(x: float) -> float:
        x = min(max(x, 0.0), 1.0)
        k = int(np.searchsorted(grid, x, side="right")) - 1
        k = min(max(k, 0), grid.size - 2)
        t = x - grid[k]
        w = grid[k + 1] - grid[k]
        f0, f1 = values[k], values[k + 1]
        part = f0 * t + 0.5 * (f1 - f0) * t * t / w
        return (cum[k] + part) / total

    return cdf


def _invert_monotone(cdf, target: float) -> float:
    """Bisection on [0,1]; F is continuous and strictly increasing."""
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _axis_points(density, size: int) -> np.ndarray:
    if size < 2:
        raise GridError(f"per-axis size must be >= 2, got {size}")
    targets = (np.arange(1, size + 1) - 0.5) / size
    if isinstance(density, str):
        if density != "uniform":
            raise GridError(f"unknown density spec {density!r}")
        return targets.copy()  # exact closed form for the uniform density
    grid, values = density
    cdf = _tabulated_cdf(grid, values)
    return np.array([_invert_monotone(cdf, t) for t in targets])


def make_design_grid(densities, sizes) -> DesignGrid:
    """Build a product design grid from per-axis density specs and sizes.

    ``densities`` is a sequence (one entry per axis) of either the string
    "uniform" or a tabulated pair ``(grid, values)`` of density values on a
    fine grid spanning [0,1]; tabulated densities are renormalized.
    """
    sizes = tuple(int(s) for s in sizes)
    dim = len(sizes)
    if dim not in (1, 2):
        raise GridError("only dimensions 1 and 2 are supported")
    if isinstance(densities, str) or (
        isinstance(densities, tuple) and len(densities) == 2 and not isinstance(densities[0], str)
    ):
        densities = [densities] * dim
    densities = list(densities)
    if len(densities) != dim:
        raise GridError("need one density spec per axis")
    axes = tuple(_axis_points(d, s) for d, s in zip(densities, sizes))
    if dim == 1:
        points = axes[0]
    else:
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        points = np.column_stack([g1.ravel(), g2.ravel()])
    spec = tuple(d if isinstance(d, str) else ("tabulated",) for d in densities)
    return DesignGrid(dim=dim, points=points, axes=axes, sizes=sizes, density=spec)


def uniform_design_grid(*sizes) -> DesignGrid:
    return make_design_grid("uniform", sizes)


def make_eval_grid(size: int = 100, dim: int = 1) -> EvalGrid:
    """Equispaced evaluation grid on [0,1]^dim (default 100 points, d=1)."""
    if size < 1:
        raise GridError("evaluation grid size must be >= 1")
    axis = np.linspace(0.0, 1.0, size)
    if dim == 1:
        return EvalGrid(dim=1, points=axis, axes=(axis,))
    if dim == 2:
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([g1.ravel(), g2.ravel()])
        return EvalGrid(dim=2, points=pts, axes=(axis, axis))
    raise GridError("only dimensions 1 and 2 are supported")


def eval_grid_from_points(points: np.ndarray) -> EvalGrid:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return EvalGrid(dim=1, points=points, axes=(points,))
    raise GridError("explicit evaluation points are supported for d=1 only")


def design_grid_from_points(points: np.ndarray) -> DesignGrid:
    """Wrap observed 1-d design points whose generating density is unknown."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1:
        raise GridError("observed design points are supported for d=1 only")
    return DesignGrid(dim=1, points=points, axes=(points,), sizes=(points.size,), density=(None,))


def validate_sample(sample: FunctionalSample) -> FunctionalSample:
    """Return the sample unchanged iff all structural invariants hold."""
    values = sample.values
    if values.ndim != 2:
        raise SampleValidationError(f"values must be 2-d, got shape {values.shape}")
    n, p = values.shape
    if n < 1:
        raise SampleValidationError("need at least one curve")
    if p != sample.grid.n_points:
        raise SampleValidationError(
            f"rows have {p} entries but the design grid has {sample.grid.n_points} points"
        )
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise SampleValidationError(f"non-finite entry at curve {i}, design point {j}")
    return sample


# ---------------------------------------------------------------------------
# Wide CSV format: line 1 = design points, lines 2..n+1 = one curve per line.
# ---------------------------------------------------------------------------

def read_curves_csv(path_or_file, label_column: bool = False):
    """Read a wide-format curves CSV.

    Returns a FunctionalSample, or a dict label -> FunctionalSample when
    ``label_column`` is set (first field of each curve row is the label).
    """
    if hasattr(path_or_file, "read"):
        fh = path_or_file
        close = False
    else:
        fh = open(path_or_file, newline="")
        close = True
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SampleValidationError("empty curves file") from None
        try:
            points = np.array([float(v) for v in header], dtype=float)
        except ValueError as exc:
            raise SampleValidationError(f"bad design point in header: {exc}") from None
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if label_column:
                labels.append(row[0])
                row = row[1:]
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise SampleValidationError(f"bad value on line {lineno}: {exc}") from None
            if len(vals) != points.size:
                raise SampleValidationError(
                    f"line {lineno} has {len(vals)} values, expected {points.size}"
                )
            rows.append(vals)
        if not rows:
            raise SampleValidationError("no curves in file")
        grid = design_grid_from_points(points)
        values = np.array(rows, dtype=float)
        if not label_column:
            return validate_sample(FunctionalSample(grid=grid, values=values))
        out = {}
        labels_arr = np.array(labels)
        for lab in dict.fromkeys(labels):  # preserve first-seen order
            out[lab] = validate_sample(
                FunctionalSample(grid=grid, values=values[labels_arr == lab])
            )
        return out
    finally:
        if close:
            fh.close()


def write_curves_csv(path_or_file, sample: FunctionalSample) -> None:
    if sample.grid.dim != 1:
        raise GridError("curves CSV supports d=1 only")

    def _write(fh):
        fh.write(",".join(repr(float(x)) for x in sample.grid.points) + "\n")
        for row in sample.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def curves_csv_text(sample: FunctionalSample) -> str:
    buf = io.StringIO()
    write_curves_csv(buf, sample)
    return buf.getvalue()
