"""Simultaneous confidence bands: normal, bootstrap, two-sample, prediction.

All bands have the form center(x) +/- threshold * scale(x); for the mean
regression band the scale is sigma_hat(x)/sqrt(n) and the threshold is the
Monte-Carlo sup-norm quantile of a centered Gaussian process with the shrunk
empirical correlation of the smoothed curves.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from .errors import DegenerateVarianceError, FuncbandError, GridError
from .grids import EvalGrid, FunctionalSample
from .moments import (
    CorrelationField,
    CovarianceField,
    ShrinkageSpec,
    empirical_correlation,
    empirical_variance,
    correlation_from_covariance,
    shrink_correlation,
)
from .smoothing import Bandwidth, Kernel, fit_mean
from .supnorm import (
    SupQuantileRequest,
    default_path_count,
    order_statistic_quantile,
    sup_quantile,
)

__all__ = [
    "BandResult",
    "TwoSampleResult",
    "normal_scb",
    "bootstrap_scb",
    "two_sample_scb",
    "prediction_band",
    "split_half_bandwidth",
    "band_covers",
]


@dataclass(frozen=True)
class BandResult:
    """A simultaneous band: center +/- half_width at confidence ``level``."""

    grid: EvalGrid
    center: np.ndarray
    half_width: np.ndarray
    threshold: float
    level: float
    method: str
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.center.shape != (self.grid.n_points,):
            raise FuncbandError("band center must match the grid size")
        if self.half_width.shape != self.center.shape:
            raise FuncbandError("band half width must match the center")
        if np.any(self.half_width < 0):
            raise FuncbandError("band half width must be nonnegative")

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_width

    def covers(self, values: np.ndarray) -> bool:
        return band_covers(self, values)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "method": self.method,
            "threshold": self.threshold,
            "grid": self.grid.points.tolist(),
            "center": self.center.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def write_csv(self, path_or_file) -> None:
        if self.grid.dim != 1:
            raise GridError("band CSV output supports d=1 only")

        def _write(fh):
            writer = csv.writer(fh)
            writer.writerow(["x", "center", "lower", "upper"])
            for x, c, lo, up in zip(self.grid.points, self.center, self.lower, self.upper):
                writer.writerow([repr(float(x)), repr(float(c)), repr(float(lo)), repr(float(up))])

        if hasattr(path_or_file, "write"):
            _write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                _write(fh)


def band_covers(band: BandResult, values: np.ndarray) -> bool:
    """True iff the curve lies within the band at every grid point."""
    values = np.asarray(values, dtype=float)
    dev = np.abs(values - band.center)
    return bool(np.all(dev <= band.half_width))


def _sigma_and_correlation(mean_fit, shrinkage: ShrinkageSpec):
    n = mean_fit.curves.shape[0]
    if n < 2:
        raise DegenerateVarianceError("band construction needs n >= 2 curves")
    sigma2 = empirical_variance(mean_fit.curves, mean_fit.mean)
    if np.any(sigma2 <= 0):
        j = int(np.argmin(sigma2))
        raise DegenerateVarianceError(f"zero variance at evaluation point index {j}")
    corr = empirical_correlation(mean_fit.curves, mean_fit.grid, mean_fit.mean, sigma2)
    shrunk, lam = shrink_correlation(corr, shrinkage, curves=mean_fit.curves)
    return np.sqrt(sigma2), shrunk, lam


def _provenance(h, kernel, seed, **extra) -> dict:
    d = {"h": Bandwidth.of(h, 1).values if np.isscalar(h) or isinstance(h, Bandwidth) else h,
         "kernel": (kernel.name if isinstance(kernel, Kernel) else kernel or "epanechnikov"),
         "seed": seed}
    d.update(extra)
    return d


def normal_scb(
    sample: FunctionalSample,
    eval: EvalGrid,
    h,
    kernel: Kernel | None = None,
    gamma: float = 0.05,
    paths: int | None = None,
    seed: int = 0,
    shrinkage: ShrinkageSpec = ShrinkageSpec(),
    threads: int = 1,
) -> BandResult:
    """Gaussian-limit simultaneous band for the mean curve."""
    mean_fit = fit_mean(sample, eval, h, kernel)
    sigma, corr, lam = _sigma_and_correlation(mean_fit, shrinkage)
    n_paths = paths if paths is not None else default_path_count(sample.n_points)
    res = sup_quantile(SupQuantileRequest(corr, gamma, n_paths, seed, threads))
    n = sample.n_curves
    return BandResult(
        grid=eval,
        center=mean_fit.mean,
        half_width=res.threshold * sigma / sqrt(n),
        threshold=res.threshold,
        level=1.0 - gamma,
        method="normal",
        details=_provenance(h, kernel, seed, paths=n_paths, shrinkage_lambda=lam,
                            clipped_mass=res.clipped_mass, threshold_stderr=res.stderr),
    )


def bootstrap_scb(
    sample: FunctionalSample,
    eval: EvalGrid,
    h,
    kernel: Kernel | None = None,
    gamma: float = 0.05,
    bootstraps: int = 2500,
    seed: int = 0,
    threads: int = 1,
) -> BandResult:
    """Naive bootstrap band: resample the smoothed curves with replacement,
    take the order-statistic quantile of z* = sqrt(n) || (mu* - mu_hat) / sigma* ||_inf."""
    if bootstraps < 1:
        raise FuncbandError("need at least one bootstrap resample")
    mean_fit = fit_mean(sample, eval, h, kernel)
    n = sample.n_curves
    if n < 2:
        raise DegenerateVarianceError("bootstrap band needs n >= 2 curves")
    sigma2 = empirical_variance(mean_fit.curves, mean_fit.mean)
    if np.any(sigma2 <= 0):
        raise DegenerateVarianceError("zero variance in smoothed curves")
    sigma = np.sqrt(sigma2)
    curves = mean_fit.curves

    chunk = 512
    bounds = [(s, min(s + chunk, bootstraps)) for s in range(0, bootstraps, chunk)]
    children = np.random.SeedSequence(seed).spawn(len(bounds))

    def run(args):
        (start, stop), ss = args
        rng = np.random.Generator(np.random.Philox(ss))
        out = np.empty(stop - start)
        for b in range(stop - start):
            for attempt in range(100):
                idx = rng.integers(0, n, size=n)
                boot = curves[idx]
                mu_star = boot.mean(axis=0)
                var_star = boot.var(axis=0, ddof=1)
                if np.all(var_star > 0):
                    break
            else:
                raise DegenerateVarianceError(
                    "bootstrap resample had zero variance 100 times in a row"
                )
            out[b] = sqrt(n) * np.max(np.abs((mu_star - mean_fit.mean) / np.sqrt(var_star)))
        return out

    jobs = list(zip(bounds, children))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    z_star = np.concatenate(parts)
    c = order_statistic_quantile(z_star, gamma)
    return BandResult(
        grid=eval,
        center=mean_fit.mean,
        half_width=c * sigma / sqrt(n),
        threshold=c,
        level=1.0 - gamma,
        method="bootstrap",
        details=_provenance(h, kernel, seed, bootstraps=bootstraps),
    )


@dataclass(frozen=True)
class TwoSampleResult:
    band: BandResult
    reject: bool


def two_sample_scb(
    sample_a: FunctionalSample,
    sample_b: FunctionalSample,
    eval: EvalGrid,
    h_a,
    h_b=None,
    kernel: Kernel | None = None,
    alpha: float = 0.05,
    paths: int | None = None,
    seed: int = 0,
    shrinkage: ShrinkageSpec = ShrinkageSpec(),
    threads: int = 1,
) -> TwoSampleResult:
    """Band for the difference of two mean curves; rejects equality iff the
    zero line exits the band somewhere."""
    if sample_a.grid.n_points != sample_b.grid.n_points or not np.allclose(
        sample_a.grid.points, sample_b.grid.points
    ):
        raise GridError("the two samples must share a common design grid")
    if h_b is None:
        h_b = h_a
    fits = []
    covs = []
    for sample, h in ((sample_a, h_a), (sample_b, h_b)):
        mean_fit = fit_mean(sample, eval, h, kernel)
        sigma, corr, _lam = _sigma_and_correlation(mean_fit, shrinkage)
        cov = corr.table * np.outer(sigma, sigma) / sample.n_curves
        fits.append(mean_fit)
        covs.append(cov)
    diff_cov = covs[0] + covs[1]
    sigma_diff = np.sqrt(np.diag(diff_cov))
    corr_diff = correlation_from_covariance(CovarianceField(grid=eval, table=diff_cov))
    n_paths = paths if paths is not None else default_path_count(sample_a.n_points)
    res = sup_quantile(SupQuantileRequest(corr_diff, alpha, n_paths, seed, threads))
    center = fits[0].mean - fits[1].mean
    band = BandResult(
        grid=eval,
        center=center,
        half_width=res.threshold * sigma_diff,
        threshold=res.threshold,
        level=1.0 - alpha,
        method="two-sample",
        details=_provenance((h_a, h_b), kernel, seed, paths=n_paths,
                            clipped_mass=res.clipped_mass),
    )
    reject = bool(np.any(np.abs(center) > band.half_width))
    return TwoSampleResult(band=band, reject=reject)


def prediction_band(
    sample: FunctionalSample,
    eval: EvalGrid,
    h,
    kernel: Kernel | None = None,
    gamma: float = 0.05,
    paths: int | None = None,
    seed: int = 0,
    shrinkage: ShrinkageSpec = ShrinkageSpec(),
    threads: int = 1,
) -> BandResult:
    """Band intended to contain a new curve: mu_hat +/- c sigma_hat (no sqrt(n))."""
    mean_fit = fit_mean(sample, eval, h, kernel)
    sigma, corr, lam = _sigma_and_correlation(mean_fit, shrinkage)
    n_paths = paths if paths is not None else default_path_count(sample.n_points)
    res = sup_quantile(SupQuantileRequest(corr, gamma, n_paths, seed, threads))
    return BandResult(
        grid=eval,
        center=mean_fit.mean,
        half_width=res.threshold * sigma,
        threshold=res.threshold,
        level=1.0 - gamma,
        method="prediction",
        details=_provenance(h, kernel, seed, paths=n_paths, shrinkage_lambda=lam,
                            clipped_mass=res.clipped_mass),
    )


def split_half_bandwidth(
    sample: FunctionalSample,
    candidates: Sequence,
    gamma: float = 0.05,
    kernel: Kernel | None = None,
    paths: int | None = None,
    seed: int = 0,
    shrinkage: ShrinkageSpec = ShrinkageSpec(),
):
    """Split the training curves in half, build a prediction band on the first
    half per candidate bandwidth, and return the candidate whose coverage of
    the second half is closest to the target level (ties to the smaller h)."""
    n = sample.n_curves
    if n < 4:
        raise FuncbandError("split-half selection needs n >= 4 curves")
    cands = sorted((Bandwidth.of(c, sample.grid.dim) for c in candidates),
                   key=lambda b: b.values)
    if not cands:
        raise FuncbandError("empty candidate bandwidth list")
    half = n // 2
    build = FunctionalSample(grid=sample.grid, values=sample.values[:half])
    holdout = sample.values[half:]
    grid = sample.grid
    eval = EvalGrid(dim=grid.dim, points=grid.points, axes=grid.axes)
    best = None
    best_gap = None
    coverages = {}
    for b in cands:
        try:
            band = prediction_band(build, eval, b, kernel, gamma, paths, seed, shrinkage)
        except FuncbandError:
            continue
        cov = float(np.mean([band.covers(row) for row in holdout]))
        coverages[b.values] = cov
        gap = abs(cov - (1.0 - gamma))
        if best is None or gap < best_gap:
            best, best_gap = b, gap
    if best is None:
        raise FuncbandError("no candidate bandwidth was usable")
    return best, coverages
