"""Synthetic data generators and the replication engine for coverage,
size, and power studies.

Three generators are provided: a smooth polynomial trend with Gaussian
exponentially-correlated curves (m1), an adverse rapidly-varying trend with
strongly non-Gaussian curves plus white noise (m2), and a linear trend with
an optional scaled local bump for power studies (m3).
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from functools import lru_cache
from math import log, sqrt

import numpy as np

from .bands import band_covers, bootstrap_scb, normal_scb
from .errors import FuncbandError
from .gof import polynomial_basis, scb_gof_test
from .grids import EvalGrid, FunctionalSample, make_eval_grid, uniform_design_grid
from .moments import CorrelationField, ShrinkageSpec
from .plrt import plrt_test
from .smoothing import kernel_by_name, weight_matrix
from .supnorm import SupQuantileRequest, default_path_count, sup_quantile

__all__ = [
    "ModelSpec",
    "ExperimentRow",
    "ExperimentTable",
    "gen_model1",
    "gen_model2",
    "gen_model3",
    "bump_function",
    "true_mean",
    "analytic_covariance",
    "run_experiment",
    "known_R_threshold",
    "METHODS",
]

METHODS = ("normal-scb", "bootstrap-scb", "gof-scb", "plrt-np", "plrt-ar1", "plrt-known")

_OU_RATE = 20.0 * log(0.9)  # exponent slope of the exponential correlation
_OU_SD = 0.25


def m1_mean(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 10.0 * x**3 - 15.0 * x**4 + 6.0 * x**5


def m2_mean(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sin(8.0 * np.pi * x) * np.exp(-3.0 * x)


def ou_covariance(x, xp) -> np.ndarray:
    return _OU_SD**2 * np.exp(_OU_RATE * np.abs(np.asarray(x) - np.asarray(xp)))


def m2_covariance(x, xp) -> np.ndarray:
    """Two-factor covariance: var(chi2_1) = 2 and var(Exp(1)) = 1."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    return (2.0 * (sqrt(2.0) / 6.0) ** 2 * np.sin(np.pi * x) * np.sin(np.pi * xp)
            + (2.0 / 3.0) ** 2 * (x - 0.5) * (xp - 0.5))


def _hump(x):
    x = np.asarray(x, dtype=float)
    return 0.2 * np.exp(-((x - 0.5) ** 2))


def _hump_d1(x):
    return -2.0 * (x - 0.5) * _hump(x)


def _hump_d2(x):
    return (-2.0 + 4.0 * (x - 0.5) ** 2) * _hump(x)


@lru_cache(maxsize=1)
def _connector_coefs():
    """Quintic two-point Hermite connectors joining 0 to the bump in C^2."""
    def hermite(x0, vals0, x1, vals1):
        rows = []
        rhs = []
        for x, vals in ((x0, vals0), (x1, vals1)):
            powers = np.arange(6, dtype=float)
            rows.append(x**powers)
            rhs.append(vals[0])
            rows.append(np.concatenate([[0.0], powers[1:] * x ** (powers[1:] - 1)]))
            rhs.append(vals[1])
            d2 = np.zeros(6)
            for k in range(2, 6):
                d2[k] = k * (k - 1) * x ** (k - 2)
            rows.append(d2)
            rhs.append(vals[2])
        return np.linalg.solve(np.array(rows), np.array(rhs))

    left = hermite(0.4, (0.0, 0.0, 0.0),
                   0.45, (float(_hump(0.45)), float(_hump_d1(0.45)), float(_hump_d2(0.45))))
    right = hermite(0.55, (float(_hump(0.55)), float(_hump_d1(0.55)), float(_hump_d2(0.55))),
                    0.6, (0.0, 0.0, 0.0))
    return left, right


def bump_function(x) -> np.ndarray:
    """The C^2 bump: zero outside [0.4, 0.6], Gaussian hump on (0.45, 0.55],
    quintic Hermite connectors in between."""
    x = np.asarray(x, dtype=float)
    left, right = _connector_coefs()
    out = np.zeros_like(x)
    powers = x[..., None] ** np.arange(6, dtype=float)
    mask = (x > 0.4) & (x <= 0.45)
    out[mask] = powers[mask] @ left
    mask = (x > 0.45) & (x <= 0.55)
    out[mask] = _hump(x[mask])
    mask = (x > 0.55) & (x < 0.6)
    out[mask] = powers[mask] @ right
    return out


def m3_mean(x, n: int, hypothesis: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if hypothesis == "h0":
        return x.copy()
    if hypothesis == "hn":
        return x + log(n) / sqrt(n) * bump_function(x)
    raise FuncbandError(f"unknown hypothesis {hypothesis!r}")


@lru_cache(maxsize=32)
def _ou_sqrt(p: int) -> np.ndarray:
    """Symmetric square root of the exponential covariance on the uniform
    design grid of size p (exact Gaussian draws, no time discretization)."""
    x = (np.arange(1, p + 1) - 0.5) / p
    r = ou_covariance(x[:, None], x[None, :])
    vals, vecs = np.linalg.eigh(r)
    vals = np.maximum(vals, 0.0)
    return (vecs * np.sqrt(vals)[None, :]) @ vecs.T


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_or_rng)))


def _ou_curves(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, p)) @ _ou_sqrt(p)


def gen_model1(n: int, p: int, seed_or_rng=0) -> FunctionalSample:
    """Polynomial trend plus Gaussian exponentially-correlated curves, no noise."""
    rng = _as_rng(seed_or_rng)
    grid = uniform_design_grid(p)
    values = m1_mean(grid.points)[None, :] + _ou_curves(n, p, rng)
    return FunctionalSample(grid=grid, values=values)


def gen_model2(n: int, p: int, seed_or_rng=0) -> FunctionalSample:
    """Oscillating trend, two-factor non-Gaussian curves, N(0, 0.1^2) noise."""
    rng = _as_rng(seed_or_rng)
    grid = uniform_design_grid(p)
    x = grid.points
    eta1 = rng.chisquare(1, size=n)
    eta2 = rng.exponential(1.0, size=n)
    z = (sqrt(2.0) / 6.0 * (eta1 - 1.0)[:, None] * np.sin(np.pi * x)[None, :]
         + 2.0 / 3.0 * (eta2 - 1.0)[:, None] * (x - 0.5)[None, :])
    noise = 0.1 * rng.standard_normal((n, p))
    values = m2_mean(x)[None, :] + z + noise
    return FunctionalSample(grid=grid, values=values)


def gen_model3(n: int, p: int, seed_or_rng=0, hypothesis: str = "h0") -> FunctionalSample:
    """Linear trend (optionally plus the scaled bump) with the same Gaussian
    curve process as model 1."""
    rng = _as_rng(seed_or_rng)
    grid = uniform_design_grid(p)
    values = m3_mean(grid.points, n, hypothesis)[None, :] + _ou_curves(n, p, rng)
    return FunctionalSample(grid=grid, values=values)


def true_mean(model: str, x: np.ndarray, n: int) -> np.ndarray:
    if model == "m1":
        return m1_mean(x)
    if model == "m2":
        return m2_mean(x)
    if model == "m3-h0":
        return m3_mean(x, n, "h0")
    if model == "m3-hn":
        return m3_mean(x, n, "hn")
    raise FuncbandError(f"unknown model {model!r}")


def analytic_covariance(model: str):
    """Closed-form covariance of the curve process (measurement noise excluded)."""
    if model in ("m1", "m3-h0", "m3-hn"):
        return ou_covariance
    if model == "m2":
        return m2_covariance
    raise FuncbandError(f"unknown model {model!r}")


def generate(model: str, n: int, p: int, seed_or_rng=0) -> FunctionalSample:
    if model == "m1":
        return gen_model1(n, p, seed_or_rng)
    if model == "m2":
        return gen_model2(n, p, seed_or_rng)
    if model == "m3-h0":
        return gen_model3(n, p, seed_or_rng, "h0")
    if model == "m3-hn":
        return gen_model3(n, p, seed_or_rng, "hn")
    raise FuncbandError(f"unknown model {model!r}")


@dataclass(frozen=True)
class ModelSpec:
    model: str              # m1 | m2 | m3-h0 | m3-hn
    n: int
    p: int
    h: float
    kernel: str = "epanechnikov"
    level: float = 0.05     # gamma for bands, alpha for tests
    reps: int = 2000
    seed: int = 0
    grid_size: int = 100
    paths: int | None = None
    bootstraps: int = 2500
    shrinkage: ShrinkageSpec = field(default_factory=ShrinkageSpec)

    def __post_init__(self):
        if self.model not in ("m1", "m2", "m3-h0", "m3-hn"):
            raise FuncbandError(f"unknown model {self.model!r}")
        if self.n < 2 or self.p < 2:
            raise FuncbandError("need n >= 2 and p >= 2")


@dataclass(frozen=True)
class ExperimentRow:
    model: str
    method: str
    n: int
    p: int
    h: float
    level: float
    reps: int
    seed: int
    rate: float             # coverage (bands) or rejection rate (tests)
    median_threshold: float
    stderr: float
    failures: int
    flagged: bool
    wall_time: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ExperimentTable:
    rows: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(ExperimentRow.__dataclass_fields__)
        writer = csv.DictWriter(buf, fieldnames=names)
        writer.writeheader()
        for r in self.rows:
            writer.writerow(r.to_dict())
        return buf.getvalue()


def _rep_rngs(seed: int, reps: int):
    for child in np.random.SeedSequence(seed).spawn(reps):
        data_ss, sup_ss = child.spawn(2)
        rng = np.random.Generator(np.random.Philox(data_ss))
        sup_seed = int(sup_ss.generate_state(1, np.uint64)[0])
        yield rng, sup_seed


def run_experiment(spec: ModelSpec, method: str, threads: int = 1) -> ExperimentRow:
    """Replication loop producing one coverage/size/power table row."""
    if method not in METHODS:
        raise FuncbandError(f"unknown method {method!r}")
    kern = kernel_by_name(spec.kernel)
    eval = make_eval_grid(spec.grid_size)
    paths = spec.paths if spec.paths is not None else default_path_count(spec.p)
    start = time.perf_counter()
    hits = 0
    failures = 0
    thresholds = []
    done = 0
    if method == "gof-scb" or method.startswith("plrt"):
        basis = polynomial_basis(1)
    if method == "plrt-known":
        x_design = (np.arange(1, spec.p + 1) - 0.5) / spec.p
        known_sigma = analytic_covariance(spec.model)(x_design[:, None], x_design[None, :])

    for rng, sup_seed in _rep_rngs(spec.seed, spec.reps):
        sample = generate(spec.model, spec.n, spec.p, rng)
        try:
            if method == "normal-scb":
                band = normal_scb(sample, eval, spec.h, kern, spec.level, paths,
                                  sup_seed, spec.shrinkage, threads)
                truth = true_mean(spec.model, eval.points, spec.n)
                hits += band_covers(band, truth)
                thresholds.append(band.threshold)
            elif method == "bootstrap-scb":
                band = bootstrap_scb(sample, eval, spec.h, kern, spec.level,
                                     spec.bootstraps, sup_seed, threads)
                truth = true_mean(spec.model, eval.points, spec.n)
                hits += band_covers(band, truth)
                thresholds.append(band.threshold)
            elif method == "gof-scb":
                report = scb_gof_test(sample, basis, eval, spec.h, kern, spec.level,
                                      paths, sup_seed, spec.shrinkage, threads)
                hits += report.reject
                thresholds.append(report.threshold)
            else:
                mode = {"plrt-np": "nonparametric", "plrt-ar1": "parametric-ar1",
                        "plrt-known": "known"}[method]
                known = known_sigma if method == "plrt-known" else None
                report = plrt_test(sample, basis, spec.h, kern, mode, known)
                hits += report.pvalue < spec.level
                thresholds.append(float("nan"))
            done += 1
        except FuncbandError:
            failures += 1
    wall = time.perf_counter() - start
    if done == 0:
        rate, med, se = float("nan"), float("nan"), float("nan")
    else:
        rate = hits / done
        finite = [t for t in thresholds if np.isfinite(t)]
        med = float(np.median(finite)) if finite else float("nan")
        se = sqrt(rate * (1.0 - rate) / done)
    flagged = spec.reps > 0 and failures > 0.01 * spec.reps
    return ExperimentRow(
        model=spec.model, method=method, n=spec.n, p=spec.p, h=spec.h,
        level=spec.level, reps=spec.reps, seed=spec.seed, rate=rate,
        median_threshold=med, stderr=se, failures=failures, flagged=flagged,
        wall_time=wall,
    )


def known_R_threshold(
    model: str, grid_size: int = 100, gamma: float = 0.05,
    paths: int = 50000, seed: int = 0, threads: int = 1,
    p: int | None = None, h: float | None = None, kernel=None,
) -> float:
    """Sup-norm threshold from the model's closed-form covariance.

    Without smoothing arguments the correlation of the raw process is used.
    When ``p`` and ``h`` are given the threshold is calibrated to the local
    linear estimator itself: the covariance is pushed through the smoother,
    W R W', before taking its correlation, which is what the estimator's
    Gaussian limit on a finite design actually exhibits.
    """
    eval = make_eval_grid(grid_size)
    cov_fn = analytic_covariance(model)
    if (p is None) != (h is None):
        raise FuncbandError("p and h must be given together")
    if p is not None:
        design = uniform_design_grid(p)
        xd = design.points
        w = weight_matrix(design, eval, h, kernel)
        r = w @ cov_fn(xd[:, None], xd[None, :]) @ w.T
        r = 0.5 * (r + r.T)
    else:
        x = eval.points
        r = cov_fn(x[:, None], x[None, :])
    sd = np.sqrt(np.diag(r))
    corr = CorrelationField(grid=eval, table=r / np.outer(sd, sd))
    res = sup_quantile(SupQuantileRequest(corr, gamma, paths, seed, threads))
    return res.threshold
