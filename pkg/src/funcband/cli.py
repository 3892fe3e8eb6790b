"""Command-line interface.

Subcommands: scb | gof | compare | predict | simulate.  All stochastic
subcommands require an explicit --seed and are pure functions of their
inputs, flags, and seed.  Exit codes: 0 ok, 2 parse/config error,
3 degenerate statistics, 4 ill-posed bandwidth.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bands import bootstrap_scb, normal_scb, prediction_band, split_half_bandwidth, two_sample_scb
from .errors import (
    DegenerateVarianceError,
    FuncbandError,
    IllPosedBandwidthError,
    RankDeficiencyError,
    SampleValidationError,
    SingularDesignError,
)
from .gof import basis_model, polynomial_basis, scb_gof_test
from .grids import EvalGrid, make_eval_grid, read_curves_csv
from .moments import ShrinkageSpec
from .plrt import plrt_test
from .simlab import METHODS, ExperimentTable, ModelSpec, run_experiment
from .smoothing import cv_bandwidth, kernel_by_name

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_ILL_POSED = 4

_DEFAULT_CANDIDATE_STEPS = (2, 3, 4, 6, 8, 12, 16, 24, 32)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funcband")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, level_flag="--level", level_default=0.95):
        p.add_argument("--in", dest="infile", required=True, help="wide curves CSV")
        p.add_argument("--out", help="output path prefix (writes PREFIX.csv and PREFIX.json)")
        p.add_argument(level_flag, dest="level", type=float, default=level_default)
        p.add_argument("--h", default="cv", help="bandwidth: a number, 'cv', or 'split'")
        p.add_argument("--h-candidates", help="comma-separated candidate bandwidths")
        p.add_argument("--kernel", default="epanechnikov",
                       choices=["epanechnikov", "gauss"])
        p.add_argument("--grid-size", type=int, default=100)
        p.add_argument("--paths", type=int, help="Gaussian sample paths (default by p)")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--config", help="JSON config file overriding flags")

    p_scb = sub.add_parser("scb", help="simultaneous confidence band for the mean curve")
    common(p_scb)
    p_scb.add_argument("--method", choices=["normal", "bootstrap"], default="normal")
    p_scb.add_argument("--B", dest="bootstraps", type=int, default=2500)

    p_gof = sub.add_parser("gof", help="sup-norm goodness-of-fit test")
    common(p_gof, level_flag="--alpha", level_default=0.05)
    p_gof.add_argument("--basis", default="poly:1",
                       help="'poly:K' or 'tab:FILE' (wide CSV of basis values)")
    p_gof.add_argument("--also-plrt", action="store_true",
                       help="also run the pseudo-likelihood ratio benchmark")

    p_cmp = sub.add_parser("compare", help="two-sample mean curve comparison")
    common(p_cmp, level_flag="--alpha", level_default=0.05)
    p_cmp.add_argument("--in2", help="second curves CSV")
    p_cmp.add_argument("--label-column", action="store_true",
                       help="first field of each row is a class label")
    p_cmp.add_argument("--labels", help="comma-separated pair of labels to compare")

    p_pred = sub.add_parser("predict", help="prediction band for new curves")
    common(p_pred)
    p_pred.add_argument("--test", help="held-out curves CSV to score coverage on")

    p_sim = sub.add_parser("simulate", help="replicated coverage/size/power experiment")
    p_sim.add_argument("--model", required=True, choices=["1", "2", "3"])
    p_sim.add_argument("--hypothesis", choices=["h0", "hn"], default="h0")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--h", type=float, required=True)
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--method", default="normal-scb",
                       help="comma-separated subset of: " + ",".join(METHODS))
    p_sim.add_argument("--level", type=float, default=0.05,
                       help="gamma for bands / alpha for tests")
    p_sim.add_argument("--kernel", default="epanechnikov",
                       choices=["epanechnikov", "gauss"])
    p_sim.add_argument("--grid-size", type=int, default=100)
    p_sim.add_argument("--paths", type=int)
    p_sim.add_argument("--B", dest="bootstraps", type=int, default=2500)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--out", help="output path prefix")
    p_sim.add_argument("--format", choices=["csv", "json"], default="csv")
    p_sim.add_argument("--config", help="JSON config file overriding flags")
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_PARSE) from None
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise CliError(f"unknown config key {key!r}", EXIT_PARSE)
        setattr(args, dest, value)


def _load_sample(path, label_column=False):
    try:
        return read_curves_csv(path, label_column=label_column)
    except (OSError, SampleValidationError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_PARSE) from None


def _candidates(args, sample):
    if getattr(args, "h_candidates", None):
        return [float(v) for v in args.h_candidates.split(",")]
    p = sample.n_points
    return [k / p for k in _DEFAULT_CANDIDATE_STEPS if k / p <= 0.5] or [2.0 / p]


def _resolve_h(args, sample, kernel):
    h = args.h
    if isinstance(h, (int, float)):
        return float(h)
    if h == "cv":
        best, _ = cv_bandwidth(sample, _candidates(args, sample), kernel)
        return best.values[0]
    if h == "split":
        best, _ = split_half_bandwidth(
            sample, _candidates(args, sample), gamma=1.0 - args.level,
            kernel=kernel, paths=args.paths, seed=args.seed)
        return best.values[0]
    try:
        return float(h)
    except ValueError:
        raise CliError(f"bad --h value {h!r}", EXIT_PARSE) from None


def _write_band(args, band, extra=None):
    payload = band.to_dict()
    if extra:
        payload.update(extra)
    if args.out:
        band.write_csv(args.out + ".csv")
        with open(args.out + ".json", "w") as fh:
            json.dump(payload, fh)


def _band_summary(tag, sample, h, band):
    return (f"{tag}  n={sample.n_curves} p={sample.n_points} h={h:.6g} "
            f"level={band.level:g} c={band.threshold:.4f} "
            f"half_width=[{band.half_width.min():.4g}, {band.half_width.max():.4g}]")


def _run_scb(args) -> int:
    sample = _load_sample(args.infile)
    kernel = kernel_by_name(args.kernel)
    h = _resolve_h(args, sample, kernel)
    eval = make_eval_grid(args.grid_size)
    gamma = 1.0 - args.level
    if args.method == "bootstrap":
        band = bootstrap_scb(sample, eval, h, kernel, gamma, args.bootstraps,
                             args.seed, args.threads)
    else:
        band = normal_scb(sample, eval, h, kernel, gamma, args.paths, args.seed,
                          ShrinkageSpec(), args.threads)
    _write_band(args, band)
    print(_band_summary(f"scb[{args.method}]", sample, h, band))
    return EXIT_OK


def _parse_basis(spec: str):
    if spec.startswith("poly:"):
        try:
            degree = int(spec.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad basis spec {spec!r}", EXIT_PARSE) from None
        return polynomial_basis(degree)
    if spec.startswith("tab:"):
        path = spec.split(":", 1)[1]
        try:
            tab = read_curves_csv(path)
        except (SampleValidationError, OSError) as exc:
            raise CliError(f"cannot read basis table: {exc}", EXIT_PARSE) from None
        xs = tab.grid.points

        def make(row):
            return lambda x: np.interp(np.asarray(x, dtype=float), xs, row)

        return basis_model([make(row) for row in tab.values])
    raise CliError(f"bad basis spec {spec!r} (use poly:K or tab:FILE)", EXIT_PARSE)


def _run_gof(args) -> int:
    sample = _load_sample(args.infile)
    kernel = kernel_by_name(args.kernel)
    basis = _parse_basis(args.basis)
    h = _resolve_h(args, sample, kernel)
    eval = make_eval_grid(args.grid_size)
    report = scb_gof_test(sample, basis, eval, h, kernel, args.level, args.paths,
                          args.seed, ShrinkageSpec(), args.threads)
    if args.out:
        with open(args.out + ".json", "w") as fh:
            fh.write(report.to_json())
        report.band.write_csv(args.out + ".csv")
    print(f"gof  T={report.statistic:.4f} c_alpha={report.threshold:.4f} "
          f"alpha={report.alpha:g} reject={report.reject}")
    if args.also_plrt:
        plrt = plrt_test(sample, basis, h, kernel, "nonparametric")
        if args.out:
            with open(args.out + ".plrt.json", "w") as fh:
                fh.write(plrt.to_json())
        print(f"plrt F={plrt.statistic:.4f} p={plrt.pvalue:.4g} "
              f"reject={plrt.pvalue < args.level}")
    return EXIT_OK


def _run_compare(args) -> int:
    if args.label_column:
        samples = _load_sample(args.infile, label_column=True)
        labels = (args.labels.split(",") if args.labels else list(samples)[:2])
        if len(labels) != 2 or any(l not in samples for l in labels):
            raise CliError("need two valid labels to compare", EXIT_PARSE)
        sample_a, sample_b = samples[labels[0]], samples[labels[1]]
    else:
        if not args.in2:
            raise CliError("compare needs --in2 or --label-column", EXIT_PARSE)
        sample_a = _load_sample(args.infile)
        sample_b = _load_sample(args.in2)
    kernel = kernel_by_name(args.kernel)
    h_a = _resolve_h(args, sample_a, kernel)
    h_b = _resolve_h(args, sample_b, kernel)
    eval = make_eval_grid(args.grid_size)
    result = two_sample_scb(sample_a, sample_b, eval, h_a, h_b, kernel, args.level,
                            args.paths, args.seed, ShrinkageSpec(), args.threads)
    _write_band(args, result.band, {"reject": result.reject})
    print(f"compare  c={result.band.threshold:.4f} alpha={args.level:g} "
          f"reject={result.reject}")
    return EXIT_OK


def _run_predict(args) -> int:
    sample = _load_sample(args.infile)
    kernel = kernel_by_name(args.kernel)
    h = _resolve_h(args, sample, kernel)
    eval = make_eval_grid(args.grid_size)
    gamma = 1.0 - args.level
    band = prediction_band(sample, eval, h, kernel, gamma, args.paths, args.seed,
                           ShrinkageSpec(), args.threads)
    extra = {}
    if args.test:
        test = _load_sample(args.test)
        # score raw test curves against the band evaluated at the design points
        design_eval = EvalGrid(dim=test.grid.dim, points=test.grid.points,
                               axes=test.grid.axes)
        design_band = prediction_band(sample, design_eval, h, kernel, gamma,
                                      args.paths, args.seed, ShrinkageSpec(), args.threads)
        cov = float(np.mean([design_band.covers(row) for row in test.values]))
        extra["test_coverage"] = cov
    _write_band(args, band, extra)
    msg = _band_summary("predict", sample, h, band)
    if "test_coverage" in extra:
        msg += f" test_coverage={extra['test_coverage']:.4f}"
    print(msg)
    return EXIT_OK


def _run_simulate(args) -> int:
    model = {"1": "m1", "2": "m2"}.get(args.model)
    if model is None:
        model = "m3-" + args.hypothesis
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise CliError(f"unknown method {m!r}", EXIT_PARSE)
    spec = ModelSpec(model=model, n=args.n, p=args.p, h=args.h, kernel=args.kernel,
                     level=args.level, reps=args.reps, seed=args.seed,
                     grid_size=args.grid_size, paths=args.paths,
                     bootstraps=args.bootstraps)
    table = ExperimentTable()
    for m in methods:
        table.rows.append(run_experiment(spec, m, args.threads))
    if args.out:
        with open(args.out + ".csv", "w", newline="") as fh:
            fh.write(table.to_csv())
        with open(args.out + ".json", "w") as fh:
            fh.write(table.to_json())
    print(table.to_csv() if args.format == "csv" else table.to_json(), end="")
    return EXIT_OK


_RUNNERS = {
    "scb": _run_scb,
    "gof": _run_gof,
    "compare": _run_compare,
    "predict": _run_predict,
    "simulate": _run_simulate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        _apply_config(args)
        return _RUNNERS[args.command](args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except DegenerateVarianceError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IllPosedBandwidthError, SingularDesignError) as exc:
        print(f"ill-posed bandwidth: {exc}", file=sys.stderr)
        return EXIT_ILL_POSED
    except (SampleValidationError, RankDeficiencyError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    except FuncbandError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
