"""Command-line front end: fit, simulate and calibrate subcommands.

Reports are JSON documents embedding the fully resolved configuration and
seed, so any run can be reproduced from its own output.  Plot-ready data
(grid, true function, one example estimate) is written as tab-delimited
text next to the simulation report.

Exit codes: 0 on success, 2 for input or validation errors, 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FitError,
    NumericError,
    RankError,
    WavegplmError,
)
from .estimator import Dataset, FitConfig, PenaltyConfig, backfit, criterion_value
from .families import make_family
from .simulate import SimulationConfig, calibrate_threshold, calibration_regression, run_monte_carlo
from .wavelet import SUPPORTED_FILTERS

_VALIDATION_EXIT = 2
_NUMERIC_EXIT = 3


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(document: dict, out: str | None):
    text = json.dumps(_jsonable(document), indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        with open(out, "w") as handle:
            handle.write(text + "\n")


def _add_family_flags(parser):
    parser.add_argument("--family", choices=("gaussian", "binomial", "poisson"),
                        default="gaussian")
    parser.add_argument("--m", type=int, default=None,
                        help="binomial class count (dispersion 1/m)")
    parser.add_argument("--phi", type=float, default=None,
                        help="gaussian dispersion (noise variance)")


def _add_fit_flags(parser):
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="fixed threshold level")
    parser.add_argument("--lambda-policy", choices=("universal", "fixed"),
                        default=None,
                        help="universal selects the per-family formula "
                             "(default unless --lambda is given)")
    parser.add_argument("--penalty", choices=("l1", "sobolev"), default="l1")
    parser.add_argument("--sobolev-s", type=float, default=1.0)
    parser.add_argument("--filter", dest="filter_name", choices=SUPPORTED_FILTERS,
                        default="symmlet-8")
    parser.add_argument("--coarse-level", type=int, default=None)
    parser.add_argument("--kappa", type=int, default=5000)
    parser.add_argument("--delta", type=float, default=1e-20)
    parser.add_argument("--j1", type=int, default=1)
    parser.add_argument("--j2", type=int, default=1)


def _fit_config(args) -> FitConfig:
    lam = args.lam
    if args.lambda_policy == "universal":
        if lam is not None:
            raise ConfigurationError("--lambda conflicts with --lambda-policy universal")
    elif args.lambda_policy == "fixed" and lam is None:
        raise ConfigurationError("--lambda-policy fixed requires --lambda")
    penalty = PenaltyConfig(kind=args.penalty, lam=lam, sobolev_s=args.sobolev_s,
                            coarse_level=args.coarse_level)
    return FitConfig(kappa=args.kappa, delta=args.delta, j1=args.j1, j2=args.j2,
                     filter_name=args.filter_name, penalty=penalty)


def _family(args):
    return make_family(args.family, m=args.m, phi=args.phi)


def read_dataset(path: str) -> Dataset:
    """Delimited text with a header line 'y,x1,...,xp' (comma or whitespace)."""
    try:
        with open(path) as handle:
            lines = [ln.strip() for ln in handle if ln.strip()]
    except OSError as exc:
        raise ConfigurationError(f"cannot read dataset file {path!r}: {exc}") from exc
    if not lines:
        raise ConfigurationError(f"dataset file {path!r} is empty")
    delim = "," if "," in lines[0] else None
    header = [c.strip() for c in lines[0].split(delim)]
    if header[0] != "y":
        raise ConfigurationError(
            f"dataset file {path!r}: first column must be 'y', got {header[0]!r}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(delim)
        if len(cells) != len(header):
            raise ConfigurationError(
                f"dataset file {path!r}, line {lineno}: "
                f"expected {len(header)} columns, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ConfigurationError(
                f"dataset file {path!r}, line {lineno}: {exc}"
            ) from exc
    data = np.array(rows)
    return Dataset(y=data[:, 0], X=data[:, 1:])


def cmd_fit(args) -> int:
    data = read_dataset(args.input)
    family = _family(args)
    config = _fit_config(args)
    fit = backfit(data, family, config)
    _write_json({
        "command": "fit",
        "input": args.input,
        "family": {"kind": args.family, "m": args.m, "phi": family.phi},
        "fit_config": config,
        "beta": fit.beta,
        "f_hat": fit.f_hat,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "lambda": fit.lam,
        "final_loglik": fit.final_loglik,
        "criterion": criterion_value(data, family, fit.beta, fit.f_hat, config),
    }, args.out)
    return 0


def _sim_config(args) -> SimulationConfig:
    return SimulationConfig(
        family_kind=args.family,
        m=args.m,
        phi=args.phi,
        function=args.function,
        n=args.n,
        p=args.p,
        beta0=args.beta0,
        target_snr_f=args.snr_f,
        target_snr_beta=args.snr_beta,
        replications=args.reps,
        seed=args.seed,
        fit=_fit_config(args),
    )


def _report_document(report) -> dict:
    # wall time is deliberately left out: reports must be byte-reproducible
    return {
        "config": report.config,
        "snr_f": report.snr_f,
        "snr_beta": report.snr_beta,
        "betas": report.betas,
        "rmises": report.rmises,
        "iteration_counts": report.iteration_counts,
        "failures": report.failures,
        "mean_beta": report.mean_beta,
        "sd_beta": report.sd_beta,
        "mean_rmise": report.mean_rmise,
        "mean_iterations": report.mean_iterations,
    }


def _write_plot_data(report, path: str):
    n = report.config.n
    t = np.arange(1, n + 1) / n
    with open(path, "w") as handle:
        handle.write("t\tf0\tf_hat\n")
        for ti, f0i, fhi in zip(t, report.f0, report.example_f_hat):
            handle.write(f"{float(ti)!r}\t{float(f0i)!r}\t{float(fhi)!r}\n")


def cmd_simulate(args) -> int:
    report = run_monte_carlo(_sim_config(args))
    document = {"command": "simulate", **_report_document(report)}
    _write_json(document, args.out)
    if args.out is not None:
        _write_plot_data(report, args.out + ".plot.tsv")
    print(f"wall time: {report.wall_time_s:.2f} s", file=sys.stderr)
    return 0


def _parse_grid(spec: str) -> np.ndarray:
    try:
        if spec.startswith("lin:"):
            start, stop, count = spec.split(":")[1:]
            return np.linspace(float(start), float(stop), int(count))
        return np.array([float(v) for v in spec.split(",")])
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse grid {spec!r}: {exc}") from exc


def cmd_calibrate(args) -> int:
    import math

    config = _sim_config(args)
    document: dict = {"command": "calibrate", "config": config}
    if args.sweep_m:
        ms = [int(v) for v in args.sweep_m.split(",")]
        ratios = _parse_grid(args.ratio_grid)
        scales, stars, curves = [], [], []
        for m in ms:
            cfg = dataclasses.replace(config, family_kind="binomial", m=m, phi=None)
            scale = math.sqrt(math.log(cfg.n) / m)
            curve = calibrate_threshold(cfg, ratios * scale)
            scales.append(scale)
            stars.append(curve.argmin_lambda)
            curves.append({"m": m, "lambdas": curve.lambdas,
                           "mean_rmise": curve.mean_rmise,
                           "argmin_lambda": curve.argmin_lambda})
        c, r2 = calibration_regression(scales, stars)
        document.update({"sweep": "m", "points": curves, "slope_c": c, "r_squared": r2})
    elif args.sweep_n:
        ns = [int(v) for v in args.sweep_n.split(",")]
        ratios = _parse_grid(args.ratio_grid)
        family = config.family()
        scales, stars, curves = [], [], []
        for n in ns:
            cfg = dataclasses.replace(config, n=n)
            scale = math.sqrt(family.phi * math.log(n))
            curve = calibrate_threshold(cfg, ratios * scale)
            scales.append(scale)
            stars.append(curve.argmin_lambda)
            curves.append({"n": n, "lambdas": curve.lambdas,
                           "mean_rmise": curve.mean_rmise,
                           "argmin_lambda": curve.argmin_lambda})
        c, r2 = calibration_regression(scales, stars)
        document.update({"sweep": "n", "points": curves, "slope_c": c, "r_squared": r2})
    else:
        if args.lambda_grid is None:
            raise ConfigurationError("calibrate needs --lambda-grid, --sweep-m or --sweep-n")
        curve = calibrate_threshold(config, _parse_grid(args.lambda_grid))
        document.update({"lambdas": curve.lambdas, "mean_rmise": curve.mean_rmise,
                         "argmin_lambda": curve.argmin_lambda})
    _write_json(document, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavegplm",
        description="Penalized-likelihood GPLM estimation with wavelet shrinkage",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    fit = sub.add_parser("fit", help="fit a GPLM to a dataset file")
    fit.add_argument("input", help="dataset file: header 'y,x1,...,xp'")
    _add_family_flags(fit)
    _add_fit_flags(fit)
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="run a seeded Monte Carlo experiment")
    _add_family_flags(sim)
    _add_fit_flags(sim)
    sim.add_argument("--function", choices=("sinus", "blocs", "pics"), default="sinus")
    sim.add_argument("--n", type=int, default=256)
    sim.add_argument("--p", type=int, default=1)
    sim.add_argument("--beta0", type=float, default=1.0)
    sim.add_argument("--snr-f", type=float, default=9.0)
    sim.add_argument("--snr-beta", type=float, default=None)
    sim.add_argument("--reps", type=int, default=500)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    cal = sub.add_parser("calibrate", help="sweep threshold levels")
    _add_family_flags(cal)
    _add_fit_flags(cal)
    cal.add_argument("--function", choices=("sinus", "blocs", "pics"), default="sinus")
    cal.add_argument("--n", type=int, default=256)
    cal.add_argument("--p", type=int, default=1)
    cal.add_argument("--beta0", type=float, default=1.0)
    cal.add_argument("--snr-f", type=float, default=9.0)
    cal.add_argument("--snr-beta", type=float, default=None)
    cal.add_argument("--reps", type=int, default=100)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--lambda-grid", default=None,
                     help="comma list or lin:start:stop:count")
    cal.add_argument("--sweep-m", default=None,
                     help="comma list of binomial m values; fits slope c and R^2")
    cal.add_argument("--sweep-n", default=None,
                     help="comma list of sample sizes; fits slope c and R^2")
    cal.add_argument("--ratio-grid", default="lin:0.1:1.5:15",
                     help="grid of ratios of sqrt(phi log n) used by sweeps")
    cal.add_argument("--out", default=None)
    cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _VALIDATION_EXIT if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigurationError, DimensionError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _VALIDATION_EXIT
    except (FitError, NumericError, RankError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT
    except WavegplmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
