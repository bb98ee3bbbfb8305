"""Main CLI for funcreg workflows."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.linalg import LinAlgError

from funcreg.config import FuncregConfig, get_config
from funcreg.core.base import EstimatorName, FittedEstimator
from funcreg.core.curve import CurveSet, require_same_grid
from funcreg.core.errors import InputError, NumericalError
from funcreg.estimators.bspline import BsplineBasis
from funcreg.estimators.linear import LinearProblem, linear_validation_select
from funcreg.estimators.nw import NwModel, bandwidth_factors, bandwidth_grid, nw_bandwidth_scan
from funcreg.estimators.rkhs import (
    KroneckerSystem,
    PenaltyVariant,
    ValidationCurve,
    check_lambda,
    gcv_select,
    lambda_grid,
    validation_select,
)
from funcreg.io import (
    load_model,
    read_curve_table,
    read_curves,
    save_model,
    write_curves,
    write_report,
)
from funcreg.sim import BenchmarkReport, SimConfig, SimModel, run_benchmark
from funcreg.targets import CsvTarget, DuckDBTarget
from funcreg.weather import LooConfig, LooEstimator, leave_one_out, load_weather, write_loo

logger = logging.getLogger(__name__)

EXIT_INPUT = 2
EXIT_NUMERICAL = 3

FIT_ESTIMATORS = ("rkhs", "rkhs-mod", "nw", "linear")


def _add_lambda_range(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-min", type=float, help="Smallest lambda of the search grid")
    parser.add_argument("--lambda-max", type=float, help="Largest lambda of the search grid")
    parser.add_argument("--lambda-count", type=int, help="Log-spaced points in the grid")


def _add_bandwidths(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sigma", type=float, help="Covariate kernel bandwidth")
    parser.add_argument("--sigma-prime", type=float, help="Grid kernel bandwidth")


def _build_parser() -> argparse.ArgumentParser:
    """Create CLI parser with subcommands."""
    parser = argparse.ArgumentParser(prog="funcreg", description="Curve-on-curve regression")
    parser.add_argument(
        "--log-level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Logging level (default FUNCREG_LOG_LEVEL)",
    )
    parser.add_argument("--threads", type=int, help="Worker cap; 0 = all cores")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=None,
        help="Omit timestamp comment lines from reports",
    )

    subparsers = parser.add_subparsers(dest="command")

    fit_parser = subparsers.add_parser("fit", help="Fit an estimator and save the model")
    fit_parser.add_argument("--x", required=True, help="Covariate curve CSV")
    fit_parser.add_argument("--y", required=True, help="Response curve CSV")
    fit_parser.add_argument("--estimator", choices=FIT_ESTIMATORS, default="rkhs")
    fit_parser.add_argument("--lambda", dest="lam", type=float, help="Smoothing parameter")
    fit_parser.add_argument("--gcv", action="store_true", help="Select lambda by GCV")
    fit_parser.add_argument("--bandwidth", type=float, help="N-W bandwidth")
    fit_parser.add_argument("--valid-x", help="Validation covariates for parameter search")
    fit_parser.add_argument("--valid-y", help="Validation responses for parameter search")
    _add_bandwidths(fit_parser)
    _add_lambda_range(fit_parser)
    fit_parser.add_argument("--model-out", required=True, help="Model JSON path")
    fit_parser.add_argument("--report", help="Fit report CSV (default <model>.report.csv)")

    predict_parser = subparsers.add_parser("predict", help="Predict with a saved model")
    predict_parser.add_argument("--model", required=True, help="Model JSON path")
    predict_parser.add_argument("--x", required=True, help="Covariate curve CSV")
    predict_parser.add_argument("--out", required=True, help="Prediction curve CSV")

    sim_parser = subparsers.add_parser("simulate", help="Run the simulation benchmark")
    sim_parser.add_argument("--model", choices=("a", "b", "c", "d", "all"), default="all")
    sim_parser.add_argument("--reps", type=int, default=50)
    sim_parser.add_argument("--seed", type=int, default=0)
    sim_parser.add_argument("--grid-size", type=int, default=50)
    sim_parser.add_argument("--n-train", type=int, default=30)
    sim_parser.add_argument("--n-valid", type=int, default=50)
    sim_parser.add_argument("--n-test", type=int, default=50)
    sim_parser.add_argument("--noise-sd", type=float, default=1.0)
    sim_parser.add_argument("--out", default="benchmark_report.csv", help="Report CSV path")
    sim_parser.add_argument("--detail", help="Per-replicate detail CSV path")
    sim_parser.add_argument("--results-db", help="DuckDB file recording replicates")

    gcv_parser = subparsers.add_parser("gcv-scan", help="Evaluate GCV over a lambda grid")
    gcv_parser.add_argument("--x", required=True, help="Covariate curve CSV")
    gcv_parser.add_argument("--y", required=True, help="Response curve CSV")
    gcv_parser.add_argument("--valid-x", help="Validation covariates")
    gcv_parser.add_argument("--valid-y", help="Validation responses")
    gcv_parser.add_argument(
        "--variant", choices=[str(v) for v in PenaltyVariant], default="standard"
    )
    _add_bandwidths(gcv_parser)
    _add_lambda_range(gcv_parser)
    gcv_parser.add_argument("--out", default="gcv.csv", help="Scan CSV path")

    loo_parser = subparsers.add_parser("weather-loo", help="Leave-one-out weather prediction")
    loo_parser.add_argument("--temp", required=True, help="Daily temperature CSV")
    loo_parser.add_argument("--precip", required=True, help="Daily precipitation CSV")
    loo_parser.add_argument("--precip-offset", type=float, help="Value used for 0 mm days")
    loo_parser.add_argument(
        "--estimator", choices=[str(e) for e in LooEstimator], default="rkhs"
    )
    _add_bandwidths(loo_parser)
    _add_lambda_range(loo_parser)
    loo_parser.add_argument("--out", default="loo_out", help="Output directory")

    return parser


def _lambdas(config: FuncregConfig, args: argparse.Namespace) -> tuple[float, ...]:
    return lambda_grid(
        config.lambda_min if args.lambda_min is None else args.lambda_min,
        config.lambda_max if args.lambda_max is None else args.lambda_max,
        config.lambda_count if args.lambda_count is None else args.lambda_count,
    )


def _validation_pair(args: argparse.Namespace) -> tuple[CurveSet, CurveSet] | None:
    if (args.valid_x is None) != (args.valid_y is None):
        raise InputError("--valid-x and --valid-y must be given together")
    if args.valid_x is None:
        return None
    return read_curves(args.valid_x), read_curves(args.valid_y)


def _fit_rkhs(
    args: argparse.Namespace,
    config: FuncregConfig,
    xs: CurveSet,
    ys: CurveSet,
    report_path: Path,
) -> tuple[FittedEstimator, float]:
    variant = PenaltyVariant.MODIFIED if args.estimator == "rkhs-mod" else PenaltyVariant.STANDARD
    if (args.lam is None) == (not args.gcv):
        raise InputError(f"--estimator {args.estimator} needs exactly one of --lambda or --gcv")
    lam = None if args.lam is None else check_lambda(args.lam)
    system = KroneckerSystem.build(xs, args.sigma, args.sigma_prime)
    if args.gcv:
        curve = gcv_select(
            xs, ys, system.sigma, system.sigma_prime, _lambdas(config, args), variant
        )
        lam = curve.selected
        gcv_path = report_path.with_name(report_path.stem.removesuffix(".report") + ".gcv.csv")
        write_report(gcv_path, curve.to_frame("gcv"), [_count_comment(xs)])
        print(f"  gcv curve: {gcv_path}")
    return system.fit(ys, lam, variant), lam


def _fit_linear(
    args: argparse.Namespace, config: FuncregConfig, xs: CurveSet, ys: CurveSet
) -> tuple[FittedEstimator, float]:
    basis = BsplineBasis.equispaced(config.bspline_breakpoints, config.bspline_order)
    problem = LinearProblem(xs, ys, basis)
    validation = _validation_pair(args)
    if args.lam is not None:
        lam = check_lambda(args.lam)
        return problem.fit(lam), lam
    if validation is None:
        raise InputError("--estimator linear needs --lambda or --valid-x/--valid-y")
    curve, model = linear_validation_select(problem, *validation, _lambdas(config, args))
    return model, curve.selected


def _fit_nw(
    args: argparse.Namespace, config: FuncregConfig, xs: CurveSet, ys: CurveSet
) -> tuple[FittedEstimator, float]:
    validation = _validation_pair(args)
    if args.bandwidth is None and validation is not None:
        grid = bandwidth_grid(
            xs, config.nw_factor_min, config.nw_factor_max, config.nw_factor_count
        )
        bandwidth = nw_bandwidth_scan(xs, ys, *validation, grid).selected
    else:
        bandwidth = args.bandwidth
    model = NwModel.fit(xs, ys, bandwidth)
    return model, model.bandwidth


def _objective(model: FittedEstimator, xs: CurveSet, ys: CurveSet) -> float:
    if model.estimator is EstimatorName.LINEAR:
        return model.objective(xs, ys)
    if model.estimator in (EstimatorName.RKHS, EstimatorName.RKHS_MODIFIED):
        return model.objective(ys)
    # no penalty term: residual sum of squares
    return float(np.sum((ys.values - model.predict_many(xs)) ** 2))


def _cmd_fit(args: argparse.Namespace, config: FuncregConfig) -> None:
    """Fit an estimator, write the model JSON and a one-row fit report."""
    xs, ys = read_curves(args.x), read_curves(args.y)
    require_same_grid(xs.grid, ys.grid)
    if len(xs) != len(ys):
        raise InputError(f"{args.x} has {len(xs)} curves but {args.y} has {len(ys)}")
    if args.gcv and args.estimator not in ("rkhs", "rkhs-mod"):
        raise InputError("--gcv applies to the rkhs estimators only")

    model_path = Path(args.model_out)
    report_path = Path(args.report) if args.report else model_path.with_suffix(".report.csv")
    print("Fitting model")
    if args.estimator in ("rkhs", "rkhs-mod"):
        model, selected = _fit_rkhs(args, config, xs, ys, report_path)
    elif args.estimator == "linear":
        model, selected = _fit_linear(args, config, xs, ys)
    else:
        model, selected = _fit_nw(args, config, xs, ys)

    parameter = "bandwidth" if args.estimator == "nw" else "lambda"
    report = pd.DataFrame(
        {
            "estimator": [str(model.estimator)],
            "parameter": [parameter],
            "selected": [float(selected)],
            "objective": [_objective(model, xs, ys)],
        }
    )
    save_model(model_path, model)
    write_report(report_path, report)
    print(f"  estimator: {model.estimator}")
    print(f"  {parameter}: {selected!r}")
    print(f"  model: {model_path}")
    print(f"  report: {report_path}")


def _cmd_predict(args: argparse.Namespace, config: FuncregConfig) -> None:
    """Predict every curve of --x; an empty curve file gives a grid-only output."""
    model = load_model(args.model)
    grid, values = read_curve_table(args.x)
    require_same_grid(model.grid, grid)
    predicted = model.predict_many(CurveSet(grid, values)) if len(values) else values
    write_curves(args.out, model.grid, predicted)
    print(f"Wrote {len(values)} prediction(s) to {args.out}")


def _cmd_simulate(args: argparse.Namespace, config: FuncregConfig) -> None:
    """Run the benchmark for one or all response models."""
    models = list(SimModel) if args.model == "all" else [SimModel(args.model)]
    lambdas = lambda_grid(config.lambda_min, config.lambda_max, config.lambda_count)
    factors = bandwidth_factors(
        config.nw_factor_min, config.nw_factor_max, config.nw_factor_count
    )
    reports = []
    for model in models:
        sim_config = SimConfig(
            model=model,
            grid_size=args.grid_size,
            n_train=args.n_train,
            n_valid=args.n_valid,
            n_test=args.n_test,
            reps=args.reps,
            noise_sd=args.noise_sd,
            seed=args.seed,
            lambdas=lambdas,
            bandwidth_factors=factors,
            bspline_order=config.bspline_order,
            bspline_breakpoints=config.bspline_breakpoints,
        )
        reports.append(run_benchmark(sim_config, config.threads))
    report = BenchmarkReport.concat(reports)

    metadata: dict[str, object] = {
        "seed": args.seed,
        "reps": args.reps,
        "grid_size": args.grid_size,
        "n_train": args.n_train,
        "n_valid": args.n_valid,
        "n_test": args.n_test,
        "noise_sd": args.noise_sd,
    }
    CsvTarget("csv", args.out, args.detail, config.deterministic).save_report(report, metadata)
    db_path = args.results_db or config.results_db_path
    if db_path:
        target = DuckDBTarget("results-db", db_path)
        target.save_report(report, metadata)
        print(f"Recorded run {target.last_run_id} in {db_path}")

    print(report.to_frame().to_string(index=False))
    failures = sum(not record.ok for record in report.records)
    if failures:
        print(f"Completed with {failures} failed estimator fit(s)")
    print(f"Wrote {args.out}")


def _count_comment(xs: CurveSet) -> str:
    return f"N = nT = {len(xs)} * {xs.grid.size} = {len(xs) * xs.grid.size}"


def _cmd_gcv_scan(args: argparse.Namespace, config: FuncregConfig) -> None:
    """Write V(lambda), plus validation MSE when validation files are given."""
    xs, ys = read_curves(args.x), read_curves(args.y)
    variant = PenaltyVariant(args.variant)
    lambdas = _lambdas(config, args)
    system = KroneckerSystem.build(xs, args.sigma, args.sigma_prime)
    curve = gcv_select(xs, ys, system.sigma, system.sigma_prime, lambdas, variant)
    frame = curve.to_frame("gcv")

    validation = _validation_pair(args)
    valid_curve: ValidationCurve | None = None
    if validation is not None:
        valid_curve, _ = validation_select(system, ys, *validation, lambdas, variant)
        frame["validation_mse"] = valid_curve.scores

    write_report(args.out, frame, [_count_comment(xs)])
    print(f"GCV-selected lambda: {curve.selected!r}")
    if valid_curve is not None:
        print(f"Validation-selected lambda: {valid_curve.selected!r}")
    print(f"Wrote {args.out}")


def _cmd_weather_loo(args: argparse.Namespace, config: FuncregConfig) -> None:
    """Leave-one-out prediction of log precipitation from temperature."""
    dataset = load_weather(args.temp, args.precip)
    loo_config = LooConfig(
        estimator=LooEstimator(args.estimator),
        lambdas=_lambdas(config, args),
        precip_offset=config.precip_offset if args.precip_offset is None else args.precip_offset,
        sigma=args.sigma,
        sigma_prime=args.sigma_prime,
    )
    result = leave_one_out(dataset, loo_config, config.threads)
    written = write_loo(result, args.out)

    print("Completed leave-one-out run")
    print(f"  stations: {len(result.folds)}")
    if result.failures < len(result.folds):
        print(f"  mean mse: {result.mean_mse!r}")
        print(f"  mean-curve baseline mse: {result.mean_baseline_mse!r}")
    print(f"  files written: {len(written)}")
    if result.failures:
        print(f"Completed with {result.failures} failed fold(s)")


COMMANDS: dict[str, Callable[[argparse.Namespace, FuncregConfig], None]] = {
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "simulate": _cmd_simulate,
    "gcv-scan": _cmd_gcv_scan,
    "weather-loo": _cmd_weather_loo,
}


def main(argv: list[str] | None = None) -> None:
    """Execute the funcreg CLI."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return

    overrides = {
        key: value
        for key, value in (
            ("log_level", args.log_level),
            ("threads", args.threads),
            ("deterministic", args.deterministic),
        )
        if value is not None
    }
    try:
        config = get_config(**overrides)
    except ValidationError as exc:
        print(f"Error: invalid configuration: {exc}", file=sys.stderr)
        sys.exit(EXIT_INPUT)

    level = config.log_level.upper()
    if level not in logging.getLevelNamesMapping():
        print(f"Error: unknown log level {config.log_level!r}", file=sys.stderr)
        sys.exit(EXIT_INPUT)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        COMMANDS[args.command](args, config)
    except InputError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        sys.exit(EXIT_INPUT)
    except (NumericalError, LinAlgError) as exc:
        print(f"Numerical failure: {exc}", file=sys.stderr)
        sys.exit(EXIT_NUMERICAL)
    except OSError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        sys.exit(EXIT_INPUT)
