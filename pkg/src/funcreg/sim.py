"""Synthetic curve data and the train/validation/test benchmark.

Covariates are Brownian paths with a uniform random start in [0, 5];
responses follow one of four models:

    (a) y(t) = int |t - s| x(s) ds        (b) y(t) = int |t - s| x(s)^2 ds
    (c) y(t) = sin(2 pi t) x(t)           (d) y(t) = cos(pi t) |x(t)|

Every curve draws from its own PCG64 stream seeded by
SeedSequence(seed, spawn_key=(rep, role, curve)), so datasets do not depend
on worker count or scheduling.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError

from funcreg.core.base import EstimatorName, FittedEstimator
from funcreg.core.curve import Curve, CurveSet, Grid
from funcreg.core.errors import FuncregError, InputError
from funcreg.estimators.bspline import BsplineBasis
from funcreg.estimators.linear import LinearProblem, linear_validation_select
from funcreg.estimators.nw import (
    NwModel,
    bandwidth_factors,
    heuristic_bandwidth,
    nw_bandwidth_scan,
)
from funcreg.estimators.rkhs import (
    KroneckerSystem,
    PenaltyVariant,
    gcv_select,
    lambda_grid,
    mean_squared_error,
    validation_select,
)
from funcreg.orchestration import WorkRunner

logger = logging.getLogger(__name__)

ESTIMATOR_ORDER = (
    EstimatorName.RKHS,
    EstimatorName.RKHS_MODIFIED,
    EstimatorName.LINEAR,
    EstimatorName.NW,
    EstimatorName.NW_ORACLE,
)
MAX_SEED = 2**64 - 1


class SimModel(StrEnum):
    """Response models of the simulation study."""

    A = "a"
    B = "b"
    C = "c"
    D = "d"


class DataRole(StrEnum):
    """Role of a simulated dataset within one replicate."""

    TRAIN = "train"
    VALID = "valid"
    TEST = "test"


_ROLE_KEYS = {DataRole.TRAIN: 0, DataRole.VALID: 1, DataRole.TEST: 2}


@dataclass(frozen=True)
class SimConfig:
    """Simulation protocol and estimator search grids."""

    model: SimModel
    grid_size: int = 50
    n_train: int = 30
    n_valid: int = 50
    n_test: int = 50
    reps: int = 50
    noise_sd: float = 1.0
    seed: int = 0
    lambdas: tuple[float, ...] = field(default_factory=lambda_grid)
    bandwidth_factors: tuple[float, ...] = field(default_factory=bandwidth_factors)
    bspline_order: int = 4
    bspline_breakpoints: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", SimModel(self.model))
        for name in ("grid_size", "n_train", "n_valid", "n_test", "reps"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.grid_size < 2:
            raise InputError(f"grid_size must be at least 2, got {self.grid_size}")
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0.0:
            raise InputError(f"noise_sd must be nonnegative, got {self.noise_sd!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise InputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @cached_property
    def grid(self) -> Grid:
        return Grid.equispaced(self.grid_size)

    def count(self, role: DataRole) -> int:
        return {
            DataRole.TRAIN: self.n_train,
            DataRole.VALID: self.n_valid,
            DataRole.TEST: self.n_test,
        }[role]


@dataclass(frozen=True)
class SimDataset:
    """Covariates with noisy and noise-free responses."""

    xs: CurveSet
    ys_noisy: CurveSet
    ys_clean: CurveSet


def curve_rng(seed: int, rep: int, role: DataRole, index: int) -> np.random.Generator:
    """Independent generator for one curve of one dataset."""
    sequence = np.random.SeedSequence(seed, spawn_key=(rep, _ROLE_KEYS[role], index))
    return np.random.default_rng(sequence)


def gen_brownian(rng: np.random.Generator, grid: Grid) -> Curve:
    """Brownian path with x(t_1) ~ Uniform[0, 5] and N(0, dt) increments."""
    start = rng.uniform(0.0, 5.0)
    steps = rng.normal(0.0, np.sqrt(np.diff(grid.points)))
    return Curve(grid, start + np.concatenate([[0.0], np.cumsum(steps)]))


def apply_model(model: SimModel, x: Curve) -> Curve:
    """Noise-free response of ``model`` to the covariate ``x``."""
    t = x.grid.points
    match SimModel(model):
        case SimModel.A:
            values = np.abs(t[:, None] - t[None, :]) @ (x.grid.trapezoid_weights * x.values)
        case SimModel.B:
            values = np.abs(t[:, None] - t[None, :]) @ (x.grid.trapezoid_weights * x.values**2)
        case SimModel.C:
            values = np.sin(2.0 * np.pi * t) * x.values
        case SimModel.D:
            values = np.cos(np.pi * t) * np.abs(x.values)
    return Curve(x.grid, values)


def gen_dataset(config: SimConfig, role: DataRole, rep_index: int) -> SimDataset:
    """Draw one dataset; identical (seed, rep, role) always gives identical curves."""
    role = DataRole(role)
    grid = config.grid
    xs, clean, noisy = [], [], []
    for index in range(config.count(role)):
        rng = curve_rng(config.seed, rep_index, role, index)
        x = gen_brownian(rng, grid)
        y = apply_model(config.model, x).values
        xs.append(x.values)
        clean.append(y)
        noisy.append(y + config.noise_sd * rng.standard_normal(grid.size))
    return SimDataset(
        xs=CurveSet(grid, np.vstack(xs)),
        ys_noisy=CurveSet(grid, np.vstack(noisy)),
        ys_clean=CurveSet(grid, np.vstack(clean)),
    )


@dataclass(frozen=True)
class ReplicateRecord:
    """Test error of one estimator in one replicate."""

    model: SimModel
    rep: int
    estimator: EstimatorName
    mse_clean: float = float("nan")
    mse_noisy: float = float("nan")
    selected: float = float("nan")
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _evaluate(
    config: SimConfig,
    rep: int,
    estimator: EstimatorName,
    test: SimDataset,
    fitter: Callable[[], tuple[FittedEstimator, float]],
) -> ReplicateRecord:
    try:
        model, selected = fitter()
        predicted = model.predict_many(test.xs)
    except (FuncregError, LinAlgError) as exc:
        logger.warning("Rep %d, model %s, %s failed: %s", rep, config.model, estimator, exc)
        return ReplicateRecord(config.model, rep, estimator, error=str(exc))
    return ReplicateRecord(
        model=config.model,
        rep=rep,
        estimator=estimator,
        mse_clean=mean_squared_error(predicted, test.ys_clean.values),
        mse_noisy=mean_squared_error(predicted, test.ys_noisy.values),
        selected=float(selected),
    )


def run_replicate(config: SimConfig, rep: int) -> list[ReplicateRecord]:
    """Fit all five estimators on one replicate and score them on its test set."""
    train = gen_dataset(config, DataRole.TRAIN, rep)
    valid = gen_dataset(config, DataRole.VALID, rep)
    test = gen_dataset(config, DataRole.TEST, rep)
    system: KroneckerSystem | None = None

    def rkhs(variant: PenaltyVariant) -> Callable[[], tuple[FittedEstimator, float]]:
        def fitter() -> tuple[FittedEstimator, float]:
            nonlocal system
            if system is None:
                system = KroneckerSystem.build(train.xs)
            curve, model = validation_select(
                system, train.ys_noisy, valid.xs, valid.ys_noisy, config.lambdas, variant
            )
            return model, curve.selected

        return fitter

    def linear() -> tuple[FittedEstimator, float]:
        basis = BsplineBasis.equispaced(config.bspline_breakpoints, config.bspline_order)
        problem = LinearProblem(train.xs, train.ys_noisy, basis)
        curve, model = linear_validation_select(problem, valid.xs, valid.ys_noisy, config.lambdas)
        return model, curve.selected

    def kernel(oracle: bool) -> Callable[[], tuple[FittedEstimator, float]]:
        def fitter() -> tuple[FittedEstimator, float]:
            responses = train.ys_clean if oracle else train.ys_noisy
            bandwidths = heuristic_bandwidth(train.xs) * np.asarray(config.bandwidth_factors)
            scan = nw_bandwidth_scan(train.xs, responses, valid.xs, valid.ys_noisy, bandwidths)
            model = NwModel.fit(
                train.xs, train.ys_noisy, scan.selected, oracle=oracle, clean_y=train.ys_clean
            )
            return model, scan.selected

        return fitter

    fitters = {
        EstimatorName.RKHS: rkhs(PenaltyVariant.STANDARD),
        EstimatorName.RKHS_MODIFIED: rkhs(PenaltyVariant.MODIFIED),
        EstimatorName.LINEAR: linear,
        EstimatorName.NW: kernel(oracle=False),
        EstimatorName.NW_ORACLE: kernel(oracle=True),
    }
    return [_evaluate(config, rep, name, test, fitters[name]) for name in ESTIMATOR_ORDER]


@dataclass(frozen=True)
class BenchmarkRow:
    """Aggregated test error of one estimator on one model."""

    model: SimModel
    estimator: EstimatorName
    mean_mse_clean: float
    mean_mse_noisy: float
    se: float
    relative_to_rkhs: float
    failures: int


REPORT_COLUMNS = (
    "model",
    "estimator",
    "mean_mse_clean",
    "mean_mse_noisy",
    "se",
    "relative_to_rkhs",
    "failures",
)
DETAIL_COLUMNS = ("model", "rep", "estimator", "mse_clean", "mse_noisy", "selected", "error")


@dataclass(frozen=True)
class BenchmarkReport:
    """Per-(model, estimator) means relative to the RKHS estimate, plus raw records."""

    rows: tuple[BenchmarkRow, ...]
    records: tuple[ReplicateRecord, ...] = ()

    @classmethod
    def from_records(cls, records: Iterable[ReplicateRecord]) -> BenchmarkReport:
        records = tuple(records)
        models = list(dict.fromkeys(record.model for record in records))
        rows = []
        for model in models:
            stats = {}
            for estimator in ESTIMATOR_ORDER:
                cell = [r for r in records if r.model == model and r.estimator == estimator]
                good = [r for r in cell if r.ok]
                clean = np.array([r.mse_clean for r in good])
                noisy = np.array([r.mse_noisy for r in good])
                stats[estimator] = (
                    float(clean.mean()) if good else float("nan"),
                    float(noisy.mean()) if good else float("nan"),
                    float(clean.std(ddof=1) / np.sqrt(clean.size)) if clean.size > 1 else 0.0,
                    len(cell) - len(good),
                )
            reference = stats[EstimatorName.RKHS][0]
            for estimator in ESTIMATOR_ORDER:
                mean_clean, mean_noisy, se, failures = stats[estimator]
                rows.append(
                    BenchmarkRow(
                        model=model,
                        estimator=estimator,
                        mean_mse_clean=mean_clean,
                        mean_mse_noisy=mean_noisy,
                        se=se,
                        relative_to_rkhs=mean_clean / reference if reference else float("nan"),
                        failures=failures,
                    )
                )
        return cls(rows=tuple(rows), records=records)

    @classmethod
    def concat(cls, reports: Sequence[BenchmarkReport]) -> BenchmarkReport:
        return cls(
            rows=tuple(row for report in reports for row in report.rows),
            records=tuple(record for report in reports for record in report.records),
        )

    def row(self, model: SimModel | str, estimator: EstimatorName | str) -> BenchmarkRow:
        for row in self.rows:
            if row.model == model and row.estimator == estimator:
                return row
        raise KeyError(f"No report row for model {model!r}, estimator {estimator!r}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {column: getattr(row, column) for column in REPORT_COLUMNS}
                for row in self.rows
            ],
            columns=list(REPORT_COLUMNS),
        ).astype({"model": str, "estimator": str})

    def records_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {column: getattr(record, column) for column in DETAIL_COLUMNS}
                for record in self.records
            ],
            columns=list(DETAIL_COLUMNS),
        ).astype({"model": str, "estimator": str})


def run_benchmark(config: SimConfig, threads: int | None = None) -> BenchmarkReport:
    """Run every replicate of ``config`` and aggregate the test errors."""
    runner = WorkRunner(threads)
    logger.info(
        "Benchmark model %s: %d reps on %d workers", config.model, config.reps, runner.workers
    )
    results = runner.map(lambda rep: run_replicate(config, rep), range(config.reps))
    return BenchmarkReport.from_records(record for result in results for record in result.value)


@dataclass(frozen=True)
class GcvComparison:
    """Test MSE of the GCV-selected and validation-selected lambda in one run."""

    run: int
    gcv_lambda: float
    validation_lambda: float
    gcv_test_mse: float
    validation_test_mse: float

    @property
    def ratio(self) -> float:
        return self.gcv_test_mse / self.validation_test_mse


def compare_gcv_to_validation(
    config: SimConfig,
    rep: int,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> GcvComparison:
    """Select lambda by GCV on the training data and by validation error; score both."""
    train = gen_dataset(config, DataRole.TRAIN, rep)
    valid = gen_dataset(config, DataRole.VALID, rep)
    test = gen_dataset(config, DataRole.TEST, rep)
    system = KroneckerSystem.build(train.xs)
    gcv = gcv_select(
        train.xs, train.ys_noisy, system.sigma, system.sigma_prime, config.lambdas, variant
    )
    gcv_model = system.fit(train.ys_noisy, gcv.selected, variant)
    validation, valid_model = validation_select(
        system, train.ys_noisy, valid.xs, valid.ys_noisy, config.lambdas, variant
    )
    return GcvComparison(
        run=rep,
        gcv_lambda=gcv.selected,
        validation_lambda=validation.selected,
        gcv_test_mse=mean_squared_error(gcv_model.predict_many(test.xs), test.ys_clean.values),
        validation_test_mse=mean_squared_error(
            valid_model.predict_many(test.xs), test.ys_clean.values
        ),
    )


def gcv_validation_study(
    config: SimConfig,
    runs: int,
    threads: int | None = None,
) -> list[GcvComparison]:
    """Repeat ``compare_gcv_to_validation`` over ``runs`` seeded replicates."""
    results = WorkRunner(threads).map(
        lambda rep: compare_gcv_to_validation(config, rep), range(runs)
    )
    return [result.value for result in results]
