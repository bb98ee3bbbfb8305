from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from funcreg.core.base import EstimatorName
from funcreg.core.curve import Curve, Grid
from funcreg.core.errors import InputError
from funcreg.estimators.nw import bandwidth_factors
from funcreg.estimators.rkhs import lambda_grid
from funcreg.sim import (
    ESTIMATOR_ORDER,
    BenchmarkReport,
    DataRole,
    ReplicateRecord,
    SimConfig,
    SimModel,
    apply_model,
    compare_gcv_to_validation,
    gcv_validation_study,
    gen_brownian,
    gen_dataset,
    run_benchmark,
    run_replicate,
)


def _small_config(model: SimModel = SimModel.A, **overrides: object) -> SimConfig:
    settings: dict[str, object] = {
        "model": model,
        "grid_size": 12,
        "n_train": 10,
        "n_valid": 6,
        "n_test": 6,
        "reps": 2,
        "lambdas": lambda_grid(1e-2, 1e2, 5),
        "bandwidth_factors": bandwidth_factors(0.1, 10.0, 5),
        "bspline_breakpoints": 4,
    }
    settings.update(overrides)
    return SimConfig(**settings)


def test_brownian_start_and_increment_statistics() -> None:
    rng = np.random.default_rng(123)
    grid = Grid.equispaced(50)
    paths = np.vstack([gen_brownian(rng, grid).values for _ in range(10_000)])
    starts = paths[:, 0]

    assert np.all((starts >= 0.0) & (starts <= 5.0))
    assert abs(starts.mean() - 2.5) <= 3.0 * starts.std(ddof=1) / np.sqrt(starts.size)
    assert np.var(paths[:, -1] - starts, ddof=1) == pytest.approx(1.0, rel=0.05)


def test_model_a_on_constant_covariate() -> None:
    grid = Grid.equispaced(50)
    response = apply_model(SimModel.A, Curve(grid, np.full(50, 4.0)))
    t = grid.points

    assert response.values[0] == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(response.values, 4.0 * (t**2 - t + 0.5), atol=1e-12)


def test_model_b_squares_the_covariate() -> None:
    grid = Grid.equispaced(30)

    squared = apply_model(SimModel.B, Curve(grid, np.full(30, -2.0)))
    linear = apply_model(SimModel.A, Curve(grid, np.full(30, 4.0)))

    assert np.allclose(squared.values, linear.values)


def test_pointwise_models() -> None:
    grid = Grid.equispaced(5)

    model_c = apply_model(SimModel.C, Curve(grid, np.full(5, 2.0)))
    model_d = apply_model(SimModel.D, Curve(grid, np.full(5, -3.0)))

    assert model_c.values[1] == pytest.approx(2.0)
    assert model_d.values[0] == pytest.approx(3.0)


def test_config_validation() -> None:
    assert SimConfig(model="b").model is SimModel.B
    with pytest.raises(ValueError):
        SimConfig(model="e")
    with pytest.raises(InputError):
        SimConfig(model=SimModel.A, n_train=0)
    with pytest.raises(InputError):
        SimConfig(model=SimModel.A, noise_sd=-1.0)
    with pytest.raises(InputError):
        SimConfig(model=SimModel.A, seed=-1)


def test_zero_noise_gives_identical_responses() -> None:
    config = _small_config(noise_sd=0.0)

    dataset = gen_dataset(config, DataRole.TRAIN, 0)

    assert np.array_equal(dataset.ys_noisy.values, dataset.ys_clean.values)


def test_datasets_are_deterministic_per_seed_rep_and_role() -> None:
    config = _small_config(seed=7)

    first = gen_dataset(config, DataRole.VALID, 3)
    second = gen_dataset(config, DataRole.VALID, 3)
    other_role = gen_dataset(config, DataRole.TEST, 3)
    other_rep = gen_dataset(config, DataRole.VALID, 4)

    assert np.array_equal(first.xs.values, second.xs.values)
    assert np.array_equal(first.ys_noisy.values, second.ys_noisy.values)
    assert not np.array_equal(first.xs.values, other_role.xs.values)
    assert not np.array_equal(first.xs.values, other_rep.xs.values)


def test_noise_mean_and_variance() -> None:
    config = SimConfig(model=SimModel.C, grid_size=50, n_train=1000)

    dataset = gen_dataset(config, DataRole.TRAIN, 0)
    noise = (dataset.ys_noisy.values - dataset.ys_clean.values).ravel()

    assert abs(noise.mean()) <= 3.0 / np.sqrt(noise.size)
    assert noise.var(ddof=1) == pytest.approx(1.0, rel=0.05)


def test_replicate_scores_every_estimator() -> None:
    records = run_replicate(_small_config(), 0)

    assert [record.estimator for record in records] == list(ESTIMATOR_ORDER)
    assert all(record.ok for record in records)
    assert all(record.mse_clean >= 0.0 for record in records)


def test_single_rep_benchmark_has_five_rows_and_unit_rkhs_column() -> None:
    report = run_benchmark(_small_config(reps=1), threads=1)
    frame = report.to_frame()

    assert len(frame) == 5
    assert list(frame["estimator"]) == [str(name) for name in ESTIMATOR_ORDER]
    assert report.row(SimModel.A, EstimatorName.RKHS).relative_to_rkhs == 1.0
    assert (frame["se"] == 0.0).all()
    assert (frame["failures"] == 0).all()


def test_benchmark_does_not_depend_on_worker_count() -> None:
    config = _small_config(model=SimModel.D, reps=3, seed=11)

    serial = run_benchmark(config, threads=1)
    parallel = run_benchmark(config, threads=3)

    pd.testing.assert_frame_equal(serial.to_frame(), parallel.to_frame())
    pd.testing.assert_frame_equal(serial.records_frame(), parallel.records_frame())


def test_failed_records_are_excluded_and_counted() -> None:
    records = [
        ReplicateRecord(SimModel.A, 0, name, mse_clean=2.0, mse_noisy=3.0, selected=1.0)
        for name in ESTIMATOR_ORDER
    ]
    records.append(ReplicateRecord(SimModel.A, 1, EstimatorName.RKHS, mse_clean=4.0, mse_noisy=5.0))
    records.append(ReplicateRecord(SimModel.A, 1, EstimatorName.LINEAR, error="singular"))

    report = BenchmarkReport.from_records(records)
    linear = report.row("a", "linear")
    rkhs = report.row("a", "rkhs")

    assert linear.failures == 1
    assert linear.mean_mse_clean == 2.0
    assert linear.se == 0.0
    assert rkhs.mean_mse_clean == 3.0
    assert linear.relative_to_rkhs == pytest.approx(2.0 / 3.0)
    assert rkhs.se == pytest.approx(1.0)


def test_report_row_lookup_missing_raises() -> None:
    report = BenchmarkReport.from_records([])

    with pytest.raises(KeyError):
        report.row("a", "rkhs")


def test_gcv_comparison_is_deterministic() -> None:
    config = _small_config(model=SimModel.B)

    first = compare_gcv_to_validation(config, 0)
    second = compare_gcv_to_validation(config, 0)

    assert first == second
    assert first.gcv_lambda in config.lambdas
    assert first.validation_lambda in config.lambdas
    assert first.ratio > 0.0


@pytest.fixture(scope="module")
def default_reports() -> dict[SimModel, BenchmarkReport]:
    return {model: run_benchmark(SimConfig(model=model)) for model in SimModel}


@pytest.mark.slow
def test_default_protocol_reproduces_benchmark_orderings(
    default_reports: dict[SimModel, BenchmarkReport],
) -> None:
    def relative(model: SimModel, estimator: EstimatorName) -> float:
        return default_reports[model].row(model, estimator).relative_to_rkhs

    assert relative(SimModel.A, EstimatorName.LINEAR) < 0.8
    assert relative(SimModel.C, EstimatorName.LINEAR) < 0.9
    assert relative(SimModel.B, EstimatorName.LINEAR) > 3.0
    assert relative(SimModel.D, EstimatorName.LINEAR) > 1.5
    for model in SimModel:
        assert 0.85 <= relative(model, EstimatorName.RKHS_MODIFIED) <= 1.15
        assert relative(model, EstimatorName.NW) > 1.3
        assert relative(model, EstimatorName.NW_ORACLE) <= relative(model, EstimatorName.NW)


@pytest.mark.slow
@pytest.mark.parametrize("model", list(SimModel))
def test_oracle_kernel_estimate_wins_most_replicates(
    default_reports: dict[SimModel, BenchmarkReport], model: SimModel
) -> None:
    errors: dict[tuple[int, EstimatorName], float] = {
        (record.rep, record.estimator): record.mse_clean
        for record in default_reports[model].records
        if record.ok
    }

    wins = sum(
        errors[(rep, EstimatorName.NW_ORACLE)] <= errors[(rep, EstimatorName.NW)]
        for rep in range(50)
    )
    assert wins >= 45


@pytest.mark.slow
@pytest.mark.parametrize("model", list(SimModel))
def test_gcv_selection_is_close_to_validation_selection(model: SimModel) -> None:
    comparisons = gcv_validation_study(SimConfig(model=model), runs=20)

    good = sum(comparison.ratio <= 1.25 for comparison in comparisons)
    assert good >= 14
