from __future__ import annotations

import numpy as np
import pytest

from funcreg.core.base import EstimatorName
from funcreg.core.curve import Curve, CurveSet, Grid
from funcreg.core.errors import InputError, SolverError
from funcreg.estimators.bspline import BsplineBasis
from funcreg.estimators.linear import (
    LinearModel,
    LinearProblem,
    linear_fit,
    linear_predict,
    linear_validation_select,
)
from funcreg.estimators.rkhs import lambda_grid
from funcreg.sim import gen_brownian

BASIS = BsplineBasis.equispaced(4, 4)


def _covariates(seed: int, count: int, grid: Grid) -> CurveSet:
    rng = np.random.default_rng(seed)
    return CurveSet.from_curves([gen_brownian(rng, grid) for _ in range(count)])


def _true_model(grid: Grid) -> LinearModel:
    rng = np.random.default_rng(99)
    return LinearModel(
        grid=grid,
        basis=BASIS,
        alpha_coeffs=rng.normal(size=BASIS.count),
        beta_coeffs=rng.normal(size=(BASIS.count, BASIS.count)),
        penalty_lambda=0.0,
    )


def test_noise_free_data_from_the_model_class_is_recovered() -> None:
    grid = Grid.equispaced(30)
    truth = _true_model(grid)
    xs = _covariates(1, 40, grid)
    ys = CurveSet(grid, truth.predict_many(xs))

    model = linear_fit(xs, ys, BASIS, 1e-8)

    test_x = _covariates(2, 5, grid)
    expected = truth.predict_many(test_x)
    error = np.max(np.abs(model.predict_many(test_x) - expected))
    assert error <= 1e-4 * np.max(np.abs(expected))
    assert np.allclose(model.alpha().values, truth.alpha().values, atol=1e-4)


def test_fitted_coefficients_minimize_penalized_criterion() -> None:
    grid = Grid.equispaced(20)
    xs = _covariates(3, 15, grid)
    ys = CurveSet(grid, np.random.default_rng(4).normal(size=(15, 20)))
    model = linear_fit(xs, ys, BASIS, 0.1)
    rng = np.random.default_rng(5)

    best = model.objective(xs, ys)
    for scale in np.logspace(-4, -1, 100):
        perturbed = LinearModel(
            grid=grid,
            basis=BASIS,
            alpha_coeffs=model.alpha_coeffs + scale * rng.normal(size=BASIS.count),
            beta_coeffs=model.beta_coeffs + scale * rng.normal(size=(BASIS.count, BASIS.count)),
            penalty_lambda=0.1,
        )
        assert perturbed.objective(xs, ys) >= best


def test_prediction_is_affine_in_the_covariate() -> None:
    grid = Grid.equispaced(25)
    xs = _covariates(20, 15, grid)
    ys = CurveSet(grid, np.random.default_rng(21).normal(size=(15, 25)))
    model = linear_fit(xs, ys, BASIS, 0.3)
    first, second = _covariates(22, 2, grid)
    zero = Curve(grid, np.zeros(25))

    origin = linear_predict(model, zero).values
    combined = linear_predict(model, first + second).values - origin
    separate = (linear_predict(model, first).values - origin) + (
        linear_predict(model, second).values - origin
    )

    assert np.max(np.abs(combined - separate)) <= 1e-10
    assert np.allclose(origin, model.alpha().values, atol=1e-12)


def test_zero_responses_give_zero_coefficients() -> None:
    grid = Grid.equispaced(20)
    xs = _covariates(23, 10, grid)

    model = linear_fit(xs, CurveSet(grid, np.zeros((10, 20))), BASIS, 0.5)

    assert np.allclose(model.alpha_coeffs, 0.0, rtol=0.0, atol=1e-15)
    assert np.allclose(model.beta_coeffs, 0.0, rtol=0.0, atol=1e-15)
    assert np.allclose(model.predict_many(xs), 0.0, rtol=0.0, atol=1e-15)


def test_roughness_decreases_with_penalty() -> None:
    grid = Grid.equispaced(20)
    xs = _covariates(6, 20, grid)
    ys = CurveSet(grid, np.random.default_rng(7).normal(size=(20, 20)))
    problem = LinearProblem(xs, ys, BASIS)

    roughness = [problem.fit(lam).roughness() for lam in (1e-3, 1.0, 1e3)]

    assert roughness[0] >= roughness[1] >= roughness[2]


def test_zero_penalty_with_too_few_curves_is_singular() -> None:
    grid = Grid.equispaced(20)
    xs = _covariates(8, 2, grid)
    ys = CurveSet(grid, np.ones((2, 20)))

    with pytest.raises(SolverError, match="use a positive penalty"):
        linear_fit(xs, ys, BASIS, 0.0)


def test_negative_penalty_is_rejected() -> None:
    grid = Grid.equispaced(10)
    xs = _covariates(9, 5, grid)

    with pytest.raises(InputError):
        linear_fit(xs, xs, BASIS, -1.0)


def test_single_curve_prediction_matches_batch() -> None:
    grid = Grid.equispaced(15)
    xs = _covariates(10, 12, grid)
    ys = CurveSet(grid, np.random.default_rng(11).normal(size=(12, 15)))
    model = linear_fit(xs, ys, BASIS, 0.5)

    assert model.estimator is EstimatorName.LINEAR
    assert np.allclose(linear_predict(model, xs[3]).values, model.predict_many(xs)[3])


def test_validation_select_uses_smallest_validation_error() -> None:
    grid = Grid.equispaced(20)
    truth = _true_model(grid)
    rng = np.random.default_rng(12)
    xs, valid_x = _covariates(13, 25, grid), _covariates(14, 10, grid)
    ys = CurveSet(grid, truth.predict_many(xs) + rng.normal(size=(25, 20)))
    valid_y = CurveSet(grid, truth.predict_many(valid_x) + rng.normal(size=(10, 20)))
    lambdas = lambda_grid(1e-4, 1e3, 8)

    curve, model = linear_validation_select(LinearProblem(xs, ys, BASIS), valid_x, valid_y, lambdas)

    assert model.penalty_lambda == curve.selected
    assert curve.scores[curve.argmin_index] == min(curve.scores)


def test_document_fields() -> None:
    grid = Grid.equispaced(10)
    document = _true_model(grid).to_document()

    assert document["estimator"] == "linear"
    assert document["order"] == 4
    assert len(document["beta_coeffs"]) == BASIS.count
    assert document["breakpoints"] == [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
