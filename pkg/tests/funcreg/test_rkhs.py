from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import cholesky
from scipy.optimize import least_squares

from funcreg.core.curve import Curve, CurveSet, Grid
from funcreg.core.errors import DegenerateGcvError, GridMismatchError, InputError
from funcreg.core.kernel import default_sigma, gram_pair
from funcreg.estimators.rkhs import (
    GcvCurve,
    KroneckerSystem,
    PenaltyVariant,
    RkhsModel,
    SolveMethod,
    fit,
    gcv_score,
    gcv_select,
    influence_matrix,
    lambda_grid,
    objective,
    predict,
    validation_select,
)
from funcreg.sim import gen_brownian

VARIANTS = (PenaltyVariant.STANDARD, PenaltyVariant.MODIFIED)


def _sample(seed: int, n: int, size: int) -> tuple[CurveSet, CurveSet]:
    rng = np.random.default_rng(seed)
    grid = Grid.equispaced(size)
    xs = CurveSet.from_curves([gen_brownian(rng, grid) for _ in range(n)])
    ys = CurveSet(grid, rng.normal(size=(n, size)))
    return xs, ys


def _brute_force(
    xs: CurveSet, ys: CurveSet, sigma: float, sigma_prime: float, lam: float, variant
) -> np.ndarray:
    """Minimize the objective as a generic least-squares problem in vec(B)."""
    gram = gram_pair(xs, sigma, sigma_prime)
    n, size = gram.n, gram.size
    operator = np.kron(gram.K, gram.A)
    if variant is PenaltyVariant.STANDARD:
        weight = operator
    else:
        weight = np.kron(gram.K, np.diag(np.diag(gram.A)))
    root = cholesky(weight)
    target = ys.values.reshape(-1, order="F")
    jacobian = np.vstack([-operator, np.sqrt(lam) * root])

    def residuals(b: np.ndarray) -> np.ndarray:
        return np.concatenate([target - operator @ b, np.sqrt(lam) * root @ b])

    solution = least_squares(
        residuals,
        np.zeros(n * size),
        jac=lambda b: jacobian,
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    return solution.x.reshape((n, size), order="F")


@pytest.mark.parametrize("variant", VARIANTS)
def test_closed_form_matches_numerical_minimizer(variant: PenaltyVariant) -> None:
    for seed in range(20):
        xs, ys = _sample(seed, 3, 4)
        sigma = default_sigma(xs)
        for lam in (0.1, 1.0, 10.0):
            model = fit(xs, ys, sigma, 0.2, lam, variant)
            expected = _brute_force(xs, ys, sigma, 0.2, lam, variant)
            assert np.max(np.abs(model.B - expected)) <= 1e-6


@pytest.mark.parametrize("variant", VARIANTS)
def test_fitted_coefficients_minimize_objective(variant: PenaltyVariant) -> None:
    xs, ys = _sample(5, 6, 8)
    model = fit(xs, ys, None, None, 0.5, variant)
    gram = model.gram
    rng = np.random.default_rng(1)

    best = model.objective(ys)
    for _ in range(10):
        perturbed = model.B + 1e-3 * rng.normal(size=model.B.shape)
        assert objective(gram, ys.values, perturbed, 0.5, variant) > best


@pytest.mark.parametrize("variant", VARIANTS)
def test_dense_and_eigen_solvers_agree(variant: PenaltyVariant) -> None:
    xs, ys = _sample(8, 7, 12)
    system = KroneckerSystem.build(xs)

    for lam in (1e-3, 0.1, 10.0):
        eigen = system.fit(ys, lam, variant, SolveMethod.EIGEN)
        dense = system.fit(ys, lam, variant, SolveMethod.DENSE)
        assert np.max(np.abs(eigen.B - dense.B)) <= 1e-8 * max(1.0, np.max(np.abs(dense.B)))


def test_functional_and_matrix_prediction_paths_agree() -> None:
    for seed in range(20):
        xs, ys = _sample(100 + seed, 5, 10)
        model = fit(xs, ys, None, None, 0.3)
        assert np.max(np.abs(model.predict_many(xs) - model.fitted_values())) <= 1e-10
        single = predict(model, xs[2])
        assert np.max(np.abs(single.values - model.fitted_values()[2])) <= 1e-10


def test_small_lambda_interpolates_training_responses() -> None:
    xs, ys = _sample(21, 5, 10)
    model = fit(xs, ys, default_sigma(xs) / 2.0, 0.05, 1e-10)

    error = np.max(np.abs(model.fitted_values() - ys.values))
    assert error < 1e-4 * np.max(np.abs(ys.values))


def test_large_lambda_shrinks_coefficients_to_zero() -> None:
    xs, ys = _sample(22, 5, 10)
    model = fit(xs, ys, None, None, 1e12)

    assert np.max(np.abs(model.B)) < 1e-9 * np.max(np.abs(ys.values))


@pytest.mark.parametrize("variant", VARIANTS)
def test_penalty_shrinks_as_lambda_grows(variant: PenaltyVariant) -> None:
    xs, ys = _sample(23, 6, 8)
    system = KroneckerSystem.build(xs)

    lambdas = lambda_grid(1e-3, 1e3, 13)
    penalties = [system.fit(ys, lam, variant).penalty_value() for lam in lambdas]

    assert penalties[-1] >= 0.0
    for smaller, larger in zip(penalties, penalties[1:], strict=False):
        assert larger <= smaller * (1.0 + 1e-9) + 1e-14


def test_penalty_value_follows_variant() -> None:
    xs, ys = _sample(24, 4, 6)
    standard = fit(xs, ys, None, None, 1.0)
    modified = fit(xs, ys, None, None, 1.0, PenaltyVariant.MODIFIED)
    gram = modified.gram

    expected_standard = np.trace(gram.A @ standard.B @ gram.K @ standard.B.T)
    expected_modified = np.trace(np.diag(np.diag(gram.A)) @ modified.B @ gram.K @ modified.B.T)

    assert standard.penalty_value() == pytest.approx(expected_standard, rel=1e-10)
    assert modified.penalty_value() == pytest.approx(expected_modified, rel=1e-10)


def test_permuting_training_pairs_permutes_coefficients() -> None:
    xs, ys = _sample(25, 7, 9)
    new_x, _ = _sample(26, 4, 9)
    order = np.random.default_rng(3).permutation(7)
    sigma = default_sigma(xs)

    model = fit(xs, ys, sigma, 0.2, 0.5)
    shuffled = fit(xs.take(order), ys.take(order), sigma, 0.2, 0.5)

    assert np.allclose(shuffled.B, model.B[order], rtol=0.0, atol=1e-10)
    difference = shuffled.predict_many(new_x) - model.predict_many(new_x)
    assert np.max(np.abs(difference)) <= 1e-10


def test_variants_agree_when_covariate_gram_is_identity() -> None:
    xs, ys = _sample(27, 5, 8)
    sigma = 1e-3 * default_sigma(xs)

    standard = fit(xs, ys, sigma, 0.2, 0.3)
    modified = fit(xs, ys, sigma, 0.2, 0.3, PenaltyVariant.MODIFIED)

    assert np.allclose(standard.gram.A, np.eye(5), rtol=0.0, atol=1e-12)
    assert np.max(np.abs(standard.B - modified.B)) <= 1e-6
    assert np.max(np.abs(standard.fitted_values() - modified.fitted_values())) <= 1e-6


@pytest.mark.parametrize("variant", VARIANTS)
def test_kronecker_system_fitted_and_residual(variant: PenaltyVariant) -> None:
    xs, ys = _sample(28, 5, 7)
    system = KroneckerSystem.build(xs)
    model = system.fit(ys, 0.4, variant)

    assert np.allclose(system.fitted(model.B), model.fitted_values(), atol=1e-12)
    assert system.residual(ys.values, model.B, 0.4, variant) < 1e-8
    assert system.residual(ys.values, np.zeros_like(model.B), 0.4, variant) == pytest.approx(1.0)
    with pytest.raises(InputError):
        system.fitted(np.zeros((2, 2)))


@pytest.mark.parametrize("lam", [0.0, -1.0, np.inf])
def test_fit_rejects_nonpositive_lambda(lam: float) -> None:
    xs, ys = _sample(1, 3, 4)

    with pytest.raises(InputError, match="lambda must be positive"):
        fit(xs, ys, None, None, lam)


def test_fit_rejects_mismatched_training_sets() -> None:
    xs, ys = _sample(2, 3, 4)
    other_grid = CurveSet(Grid.equispaced(5), np.zeros((3, 5)))

    with pytest.raises(GridMismatchError):
        fit(xs, other_grid, None, None, 1.0)
    with pytest.raises(InputError):
        fit(xs, ys.take([0, 1]), None, None, 1.0)


def test_predict_rejects_curve_on_other_grid() -> None:
    xs, ys = _sample(3, 3, 4)
    model = fit(xs, ys, None, None, 1.0)

    with pytest.raises(GridMismatchError):
        model.predict(Curve(Grid.equispaced(5), np.zeros(5)))


def test_zero_coefficients_predict_zero_curves() -> None:
    xs, _ = _sample(4, 3, 6)
    model = RkhsModel(xs, np.zeros((3, 6)), 1.0, 0.2, 1.0)

    assert np.array_equal(model.predict_many(xs), np.zeros((3, 6)))


@pytest.mark.parametrize("variant", VARIANTS)
def test_influence_matrix_maps_responses_to_fitted_values(variant: PenaltyVariant) -> None:
    xs, ys = _sample(30, 4, 5)
    model = fit(xs, ys, None, None, 0.7, variant)

    hat = influence_matrix(xs, xs.grid, None, None, 0.7, variant)
    fitted = (hat @ ys.values.reshape(-1, order="F")).reshape((4, 5), order="F")

    assert np.allclose(fitted, model.fitted_values(), atol=1e-10)
    assert np.allclose(hat, hat.T, atol=1e-12)


def test_influence_matrix_matches_kronecker_formula() -> None:
    xs, _ = _sample(31, 3, 4)
    gram = gram_pair(xs, default_sigma(xs), 0.25)
    operator = np.kron(gram.K, gram.A)

    expected = operator @ np.linalg.inv(operator + 0.4 * np.eye(12))
    actual = influence_matrix(xs, xs.grid, None, 0.25, 0.4)

    assert np.allclose(actual, expected, atol=1e-10)


@pytest.mark.parametrize("variant", VARIANTS)
def test_gcv_score_matches_definition(variant: PenaltyVariant) -> None:
    xs, ys = _sample(40, 6, 8)
    hat = influence_matrix(xs, xs.grid, None, None, 0.2, variant)
    y = ys.values.reshape(-1, order="F")
    count = y.size
    residual = y - hat @ y

    expected = (residual @ residual / count) / (np.trace(np.eye(count) - hat) / count) ** 2

    assert gcv_score(xs, ys, None, None, 0.2, variant) == pytest.approx(expected, rel=1e-10)


def test_gcv_count_only_rescales_score() -> None:
    xs, ys = _sample(41, 4, 6)

    default = gcv_score(xs, ys, None, None, 0.5)
    halved = gcv_score(xs, ys, None, None, 0.5, count=12)

    assert halved == pytest.approx(default * 12 / 24)


def test_gcv_degenerate_at_vanishing_lambda() -> None:
    xs, ys = _sample(42, 4, 6)

    with pytest.raises(DegenerateGcvError):
        gcv_score(xs, ys, None, 0.05, 1e-300)


def test_gcv_select_scores_every_grid_point() -> None:
    xs, ys = _sample(43, 8, 10)
    lambdas = lambda_grid(1e-3, 1e2, 6)

    curve = gcv_select(xs, ys, None, None, lambdas)

    assert isinstance(curve, GcvCurve)
    assert curve.lambdas == lambdas
    assert curve.scores == tuple(gcv_score(xs, ys, None, None, lam) for lam in lambdas)
    assert curve.selected == lambdas[int(np.argmin(curve.scores))]
    frame = curve.to_frame("gcv")
    assert list(frame.columns) == ["lambda", "gcv"]


def test_gcv_select_single_lambda_gives_one_point() -> None:
    xs, ys = _sample(44, 4, 5)

    curve = gcv_select(xs, ys, None, None, (0.5,))

    assert len(curve.scores) == 1
    assert curve.selected == 0.5


def test_lambda_grid_endpoints_and_errors() -> None:
    grid = lambda_grid()

    assert len(grid) == 25
    assert grid[0] == 1e-4
    assert grid[-1] == 1e3
    assert all(later > earlier for earlier, later in zip(grid, grid[1:], strict=False))
    assert lambda_grid(0.3, 0.3, 1) == (0.3,)
    with pytest.raises(InputError, match="Empty lambda range"):
        lambda_grid(1.0, 0.1, 5)
    with pytest.raises(InputError, match="Empty lambda range"):
        lambda_grid(1e-3, 1.0, 0)


def test_validation_select_returns_model_at_selected_lambda() -> None:
    xs, ys = _sample(50, 10, 8)
    valid_x, valid_y = _sample(51, 6, 8)
    system = KroneckerSystem.build(xs)
    lambdas = lambda_grid(1e-2, 1e2, 5)

    curve, model = validation_select(system, ys, valid_x, valid_y, lambdas)

    assert model.lam == curve.selected
    assert len(curve.scores) == 5
    assert min(curve.scores) == curve.scores[curve.argmin_index]


def test_model_document_fields() -> None:
    xs, ys = _sample(60, 3, 4)
    document = fit(xs, ys, None, None, 2.0, PenaltyVariant.MODIFIED).to_document()

    assert document["estimator"] == "rkhs-mod"
    assert document["format_version"] == 1
    assert document["variant"] == "modified"
    assert document["lambda"] == 2.0
    assert len(document["B"]) == 3
    assert len(document["grid"]) == 4
