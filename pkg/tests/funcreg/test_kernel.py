from __future__ import annotations

import numpy as np
import pytest

from funcreg.core.curve import CurveSet, Grid
from funcreg.core.errors import BandwidthError, InputError
from funcreg.core.kernel import (
    OperatorKernel,
    ScalarKernel,
    check_positive_definite,
    covariate_gram,
    cross_gram,
    default_sigma,
    default_sigma_prime,
    eval_scalar,
    gram_pair,
    grid_gram,
    is_nonnegative_definite,
)
from funcreg.sim import gen_brownian


def _brownian_set(rng: np.random.Generator, count: int, grid: Grid) -> CurveSet:
    return CurveSet.from_curves([gen_brownian(rng, grid) for _ in range(count)])


def test_scalar_kernel_values() -> None:
    kernel = ScalarKernel(2.0)

    assert eval_scalar(kernel, 0.0) == 1.0
    assert eval_scalar(kernel, 2.0) == pytest.approx(np.exp(-0.5))
    assert np.allclose(kernel(np.array([0.0, 2.0])), [1.0, np.exp(-0.5)])


@pytest.mark.parametrize("bandwidth", [0.0, -1.0, np.inf, np.nan])
def test_scalar_kernel_rejects_bad_bandwidth(bandwidth: float) -> None:
    with pytest.raises(BandwidthError):
        ScalarKernel(bandwidth)


def test_eval_scalar_rejects_negative_distance() -> None:
    with pytest.raises(InputError):
        eval_scalar(ScalarKernel(1.0), -0.1)


def test_covariate_gram_is_symmetric_with_unit_diagonal() -> None:
    rng = np.random.default_rng(11)
    xs = _brownian_set(rng, 6, Grid.equispaced(20))

    gram = covariate_gram(xs, OperatorKernel.gaussian(default_sigma(xs)))

    assert np.array_equal(gram, gram.T)
    assert np.array_equal(np.diag(gram), np.ones(6))
    assert np.all((gram > 0.0) & (gram <= 1.0))


def test_cross_gram_on_training_set_matches_covariate_gram() -> None:
    rng = np.random.default_rng(12)
    xs = _brownian_set(rng, 5, Grid.equispaced(12))
    kernel = OperatorKernel.gaussian(1.3)

    assert np.allclose(cross_gram(xs, xs, kernel), covariate_gram(xs, kernel), atol=1e-14)


def test_grid_gram_depends_only_on_point_distance() -> None:
    grid = Grid.equispaced(5)
    gram = grid_gram(grid, ScalarKernel(0.5))

    assert gram.shape == (5, 5)
    assert gram[0, 1] == pytest.approx(gram[3, 4])
    assert gram[0, 4] == pytest.approx(np.exp(-2.0))


def test_default_bandwidths() -> None:
    grid = Grid.equispaced(3)
    xs = CurveSet(grid, np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [3.0, 3.0, 3.0]]))

    # pair distances 1, 3, 2 on the unit interval
    assert default_sigma(xs) == pytest.approx(2.0)
    # |t_l - t_m| over pairs: 0.5, 1.0, 0.5
    assert default_sigma_prime(grid) == pytest.approx(2.0 / 3.0)


def test_default_sigma_undefined_for_single_or_identical_curves() -> None:
    grid = Grid.equispaced(4)

    with pytest.raises(BandwidthError):
        default_sigma(CurveSet(grid, np.ones((1, 4))))
    with pytest.raises(BandwidthError):
        default_sigma(CurveSet(grid, np.ones((3, 4))))


def test_gram_pair_shapes() -> None:
    rng = np.random.default_rng(13)
    xs = _brownian_set(rng, 4, Grid.equispaced(9))

    gram = gram_pair(xs, 1.0, 0.2)

    assert (gram.n, gram.size) == (4, 9)
    assert gram.A.shape == (4, 4)
    assert gram.K.shape == (9, 9)


def test_covariate_gram_positive_definite_for_distinct_brownian_curves() -> None:
    rng = np.random.default_rng(2024)
    grid = Grid.equispaced(50)
    for _ in range(100):
        xs = _brownian_set(rng, int(rng.integers(2, 11)), grid)
        gram = covariate_gram(xs, OperatorKernel.gaussian(default_sigma(xs)))
        assert check_positive_definite(gram) > 0.0


def test_hadamard_products_with_psd_matrices_stay_nonnegative_definite() -> None:
    rng = np.random.default_rng(7)
    grid = Grid.equispaced(30)
    for _ in range(50):
        count = int(rng.integers(2, 11))
        xs = _brownian_set(rng, count, grid)
        gram = covariate_gram(xs, OperatorKernel.gaussian(default_sigma(xs)))
        factor = rng.normal(size=(count, count))
        assert is_nonnegative_definite(gram * (factor @ factor.T))


def test_check_positive_definite_rejects_asymmetric_matrix() -> None:
    with pytest.raises(InputError):
        check_positive_definite(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_reordering_curves_permutes_gram_rows_and_columns_together() -> None:
    rng = np.random.default_rng(14)
    xs = _brownian_set(rng, 7, Grid.equispaced(25))
    order = rng.permutation(7)
    kernel = OperatorKernel.gaussian(default_sigma(xs))

    gram = covariate_gram(xs, kernel)
    reordered = covariate_gram(xs.take(order), kernel)

    assert np.allclose(reordered, gram[np.ix_(order, order)], rtol=0.0, atol=1e-14)


def test_scalar_kernel_decreases_with_distance() -> None:
    kernel = ScalarKernel(0.7)
    distances = np.linspace(0.0, 3.0, 40)

    values = [eval_scalar(kernel, float(distance)) for distance in distances]

    assert values[0] == 1.0
    assert all(later < earlier for earlier, later in zip(values, values[1:], strict=False))


@pytest.mark.parametrize("size", [2, 5, 50])
def test_default_sigma_prime_closed_form(size: int) -> None:
    expected = (size + 1) / (3.0 * (size - 1))

    assert default_sigma_prime(Grid.equispaced(size)) == pytest.approx(expected, rel=0.0, abs=1e-12)
