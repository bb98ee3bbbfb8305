"""Penalized integral linear model y(t) = alpha(t) + int beta(s, t) x(s) ds.

alpha(t) = sum_q a_q B_q(t) and beta(s, t) = sum_pq c_pq B_p(s) B_q(t) share one
B-spline basis. Stacking Theta = [a^T; C] gives fitted values
Z~ Theta Phi^T with Z~ = [1, X W Phi], so the normal equations are

    [(Phi^T Phi) kron (Z~^T Z~) + lambda Omega] vec(Theta) = vec(Z~^T Y Phi)

where Omega encodes int int (beta_ss^2 + beta_tt^2). alpha is not penalized.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, solve

from funcreg.core.base import EstimatorName, FittedEstimator
from funcreg.core.curve import Curve, CurveSet, Grid, require_same_grid
from funcreg.core.errors import InputError, SolverError
from funcreg.estimators.bspline import BsplineBasis
from funcreg.estimators.rkhs import (
    FORMAT_VERSION,
    ValidationCurve,
    _check_scan_grid,
    _scan,
    mean_squared_error,
)

logger = logging.getLogger(__name__)


def _integral_scores(xs: CurveSet, basis_values: np.ndarray) -> np.ndarray:
    """z_ip = trapezoid integral of B_p(s) x_i(s)."""
    return xs.values @ (xs.grid.trapezoid_weights[:, None] * basis_values)


def _padded(matrix: np.ndarray) -> np.ndarray:
    padded = np.zeros((matrix.shape[0] + 1, matrix.shape[1] + 1))
    padded[1:, 1:] = matrix
    return padded


@dataclass(frozen=True, eq=False)
class LinearModel(FittedEstimator):
    """Fitted integral linear model."""

    grid: Grid
    basis: BsplineBasis
    alpha_coeffs: np.ndarray
    beta_coeffs: np.ndarray
    penalty_lambda: float

    estimator = EstimatorName.LINEAR

    def __post_init__(self) -> None:
        alpha = np.array(self.alpha_coeffs, dtype=float)
        beta = np.array(self.beta_coeffs, dtype=float)
        count = self.basis.count
        if alpha.shape != (count,) or beta.shape != (count, count):
            raise InputError(
                f"Coefficients must be ({count},) and ({count}, {count}); "
                f"got {alpha.shape} and {beta.shape}"
            )
        if self.penalty_lambda < 0.0:
            raise InputError(f"penalty_lambda must be nonnegative, got {self.penalty_lambda!r}")
        alpha.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "alpha_coeffs", alpha)
        object.__setattr__(self, "beta_coeffs", beta)

    @cached_property
    def _basis_values(self) -> np.ndarray:
        return self.basis.design_matrix(self.grid.points)

    def _predict_values(self, xs: CurveSet) -> np.ndarray:
        scores = _integral_scores(xs, self._basis_values)
        return (self.alpha_coeffs[None, :] + scores @ self.beta_coeffs) @ self._basis_values.T

    def alpha(self) -> Curve:
        """Intercept curve on the model grid."""
        return Curve(self.grid, self._basis_values @ self.alpha_coeffs)

    def beta_surface(self) -> np.ndarray:
        """beta(s_k, t_l) on the model grid, rows indexed by s."""
        return self._basis_values @ self.beta_coeffs @ self._basis_values.T

    def roughness(self) -> float:
        """int int beta_ss^2 + beta_tt^2."""
        mass, rough, beta = self.basis.mass_matrix, self.basis.roughness_matrix, self.beta_coeffs
        return float(np.sum((rough @ beta @ mass) * beta) + np.sum((mass @ beta @ rough) * beta))

    def objective(self, xs: CurveSet, ys: CurveSet) -> float:
        """Residual sum of squares over curves and grid points plus the penalty."""
        require_same_grid(xs.grid, ys.grid)
        residual = ys.values - self.predict_many(xs)
        return float(np.sum(residual**2) + self.penalty_lambda * self.roughness())

    def to_document(self) -> dict[str, Any]:
        return {
            "estimator": str(EstimatorName.LINEAR),
            "format_version": FORMAT_VERSION,
            "order": self.basis.order,
            "breakpoints": self.basis.breakpoints.tolist(),
            "grid": self.grid.points.tolist(),
            "alpha_coeffs": self.alpha_coeffs.tolist(),
            "beta_coeffs": self.beta_coeffs.tolist(),
            "penalty_lambda": float(self.penalty_lambda),
        }


@dataclass(frozen=True, eq=False)
class LinearProblem:
    """Normal-equation pieces for one training set; ``fit`` solves for any penalty."""

    xs: CurveSet
    ys: CurveSet
    basis: BsplineBasis

    def __post_init__(self) -> None:
        require_same_grid(self.xs.grid, self.ys.grid)
        if len(self.xs) != len(self.ys):
            raise InputError(
                f"Covariates have {len(self.xs)} curves but responses have {len(self.ys)}"
            )

    @cached_property
    def _pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        basis_values = self.basis.design_matrix(self.xs.grid.points)
        design = np.hstack(
            [np.ones((len(self.xs), 1)), _integral_scores(self.xs, basis_values)]
        )
        gram = np.kron(basis_values.T @ basis_values, design.T @ design)
        rhs = (design.T @ self.ys.values @ basis_values).reshape(-1, order="F")
        mass, rough = self.basis.mass_matrix, self.basis.roughness_matrix
        penalty = np.kron(mass, _padded(rough)) + np.kron(rough, _padded(mass))
        return gram, rhs, penalty

    def fit(self, penalty_lambda: float) -> LinearModel:
        penalty_lambda = float(penalty_lambda)
        if not np.isfinite(penalty_lambda) or penalty_lambda < 0.0:
            raise InputError(f"penalty_lambda must be nonnegative, got {penalty_lambda!r}")
        gram, rhs, penalty = self._pieces
        matrix = gram + penalty_lambda * penalty
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", LinAlgWarning)
                theta = solve(matrix, rhs, assume_a="pos")
        except (LinAlgError, LinAlgWarning) as exc:
            hint = "; use a positive penalty" if penalty_lambda == 0.0 else ""
            raise SolverError(
                f"Singular normal equations at penalty_lambda={penalty_lambda!r}{hint}",
                condition=float(np.linalg.cond(matrix)),
            ) from exc
        count = self.basis.count
        theta = theta.reshape((count + 1, count), order="F")
        logger.debug("Fitted linear model: penalty_lambda=%g", penalty_lambda)
        return LinearModel(
            grid=self.xs.grid,
            basis=self.basis,
            alpha_coeffs=theta[0],
            beta_coeffs=theta[1:],
            penalty_lambda=penalty_lambda,
        )


def linear_fit(
    xs: CurveSet,
    ys: CurveSet,
    basis: BsplineBasis,
    penalty_lambda: float,
) -> LinearModel:
    """Minimize the penalized least-squares criterion over (alpha, beta)."""
    return LinearProblem(xs, ys, basis).fit(penalty_lambda)


def linear_predict(model: LinearModel, x_new: Curve) -> Curve:
    """alpha(t_l) + trapezoid integral of beta(s, t_l) x_new(s)."""
    return model.predict(x_new)


def linear_validation_select(
    problem: LinearProblem,
    valid_x: CurveSet,
    valid_y: CurveSet,
    lambda_grid: Sequence[float],
) -> tuple[ValidationCurve, LinearModel]:
    """Pick the penalty by validation MSE."""
    lambdas = _check_scan_grid(lambda_grid)
    models: dict[float, LinearModel] = {}

    def score(lam: float) -> float:
        models[lam] = problem.fit(lam)
        return mean_squared_error(models[lam].predict_many(valid_x), valid_y.values)

    curve = ValidationCurve.from_scores(lambdas, _scan(lambdas, score, "Linear validation"))
    return curve, models[curve.selected]
