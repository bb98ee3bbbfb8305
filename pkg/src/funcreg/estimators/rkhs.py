"""Operator-valued RKHS estimator for curve-on-curve regression.

The discretized problem is

    min_B  Tr((Y - ABK)(Y - ABK)^T) + lambda * penalty(B)

with penalty Tr(ABKB^T) (standard) or Tr(DBKB^T), D = diag(a_ii)
(modified). Vectorization is column-stacking, so vec(ABK) = (K kron A) vec(B)
for symmetric K.

The default solver diagonalizes A = V M V^T and K = U L U^T once; every
lambda then costs two small matrix products. A dense reference solver over
the full nT x nT system is kept for validation.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import Any

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, LinAlgWarning, eigh, solve

from funcreg.core.base import EstimatorName, FittedEstimator
from funcreg.core.curve import Curve, CurveSet, Grid, require_same_grid
from funcreg.core.errors import (
    DegenerateGcvError,
    InputError,
    NumericalError,
    SolverError,
)
from funcreg.core.kernel import (
    GramPair,
    OperatorKernel,
    cross_gram,
    default_sigma,
    default_sigma_prime,
    gram_pair,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
RESIDUAL_TOL = 1e-8
GCV_TRACE_TOL = 1e-12
DEFAULT_LAMBDA_MIN = 1e-4
DEFAULT_LAMBDA_MAX = 1e3
DEFAULT_LAMBDA_COUNT = 25


class PenaltyVariant(StrEnum):
    """Penalty applied to the representer coefficients."""

    STANDARD = "standard"
    MODIFIED = "modified"


class SolveMethod(StrEnum):
    """Linear-system strategy used by ``fit``."""

    EIGEN = "eigen"
    DENSE = "dense"


def check_lambda(lam: float) -> float:
    """Return ``lam`` as float, rejecting non-positive values."""
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise InputError(f"lambda must be positive, got {lam!r}")
    return lam


def lambda_grid(
    lambda_min: float = DEFAULT_LAMBDA_MIN,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    count: int = DEFAULT_LAMBDA_COUNT,
) -> tuple[float, ...]:
    """Logarithmically spaced smoothing grid, inclusive of both ends."""
    if count < 1 or lambda_min <= 0.0 or lambda_max < lambda_min:
        raise InputError(
            f"Empty lambda range: min={lambda_min!r}, max={lambda_max!r}, count={count!r}"
        )
    if count == 1:
        return (float(lambda_min),)
    grid = np.logspace(np.log10(lambda_min), np.log10(lambda_max), count)
    grid[0], grid[-1] = lambda_min, lambda_max
    return tuple(float(value) for value in grid)


def _check_scan_grid(lambdas: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(value) for value in lambdas)
    if not values:
        raise InputError("Lambda grid must not be empty")
    if any(not np.isfinite(value) or value <= 0.0 for value in values):
        raise InputError("Lambda grid values must be positive")
    if any(later <= earlier for earlier, later in zip(values, values[1:], strict=False)):
        raise InputError("Lambda grid must be strictly increasing")
    return values


def _check_pair(xs: CurveSet, ys: CurveSet) -> None:
    require_same_grid(xs.grid, ys.grid)
    if len(xs) != len(ys):
        raise InputError(f"Covariates have {len(xs)} curves but responses have {len(ys)}")


def _conforming(gram: GramPair, Y: np.ndarray, B: np.ndarray | None = None) -> None:
    expected = (gram.n, gram.size)
    if Y.shape != expected or (B is not None and B.shape != expected):
        raise InputError(
            f"Dimension mismatch: expected {expected}, got Y {Y.shape}"
            + ("" if B is None else f" and B {B.shape}")
        )


def objective(
    gram: GramPair,
    Y: np.ndarray,
    B: np.ndarray,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> float:
    """Evaluate the matrix-form penalized objective at a candidate B."""
    Y = np.asarray(Y, dtype=float)
    B = np.asarray(B, dtype=float)
    _conforming(gram, Y, B)
    residual = Y - gram.A @ B @ gram.K
    if variant is PenaltyVariant.STANDARD:
        penalty = np.sum((gram.A @ B @ gram.K) * B)
    else:
        penalty = np.sum((np.diag(gram.A)[:, None] * B @ gram.K) * B)
    return float(np.sum(residual**2) + lam * penalty)


def system_residual(
    gram: GramPair,
    Y: np.ndarray,
    B: np.ndarray,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> float:
    """Relative infinity-norm residual of the stationarity system at B."""
    A, K = gram.A, gram.K
    if variant is PenaltyVariant.STANDARD:
        residual = A @ B @ K + lam * B - Y
        rhs = Y
    else:
        residual = A.T @ A @ B @ K + lam * np.diag(A)[:, None] * B - A.T @ Y
        rhs = A.T @ Y
    scale = np.max(np.abs(rhs)) if rhs.size else 0.0
    error = float(np.max(np.abs(residual))) if residual.size else 0.0
    return error / scale if scale > 0.0 else error


def dense_system(
    gram: GramPair,
    Y: np.ndarray,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> tuple[np.ndarray, np.ndarray]:
    """Return the nT x nT system matrix and right-hand side."""
    A, K = gram.A, gram.K
    identity = np.eye(gram.n * gram.size)
    if variant is PenaltyVariant.STANDARD:
        return np.kron(K, A) + lam * identity, Y.reshape(-1, order="F")
    penalty = np.kron(np.eye(gram.size), np.diag(np.diag(A)))
    matrix = np.kron(K, A.T @ A) + lam * penalty
    return matrix, (A.T @ Y).reshape(-1, order="F")


def solve_dense(
    gram: GramPair,
    Y: np.ndarray,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> np.ndarray:
    """Solve the full system with one symmetric positive definite factorization."""
    matrix, rhs = dense_system(gram, Y, lam, variant)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            coefficients = solve(matrix, rhs, assume_a="pos")
    except (LinAlgError, LinAlgWarning) as exc:
        raise SolverError(
            f"Dense solve failed at lambda={lam!r}: {exc}", condition=float(np.linalg.cond(matrix))
        ) from exc
    return coefficients.reshape((gram.n, gram.size), order="F")


@dataclass(frozen=True, eq=False)
class KroneckerSystem:
    """Eigen-structure of (A, K) for a fixed training set and bandwidths."""

    train_x: CurveSet
    sigma: float
    sigma_prime: float
    gram: GramPair
    a_values: np.ndarray
    a_vectors: np.ndarray
    k_values: np.ndarray
    k_vectors: np.ndarray

    @classmethod
    def build(
        cls,
        xs: CurveSet,
        sigma: float | None = None,
        sigma_prime: float | None = None,
    ) -> KroneckerSystem:
        """Compute Gram matrices and their eigendecompositions."""
        sigma = default_sigma(xs) if sigma is None else float(sigma)
        sigma_prime = default_sigma_prime(xs.grid) if sigma_prime is None else float(sigma_prime)
        gram = gram_pair(xs, sigma, sigma_prime)
        a_values, a_vectors = eigh(gram.A)
        k_values, k_vectors = eigh(gram.K)
        return cls(xs, sigma, sigma_prime, gram, a_values, a_vectors, k_values, k_vectors)

    @cached_property
    def unit_diagonal(self) -> bool:
        return bool(np.allclose(np.diag(self.gram.A), 1.0, rtol=0.0, atol=1e-14))

    def spectrum(self, variant: PenaltyVariant) -> np.ndarray:
        """Eigenvalues of the data operator, arranged n x T."""
        mu = self.a_values[:, None]
        kappa = self.k_values[None, :]
        if variant is PenaltyVariant.STANDARD:
            return mu * kappa
        return mu**2 * kappa

    def rotate(self, Y: np.ndarray) -> np.ndarray:
        """Coordinates of vec(Y) in the eigenbasis U kron V."""
        return self.a_vectors.T @ Y @ self.k_vectors

    def solve(
        self,
        Y: np.ndarray,
        lam: float,
        variant: PenaltyVariant = PenaltyVariant.STANDARD,
    ) -> np.ndarray:
        """Return the coefficient matrix B for one lambda."""
        lam = check_lambda(lam)
        Y = np.asarray(Y, dtype=float)
        _conforming(self.gram, Y)
        if variant is PenaltyVariant.MODIFIED and not self.unit_diagonal:
            return solve_dense(self.gram, Y, lam, variant)

        denominator = self.spectrum(variant) + lam
        smallest = float(np.min(np.abs(denominator)))
        if not np.all(np.isfinite(denominator)) or np.min(denominator) <= 0.0:
            condition = float(np.max(np.abs(denominator)) / smallest) if smallest else np.inf
            raise SolverError(f"Singular system at lambda={lam!r}", condition=condition)

        rotated = self.rotate(Y)
        if variant is PenaltyVariant.MODIFIED:
            rotated = self.a_values[:, None] * rotated
        return self.a_vectors @ (rotated / denominator) @ self.k_vectors.T

    def fitted(self, B: np.ndarray) -> np.ndarray:
        """Fitted response values ABK for a coefficient matrix."""
        B = np.asarray(B, dtype=float)
        _conforming(self.gram, B)
        return self.gram.A @ B @ self.gram.K

    def residual(
        self,
        Y: np.ndarray,
        B: np.ndarray,
        lam: float,
        variant: PenaltyVariant = PenaltyVariant.STANDARD,
    ) -> float:
        """Relative stationarity residual of B (see ``system_residual``)."""
        return system_residual(self.gram, np.asarray(Y, dtype=float), B, lam, variant)

    def condition(self, lam: float, variant: PenaltyVariant = PenaltyVariant.STANDARD) -> float:
        """Spectral condition number of the system matrix."""
        denominator = np.abs(self.spectrum(variant) + lam)
        return float(np.max(denominator) / np.min(denominator))

    def fit(
        self,
        ys: CurveSet,
        lam: float,
        variant: PenaltyVariant = PenaltyVariant.STANDARD,
        method: SolveMethod = SolveMethod.EIGEN,
    ) -> RkhsModel:
        """Solve for B and verify the stationarity residual."""
        _check_pair(self.train_x, ys)
        lam = check_lambda(lam)
        Y = ys.values
        if method is SolveMethod.DENSE:
            B = solve_dense(self.gram, Y, lam, variant)
        else:
            B = self.solve(Y, lam, variant)

        residual = self.residual(Y, B, lam, variant)
        if not np.isfinite(residual) or residual >= RESIDUAL_TOL:
            raise SolverError(
                f"Solver residual {residual:.3e} exceeds tolerance at lambda={lam!r}",
                condition=self.condition(lam, variant),
            )
        logger.debug("Fitted %s RKHS model: lambda=%g residual=%.2e", variant, lam, residual)
        return RkhsModel(
            train_x=self.train_x,
            B=B,
            sigma=self.sigma,
            sigma_prime=self.sigma_prime,
            lam=lam,
            variant=variant,
        )

    def influence_eigenvalues(
        self, lam: float, variant: PenaltyVariant = PenaltyVariant.STANDARD
    ) -> np.ndarray:
        spectrum = self.spectrum(variant)
        return spectrum / (spectrum + check_lambda(lam))

    def influence_matrix(
        self, lam: float, variant: PenaltyVariant = PenaltyVariant.STANDARD
    ) -> np.ndarray:
        """Dense nT x nT influence matrix A(lambda)."""
        basis = np.kron(self.k_vectors, self.a_vectors)
        weights = self.influence_eigenvalues(lam, variant).reshape(-1, order="F")
        return (basis * weights) @ basis.T

    def gcv(
        self,
        Y: np.ndarray,
        lam: float,
        variant: PenaltyVariant = PenaltyVariant.STANDARD,
        count: float | None = None,
    ) -> float:
        """V(lambda) with normalizing count N (default nT)."""
        Y = np.asarray(Y, dtype=float)
        _conforming(self.gram, Y)
        shrink = 1.0 - self.influence_eigenvalues(lam, variant)
        count = float(Y.size if count is None else count)
        residual_sq = float(np.sum((shrink * self.rotate(Y)) ** 2))
        trace = float(np.sum(shrink))
        if trace / count <= GCV_TRACE_TOL:
            raise DegenerateGcvError(
                f"Tr(I - A(lambda)) vanishes at lambda={lam!r}; lambda is effectively 0"
            )
        return (residual_sq / count) / (trace / count) ** 2


@dataclass(frozen=True, eq=False)
class RkhsModel(FittedEstimator):
    """Fitted RKHS estimator: F(x) = sum_i a(||x_i - x||) alpha_i."""

    train_x: CurveSet
    B: np.ndarray
    sigma: float
    sigma_prime: float
    lam: float
    variant: PenaltyVariant = PenaltyVariant.STANDARD

    def __post_init__(self) -> None:
        B = np.array(self.B, dtype=float)
        if B.shape != self.train_x.values.shape:
            raise InputError(
                f"Coefficient matrix must be {self.train_x.values.shape}, got {B.shape}"
            )
        if not np.all(np.isfinite(B)):
            raise SolverError("Coefficient matrix has non-finite entries")
        check_lambda(self.lam)
        B.flags.writeable = False
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "variant", PenaltyVariant(self.variant))

    @property
    def estimator(self) -> EstimatorName:
        if self.variant is PenaltyVariant.MODIFIED:
            return EstimatorName.RKHS_MODIFIED
        return EstimatorName.RKHS

    @property
    def grid(self) -> Grid:
        return self.train_x.grid

    @cached_property
    def gram(self) -> GramPair:
        return gram_pair(self.train_x, self.sigma, self.sigma_prime)

    @cached_property
    def _coefficient_curves(self) -> np.ndarray:
        # alpha_i evaluated on the grid: row i is sum_l b^i_l k(t_l, .)
        return self.B @ self.gram.K

    def _predict_values(self, xs: CurveSet) -> np.ndarray:
        weights = cross_gram(xs, self.train_x, OperatorKernel.gaussian(self.sigma))
        return weights @ self._coefficient_curves

    def fitted_values(self) -> np.ndarray:
        """Matrix-path fitted values ABK."""
        return self.gram.A @ self._coefficient_curves

    def penalty_value(self) -> float:
        """Tr(ABKB^T) for the standard variant, Tr(DBKB^T) for the modified one."""
        if self.variant is PenaltyVariant.STANDARD:
            weighted = self.gram.A @ self._coefficient_curves
        else:
            weighted = np.diag(self.gram.A)[:, None] * self._coefficient_curves
        return float(np.sum(weighted * self.B))

    def objective(self, ys: CurveSet) -> float:
        _check_pair(self.train_x, ys)
        return objective(self.gram, ys.values, self.B, self.lam, self.variant)

    def to_document(self) -> dict[str, Any]:
        return {
            "estimator": str(self.estimator),
            "format_version": FORMAT_VERSION,
            "variant": str(self.variant),
            "sigma": float(self.sigma),
            "sigma_prime": float(self.sigma_prime),
            "lambda": float(self.lam),
            "grid": self.grid.points.tolist(),
            "train_x": self.train_x.values.tolist(),
            "B": self.B.tolist(),
        }


def fit(
    xs: CurveSet,
    ys: CurveSet,
    sigma: float | None,
    sigma_prime: float | None,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
    *,
    method: SolveMethod = SolveMethod.EIGEN,
) -> RkhsModel:
    """Fit the RKHS estimator; ``None`` bandwidths use the mean-distance heuristics."""
    _check_pair(xs, ys)
    check_lambda(lam)
    return KroneckerSystem.build(xs, sigma, sigma_prime).fit(ys, lam, variant, method)


def predict(model: RkhsModel, x_new: Curve) -> Curve:
    """Predict one response curve (see ``FittedEstimator.predict``)."""
    return model.predict(x_new)


def influence_matrix(
    xs: CurveSet,
    grid: Grid,
    sigma: float | None,
    sigma_prime: float | None,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> np.ndarray:
    """A(lambda) = (K kron A)[K kron A + lambda I]^-1."""
    require_same_grid(xs.grid, grid)
    return KroneckerSystem.build(xs, sigma, sigma_prime).influence_matrix(lam, variant)


def gcv_score(
    xs: CurveSet,
    ys: CurveSet,
    sigma: float | None,
    sigma_prime: float | None,
    lam: float,
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
    count: float | None = None,
) -> float:
    """Generalized cross-validation score V(lambda)."""
    _check_pair(xs, ys)
    return KroneckerSystem.build(xs, sigma, sigma_prime).gcv(ys.values, lam, variant, count)


@dataclass(frozen=True)
class LambdaScan:
    """Scores over an increasing lambda grid with the first minimizer marked."""

    lambdas: tuple[float, ...]
    scores: tuple[float, ...]
    argmin_index: int

    def __post_init__(self) -> None:
        if not self.lambdas or len(self.lambdas) != len(self.scores):
            raise InputError("Scan needs equally long, nonempty lambda and score sequences")
        if any(score < self.scores[self.argmin_index] for score in self.scores):
            raise InputError("argmin_index does not point at a minimal score")

    @classmethod
    def from_scores(cls, lambdas: Sequence[float], scores: Sequence[float]):
        scores = tuple(float(score) for score in scores)
        return cls(tuple(lambdas), scores, int(np.argmin(scores)))

    @property
    def selected(self) -> float:
        return self.lambdas[self.argmin_index]

    def to_frame(self, score_column: str) -> pd.DataFrame:
        return pd.DataFrame({"lambda": self.lambdas, score_column: self.scores})


class GcvCurve(LambdaScan):
    """V(lambda) evaluated over a smoothing grid."""


class ValidationCurve(LambdaScan):
    """Mean squared validation error over a smoothing grid."""


def _scan(
    lambdas: tuple[float, ...], score: Callable[[float], float], label: str
) -> list[float]:
    scores = []
    for lam in lambdas:
        try:
            scores.append(score(lam))
        except NumericalError as exc:
            logger.debug("%s failed at lambda=%g: %s", label, lam, exc)
            scores.append(np.inf)
    if not np.any(np.isfinite(scores)):
        raise DegenerateGcvError(f"{label} failed at every lambda in the grid")
    return scores


def gcv_select(
    xs: CurveSet,
    ys: CurveSet,
    sigma: float | None,
    sigma_prime: float | None,
    lambda_grid: Sequence[float],
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
    count: float | None = None,
) -> GcvCurve:
    """Evaluate V(lambda) on the grid; failed points score +inf."""
    _check_pair(xs, ys)
    lambdas = _check_scan_grid(lambda_grid)
    system = KroneckerSystem.build(xs, sigma, sigma_prime)
    scores = _scan(lambdas, lambda lam: system.gcv(ys.values, lam, variant, count), "GCV")
    return GcvCurve.from_scores(lambdas, scores)


def mean_squared_error(predicted: np.ndarray, observed: np.ndarray) -> float:
    """Mean over curves and grid points of the squared difference."""
    return float(np.mean((np.asarray(predicted) - np.asarray(observed)) ** 2))


def validation_select(
    system: KroneckerSystem,
    ys: CurveSet,
    valid_x: CurveSet,
    valid_y: CurveSet,
    lambda_grid: Sequence[float],
    variant: PenaltyVariant = PenaltyVariant.STANDARD,
) -> tuple[ValidationCurve, RkhsModel]:
    """Pick lambda by validation MSE; return the curve and the selected model."""
    _check_pair(valid_x, valid_y)
    lambdas = _check_scan_grid(lambda_grid)
    models: dict[float, RkhsModel] = {}

    def score(lam: float) -> float:
        models[lam] = system.fit(ys, lam, variant)
        return mean_squared_error(models[lam].predict_many(valid_x), valid_y.values)

    curve = ValidationCurve.from_scores(lambdas, _scan(lambdas, score, "Validation"))
    return curve, models[curve.selected]
