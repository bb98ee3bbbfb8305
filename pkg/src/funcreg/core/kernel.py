"""Gaussian kernels, Gram matrices and bandwidth heuristics.

The operator-valued kernel is K(x, y) = a(||x - y||) I. Only its scalar part
a(.) is stored; the identity operator is implicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh
from scipy.spatial.distance import pdist

from funcreg.core.curve import CurveSet, Grid, pairwise_distances
from funcreg.core.errors import BandwidthError, InputError

SYMMETRY_TOL = 1e-10
PSD_RELATIVE_TOL = 1e-10


@dataclass(frozen=True)
class ScalarKernel:
    """Gaussian function exp(-d^2 / (2 h^2)) of a distance d."""

    bandwidth: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0.0:
            raise BandwidthError(f"Kernel bandwidth must be positive, got {self.bandwidth!r}")

    def __call__(self, distance: float | np.ndarray) -> float | np.ndarray:
        distance = np.asarray(distance, dtype=float)
        values = np.exp(-(distance**2) / (2.0 * self.bandwidth**2))
        return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class OperatorKernel:
    """Scalar-times-identity kernel over curves, a(||x - y||_2) I."""

    scalar: ScalarKernel

    @classmethod
    def gaussian(cls, sigma: float) -> OperatorKernel:
        return cls(ScalarKernel(sigma))

    @property
    def sigma(self) -> float:
        return self.scalar.bandwidth


@dataclass(frozen=True, eq=False)
class GramPair:
    """Covariate Gram matrix A (n x n) and grid Gram matrix K (T x T)."""

    A: np.ndarray
    K: np.ndarray

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def size(self) -> int:
        return int(self.K.shape[0])


def eval_scalar(kernel: ScalarKernel, distance: float) -> float:
    """Evaluate the scalar Gaussian kernel at a nonnegative distance."""
    if distance < 0.0:
        raise InputError(f"Kernel distance must be nonnegative, got {distance!r}")
    return kernel(distance)


def covariate_gram(xs: CurveSet, kernel: OperatorKernel) -> np.ndarray:
    """A_ij = a(||x_i - x_j||_2)."""
    gram = kernel.scalar(pairwise_distances(xs))
    np.fill_diagonal(gram, 1.0)
    return gram


def cross_gram(xs_new: CurveSet, xs_train: CurveSet, kernel: OperatorKernel) -> np.ndarray:
    """Rows a(||x_new - x_i||_2) for each new curve against the training curves."""
    return kernel.scalar(pairwise_distances(xs_new, xs_train))


def grid_gram(grid: Grid, kernel: ScalarKernel) -> np.ndarray:
    """K_lm = k(t_l, t_m)."""
    points = grid.points
    return kernel(np.abs(points[:, None] - points[None, :]))


def gram_pair(xs: CurveSet, sigma: float, sigma_prime: float) -> GramPair:
    """Build both Gram matrices used by the RKHS solver."""
    return GramPair(
        A=covariate_gram(xs, OperatorKernel.gaussian(sigma)),
        K=grid_gram(xs.grid, ScalarKernel(sigma_prime)),
    )


def default_sigma(xs: CurveSet) -> float:
    """Mean L2 distance over unordered pairs of distinct curve indices."""
    if len(xs) < 2:
        raise BandwidthError("Default sigma needs at least 2 curves; pass an explicit bandwidth")
    root_weights = np.sqrt(xs.grid.trapezoid_weights)
    sigma = float(np.mean(pdist(xs.values * root_weights)))
    if sigma <= 0.0:
        raise BandwidthError("All curves are identical; pass an explicit bandwidth")
    return sigma


def default_sigma_prime(grid: Grid) -> float:
    """Mean |t_l - t_m| over unordered pairs l < m."""
    return float(np.mean(pdist(grid.points[:, None])))


def check_positive_definite(matrix: np.ndarray) -> float:
    """Return the smallest eigenvalue of a symmetric matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"Expected a square matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=SYMMETRY_TOL):
        raise InputError("Matrix is not symmetric")
    return float(eigvalsh(matrix, subset_by_index=[0, 0])[0])


def is_nonnegative_definite(matrix: np.ndarray) -> bool:
    """True when the smallest eigenvalue is above -1e-10 times the largest."""
    eigenvalues = eigvalsh(np.asarray(matrix, dtype=float))
    return bool(eigenvalues[0] >= -PSD_RELATIVE_TOL * max(eigenvalues[-1], 0.0))
