"""Sampled-function data model: grids, curves, curve sets and L2 geometry.

Every curve lives on an equispaced grid over [0, 1]. Integrals use the
composite trapezoid rule on that grid.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial.distance import cdist

from funcreg.core.errors import CurveValidationError, GridMismatchError

EQUISPACING_TOL = 1e-12


def _readonly(values: object) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered, equispaced sampling locations covering [0, 1]."""

    points: np.ndarray

    def __post_init__(self) -> None:
        points = _readonly(self.points)
        if points.ndim != 1 or points.size < 2:
            raise CurveValidationError("Grid needs at least 2 points")
        if not np.all(np.isfinite(points)):
            raise CurveValidationError("Grid points must be finite")
        if points[0] != 0.0 or points[-1] != 1.0:
            raise CurveValidationError(
                f"Grid must start at 0 and end at 1, got [{points[0]!r}, {points[-1]!r}]"
            )
        steps = np.diff(points)
        if np.any(steps <= 0.0):
            raise CurveValidationError("Grid points must be strictly increasing")
        if np.max(np.abs(steps - 1.0 / (points.size - 1))) >= EQUISPACING_TOL:
            raise CurveValidationError("Grid points must be equispaced")
        object.__setattr__(self, "points", points)

    @classmethod
    def equispaced(cls, size: int) -> Grid:
        """Return the grid t_l = (l - 1) / (size - 1), l = 1..size."""
        if size < 2:
            raise CurveValidationError(f"Grid size must be at least 2, got {size}")
        return cls(np.linspace(0.0, 1.0, size))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights w with sum_l w_l f(t_l) equal to the trapezoid rule."""
        steps = np.diff(self.points)
        weights = np.zeros(self.size)
        weights[:-1] += steps / 2.0
        weights[1:] += steps / 2.0
        weights.flags.writeable = False
        return weights

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class Curve:
    """A single function sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _readonly(self.values)
        if values.shape != (self.grid.size,):
            raise CurveValidationError(
                f"Curve has {values.size} values but the grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise CurveValidationError("Curve values must be finite")
        object.__setattr__(self, "values", values)

    def __sub__(self, other: Curve) -> Curve:
        require_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values - other.values)

    def __add__(self, other: Curve) -> Curve:
        require_same_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __mul__(self, scale: float) -> Curve:
        return Curve(self.grid, self.values * float(scale))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CurveSet:
    """n curves sharing one grid, stored as an n x T value table."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _readonly(self.values)
        if values.ndim != 2 or values.shape[1] != self.grid.size:
            raise CurveValidationError(
                f"Curve set must be n x {self.grid.size}, got shape {values.shape}"
            )
        if values.shape[0] < 1:
            raise CurveValidationError("Curve set needs at least one curve")
        if not np.all(np.isfinite(values)):
            bad_row = int(np.argwhere(~np.isfinite(values))[0][0])
            raise CurveValidationError(f"Curve {bad_row} has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_curves(cls, curves: Sequence[Curve]) -> CurveSet:
        if not curves:
            raise CurveValidationError("Curve set needs at least one curve")
        grid = curves[0].grid
        for curve in curves[1:]:
            require_same_grid(grid, curve.grid)
        return cls(grid, np.vstack([curve.values for curve in curves]))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __getitem__(self, index: int) -> Curve:
        return Curve(self.grid, self.values[index])

    def __iter__(self) -> Iterator[Curve]:
        for index in range(len(self)):
            yield self[index]

    def take(self, indices: Sequence[int] | np.ndarray) -> CurveSet:
        """Return the curves at ``indices`` as a new set."""
        return CurveSet(self.grid, self.values[np.asarray(indices, dtype=int)])


def require_same_grid(first: Grid, second: Grid) -> None:
    """Raise ``GridMismatchError`` unless both grids are identical."""
    if first != second:
        raise GridMismatchError(
            f"Incompatible curves: grids differ ({first.size} vs {second.size} points)"
        )


def trapezoid_integral(values: Sequence[float] | np.ndarray, grid: Grid) -> float:
    """Composite trapezoid approximation of the integral over [0, 1]."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise CurveValidationError(
            f"Cannot integrate {values.size} values on a {grid.size}-point grid"
        )
    return float(trapezoid(values, x=grid.points))


def l2_norm_sq(curve: Curve) -> float:
    """Squared L2 norm of a curve."""
    return trapezoid_integral(curve.values**2, curve.grid)


def l2_distance(first: Curve, second: Curve) -> float:
    """L2 distance between two curves on the same grid."""
    return float(np.sqrt(l2_norm_sq(first - second)))


def pairwise_distances(rows: CurveSet, columns: CurveSet | None = None) -> np.ndarray:
    """Matrix of L2 distances between the curves of two sets."""
    columns = rows if columns is None else columns
    require_same_grid(rows.grid, columns.grid)
    root_weights = np.sqrt(rows.grid.trapezoid_weights)
    distances = cdist(rows.values * root_weights, columns.values * root_weights)
    if columns is rows:
        np.fill_diagonal(distances, 0.0)
    return distances
