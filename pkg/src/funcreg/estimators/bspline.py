"""Clamped B-spline bases on [0, 1] and their quadrature Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline

from funcreg.core.errors import CurveValidationError, InputError


@dataclass(frozen=True, eq=False)
class BsplineBasis:
    """B-spline basis of a given order (degree + 1) over breakpoints in [0, 1]."""

    order: int
    breakpoints: np.ndarray

    def __post_init__(self) -> None:
        breakpoints = np.array(self.breakpoints, dtype=float)
        if self.order < 1:
            raise InputError(f"B-spline order must be at least 1, got {self.order}")
        if breakpoints.ndim != 1 or breakpoints.size < 2:
            raise InputError("B-spline basis needs at least 2 breakpoints")
        if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
            raise InputError("Breakpoints must start at 0 and end at 1")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise InputError("Breakpoints must be strictly increasing")
        breakpoints.flags.writeable = False
        object.__setattr__(self, "breakpoints", breakpoints)

    @classmethod
    def equispaced(cls, breakpoint_count: int = 10, order: int = 4) -> BsplineBasis:
        return cls(order, np.linspace(0.0, 1.0, breakpoint_count))

    @property
    def degree(self) -> int:
        return self.order - 1

    @property
    def count(self) -> int:
        """Number of basis functions: order + interior breakpoints."""
        return self.order + self.breakpoints.size - 2

    @cached_property
    def knots(self) -> np.ndarray:
        """Breakpoints with both ends repeated to full multiplicity."""
        return np.concatenate(
            [
                np.zeros(self.degree),
                self.breakpoints,
                np.ones(self.degree),
            ]
        )

    @cached_property
    def _splines(self) -> BSpline:
        # One spline per basis function, vectorized through identity coefficients.
        return BSpline(self.knots, np.eye(self.count), self.degree, extrapolate=False)

    def design_matrix(self, points: np.ndarray) -> np.ndarray:
        """Matrix of basis values, one row per point."""
        points = _check_points(points)
        return BSpline.design_matrix(points, self.knots, self.degree).toarray()

    def derivative_matrix(self, points: np.ndarray, nu: int) -> np.ndarray:
        """Matrix of ``nu``-th derivatives of the basis functions."""
        points = _check_points(points)
        if nu == 0:
            return self.design_matrix(points)
        if nu > self.degree:
            return np.zeros((points.size, self.count))
        return self._splines.derivative(nu)(points)

    def _quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        nodes, weights = leggauss(self.order + 1)
        left, right = self.breakpoints[:-1], self.breakpoints[1:]
        half = (right - left)[:, None] / 2.0
        points = (left[:, None] + half * (nodes[None, :] + 1.0)).ravel()
        return points, (half * weights[None, :]).ravel()

    @cached_property
    def mass_matrix(self) -> np.ndarray:
        """Integral of B_p B_q over [0, 1]."""
        points, weights = self._quadrature()
        values = self.design_matrix(points)
        return values.T @ (weights[:, None] * values)

    @cached_property
    def roughness_matrix(self) -> np.ndarray:
        """Integral of B_p'' B_q'' over [0, 1]."""
        points, weights = self._quadrature()
        values = self.derivative_matrix(points, 2)
        return values.T @ (weights[:, None] * values)


def _check_points(points: np.ndarray | float) -> np.ndarray:
    points = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any(points < 0.0) or np.any(points > 1.0) or not np.all(np.isfinite(points)):
        raise CurveValidationError("B-spline evaluation points must lie in [0, 1]")
    return points


def bspline_eval(basis: BsplineBasis, t: float) -> np.ndarray:
    """Values of every basis function at t."""
    return basis.design_matrix(np.array([t]))[0]
