"""Core base types shared by estimators and report targets."""

from __future__ import annotations

from abc import ABC, abstractmethod
from enum import StrEnum
from typing import TYPE_CHECKING, Any

import numpy as np

from funcreg.core.curve import Curve, CurveSet, Grid, require_same_grid

if TYPE_CHECKING:
    from funcreg.sim import BenchmarkReport


class EstimatorName(StrEnum):
    """Estimators known to the toolkit."""

    RKHS = "rkhs"
    RKHS_MODIFIED = "rkhs-mod"
    LINEAR = "linear"
    NW = "nw"
    NW_ORACLE = "nw-oracle"


class FittedEstimator(ABC):
    """A fitted curve-to-curve regression model.

    Subclasses provide ``estimator`` and ``grid``, the grid on which the
    model accepts and returns curves.
    """

    estimator: EstimatorName
    grid: Grid

    @abstractmethod
    def _predict_values(self, xs: CurveSet) -> np.ndarray:
        """Return the m x T prediction table for curves already on the model grid."""

    @abstractmethod
    def to_document(self) -> dict[str, Any]:
        """Return the JSON-shaped persistence document."""

    def predict_many(self, xs: CurveSet) -> np.ndarray:
        """Predict every curve in ``xs``; rows follow the input order."""
        require_same_grid(self.grid, xs.grid)
        return self._predict_values(xs)

    def predict(self, x_new: Curve) -> Curve:
        """Predict the response curve for one covariate curve."""
        require_same_grid(self.grid, x_new.grid)
        rows = self._predict_values(CurveSet(x_new.grid, x_new.values[None, :]))
        return Curve(self.grid, rows[0])


class BaseTarget(ABC):
    """Base class for persisting benchmark reports."""

    target_id: str

    @abstractmethod
    def save_report(
        self, report: BenchmarkReport, metadata: dict[str, object] | None = None
    ) -> None:
        """Persist an aggregated report together with its per-replicate records."""
