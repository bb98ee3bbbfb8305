"""Nadaraya-Watson functional kernel estimate.

F(x) = sum_i k(||x_i - x||) y_i / sum_i k(||x_i - x||) with a Gaussian k.
Weights are normalized in log space, so the nearest training curve always
carries a finite, nonzero weight.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import softmax

from funcreg.core.base import EstimatorName, FittedEstimator
from funcreg.core.curve import Curve, CurveSet, Grid, pairwise_distances, require_same_grid
from funcreg.core.errors import BandwidthError, InputError, OracleUnavailableError
from funcreg.core.kernel import ScalarKernel, default_sigma
from funcreg.estimators.rkhs import FORMAT_VERSION, LambdaScan, mean_squared_error

logger = logging.getLogger(__name__)

FALLBACK_BANDWIDTH = 1.0


def nw_weights(distances: np.ndarray, bandwidth: float) -> np.ndarray:
    """Row-normalized Gaussian weights for an m x n distance matrix."""
    ScalarKernel(bandwidth)
    scale = 2.0 * bandwidth**2
    if scale == 0.0:
        raise BandwidthError(f"Bandwidth {bandwidth!r} underflows; use a larger bandwidth")
    weights = softmax(-(np.asarray(distances, dtype=float) ** 2) / scale, axis=1)
    if not np.all(np.isfinite(weights)):
        raise BandwidthError(
            f"Kernel weights underflowed at bandwidth {bandwidth!r}; use a larger bandwidth"
        )
    return weights


def heuristic_bandwidth(xs: CurveSet) -> float:
    """Mean pairwise distance, or 1.0 when it is undefined (n < 2 or identical curves)."""
    try:
        return default_sigma(xs)
    except BandwidthError:
        logger.info("Default bandwidth undefined; falling back to %s", FALLBACK_BANDWIDTH)
        return FALLBACK_BANDWIDTH


@dataclass(frozen=True, eq=False)
class NwModel(FittedEstimator):
    """Training pairs plus the kernel bandwidth; the oracle flag marks clean responses."""

    train_x: CurveSet
    train_y: CurveSet
    bandwidth: float
    oracle: bool = False

    def __post_init__(self) -> None:
        require_same_grid(self.train_x.grid, self.train_y.grid)
        if len(self.train_x) != len(self.train_y):
            raise InputError(
                f"Covariates have {len(self.train_x)} curves but responses have "
                f"{len(self.train_y)}"
            )
        ScalarKernel(self.bandwidth)

    @classmethod
    def fit(
        cls,
        xs: CurveSet,
        ys: CurveSet,
        bandwidth: float | None = None,
        *,
        oracle: bool = False,
        clean_y: CurveSet | None = None,
    ) -> NwModel:
        """Build the estimate; ``oracle=True`` swaps in noise-free responses."""
        if oracle:
            if clean_y is None:
                raise OracleUnavailableError(
                    "The oracle kernel estimate needs noise-free responses, "
                    "which only simulated data provides"
                )
            ys = clean_y
        bandwidth = heuristic_bandwidth(xs) if bandwidth is None else float(bandwidth)
        return cls(xs, ys, bandwidth, oracle)

    @property
    def estimator(self) -> EstimatorName:
        return EstimatorName.NW_ORACLE if self.oracle else EstimatorName.NW

    @property
    def grid(self) -> Grid:
        return self.train_x.grid

    def weights(self, xs: CurveSet) -> np.ndarray:
        return nw_weights(pairwise_distances(xs, self.train_x), self.bandwidth)

    def _predict_values(self, xs: CurveSet) -> np.ndarray:
        return self.weights(xs) @ self.train_y.values

    def to_document(self) -> dict[str, Any]:
        return {
            "estimator": str(EstimatorName.NW),
            "format_version": FORMAT_VERSION,
            "bandwidth": float(self.bandwidth),
            "grid": self.grid.points.tolist(),
            "train_x": self.train_x.values.tolist(),
            "train_y": self.train_y.values.tolist(),
        }


def nw_predict(model: NwModel, x_new: Curve) -> Curve:
    """Gaussian-weighted convex combination of the training responses."""
    return model.predict(x_new)


class BandwidthScan(LambdaScan):
    """Validation MSE over candidate bandwidths (held in ``lambdas``)."""

    @property
    def bandwidths(self) -> tuple[float, ...]:
        return self.lambdas


def bandwidth_factors(
    factor_min: float = 0.01,
    factor_max: float = 10.0,
    count: int = 25,
) -> tuple[float, ...]:
    """Log-spaced multipliers applied to the heuristic bandwidth."""
    if count < 1 or factor_min <= 0.0 or factor_max < factor_min:
        raise InputError(
            f"Empty bandwidth range: min={factor_min!r}, max={factor_max!r}, count={count!r}"
        )
    factors = np.logspace(np.log10(factor_min), np.log10(factor_max), count)
    return tuple(float(value) for value in factors)


def bandwidth_grid(
    xs: CurveSet,
    factor_min: float = 0.01,
    factor_max: float = 10.0,
    count: int = 25,
) -> tuple[float, ...]:
    """Log-spaced multiples of the heuristic bandwidth."""
    heuristic = heuristic_bandwidth(xs)
    return tuple(heuristic * factor for factor in bandwidth_factors(factor_min, factor_max, count))


def nw_bandwidth_scan(
    train_x: CurveSet,
    train_y: CurveSet,
    valid_x: CurveSet,
    valid_y: CurveSet,
    h_grid: Sequence[float],
) -> BandwidthScan:
    """Validation MSE for each bandwidth, in increasing bandwidth order."""
    bandwidths = tuple(sorted(float(h) for h in h_grid))
    if not bandwidths or bandwidths[0] <= 0.0:
        raise InputError("Bandwidth grid must be nonempty and positive")
    require_same_grid(train_x.grid, valid_x.grid)
    distances = pairwise_distances(valid_x, train_x)
    scores = []
    for bandwidth in bandwidths:
        try:
            predicted = nw_weights(distances, bandwidth) @ train_y.values
        except BandwidthError as exc:
            logger.debug("Bandwidth %g failed: %s", bandwidth, exc)
            scores.append(np.inf)
            continue
        scores.append(mean_squared_error(predicted, valid_y.values))
    if not np.any(np.isfinite(scores)):
        raise BandwidthError("Every bandwidth in the grid underflowed")
    return BandwidthScan.from_scores(bandwidths, scores)


def nw_bandwidth_search(
    train_x: CurveSet,
    train_y: CurveSet,
    valid_x: CurveSet,
    valid_y: CurveSet,
    h_grid: Sequence[float],
) -> float:
    """Bandwidth with the smallest validation MSE; ties go to the smaller bandwidth."""
    return nw_bandwidth_scan(train_x, train_y, valid_x, valid_y, h_grid).selected
