"""Station weather pipeline: daily series to weekly curves to leave-one-out prediction.

Input is two CSV files (temperature, precipitation) with header
``station,d1,...,d365`` and one row per station. Leap days must be dropped
before ingest. Temperature curves predict natural-log precipitation curves.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError

from funcreg.core.curve import CurveSet, Grid
from funcreg.core.errors import FuncregError, InputError, WeatherDataError
from funcreg.estimators.nw import NwModel
from funcreg.estimators.rkhs import (
    PenaltyVariant,
    fit,
    gcv_select,
    lambda_grid,
    mean_squared_error,
)
from funcreg.io import write_report
from funcreg.orchestration import WorkRunner

logger = logging.getLogger(__name__)

DAYS = 365
WEEK = 7
WEEKLY_POINTS = 53
DEFAULT_PRECIP_OFFSET = 0.05
DAY_COLUMNS = tuple(f"d{day}" for day in range(1, DAYS + 1))


@dataclass(frozen=True, eq=False)
class StationSeries:
    """One station's daily temperature (deg C) and precipitation (mm)."""

    station_id: str
    daily_temp: np.ndarray
    daily_precip: np.ndarray

    def __post_init__(self) -> None:
        for name in ("daily_temp", "daily_precip"):
            values = np.array(getattr(self, name), dtype=float)
            if values.shape != (DAYS,):
                raise WeatherDataError(
                    f"Station {self.station_id!r}: {name} needs {DAYS} values, got {values.size}"
                )
            if not np.all(np.isfinite(values)):
                raise WeatherDataError(f"Station {self.station_id!r}: {name} must be finite")
            values.flags.writeable = False
            object.__setattr__(self, name, values)
        if np.any(self.daily_precip < 0.0):
            day = int(np.argmax(self.daily_precip < 0.0)) + 1
            raise WeatherDataError(
                f"Station {self.station_id!r}: negative precipitation on day {day}"
            )


@dataclass(frozen=True)
class WeatherDataset:
    """Complete station series on the shared 53-point weekly grid."""

    stations: tuple[StationSeries, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stations", tuple(self.stations))
        if len(self.stations) < 2:
            raise WeatherDataError(f"Need at least 2 stations, got {len(self.stations)}")
        ids = self.station_ids
        if len(set(ids)) != len(ids):
            duplicate = next(s for s in ids if ids.count(s) > 1)
            raise WeatherDataError(f"Duplicate station {duplicate!r}")

    @property
    def station_ids(self) -> list[str]:
        return [station.station_id for station in self.stations]

    @cached_property
    def grid(self) -> Grid:
        return Grid.equispaced(WEEKLY_POINTS)

    def temperature_curves(self) -> CurveSet:
        return CurveSet(
            self.grid, np.vstack([weekly_subsample(s.daily_temp) for s in self.stations])
        )

    def log_precip_curves(self, offset: float = DEFAULT_PRECIP_OFFSET) -> CurveSet:
        return CurveSet(
            self.grid,
            np.vstack(
                [
                    log_precip_transform(weekly_subsample(s.daily_precip), offset)
                    for s in self.stations
                ]
            ),
        )

    def sorted(self) -> WeatherDataset:
        """Same stations ordered by id."""
        return WeatherDataset(tuple(sorted(self.stations, key=lambda s: s.station_id)))


def _read_station_table(path: Path, label: str) -> dict[str, np.ndarray]:
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise WeatherDataError(f"{label} file {path} not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise WeatherDataError(f"{path}: empty file") from exc
    except pd.errors.ParserError as exc:
        raise WeatherDataError(f"{path}: wrong column count ({exc})") from exc

    expected = ("station", *DAY_COLUMNS)
    if tuple(raw.columns) != expected:
        raise WeatherDataError(
            f"{path}: header must be station,d1,...,d{DAYS} "
            f"({len(expected)} columns), got {len(raw.columns)} columns"
        )

    table: dict[str, np.ndarray] = {}
    for offset, (_, row) in enumerate(raw.iterrows()):
        line = offset + 2
        station = row["station"].strip()
        if not station:
            raise WeatherDataError(f"{path}: row {line}, column station: empty station id")
        cells = row[list(DAY_COLUMNS)]
        trailing = int((cells[::-1] == "").astype(int).cumprod().sum())
        if trailing:
            raise WeatherDataError(
                f"{path}: row {line} has {1 + DAYS - trailing} columns, expected {1 + DAYS}"
            )
        values = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            column = DAY_COLUMNS[int(np.argmax(bad))]
            raise WeatherDataError(
                f"{path}: row {line}, column {column}: non-numeric value {cells[column]!r}"
            )
        if station in table:
            raise WeatherDataError(f"{path}: row {line}: duplicate station {station!r}")
        table[station] = values
    return table


def _check_precip(path: Path, precip: dict[str, np.ndarray]) -> None:
    for line, (station, values) in enumerate(precip.items(), start=2):
        if np.any(values < 0.0):
            column = DAY_COLUMNS[int(np.argmax(values < 0.0))]
            raise WeatherDataError(
                f"{path}: row {line}, column {column}: negative precipitation "
                f"{values[DAY_COLUMNS.index(column)]!r} at station {station!r}"
            )


def load_weather(temp_path: str | Path, precip_path: str | Path) -> WeatherDataset:
    """Read and validate both station files; stations follow the temperature file."""
    temp_path, precip_path = Path(temp_path), Path(precip_path)
    temp = _read_station_table(temp_path, "Temperature")
    precip = _read_station_table(precip_path, "Precipitation")
    _check_precip(precip_path, precip)

    for station in temp:
        if station not in precip:
            raise WeatherDataError(f"Station {station!r} missing from {precip_path}")
    for station in precip:
        if station not in temp:
            raise WeatherDataError(f"Station {station!r} missing from {temp_path}")

    dataset = WeatherDataset(
        tuple(StationSeries(station, temp[station], precip[station]) for station in temp)
    )
    logger.info("Loaded %d stations from %s and %s", len(temp), temp_path, precip_path)
    return dataset


def weekly_subsample(series: Sequence[float] | np.ndarray) -> np.ndarray:
    """Days 1, 8, ..., 365: exactly 53 samples."""
    values = np.asarray(series, dtype=float)
    if values.shape != (DAYS,):
        raise WeatherDataError(f"Daily series needs {DAYS} values, got {values.size}")
    return values[::WEEK].copy()


def log_precip_transform(
    values: Sequence[float] | np.ndarray, offset: float = DEFAULT_PRECIP_OFFSET
) -> np.ndarray:
    """Natural log, with zero precipitation replaced by ``offset``."""
    if not offset > 0.0:
        raise InputError(f"precip offset must be positive, got {offset!r}")
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.0):
        raise WeatherDataError(
            f"Precipitation must be nonnegative; index {int(np.argmax(values < 0.0))} is negative"
        )
    return np.log(np.where(values > 0.0, values, offset))


class LooEstimator(StrEnum):
    RKHS = "rkhs"
    RKHS_MODIFIED = "rkhs-mod"
    NW = "nw"


@dataclass(frozen=True)
class LooConfig:
    """Estimator settings for leave-one-out prediction."""

    estimator: LooEstimator = LooEstimator.RKHS
    lambdas: tuple[float, ...] = field(default_factory=lambda_grid)
    precip_offset: float = DEFAULT_PRECIP_OFFSET
    sigma: float | None = None
    sigma_prime: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "estimator", LooEstimator(self.estimator))
        if not self.precip_offset > 0.0:
            raise InputError(f"precip offset must be positive, got {self.precip_offset!r}")


@dataclass(frozen=True, eq=False)
class FoldResult:
    """Held-out prediction for one station."""

    station_id: str
    observed: np.ndarray
    predicted: np.ndarray | None = None
    lambda_selected: float = float("nan")
    mse: float = float("nan")
    baseline_mse: float = float("nan")
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class LooResult:
    grid: Grid
    folds: tuple[FoldResult, ...]

    @property
    def failures(self) -> int:
        return sum(not fold.ok for fold in self.folds)

    @property
    def mean_mse(self) -> float:
        return float(np.mean([fold.mse for fold in self.folds if fold.ok]))

    @property
    def mean_baseline_mse(self) -> float:
        return float(np.mean([fold.baseline_mse for fold in self.folds if fold.ok]))

    def fold(self, station_id: str) -> FoldResult:
        for fold in self.folds:
            if fold.station_id == station_id:
                return fold
        raise KeyError(station_id)

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "station": [fold.station_id for fold in self.folds],
                "lambda_selected": [fold.lambda_selected for fold in self.folds],
                "mse": [fold.mse for fold in self.folds],
                "baseline_mse": [fold.baseline_mse for fold in self.folds],
                "failed": [not fold.ok for fold in self.folds],
            }
        )

    def predictions_frame(self, station_id: str) -> pd.DataFrame:
        fold = self.fold(station_id)
        if fold.predicted is None:
            raise KeyError(f"Fold for {station_id!r} failed: {fold.error}")
        return pd.DataFrame(
            {
                "t": self.grid.points,
                "observed_log_precip": fold.observed,
                "predicted_log_precip": fold.predicted,
            }
        )


def _run_fold(
    station_id: str, temp: CurveSet, precip: CurveSet, held_out: int, config: LooConfig
) -> FoldResult:
    others = [i for i in range(len(temp)) if i != held_out]
    train_x, train_y = temp.take(others), precip.take(others)
    x_new = temp.take([held_out])
    observed = precip.values[held_out]

    if config.estimator is LooEstimator.NW:
        lam = float("nan")
        model = NwModel.fit(train_x, train_y)
    else:
        variant = (
            PenaltyVariant.MODIFIED
            if config.estimator is LooEstimator.RKHS_MODIFIED
            else PenaltyVariant.STANDARD
        )
        curve = gcv_select(
            train_x, train_y, config.sigma, config.sigma_prime, config.lambdas, variant
        )
        lam = curve.selected
        model = fit(train_x, train_y, config.sigma, config.sigma_prime, lam, variant)

    predicted = model.predict_many(x_new)[0]
    baseline = train_y.values.mean(axis=0)
    return FoldResult(
        station_id=station_id,
        observed=observed,
        predicted=predicted,
        lambda_selected=lam,
        mse=mean_squared_error(predicted, observed),
        baseline_mse=mean_squared_error(baseline, observed),
    )


def leave_one_out(
    dataset: WeatherDataset,
    config: LooConfig | None = None,
    threads: int | None = None,
) -> LooResult:
    """Fit on all stations but one, predict the held-out log precipitation, repeat.

    Stations are processed in id order, so results do not depend on file
    order. A failed fold is recorded with its error and left out of the means.
    """
    config = config or LooConfig()
    if len(dataset.stations) < 3:
        raise WeatherDataError(
            f"Leave-one-out needs at least 3 stations, got {len(dataset.stations)}"
        )
    dataset = dataset.sorted()
    ids = dataset.station_ids
    temp = dataset.temperature_curves()
    precip = dataset.log_precip_curves(config.precip_offset)

    results = WorkRunner(threads).map(
        lambda index: _run_fold(ids[index], temp, precip, index, config),
        range(len(ids)),
        catch=(FuncregError, LinAlgError),
    )
    folds = []
    for result, station in zip(results, ids, strict=True):
        if result.ok:
            folds.append(result.value)
        else:
            logger.warning("Fold %s failed: %s", station, result.error)
            folds.append(
                FoldResult(station, precip.values[result.index], error=result.error)
            )
    loo = LooResult(dataset.grid, tuple(folds))
    if loo.failures < len(folds):
        logger.info(
            "LOO mean MSE %.6g (mean-curve baseline %.6g), %d failed folds",
            loo.mean_mse,
            loo.mean_baseline_mse,
            loo.failures,
        )
    return loo


def prediction_filename(station_id: str) -> str:
    return "predictions_" + re.sub(r"[^A-Za-z0-9._-]+", "_", station_id) + ".csv"


def write_loo(
    result: LooResult, out_dir: str | Path, deterministic: bool | None = None
) -> list[Path]:
    """Write one predictions file per successful fold and ``loo_summary.csv``."""
    out_dir = Path(out_dir)
    written = []
    for fold in result.folds:
        if fold.ok:
            written.append(
                write_report(
                    out_dir / prediction_filename(fold.station_id),
                    result.predictions_frame(fold.station_id),
                    deterministic=deterministic,
                )
            )
    comments = [f"failed folds: {result.failures}"] if result.failures else []
    written.append(
        write_report(
            out_dir / "loo_summary.csv",
            result.summary_frame(),
            comments=comments,
            deterministic=deterministic,
        )
    )
    return written
