"""File formats: curve CSVs, model JSON documents and report CSVs.

Curve CSV: row 1 holds the T grid points, every further row one curve.
Floats are written in shortest round-trip form, so re-reading an emitted
file reproduces the values bit for bit. Every output goes through a temp
file in the target directory and ``os.replace``.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from collections.abc import Iterable
from datetime import UTC, datetime
from pathlib import Path
from typing import Annotated, Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from funcreg.config import get_config
from funcreg.core.base import FittedEstimator
from funcreg.core.curve import CurveSet, Grid
from funcreg.core.errors import CurveValidationError, FuncregError, ModelFormatError
from funcreg.estimators.bspline import BsplineBasis
from funcreg.estimators.linear import LinearModel
from funcreg.estimators.nw import NwModel
from funcreg.estimators.rkhs import FORMAT_VERSION, PenaltyVariant, RkhsModel


def format_float(value: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(value))


def _format_frame(frame: pd.DataFrame) -> pd.DataFrame:
    formatted = frame.copy()
    for column in formatted.columns:
        if pd.api.types.is_float_dtype(formatted[column]):
            formatted[column] = formatted[column].map(format_float)
    return formatted


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a sibling temp file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


# --- curve CSV ---------------------------------------------------------------


def _parse_numeric(raw: pd.DataFrame, path: Path) -> np.ndarray:
    numeric = raw.apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(numeric.to_numpy(dtype=float))
    if bad.any():
        row, column = (int(i) for i in np.argwhere(bad)[0])
        raise CurveValidationError(
            f"{path}: row {row + 1}, column {column + 1}: "
            f"expected a finite number, got {raw.iat[row, column]!r}"
        )
    return numeric.to_numpy(dtype=float)


def read_curve_table(path: str | Path) -> tuple[Grid, np.ndarray]:
    """Read a curve CSV; the value table may have zero rows."""
    path = Path(path)
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise CurveValidationError(f"{path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise CurveValidationError(f"{path}: missing grid row") from exc
    except pd.errors.ParserError as exc:
        raise CurveValidationError(f"{path}: rows have unequal lengths ({exc})") from exc
    table = _parse_numeric(raw, path)
    try:
        grid = Grid(table[0])
    except CurveValidationError as exc:
        raise CurveValidationError(f"{path}: row 1: {exc}") from exc
    return grid, table[1:]


def read_curves(path: str | Path) -> CurveSet:
    """Read a nonempty curve set."""
    grid, values = read_curve_table(path)
    if values.shape[0] == 0:
        raise CurveValidationError(f"{path}: no curves after the grid row")
    return CurveSet(grid, values)


def curve_csv_text(grid: Grid, values: np.ndarray) -> str:
    rows = [grid.points, *np.asarray(values, dtype=float).reshape(-1, grid.size)]
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in rows)


def write_curves(path: str | Path, grid: Grid, values: np.ndarray) -> Path:
    """Write a grid row followed by one row per curve (possibly none)."""
    return atomic_write_text(path, curve_csv_text(grid, values))


# --- reports -----------------------------------------------------------------


def report_text(
    frame: pd.DataFrame,
    comments: Iterable[str] = (),
    deterministic: bool | None = None,
) -> str:
    if deterministic is None:
        deterministic = get_config().deterministic
    header = []
    if not deterministic:
        stamp = datetime.now(UTC).strftime("%Y-%m-%dT%H:%M:%SZ")
        header.append(f"# generated {stamp}\n")
    header.extend(f"# {comment}\n" for comment in comments)
    buffer = io.StringIO()
    _format_frame(frame).to_csv(buffer, index=False, lineterminator="\n")
    return "".join(header) + buffer.getvalue()


def write_report(
    path: str | Path,
    frame: pd.DataFrame,
    comments: Iterable[str] = (),
    deterministic: bool | None = None,
) -> Path:
    """Write a tidy CSV report with optional ``#`` comment lines on top."""
    return atomic_write_text(path, report_text(frame, comments, deterministic))


def read_report(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip")


# --- model documents ---------------------------------------------------------

Matrix = list[list[float]]


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    format_version: Literal[1]
    grid: list[float]

    def _grid(self) -> Grid:
        return Grid(np.array(self.grid))


class RkhsDocument(_Document):
    estimator: Literal["rkhs", "rkhs-mod"]
    variant: PenaltyVariant
    sigma: float = Field(gt=0)
    sigma_prime: float = Field(gt=0)
    lam: float = Field(alias="lambda", gt=0)
    train_x: Matrix
    B: Matrix

    def to_model(self) -> RkhsModel:
        expected = "rkhs-mod" if self.variant is PenaltyVariant.MODIFIED else "rkhs"
        if self.estimator != expected:
            raise ModelFormatError(
                f"estimator {self.estimator!r} does not match variant {str(self.variant)!r}"
            )
        return RkhsModel(
            train_x=CurveSet(self._grid(), np.array(self.train_x)),
            B=np.array(self.B),
            sigma=self.sigma,
            sigma_prime=self.sigma_prime,
            lam=self.lam,
            variant=self.variant,
        )


class NwDocument(_Document):
    estimator: Literal["nw", "nw-oracle"]
    bandwidth: float = Field(gt=0)
    train_x: Matrix
    train_y: Matrix

    def to_model(self) -> NwModel:
        grid = self._grid()
        return NwModel(
            CurveSet(grid, np.array(self.train_x)),
            CurveSet(grid, np.array(self.train_y)),
            self.bandwidth,
        )


class LinearDocument(_Document):
    estimator: Literal["linear"]
    order: int = Field(ge=1)
    breakpoints: list[float]
    alpha_coeffs: list[float]
    beta_coeffs: Matrix
    penalty_lambda: float = Field(ge=0)

    def to_model(self) -> LinearModel:
        return LinearModel(
            grid=self._grid(),
            basis=BsplineBasis(self.order, np.array(self.breakpoints)),
            alpha_coeffs=np.array(self.alpha_coeffs),
            beta_coeffs=np.array(self.beta_coeffs),
            penalty_lambda=self.penalty_lambda,
        )


ModelDocument = Annotated[
    RkhsDocument | NwDocument | LinearDocument, Field(discriminator="estimator")
]
_DOCUMENT_ADAPTER: TypeAdapter[ModelDocument] = TypeAdapter(ModelDocument)


def model_json(model: FittedEstimator) -> str:
    return json.dumps(model.to_document(), indent=2) + "\n"


def save_model(path: str | Path, model: FittedEstimator) -> Path:
    """Persist a fitted model as a self-describing JSON document."""
    return atomic_write_text(path, model_json(model))


def parse_model(document: dict[str, Any], source: str = "<document>") -> FittedEstimator:
    version = document.get("format_version") if isinstance(document, dict) else None
    if version is not None and version != FORMAT_VERSION:
        raise ModelFormatError(f"{source}: unsupported format_version {version!r}")
    try:
        parsed = _DOCUMENT_ADAPTER.validate_python(document)
    except ValidationError as exc:
        raise ModelFormatError(f"{source}: invalid model document: {exc}") from exc
    try:
        return parsed.to_model()
    except FuncregError as exc:
        raise ModelFormatError(f"{source}: {exc}") from exc


def load_model(path: str | Path) -> FittedEstimator:
    """Load any persisted estimator; the ``estimator`` field picks the type."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelFormatError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return parse_model(document, str(path))
