"""Exception hierarchy shared by the library and the CLI.

``InputError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""

from __future__ import annotations


class FuncregError(Exception):
    """Base class for all funcreg errors."""


class InputError(FuncregError, ValueError):
    """Raised when inputs fail validation."""


class CurveValidationError(InputError):
    """Raised when a grid, curve, or curve set violates its invariants."""


class GridMismatchError(InputError):
    """Raised when curves or models live on incompatible grids."""


class BandwidthError(InputError):
    """Raised when a kernel bandwidth is invalid or cannot be derived."""


class WeatherDataError(InputError):
    """Raised when station files are malformed or inconsistent."""


class ModelFormatError(InputError):
    """Raised when a persisted model document cannot be read."""


class OracleUnavailableError(InputError):
    """Raised when an oracle estimate is requested without clean responses."""


class NumericalError(FuncregError, ArithmeticError):
    """Raised when a numerical procedure fails."""


class SolverError(NumericalError):
    """Raised when a linear system cannot be solved reliably."""

    def __init__(self, message: str, condition: float | None = None) -> None:
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class DegenerateGcvError(NumericalError):
    """Raised when Tr(I - A(lambda)) vanishes and GCV is undefined."""
