"""funcreg: operator-valued RKHS regression of curves on curves."""

from funcreg.config import FuncregConfig, get_config, reset_config
from funcreg.core import BaseTarget, Curve, CurveSet, EstimatorName, FittedEstimator, Grid
from funcreg.core.errors import FuncregError, InputError, NumericalError
from funcreg.estimators import (
    KroneckerSystem,
    LinearModel,
    NwModel,
    PenaltyVariant,
    RkhsModel,
    fit,
    gcv_select,
    predict,
)
from funcreg.io import load_model, read_curves, save_model, write_curves
from funcreg.orchestration import WorkRunner
from funcreg.sim import BenchmarkReport, SimConfig, SimModel, run_benchmark
from funcreg.store import ResultsStore
from funcreg.weather import LooConfig, leave_one_out, load_weather

__all__ = [
    "BaseTarget",
    "BenchmarkReport",
    "Curve",
    "CurveSet",
    "EstimatorName",
    "FittedEstimator",
    "FuncregConfig",
    "FuncregError",
    "Grid",
    "InputError",
    "KroneckerSystem",
    "LinearModel",
    "LooConfig",
    "NumericalError",
    "NwModel",
    "PenaltyVariant",
    "ResultsStore",
    "RkhsModel",
    "SimConfig",
    "SimModel",
    "WorkRunner",
    "fit",
    "gcv_select",
    "get_config",
    "leave_one_out",
    "load_model",
    "load_weather",
    "predict",
    "read_curves",
    "reset_config",
    "run_benchmark",
    "save_model",
    "write_curves",
]
