"""Curve-on-curve estimators: RKHS, Nadaraya-Watson and the integral linear model."""

from funcreg.estimators.bspline import BsplineBasis, bspline_eval
from funcreg.estimators.linear import LinearModel, LinearProblem, linear_fit, linear_predict
from funcreg.estimators.nw import NwModel, nw_bandwidth_search, nw_predict
from funcreg.estimators.rkhs import (
    GcvCurve,
    KroneckerSystem,
    PenaltyVariant,
    RkhsModel,
    SolveMethod,
    ValidationCurve,
    fit,
    gcv_score,
    gcv_select,
    influence_matrix,
    lambda_grid,
    objective,
    predict,
)

__all__ = [
    "BsplineBasis",
    "GcvCurve",
    "KroneckerSystem",
    "LinearModel",
    "LinearProblem",
    "NwModel",
    "PenaltyVariant",
    "RkhsModel",
    "SolveMethod",
    "ValidationCurve",
    "bspline_eval",
    "fit",
    "gcv_score",
    "gcv_select",
    "influence_matrix",
    "lambda_grid",
    "linear_fit",
    "linear_predict",
    "nw_bandwidth_search",
    "nw_predict",
    "objective",
    "predict",
]
