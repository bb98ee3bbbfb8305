"""Core data model, kernels and shared abstractions."""

from funcreg.core.base import BaseTarget, EstimatorName, FittedEstimator
from funcreg.core.curve import (
    Curve,
    CurveSet,
    Grid,
    l2_distance,
    l2_norm_sq,
    pairwise_distances,
    require_same_grid,
    trapezoid_integral,
)
from funcreg.core.kernel import (
    GramPair,
    OperatorKernel,
    ScalarKernel,
    check_positive_definite,
    covariate_gram,
    cross_gram,
    default_sigma,
    default_sigma_prime,
    eval_scalar,
    gram_pair,
    grid_gram,
)

__all__ = [
    "BaseTarget",
    "Curve",
    "CurveSet",
    "EstimatorName",
    "FittedEstimator",
    "GramPair",
    "Grid",
    "OperatorKernel",
    "ScalarKernel",
    "check_positive_definite",
    "covariate_gram",
    "cross_gram",
    "default_sigma",
    "default_sigma_prime",
    "eval_scalar",
    "gram_pair",
    "grid_gram",
    "l2_distance",
    "l2_norm_sq",
    "pairwise_distances",
    "require_same_grid",
    "trapezoid_integral",
]
