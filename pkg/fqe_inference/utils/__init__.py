"""Utility functions for fqe-inference."""

from .linalg import CovarianceSolver, solve_normal_equations
from .rng import derive_seed, stream
from .stats import ks_statistic, lower_quantile, sample_variance

__all__ = [
    "stream",
    "derive_seed",
    "CovarianceSolver",
    "solve_normal_equations",
    "ks_statistic",
    "lower_quantile",
    "sample_variance",
]
