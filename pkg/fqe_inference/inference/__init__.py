"""Asymptotic variance, divergences, coverage constants and error bounds."""

from .bounds import (
    b0_diagnostic,
    bound_positivity,
    bound_positivity_linear,
    bound_reward_free,
    bound_variance_aware,
)
from .divergence import (
    average_leverage,
    check_positivity,
    cross_covariance,
    cross_norm_matrix,
    empirical_c2,
    restricted_chi2,
    tabular_chi2,
)
from .variance import (
    estimate_components,
    linear_sigma2,
    plug_in_sigma2,
    population_components,
    residual_epsilon,
    stage_residuals,
    tabular_mis_variance,
    target_gradient_means,
    true_parameters,
)

__all__ = [
    "residual_epsilon",
    "stage_residuals",
    "estimate_components",
    "plug_in_sigma2",
    "population_components",
    "true_parameters",
    "tabular_mis_variance",
    "linear_sigma2",
    "target_gradient_means",
    "restricted_chi2",
    "tabular_chi2",
    "empirical_c2",
    "average_leverage",
    "check_positivity",
    "cross_covariance",
    "cross_norm_matrix",
    "bound_variance_aware",
    "bound_reward_free",
    "bound_positivity",
    "bound_positivity_linear",
    "b0_diagnostic",
]
