"""FQE estimation: stage solvers, the backward recursion and the linear closed form."""

from .fqe import build_targets, fit_stage, run_fqe, theta_matrix, z_residual
from .linear import closed_form_linear_fqe, policy_features
from .solvers import StageObjective, solve_stage

__all__ = [
    "build_targets",
    "fit_stage",
    "run_fqe",
    "theta_matrix",
    "z_residual",
    "closed_form_linear_fqe",
    "policy_features",
    "StageObjective",
    "solve_stage",
]
