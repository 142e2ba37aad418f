"""Subcommands: each turns a RunConfig into a CommandOutput."""

from .bootstrap import bootstrap_ci
from .data import gen_data
from .estimation import fqe, grad_check_command
from .inference import bounds, variance
from .studies import STUDIES, run_study

__all__ = [
    "STUDIES",
    "bootstrap_ci",
    "bounds",
    "fqe",
    "gen_data",
    "grad_check_command",
    "run_study",
    "variance",
]
