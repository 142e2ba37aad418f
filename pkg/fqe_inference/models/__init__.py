"""Pydantic models for domain objects, run options and results."""

from .features import FeatureMap, ParamVector
from .mdp import Dataset, OccupancyMeasures, Policy, TabularMdp, Trajectory
from .requests import FqeConfig, RunConfig, SolverConfig, StudyConfig, WeightScheme
from .responses import (
    BootstrapResult,
    BoundInputs,
    BoundReport,
    CommandOutput,
    ConfidenceInterval,
    CrossCovariance,
    DivergenceEntry,
    DivergenceReport,
    FqeEstimate,
    GradCheckReport,
    PositivityReport,
    SolverReport,
    StudyResult,
    StudyRow,
    VarianceComponents,
    ZResidual,
)

__all__ = [
    "TabularMdp",
    "Policy",
    "Trajectory",
    "Dataset",
    "OccupancyMeasures",
    "FeatureMap",
    "ParamVector",
    "FqeConfig",
    "SolverConfig",
    "WeightScheme",
    "StudyConfig",
    "RunConfig",
    "SolverReport",
    "FqeEstimate",
    "ZResidual",
    "GradCheckReport",
    "VarianceComponents",
    "DivergenceEntry",
    "DivergenceReport",
    "BoundInputs",
    "BoundReport",
    "PositivityReport",
    "CrossCovariance",
    "ConfidenceInterval",
    "BootstrapResult",
    "StudyRow",
    "StudyResult",
    "CommandOutput",
]
