"""Feature maps φ(s, a) and flat parameter vectors."""

from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from .arrays import ArrayModel, FloatArray

PARAM_LAYOUT_VERSION = 1


class FeatureMap(ArrayModel):
    """Tabulated feature map; row ``s * n_actions + a`` of ``table`` is φ(s, a)."""

    schema_version: int = Field(default=1, description="Record schema version")

    kind: Literal["one_hot", "custom_table", "random_linear"] = Field(..., description="How the table was built")

    n_states: int = Field(..., ge=1, description="Number of states")

    n_actions: int = Field(..., ge=1, description="Number of actions")

    table: FloatArray = Field(..., description="Feature table [n_states * n_actions, m]")

    @model_validator(mode="after")
    def _validate(self) -> "FeatureMap":
        rows = self.n_states * self.n_actions
        if self.table.ndim != 2 or self.table.shape[0] != rows or self.table.shape[1] < 1:
            raise ValueError(f"table must have shape ({rows}, m), got {self.table.shape}")
        if self.kind == "one_hot" and not np.array_equal(self.table, np.eye(rows)):
            raise ValueError("one_hot feature table must be the identity over state-action pairs")
        return self

    @property
    def dim(self) -> int:
        return int(self.table.shape[1])

    def index(self, s: np.ndarray | int, a: np.ndarray | int) -> np.ndarray | int:
        return np.asarray(s) * self.n_actions + np.asarray(a)

    def phi(self, s: int, a: int) -> np.ndarray:
        return self.table[s * self.n_actions + a]

    def rows(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Features for paired index arrays ``s`` and ``a``."""
        return self.table[np.asarray(s) * self.n_actions + np.asarray(a)]


class ParamVector(ArrayModel):
    """Flat parameter vector θ with its family tag and layout version."""

    family: str = Field(..., description="Approximator family the parameters belong to")

    layout_version: int = Field(default=PARAM_LAYOUT_VERSION, description="Parameter layout version")

    theta: FloatArray = Field(..., description="Parameter values")

    @model_validator(mode="after")
    def _validate(self) -> "ParamVector":
        if self.theta.ndim != 1 or self.theta.size < 1:
            raise ValueError("theta must be a non-empty vector")
        return self

    @property
    def d(self) -> int:
        return int(self.theta.size)
