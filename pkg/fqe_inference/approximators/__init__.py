"""Differentiable approximators and feature maps."""

from .families import (
    Approximator,
    LinearApproximator,
    SmoothNetApproximator,
    TabularApproximator,
    expected_next_value,
    expected_next_values,
    grad_check,
    make_approximator,
    q_table,
    state_value_table,
)
from .features import custom_features, one_hot_features, random_linear_features

__all__ = [
    "Approximator",
    "LinearApproximator",
    "TabularApproximator",
    "SmoothNetApproximator",
    "make_approximator",
    "q_table",
    "state_value_table",
    "expected_next_value",
    "expected_next_values",
    "grad_check",
    "one_hot_features",
    "random_linear_features",
    "custom_features",
]
