"""Finite episodic MDPs: simulation, exact oracles, canonical instances and files."""

from .canonical import CANONICAL_VERSION, canonical_instance, random_mdp, random_policy
from .core import (
    check_compatible,
    empirical_behavior_measure,
    empirical_occupancy,
    exact_policy_value,
    exact_q_values,
    generate_dataset,
    occupancy_measures,
    sample_trajectory,
    state_values,
)

__all__ = [
    "CANONICAL_VERSION",
    "canonical_instance",
    "random_mdp",
    "random_policy",
    "check_compatible",
    "sample_trajectory",
    "generate_dataset",
    "exact_q_values",
    "exact_policy_value",
    "state_values",
    "occupancy_measures",
    "empirical_occupancy",
    "empirical_behavior_measure",
]
