"""Shared fixtures: canonical instances, datasets and feature maps."""

import numpy as np
import pytest

from fqe_inference.approximators import TabularApproximator, one_hot_features
from fqe_inference.mdp import canonical_instance, generate_dataset
from fqe_inference.models import Policy, TabularMdp


@pytest.fixture
def two_state():
    return canonical_instance("two_state")


@pytest.fixture
def four_state():
    return canonical_instance("four_state")


@pytest.fixture
def two_state_data(two_state):
    mdp, behavior, _ = two_state
    return generate_dataset(mdp, behavior, 400, seed=11)


@pytest.fixture
def one_hot_2x2():
    return one_hot_features(2, 2)


@pytest.fixture
def tabular_2x2():
    return TabularApproximator(2, 2)


@pytest.fixture
def deterministic_chain():
    """Two states, two actions, deterministic moves and rewards, uniform behavior."""
    transition = np.zeros((2, 2, 2))
    transition[0, 0, 0] = transition[0, 1, 1] = 1.0
    transition[1, 0, 0] = transition[1, 1, 1] = 1.0
    mdp = TabularMdp(
        n_states=2,
        n_actions=2,
        horizon=3,
        transition=transition,
        reward=[[0.0, 1.0], [0.5, 0.25]],
        initial_dist=[1.0, 0.0],
    )
    return mdp, Policy.uniform(2, 2), Policy(probs=[[0.3, 0.7], [0.9, 0.1]])
