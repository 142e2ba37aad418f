"""Constructors for feature maps φ(s, a)."""

import numpy as np

from ..errors import ConfigurationError
from ..models.features import FeatureMap
from ..utils.rng import stream


def one_hot_features(n_states: int, n_actions: int) -> FeatureMap:
    """Indicator features: φ(s, a) is the standard basis vector of pair (s, a)."""
    return FeatureMap(kind="one_hot", n_states=n_states, n_actions=n_actions, table=np.eye(n_states * n_actions))


def random_linear_features(n_states: int, n_actions: int, dim: int, seed: int) -> FeatureMap:
    """Gaussian feature table scaled by 1/√m.

    Args:
        n_states: Number of states.
        n_actions: Number of actions.
        dim: Feature dimension m.
        seed: Non-negative seed.

    Returns:
        A ``random_linear`` feature map.
    """
    if dim < 1:
        raise ConfigurationError(f"feature dimension must be >= 1, got {dim}")
    table = stream(seed, 2).standard_normal((n_states * n_actions, dim)) / np.sqrt(dim)
    return FeatureMap(kind="random_linear", n_states=n_states, n_actions=n_actions, table=table)


def custom_features(table: np.ndarray, n_states: int, n_actions: int) -> FeatureMap:
    """Wrap a user-supplied table whose row ``s * n_actions + a`` is φ(s, a)."""
    try:
        return FeatureMap(kind="custom_table", n_states=n_states, n_actions=n_actions, table=table)
    except ValueError as e:
        raise ConfigurationError(f"invalid feature table: {e}") from e
