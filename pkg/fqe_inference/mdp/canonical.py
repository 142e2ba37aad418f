"""Versioned canonical instances and random instance generators.

Acceptance tolerances are pre-registered against these exact numbers; any
change to them must bump ``CANONICAL_VERSION``.
"""

from typing import Literal

import numpy as np

from ..errors import ConfigurationError
from ..models.mdp import Policy, TabularMdp
from ..utils.rng import stream

CANONICAL_VERSION = 1

InstanceName = Literal["two_state", "four_state"]

_TWO_STATE = {
    "transition": [
        [[0.7, 0.3], [0.2, 0.8]],
        [[0.6, 0.4], [0.1, 0.9]],
    ],
    "reward": [[0.2, 0.9], [0.5, 0.1]],
    "initial_dist": [0.6, 0.4],
    "behavior": [[0.5, 0.5], [0.5, 0.5]],
    "target": [[0.8, 0.2], [0.3, 0.7]],
    "horizon": 2,
}

_FOUR_STATE = {
    "transition": [
        [[0.6, 0.2, 0.1, 0.1], [0.1, 0.6, 0.2, 0.1], [0.1, 0.1, 0.2, 0.6]],
        [[0.3, 0.4, 0.2, 0.1], [0.2, 0.2, 0.5, 0.1], [0.25, 0.25, 0.25, 0.25]],
        [[0.1, 0.3, 0.4, 0.2], [0.5, 0.1, 0.1, 0.3], [0.2, 0.2, 0.2, 0.4]],
        [[0.4, 0.1, 0.1, 0.4], [0.1, 0.5, 0.3, 0.1], [0.3, 0.3, 0.3, 0.1]],
    ],
    "reward": [[0.1, 0.5, 0.9], [0.7, 0.3, 0.2], [0.0, 0.6, 0.4], [0.8, 0.2, 1.0]],
    "initial_dist": [0.4, 0.3, 0.2, 0.1],
    "behavior": [[0.4, 0.3, 0.3], [0.3, 0.4, 0.3], [0.3, 0.3, 0.4], [1 / 3, 1 / 3, 1 / 3]],
    "target": [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.1, 0.2, 0.7], [0.5, 0.25, 0.25]],
    "horizon": 4,
}

_INSTANCES = {"two_state": _TWO_STATE, "four_state": _FOUR_STATE}


def canonical_instance(name: InstanceName) -> tuple[TabularMdp, Policy, Policy]:
    """Return ``(mdp, behavior, target)`` for a canonical instance."""
    try:
        entry = _INSTANCES[name]
    except KeyError:
        raise ConfigurationError(f"unknown canonical instance {name!r}; choose from {sorted(_INSTANCES)}") from None
    transition = np.asarray(entry["transition"], dtype=np.float64)
    mdp = TabularMdp(
        n_states=transition.shape[0],
        n_actions=transition.shape[1],
        horizon=entry["horizon"],
        transition=transition,
        reward=entry["reward"],
        initial_dist=entry["initial_dist"],
    )
    return mdp, Policy(probs=entry["behavior"]), Policy(probs=entry["target"])


def _normalized_rows(rng: np.random.Generator, shape: tuple[int, ...], concentration: float) -> np.ndarray:
    rows = rng.dirichlet(np.full(shape[-1], concentration), size=shape[:-1] or None)
    return rows / rows.sum(axis=-1, keepdims=True)


def random_mdp(n_states: int, n_actions: int, horizon: int, seed: int, concentration: float = 1.0) -> TabularMdp:
    """Random MDP with Dirichlet transition rows and uniform rewards in [0, 1]."""
    rng = stream(seed)
    return TabularMdp(
        n_states=n_states,
        n_actions=n_actions,
        horizon=horizon,
        transition=_normalized_rows(rng, (n_states, n_actions, n_states), concentration),
        reward=rng.random((n_states, n_actions)),
        initial_dist=_normalized_rows(rng, (n_states,), concentration),
    )


def random_policy(n_states: int, n_actions: int, seed: int, concentration: float = 1.0) -> Policy:
    """Random stochastic policy with Dirichlet rows."""
    return Policy(probs=_normalized_rows(stream(seed, 1), (n_states, n_actions), concentration))
