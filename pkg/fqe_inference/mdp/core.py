"""Trajectory simulation and exact dynamic-programming oracles for tabular MDPs."""

import logging

import numpy as np

from ..errors import ConfigurationError
from ..models.mdp import Dataset, OccupancyMeasures, Policy, TabularMdp, Trajectory
from ..utils.rng import stream, stream_key

logger = logging.getLogger(__name__)


def check_compatible(mdp: TabularMdp, policy: Policy) -> None:
    """Raise ConfigurationError unless ``policy`` is defined on the MDP's state/action sets."""
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ConfigurationError(
            f"policy shape {policy.probs.shape} does not match MDP ({mdp.n_states} states, {mdp.n_actions} actions)"
        )


def _draw(cumulative: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw: first index whose cumulative probability exceeds u (row-wise)."""
    idx = (u[:, None] >= cumulative).sum(axis=1)
    return np.minimum(idx, cumulative.shape[1] - 1)


def _rollout(mdp: TabularMdp, policy: Policy, uniforms: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Propagate a batch of episodes from their uniforms.

    ``uniforms`` has shape [K, 2H+1]: column 0 draws s_1, column 2h+1 draws a_{h+1}
    and column 2h+2 draws s_{h+2}.
    """
    k, horizon = uniforms.shape[0], mdp.horizon
    init_cdf = np.cumsum(mdp.initial_dist)[None, :]
    policy_cdf = np.cumsum(policy.probs, axis=1)
    transition_cdf = np.cumsum(mdp.transition, axis=2)

    states = np.empty((k, horizon + 1), dtype=np.int64)
    actions = np.empty((k, horizon), dtype=np.int64)
    states[:, 0] = _draw(np.broadcast_to(init_cdf, (k, mdp.n_states)), uniforms[:, 0])
    for h in range(horizon):
        s = states[:, h]
        actions[:, h] = _draw(policy_cdf[s], uniforms[:, 2 * h + 1])
        states[:, h + 1] = _draw(transition_cdf[s, actions[:, h]], uniforms[:, 2 * h + 2])
    rewards = mdp.reward[states[:, :-1], actions]
    return states, actions, rewards


def sample_trajectory(mdp: TabularMdp, policy: Policy, rng: np.random.Generator) -> Trajectory:
    """Simulate one episode of ``policy`` in ``mdp``.

    Consumes exactly 2H+1 uniforms from ``rng``, in the order documented on
    ``_rollout``; ``generate_dataset`` uses the same layout per episode.
    """
    check_compatible(mdp, policy)
    uniforms = rng.random(2 * mdp.horizon + 1)[None, :]
    states, actions, rewards = _rollout(mdp, policy, uniforms)
    return Trajectory(states=states[0], actions=actions[0], rewards=rewards[0])


def generate_dataset(mdp: TabularMdp, policy: Policy, n_episodes: int, seed: int) -> Dataset:
    """Generate K i.i.d. episodes; episode k is drawn from sub-stream ``stream(seed, k)``.

    Args:
        mdp: Environment.
        policy: Behavior policy.
        n_episodes: K >= 1.
        seed: Non-negative seed; same inputs give a bit-identical dataset.

    Returns:
        The dataset, tagged with its seed.
    """
    check_compatible(mdp, policy)
    if n_episodes < 1:
        raise ConfigurationError(f"number of episodes must be >= 1, got {n_episodes}")
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")

    width = 2 * mdp.horizon + 1
    key = stream_key(seed)
    uniforms = np.stack([stream(seed, k, key=key).random(width) for k in range(n_episodes)])
    states, actions, rewards = _rollout(mdp, policy, uniforms)
    logger.debug(f"Generated {n_episodes} episodes of length {mdp.horizon} (seed={seed})")
    return Dataset(states=states, actions=actions, rewards=rewards, seed=seed)


def state_values(q_values: np.ndarray, policy: Policy) -> np.ndarray:
    """V_h(s) = Σ_a π(a|s) Q_h(s,a) for every stage, shape [H, S]."""
    return np.einsum("hsa,sa->hs", q_values, policy.probs)


def exact_q_values(mdp: TabularMdp, policy: Policy) -> np.ndarray:
    """Q_h(s,a) for h = 1..H by backward recursion, shape [H, S, A]."""
    check_compatible(mdp, policy)
    horizon = mdp.horizon
    q = np.empty((horizon, mdp.n_states, mdp.n_actions))
    next_v = np.zeros(mdp.n_states)
    for h in range(horizon - 1, -1, -1):
        q[h] = mdp.reward + mdp.transition @ next_v
        next_v = (policy.probs * q[h]).sum(axis=1)
    return q


def exact_policy_value(mdp: TabularMdp, policy: Policy) -> float:
    """v_π = Σ_s ξ(s) Σ_a π(a|s) Q_1(s,a)."""
    q1 = exact_q_values(mdp, policy)[0]
    return float(mdp.initial_dist @ (policy.probs * q1).sum(axis=1))


def occupancy_measures(mdp: TabularMdp, policy: Policy) -> OccupancyMeasures:
    """Forward recursion for the law of (s_h, a_h), its mean over h and μ̃."""
    check_compatible(mdp, policy)
    horizon = mdp.horizon
    per_step = np.empty((horizon, mdp.n_states, mdp.n_actions))
    state_law = mdp.initial_dist.copy()
    for h in range(horizon):
        per_step[h] = state_law[:, None] * policy.probs
        state_law = np.einsum("sa,sat->t", per_step[h], mdp.transition)

    weights = (horizon - np.arange(horizon)) * 2.0 / (horizon * (horizon + 1))
    return OccupancyMeasures(
        per_step=per_step,
        averaged=per_step.mean(axis=0),
        weighted_tilde=np.einsum("h,hsa->sa", weights, per_step),
    )


def empirical_occupancy(dataset: Dataset, n_states: int, n_actions: int) -> np.ndarray:
    """Per-stage empirical frequencies of (s_h, a_h), shape [H, S, A]."""
    counts = np.zeros((dataset.horizon, n_states, n_actions))
    for h in range(dataset.horizon):
        np.add.at(counts[h], (dataset.states[:, h], dataset.actions[:, h]), 1.0)
    return counts / dataset.n_episodes


def empirical_behavior_measure(dataset: Dataset, n_states: int, n_actions: int) -> np.ndarray:
    """μ̄ estimated from data: fraction of the N transitions at each (s, a)."""
    counts = np.zeros((n_states, n_actions))
    np.add.at(counts, (dataset.s, dataset.a), 1.0)
    return counts / dataset.n_transitions
