"""Domain models for finite episodic MDPs, policies and logged data."""

import numpy as np
from pydantic import Field, model_validator

from ..errors import ConfigurationError
from .arrays import ArrayModel, FloatArray, IntArray

# Tolerance on probability rows given as input; rows are never renormalized.
PROBABILITY_TOL = 1e-12


def _check_rows(name: str, rows: np.ndarray, tol: float = PROBABILITY_TOL) -> None:
    if np.any(rows < 0.0):
        raise ValueError(f"{name} has negative entries")
    sums = rows.sum(axis=-1)
    worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
    if worst > tol:
        raise ValueError(f"{name} rows must sum to 1 (worst deviation {worst:.3e})")


class TabularMdp(ArrayModel):
    """Finite-state, finite-action, finite-horizon time-homogeneous MDP.

    ``transition[s, a, s']`` is p(s'|s,a), ``reward[s, a]`` lies in [0, 1] and
    ``initial_dist`` is the initial state distribution ξ.
    """

    schema_version: int = Field(default=1, description="Record schema version")

    n_states: int = Field(..., ge=1, description="Number of states")

    n_actions: int = Field(..., ge=1, description="Number of actions")

    horizon: int = Field(..., ge=1, description="Episode length H")

    transition: FloatArray = Field(..., description="Transition tensor [n_states, n_actions, n_states]")

    reward: FloatArray = Field(..., description="Reward table [n_states, n_actions]")

    initial_dist: FloatArray = Field(..., description="Initial state distribution ξ")

    @model_validator(mode="after")
    def _validate(self) -> "TabularMdp":
        s, a = self.n_states, self.n_actions
        if self.transition.shape != (s, a, s):
            raise ValueError(f"transition must have shape {(s, a, s)}, got {self.transition.shape}")
        if self.reward.shape != (s, a):
            raise ValueError(f"reward must have shape {(s, a)}, got {self.reward.shape}")
        if self.initial_dist.shape != (s,):
            raise ValueError(f"initial_dist must have shape {(s,)}, got {self.initial_dist.shape}")
        _check_rows("transition", self.transition)
        _check_rows("initial_dist", self.initial_dist)
        if np.any(self.reward < 0.0) or np.any(self.reward > 1.0):
            raise ValueError("rewards must lie in [0, 1]")
        return self


class Policy(ArrayModel):
    """Stochastic stationary policy π(a|s) stored as a row-stochastic matrix."""

    schema_version: int = Field(default=1, description="Record schema version")

    probs: FloatArray = Field(..., description="Action probabilities [n_states, n_actions]")

    @model_validator(mode="after")
    def _validate(self) -> "Policy":
        if self.probs.ndim != 2 or self.probs.shape[0] < 1 or self.probs.shape[1] < 1:
            raise ValueError(f"probs must be a non-empty matrix, got shape {self.probs.shape}")
        _check_rows("policy", self.probs)
        return self

    @property
    def n_states(self) -> int:
        return int(self.probs.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.probs.shape[1])

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(probs=np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions: list[int] | np.ndarray, n_actions: int) -> "Policy":
        """Policy choosing ``actions[s]`` in state s with probability one."""
        actions = np.asarray(actions, dtype=np.int64)
        probs = np.zeros((actions.size, n_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs=probs)


class Trajectory(ArrayModel):
    """One episode τ = (s_1, a_1, ..., s_H, a_H, s_{H+1}) with its rewards."""

    states: IntArray = Field(..., description="States s_1..s_{H+1}")

    actions: IntArray = Field(..., description="Actions a_1..a_H")

    rewards: FloatArray = Field(..., description="Rewards r_1..r_H")

    @model_validator(mode="after")
    def _validate(self) -> "Trajectory":
        h = self.actions.shape[0] if self.actions.ndim == 1 else -1
        if h < 1 or self.states.shape != (h + 1,) or self.rewards.shape != (h,):
            raise ValueError("trajectory needs H actions, H rewards and H+1 states")
        return self

    @property
    def horizon(self) -> int:
        return int(self.actions.shape[0])


class Dataset(ArrayModel):
    """K logged episodes of H transitions each.

    Transitions are indexed n = k·H + h (episode-major, stage-minor); the flat
    accessors ``s``, ``a``, ``r``, ``s_next`` and ``episode_of`` follow that order.
    """

    schema_version: int = Field(default=1, description="Record schema version")

    states: IntArray = Field(..., description="States [K, H+1]")

    actions: IntArray = Field(..., description="Actions [K, H]")

    rewards: FloatArray = Field(..., description="Rewards [K, H]")

    seed: int | None = Field(None, description="Seed the dataset was generated from")

    @model_validator(mode="after")
    def _validate(self) -> "Dataset":
        if self.actions.ndim != 2 or self.actions.shape[0] < 1 or self.actions.shape[1] < 1:
            raise ValueError("a dataset needs K >= 1 episodes of H >= 1 steps")
        k, h = self.actions.shape
        if self.states.shape != (k, h + 1) or self.rewards.shape != (k, h):
            raise ValueError(f"inconsistent dataset shapes for K={k}, H={h}")
        return self

    @classmethod
    def from_trajectories(cls, episodes: list[Trajectory], seed: int | None = None) -> "Dataset":
        if not episodes:
            raise ConfigurationError("a dataset needs at least one episode")
        horizons = {episode.horizon for episode in episodes}
        if len(horizons) != 1:
            raise ConfigurationError(f"all episodes must share one horizon, got {sorted(horizons)}")
        return cls(
            states=np.stack([episode.states for episode in episodes]),
            actions=np.stack([episode.actions for episode in episodes]),
            rewards=np.stack([episode.rewards for episode in episodes]),
            seed=seed,
        )

    @property
    def n_episodes(self) -> int:
        return int(self.actions.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.actions.shape[1])

    @property
    def n_transitions(self) -> int:
        return self.n_episodes * self.horizon

    def episode(self, k: int) -> Trajectory:
        return Trajectory(states=self.states[k], actions=self.actions[k], rewards=self.rewards[k])

    @property
    def episodes(self) -> list[Trajectory]:
        return [self.episode(k) for k in range(self.n_episodes)]

    @property
    def s(self) -> np.ndarray:
        return self.states[:, :-1].reshape(-1)

    @property
    def a(self) -> np.ndarray:
        return self.actions.reshape(-1)

    @property
    def r(self) -> np.ndarray:
        return self.rewards.reshape(-1)

    @property
    def s_next(self) -> np.ndarray:
        return self.states[:, 1:].reshape(-1)

    @property
    def episode_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_episodes), self.horizon)


class OccupancyMeasures(ArrayModel):
    """Laws of (s_h, a_h) under a policy, their mean over h and the horizon-weighted μ̃."""

    per_step: FloatArray = Field(..., description="Occupancy of (s_h, a_h) for h = 1..H [H, S, A]")

    averaged: FloatArray = Field(..., description="Mean of per_step over h [S, A]")

    weighted_tilde: FloatArray = Field(..., description="μ̃ with weights (H-h+1)·2/(H(H+1)) [S, A]")

    @property
    def horizon(self) -> int:
        return int(self.per_step.shape[0])
