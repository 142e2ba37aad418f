"""Differentiable function families f(θ, φ) with analytic gradients.

All families satisfy f(0, φ) = 0. Parameters are flat vectors; the smooth
network packs them as W₁ (row-major, [w, m]), then b₁ [w], then w₂ [w], then b₂.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from ..errors import ConfigurationError, NumericError
from ..models.features import FeatureMap, ParamVector
from ..models.mdp import Policy
from ..models.responses import GradCheckReport
from ..utils.rng import stream

logger = logging.getLogger(__name__)

# Trial points for grad_check are multiples of 1/32 and the step is a power of two,
# so θ ± step and the linear families' dot products are exact in binary floating point.
_TRIAL_GRID = 32
DEFAULT_FD_STEP = 2.0**-17
ABS_TOL_FLOOR = 1e-8


def as_theta(theta: ParamVector | np.ndarray) -> np.ndarray:
    if isinstance(theta, ParamVector):
        return theta.theta
    return np.asarray(theta, dtype=np.float64)


class Approximator(ABC):
    """A parametric family f(θ, φ) over m-dimensional features."""

    family: str = ""

    #: Whether f is linear in θ (normal equations then solve a stage exactly).
    linear_in_theta: bool = False

    def __init__(self, feature_dim: int):
        if feature_dim < 1:
            raise ConfigurationError(f"feature dimension must be >= 1, got {feature_dim}")
        self.feature_dim = feature_dim

    @property
    @abstractmethod
    def d(self) -> int:
        """Parameter dimension."""

    @abstractmethod
    def _eval_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _grad_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray: ...

    def _check(self, theta: ParamVector | np.ndarray, phis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        theta = as_theta(theta)
        phis = np.asarray(phis, dtype=np.float64)
        if theta.shape != (self.d,):
            raise ConfigurationError(f"{self.family}: expected θ of length {self.d}, got shape {theta.shape}")
        if phis.shape[-1] != self.feature_dim:
            raise ConfigurationError(
                f"{self.family}: expected features of length {self.feature_dim}, got shape {phis.shape}"
            )
        return theta, phis

    def _finite(self, values: np.ndarray, what: str) -> np.ndarray:
        if not np.all(np.isfinite(values)):
            raise NumericError(f"{self.family}: non-finite {what}")
        return values

    def eval(self, theta: ParamVector | np.ndarray, phi: np.ndarray) -> float:
        """f(θ, φ) for one feature vector."""
        theta, phi = self._check(theta, phi)
        return float(self.eval_batch(theta, phi[None, :])[0])

    def grad(self, theta: ParamVector | np.ndarray, phi: np.ndarray) -> np.ndarray:
        """∇_θ f(θ, φ) for one feature vector, shape [d]."""
        theta, phi = self._check(theta, phi)
        return self.grad_batch(theta, phi[None, :])[0]

    def eval_batch(self, theta: ParamVector | np.ndarray, phis: np.ndarray) -> np.ndarray:
        """f(θ, φ_n) for the rows of ``phis`` [n, m]."""
        theta, phis = self._check(theta, phis)
        return self._finite(self._eval_batch(theta, phis), "value")

    def grad_batch(self, theta: ParamVector | np.ndarray, phis: np.ndarray) -> np.ndarray:
        """∇_θ f(θ, φ_n) for the rows of ``phis``, shape [n, d]."""
        theta, phis = self._check(theta, phis)
        return self._finite(self._grad_batch(theta, phis), "gradient")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.d)

    def param(self, theta: np.ndarray) -> ParamVector:
        return ParamVector(family=self.family, theta=theta)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(m={self.feature_dim}, d={self.d})"


class LinearApproximator(Approximator):
    """f(θ, φ) = θ·φ."""

    family = "linear"
    linear_in_theta = True

    @property
    def d(self) -> int:
        return self.feature_dim

    def _eval_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray:
        return phis @ theta

    def _grad_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray:
        return phis.copy()


class TabularApproximator(LinearApproximator):
    """Linear family over one-hot features: θ is the Q table flattened row-major."""

    family = "tabular"

    def __init__(self, n_states: int, n_actions: int):
        super().__init__(n_states * n_actions)
        self.n_states = n_states
        self.n_actions = n_actions


class SmoothNetApproximator(Approximator):
    """One hidden layer of tanh units: f(θ, φ) = w₂·tanh(W₁φ + b₁) + b₂."""

    family = "smooth_net"

    def __init__(self, feature_dim: int, width: int):
        super().__init__(feature_dim)
        if width < 1:
            raise ConfigurationError(f"hidden width must be >= 1, got {width}")
        self.width = width

    @property
    def d(self) -> int:
        return self.width * self.feature_dim + 2 * self.width + 1

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """Split θ into (W₁, b₁, w₂, b₂)."""
        w, m = self.width, self.feature_dim
        w1 = theta[: w * m].reshape(w, m)
        b1 = theta[w * m : w * m + w]
        w2 = theta[w * m + w : w * m + 2 * w]
        return w1, b1, w2, float(theta[-1])

    def _eval_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self.unpack(theta)
        return np.tanh(phis @ w1.T + b1) @ w2 + b2

    def _grad_batch(self, theta: np.ndarray, phis: np.ndarray) -> np.ndarray:
        w1, b1, w2, _ = self.unpack(theta)
        hidden = np.tanh(phis @ w1.T + b1)
        slope = w2 * (1.0 - hidden**2)
        n = phis.shape[0]
        d_w1 = (slope[:, :, None] * phis[:, None, :]).reshape(n, -1)
        return np.hstack([d_w1, slope, hidden, np.ones((n, 1))])

    def __repr__(self) -> str:
        return f"SmoothNetApproximator(m={self.feature_dim}, width={self.width}, d={self.d})"


def make_approximator(family: str, fmap: FeatureMap, hidden_width: int = 4) -> Approximator:
    """Build the approximator of ``family`` over the features of ``fmap``.

    Raises:
        ConfigurationError: Unknown family, or tabular over non-indicator features.
    """
    match family:
        case "tabular":
            if fmap.kind != "one_hot":
                raise ConfigurationError("the tabular family needs one_hot features")
            return TabularApproximator(fmap.n_states, fmap.n_actions)
        case "linear":
            return LinearApproximator(fmap.dim)
        case "smooth_net":
            return SmoothNetApproximator(fmap.dim, hidden_width)
        case _:
            raise ConfigurationError(f"unknown approximator family {family!r}")


def q_table(approx: Approximator, theta: ParamVector | np.ndarray, fmap: FeatureMap) -> np.ndarray:
    """f(θ, φ(s, a)) for every pair, shape [S, A]."""
    return approx.eval_batch(theta, fmap.table).reshape(fmap.n_states, fmap.n_actions)


def _check_policy(policy: Policy, fmap: FeatureMap) -> None:
    if policy.probs.shape != (fmap.n_states, fmap.n_actions):
        raise ConfigurationError(
            f"policy shape {policy.probs.shape} does not match features ({fmap.n_states}, {fmap.n_actions})"
        )


def state_value_table(
    approx: Approximator, theta: ParamVector | np.ndarray, policy: Policy, fmap: FeatureMap
) -> np.ndarray:
    """Σ_a π(a|s) f(θ, φ(s, a)) for every state, shape [S]."""
    _check_policy(policy, fmap)
    return (q_table(approx, theta, fmap) * policy.probs).sum(axis=1)


def expected_next_value(
    approx: Approximator, theta: ParamVector | np.ndarray, s_next: int, policy: Policy, fmap: FeatureMap
) -> float:
    """Σ_a π(a|s') f(θ, φ(s', a)), an exact finite sum over actions."""
    _check_policy(policy, fmap)
    if not 0 <= s_next < fmap.n_states:
        raise ConfigurationError(f"state {s_next} out of range [0, {fmap.n_states})")
    values = approx.eval_batch(theta, fmap.table[s_next * fmap.n_actions : (s_next + 1) * fmap.n_actions])
    return float(policy.probs[s_next] @ values)


def expected_next_values(
    approx: Approximator, theta: ParamVector | np.ndarray, s_next: np.ndarray, policy: Policy, fmap: FeatureMap
) -> np.ndarray:
    """Vectorized ``expected_next_value`` over an array of next states."""
    return state_value_table(approx, theta, policy, fmap)[np.asarray(s_next)]


def _trial_point(rng: np.random.Generator, size: int, scale: int = _TRIAL_GRID) -> np.ndarray:
    return rng.integers(-scale, scale + 1, size=size) / _TRIAL_GRID


def grad_check(approx: Approximator, n_trials: int, seed: int, step: float = DEFAULT_FD_STEP) -> GradCheckReport:
    """Compare analytic gradients to central differences at random (θ, φ).

    The error at a trial point is ‖g_fd − g‖ / ‖g‖, or the absolute error when ‖g‖ is
    below 1e-8. Tabular trials use indicator features.

    Args:
        approx: Family to check.
        n_trials: Number of trial points, at least 1.
        seed: Seed of the trial-point stream.
        step: Central-difference step.

    Returns:
        Report with the worst error over the trial points.
    """
    if n_trials < 1:
        raise ConfigurationError(f"n_trials must be >= 1, got {n_trials}")
    rng = stream(seed)
    worst = 0.0
    for _ in range(n_trials):
        theta = _trial_point(rng, approx.d)
        if isinstance(approx, TabularApproximator):
            phi = np.zeros(approx.feature_dim)
            phi[rng.integers(approx.feature_dim)] = 1.0
        else:
            phi = _trial_point(rng, approx.feature_dim)
        analytic = approx.grad(theta, phi)
        numeric = np.empty(approx.d)
        for i in range(approx.d):
            bump = np.zeros(approx.d)
            bump[i] = step
            numeric[i] = (approx.eval(theta + bump, phi) - approx.eval(theta - bump, phi)) / (2.0 * step)
        scale = float(np.linalg.norm(analytic))
        error = float(np.linalg.norm(numeric - analytic))
        worst = max(worst, error / scale if scale >= ABS_TOL_FLOOR else error)
    logger.debug(f"grad_check {approx!r}: {n_trials} trial points, max relative error {worst:.3e}")
    return GradCheckReport(family=approx.family, n_trials=n_trials, step=step, max_rel_error=worst)
