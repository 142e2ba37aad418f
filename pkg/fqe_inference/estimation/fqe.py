"""Fitted Q-evaluation: backward per-stage regressions and their KKT residual."""

import logging
from collections.abc import Sequence

import numpy as np

from ..approximators.families import Approximator, as_theta, expected_next_values, state_value_table
from ..errors import ConfigurationError
from ..models.features import FeatureMap, ParamVector
from ..models.mdp import Dataset, Policy
from ..models.requests import FqeConfig
from ..models.responses import FqeEstimate, SolverReport, ZResidual
from ..utils.rng import stream
from .solvers import StageObjective, solve_stage

logger = logging.getLogger(__name__)

ThetaSequence = FqeEstimate | Sequence[ParamVector] | Sequence[np.ndarray] | np.ndarray


def theta_matrix(thetas: ThetaSequence) -> np.ndarray:
    """Stack θ_1..θ_H into an [H, d] array."""
    if isinstance(thetas, FqeEstimate):
        return thetas.theta_matrix
    if isinstance(thetas, np.ndarray):
        return np.atleast_2d(thetas).astype(np.float64)
    return np.stack([as_theta(t) for t in thetas])


def _check_inputs(dataset: Dataset, policy: Policy, fmap: FeatureMap) -> None:
    if policy.probs.shape != (fmap.n_states, fmap.n_actions):
        raise ConfigurationError(
            f"policy shape {policy.probs.shape} does not match features ({fmap.n_states}, {fmap.n_actions})"
        )
    if dataset.states.max() >= fmap.n_states or dataset.actions.max() >= fmap.n_actions:
        raise ConfigurationError("dataset contains states or actions outside the feature map")


def episode_weights_to_transitions(dataset: Dataset, weights: np.ndarray | None) -> np.ndarray:
    """Repeat per-episode weights W_k over the H transitions of each episode."""
    k = dataset.n_episodes
    if weights is None:
        return np.ones(dataset.n_transitions)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (k,):
        raise ConfigurationError(f"expected {k} episode weights, got shape {weights.shape}")
    if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
        raise ConfigurationError("episode weights must be finite and non-negative")
    if abs(weights.sum() - k) > 1e-9 * max(1.0, k):
        raise ConfigurationError(f"episode weights must sum to K={k}, got {weights.sum()!r}")
    return np.repeat(weights, dataset.horizon)


def build_targets(
    dataset: Dataset,
    approx: Approximator,
    fmap: FeatureMap,
    theta_next: ParamVector | np.ndarray,
    policy: Policy,
) -> np.ndarray:
    """y_n = r_n + Σ_a π(a|s_{n+1}) f(θ_{h+1}, φ(s_{n+1}, a)) over all N transitions.

    Order is episode-major, stage-minor (n = k·H + h).
    """
    _check_inputs(dataset, policy, fmap)
    return dataset.r + expected_next_values(approx, theta_next, dataset.s_next, policy, fmap)


def fit_stage(
    dataset: Dataset,
    targets: np.ndarray,
    approx: Approximator,
    fmap: FeatureMap,
    config: FqeConfig,
    weights: np.ndarray | None = None,
    theta0: np.ndarray | None = None,
    stage: int = 1,
) -> tuple[ParamVector, SolverReport]:
    """Minimize (1/2N) Σ_n w(n)(f(θ, φ_n) − y_n)² + λρ(θ) for one stage.

    Args:
        dataset: Logged episodes.
        targets: y_1..y_N in transition order.
        approx: Function family.
        fmap: Feature map.
        config: Regularization and solver options.
        weights: Optional episode weights (length K, sum K); W_k multiplies every transition of episode k.
        theta0: Start point for iterative solvers (zeros by default).
        stage: Stage number for reports and messages.

    Returns:
        The fitted parameters and the solver report.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (dataset.n_transitions,):
        raise ConfigurationError(f"expected {dataset.n_transitions} targets, got shape {targets.shape}")
    phis = fmap.rows(dataset.s, dataset.a)
    objective = StageObjective(
        approx, phis, targets, episode_weights_to_transitions(dataset, weights), config.effective_lambda
    )
    start = approx.zeros() if theta0 is None else np.asarray(theta0, dtype=np.float64)
    theta, report = solve_stage(objective, start, config.solver, stage, config.theta_max, config.project_to_box)
    return approx.param(theta), report


def _start_point(approx: Approximator, config: FqeConfig, theta_next: np.ndarray, stage: int) -> np.ndarray:
    theta0 = theta_next.copy() if config.init == "warm_start" else approx.zeros()
    if not approx.linear_in_theta and not np.any(theta0):
        # θ = 0 is a stationary point of the hidden units of a tanh network.
        theta0 = config.init_scale * stream(config.init_seed, stage).standard_normal(approx.d)
    return theta0


def run_fqe(
    dataset: Dataset,
    policy: Policy,
    xi: np.ndarray,
    approx: Approximator,
    fmap: FeatureMap,
    config: FqeConfig | None = None,
    weights: np.ndarray | None = None,
) -> FqeEstimate:
    """Run FQE backward from Q̂_{H+1} = 0 and return v̂_π = Σ_s ξ(s) Σ_a π(a|s) f(θ̂_1, φ(s, a)).

    Args:
        dataset: K episodes of H transitions.
        policy: Target policy π.
        xi: Initial state distribution ξ.
        approx: Function family.
        fmap: Feature map.
        config: FQE options (defaults to ``FqeConfig()``).
        weights: Optional episode weights for bootstrap replicates.

    Returns:
        Per-stage parameters, the value estimate and solver reports.
    """
    config = config or FqeConfig()
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (fmap.n_states,):
        raise ConfigurationError(f"ξ must have length {fmap.n_states}, got shape {xi.shape}")
    _check_inputs(dataset, policy, fmap)

    horizon = dataset.horizon
    thetas: list[ParamVector] = [approx.param(approx.zeros())] * horizon
    reports: list[SolverReport | None] = [None] * horizon
    theta_next = approx.zeros()
    for h in range(horizon, 0, -1):
        targets = build_targets(dataset, approx, fmap, theta_next, policy)
        theta0 = _start_point(approx, config, theta_next, h)
        param, report = fit_stage(dataset, targets, approx, fmap, config, weights, theta0, stage=h)
        if not report.converged:
            logger.warning(
                f"Stage {h}: {report.method} stopped after {report.iters} iterations "
                f"with ‖∇L‖={report.final_grad_norm:.3e}"
            )
        logger.debug(f"Stage {h}: {report.method}, loss={report.loss:.6g}, ‖∇L‖={report.final_grad_norm:.3e}")
        thetas[h - 1] = param
        reports[h - 1] = report
        theta_next = param.theta

    value = float(xi @ state_value_table(approx, thetas[0], policy, fmap))
    return FqeEstimate(
        family=approx.family,
        horizon=horizon,
        d=approx.d,
        thetas=thetas,
        value=value,
        per_stage=[r for r in reports if r is not None],
    )


def z_residual(
    dataset: Dataset,
    approx: Approximator,
    fmap: FeatureMap,
    policy: Policy,
    thetas: ThetaSequence,
    lambda_: float = 0.0,
    regularizer: str = "half_squared_norm",
) -> ZResidual:
    """Norms of the stacked estimating equations Z_K(θ) + λR(θ).

    Block h is (1/K) Σ_k Σ_j (f(θ_h, φ_j) − y_j(θ_{h+1})) ∇f(θ_h, φ_j) + H·λ·θ_h, which
    is H times the gradient of stage h's fit objective, so roots coincide with
    the per-stage first-order conditions. ``scaled_norm`` divides the stacked
    norm by H.
    """
    _check_inputs(dataset, policy, fmap)
    matrix = theta_matrix(thetas)
    horizon = dataset.horizon
    if matrix.shape[0] != horizon:
        raise ConfigurationError(f"expected {horizon} stage parameters, got {matrix.shape[0]}")
    lam = 0.0 if regularizer == "none" else lambda_
    phis = fmap.rows(dataset.s, dataset.a)
    blocks = np.empty_like(matrix)
    for h in range(horizon):
        theta_next = matrix[h + 1] if h + 1 < horizon else approx.zeros()
        targets = build_targets(dataset, approx, fmap, theta_next, policy)
        e = approx.eval_batch(matrix[h], phis) - targets
        blocks[h] = approx.grad_batch(matrix[h], phis).T @ e / dataset.n_episodes + horizon * lam * matrix[h]
    per_stage = np.linalg.norm(blocks, axis=1)
    total = float(np.linalg.norm(blocks))
    return ZResidual(per_stage_norms=per_stage, total_norm=total, scaled_norm=total / horizon)
