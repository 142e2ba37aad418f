"""Plug-in asymptotic variance of the FQE value estimate.

Components, with N = KH transitions and g_{h,n} = ∇_θ f(θ_h, φ(s_n, a_n)):

    Σ_h      = (1/N) Σ_n g_{h,n} g_{h,n}ᵀ
    ν_h      = E^π[∇_θ f(θ_h, φ(s_h, a_h))]          (target-policy law of step h)
    Ω_{i,j}  = (1/N) Σ_n g_{i,n} g_{j,n}ᵀ ε_{i,n} ε_{j,n}
    σ²       = (1/H) Σ_{i,j} ν_iᵀ Σ_i⁻¹ Ω_{i,j} Σ_j⁻¹ ν_j

where ε_{j,n} = f(θ_j, φ_n) − r_n − Σ_a π(a|s_{n+1}) f(θ_{j+1}, φ(s_{n+1}, a)).
Residuals are in-sample (no leave-one-out).
"""

import logging
from typing import Literal

import numpy as np
from scipy import linalg

from ..approximators.families import Approximator, TabularApproximator, q_table, state_value_table
from ..errors import ConfigurationError, NumericError
from ..estimation.fqe import ThetaSequence, theta_matrix
from ..estimation.linear import policy_features
from ..mdp.core import check_compatible, exact_q_values, generate_dataset, occupancy_measures, state_values
from ..models.features import FeatureMap, ParamVector
from ..models.mdp import Dataset, Policy, TabularMdp
from ..models.responses import VarianceComponents
from ..utils.linalg import CovarianceSolver, solve_normal_equations

logger = logging.getLogger(__name__)

NEGATIVE_SIGMA2_TOL = 1e-10

NuMode = Literal["exact_mdp", "rollout"]


def _thetas(thetas: ThetaSequence, horizon: int, approx: Approximator) -> np.ndarray:
    matrix = theta_matrix(thetas)
    if matrix.shape != (horizon, approx.d):
        raise ConfigurationError(f"expected stage parameters of shape {(horizon, approx.d)}, got {matrix.shape}")
    return matrix


def stage_residuals(
    dataset: Dataset, approx: Approximator, fmap: FeatureMap, policy: Policy, thetas: ThetaSequence
) -> np.ndarray:
    """ε_{j,n} for every stage j and transition n, shape [H, N]."""
    horizon = dataset.horizon
    matrix = _thetas(thetas, horizon, approx)
    phis = fmap.rows(dataset.s, dataset.a)
    eps = np.empty((horizon, dataset.n_transitions))
    for j in range(horizon):
        next_v = state_value_table(approx, matrix[j + 1], policy, fmap) if j + 1 < horizon else np.zeros(fmap.n_states)
        eps[j] = approx.eval_batch(matrix[j], phis) - dataset.r - next_v[dataset.s_next]
    return eps


def residual_epsilon(
    dataset: Dataset,
    approx: Approximator,
    fmap: FeatureMap,
    policy: Policy,
    thetas: ThetaSequence,
    j: int,
    n: int,
) -> float:
    """ε_{j,n} for stage j (1-based) and flat transition index n, with θ_{H+1} = 0."""
    horizon = dataset.horizon
    if not 1 <= j <= horizon:
        raise ConfigurationError(f"stage must lie in [1, {horizon}], got {j}")
    if not 0 <= n < dataset.n_transitions:
        raise ConfigurationError(f"transition index must lie in [0, {dataset.n_transitions}), got {n}")
    matrix = _thetas(thetas, horizon, approx)
    s, a, r, s_next = dataset.s[n], dataset.a[n], dataset.r[n], dataset.s_next[n]
    next_value = 0.0
    if j < horizon:
        next_value = float(policy.probs[s_next] @ q_table(approx, matrix[j], fmap)[s_next])
    return approx.eval(matrix[j - 1], fmap.phi(s, a)) - float(r) - next_value


def _gradient_tables(approx: Approximator, fmap: FeatureMap, matrix: np.ndarray) -> np.ndarray:
    """∇f(θ_h, φ(s, a)) for every stage and pair, shape [H, S, A, d]."""
    grads = [approx.grad_batch(theta, fmap.table) for theta in matrix]
    return np.stack(grads).reshape(matrix.shape[0], fmap.n_states, fmap.n_actions, approx.d)


def target_gradient_means(
    approx: Approximator,
    fmap: FeatureMap,
    policy: Policy,
    thetas: ThetaSequence,
    mdp: TabularMdp,
    nu_mode: NuMode = "exact_mdp",
    rollout_episodes: int = 10_000,
    rollout_seed: int = 0,
) -> np.ndarray:
    """ν_h for every stage, shape [H, d].

    ``exact_mdp`` sums against the target occupancy measures; ``rollout``
    averages over fresh target-policy episodes simulated from ``mdp``.
    """
    check_compatible(mdp, policy)
    matrix = _thetas(thetas, mdp.horizon, approx)
    if nu_mode == "exact_mdp":
        occupancy = occupancy_measures(mdp, policy).per_step
        return np.einsum("hsa,hsad->hd", occupancy, _gradient_tables(approx, fmap, matrix))
    if nu_mode == "rollout":
        rollouts = generate_dataset(mdp, policy, rollout_episodes, rollout_seed)
        return np.stack(
            [
                approx.grad_batch(matrix[h], fmap.rows(rollouts.states[:, h], rollouts.actions[:, h])).mean(axis=0)
                for h in range(mdp.horizon)
            ]
        )
    raise ConfigurationError(f"unknown nu_mode {nu_mode!r}")


def covariance_solvers(components: VarianceComponents) -> list[CovarianceSolver]:
    """Factor each Σ̂_h, re-applying the jitter recorded in ``components``."""
    return [
        CovarianceSolver(components.sigma_h[h], stage=h + 1, allow_jitter=bool(components.jitter[h] > 0.0))
        for h in range(components.horizon)
    ]


def _clamp_sigma2(value: float) -> float:
    if value < -NEGATIVE_SIGMA2_TOL:
        raise NumericError(f"plug-in variance is negative ({value:.3e}); Ω̂ is not positive semidefinite")
    return max(value, 0.0)


def plug_in_sigma2(components: VarianceComponents, solvers: list[CovarianceSolver] | None = None) -> float:
    """σ² = (1/H) Σ_{h1,h2} ν_{h1}ᵀ Σ_{h1}⁻¹ Ω_{h1,h2} Σ_{h2}⁻¹ ν_{h2}, clamped at 0 within 1e-10."""
    solvers = solvers or covariance_solvers(components)
    horizon = components.horizon
    x = np.stack([solvers[h].solve(components.nu_h[h]) for h in range(horizon)])
    total = float(np.einsum("id,ijde,je->", x, components.omega, x))
    return _clamp_sigma2(total / horizon)


def _assemble(
    sigma_h: np.ndarray,
    nu_h: np.ndarray,
    omega: np.ndarray,
    matrix: np.ndarray,
    nu_mode: str,
    allow_jitter: bool,
) -> VarianceComponents:
    solvers = [CovarianceSolver(sigma_h[h], stage=h + 1, allow_jitter=allow_jitter) for h in range(sigma_h.shape[0])]
    partial = VarianceComponents(
        sigma_h=sigma_h,
        nu_h=nu_h,
        omega=omega,
        sigma2=0.0,
        theta_ref=matrix,
        jitter=np.array([s.jitter for s in solvers]),
        nu_mode=nu_mode,
    )
    return partial.model_copy(update={"sigma2": plug_in_sigma2(partial, solvers)})


def estimate_components(
    dataset: Dataset,
    approx: Approximator,
    fmap: FeatureMap,
    policy: Policy,
    thetas: ThetaSequence,
    mdp: TabularMdp | None = None,
    nu_mode: NuMode = "exact_mdp",
    rollout_episodes: int = 10_000,
    rollout_seed: int = 0,
    allow_jitter: bool = False,
) -> VarianceComponents:
    """Plug-in Σ̂_h, ν̂_h, Ω̂_{i,j} and σ̂² at ``thetas``.

    Args:
        dataset: Logged episodes.
        approx: Function family.
        fmap: Feature map.
        policy: Target policy.
        thetas: Fitted θ̂ (or true θ* for oracle checks).
        mdp: Simulator used for ν_h; required by both modes.
        nu_mode: ``exact_mdp`` or ``rollout``.
        rollout_episodes: Target-policy episodes in rollout mode.
        rollout_seed: Seed of those episodes.
        allow_jitter: Add ridge jitter to ill-conditioned Σ̂_h instead of failing.

    Returns:
        The components with σ̂².

    Raises:
        InferenceError: Some Σ̂_h has condition estimate above the limit and jitter is off.
    """
    if mdp is None:
        raise ConfigurationError("ν_h needs the MDP (exact occupancies or simulated rollouts)")
    horizon = dataset.horizon
    matrix = _thetas(thetas, horizon, approx)
    n = dataset.n_transitions
    phis = fmap.rows(dataset.s, dataset.a)
    grads = np.stack([approx.grad_batch(matrix[h], phis) for h in range(horizon)])
    eps = stage_residuals(dataset, approx, fmap, policy, matrix)

    sigma_h = np.matmul(grads.transpose(0, 2, 1), grads) / n
    scaled = grads * eps[:, :, None]
    omega = np.empty((horizon, horizon, approx.d, approx.d))
    for i in range(horizon):
        for j in range(horizon):
            omega[i, j] = scaled[i].T @ scaled[j] / n
    nu_h = target_gradient_means(approx, fmap, policy, matrix, mdp, nu_mode, rollout_episodes, rollout_seed)
    components = _assemble(sigma_h, nu_h, omega, matrix, nu_mode, allow_jitter)
    logger.debug(f"Plug-in σ̂²={components.sigma2:.6g} ({nu_mode}, K={dataset.n_episodes}, H={horizon})")
    return components


def behavior_measure(mdp: TabularMdp, behavior: Policy) -> np.ndarray:
    """μ̄(s, a): behavior occupancy averaged over the H steps."""
    return occupancy_measures(mdp, behavior).averaged


def population_components(
    mdp: TabularMdp,
    behavior: Policy,
    target: Policy,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
    allow_jitter: bool = False,
) -> VarianceComponents:
    """Σ_h, ν_h, Ω_{i,j} and σ² as exact expectations under the behavior episode law."""
    check_compatible(mdp, behavior)
    check_compatible(mdp, target)
    horizon = mdp.horizon
    matrix = _thetas(thetas, horizon, approx)
    mu_bar = behavior_measure(mdp, behavior)
    grads = _gradient_tables(approx, fmap, matrix)

    # ε[h, s, a, s'] = f(θ_h, φ(s, a)) − r(s, a) − V^{θ_{h+1}}(s')
    eps = np.empty((horizon, mdp.n_states, mdp.n_actions, mdp.n_states))
    for h in range(horizon):
        next_v = (
            state_value_table(approx, matrix[h + 1], target, fmap) if h + 1 < horizon else np.zeros(mdp.n_states)
        )
        q = q_table(approx, matrix[h], fmap)
        eps[h] = (q - mdp.reward)[:, :, None] - next_v[None, None, :]
    cross = np.einsum("isat,jsat,sat->ijsa", eps, eps, mdp.transition)

    sigma_h = np.einsum("sa,hsad,hsae->hde", mu_bar, grads, grads)
    omega = np.einsum("sa,ijsa,isad,jsae->ijde", mu_bar, cross, grads, grads)
    nu_h = np.einsum("hsa,hsad->hd", occupancy_measures(mdp, target).per_step, grads)
    return _assemble(sigma_h, nu_h, omega, matrix, "population", allow_jitter)


def true_parameters(
    mdp: TabularMdp, behavior: Policy, target: Policy, approx: Approximator, fmap: FeatureMap
) -> list[ParamVector]:
    """Population FQE parameters θ*_1..θ*_H.

    Tabular: θ*_h is Q_h flattened. Linear: the population fixed point
    θ*_h = argmin E_μ̄[(θᵀφ − r − V^{θ*_{h+1}}(s'))²], which equals the least-squares
    fit of Q_h whenever Q_h is in the feature span.
    """
    if isinstance(approx, TabularApproximator):
        q = exact_q_values(mdp, target)
        return [approx.param(q[h].reshape(-1)) for h in range(mdp.horizon)]
    if not approx.linear_in_theta:
        raise ConfigurationError(f"true parameters are only available for linear families, not {approx.family}")
    mu_bar = behavior_measure(mdp, behavior).reshape(-1)
    phi = fmap.table
    gram = (phi * mu_bar[:, None]).T @ phi
    next_features = np.einsum("sat,tm->sam", mdp.transition, policy_features(fmap, target)).reshape(-1, fmap.dim)
    solved = solve_normal_equations(
        gram,
        np.column_stack([(phi * mu_bar[:, None]).T @ next_features, phi.T @ (mu_bar * mdp.reward.reshape(-1))]),
        what="population Σ",
    )
    m_pop, r_pop = solved[:, : fmap.dim], solved[:, fmap.dim]
    thetas = [np.zeros(fmap.dim)] * mdp.horizon
    theta_next = np.zeros(fmap.dim)
    for h in range(mdp.horizon - 1, -1, -1):
        thetas[h] = m_pop @ theta_next + r_pop
        theta_next = thetas[h]
    return [approx.param(t) for t in thetas]


def tabular_mis_variance(mdp: TabularMdp, behavior: Policy, target: Policy) -> float:
    """Tabular marginal-importance-sampling variance of the value estimate.

    (1/H) Σ_{s,a} Var_{s'~p(·|s,a)}[Σ_h μ_h(s, a) V_{h+1}(s')] / μ̄(s, a), with μ_h the target
    occupancy, μ̄ the step-averaged behavior occupancy and V_{H+1} = 0. Computed from
    dynamic-programming quantities only.
    """
    check_compatible(mdp, behavior)
    check_compatible(mdp, target)
    horizon = mdp.horizon
    mu = occupancy_measures(mdp, target).per_step
    mu_bar = behavior_measure(mdp, behavior)
    values = state_values(exact_q_values(mdp, target), target)
    next_values = np.vstack([values[1:], np.zeros((1, mdp.n_states))])

    # G[s, a, s'] = Σ_h μ_h(s, a) V_{h+1}(s')
    g = np.einsum("hsa,ht->sat", mu, next_values)
    mean = np.einsum("sat,sat->sa", mdp.transition, g)
    second = np.einsum("sat,sat->sa", mdp.transition, g**2)
    variance = np.maximum(second - mean**2, 0.0)
    reached = variance > 0.0
    if np.any(reached & (mu_bar <= 0.0)):
        raise ConfigurationError("target-policy mass on pairs the behavior policy never visits")
    ratio = np.zeros_like(variance)
    ratio[reached] = variance[reached] / mu_bar[reached]
    return float(ratio.sum() / horizon)


def linear_sigma2(
    dataset: Dataset, fmap: FeatureMap, policy: Policy, thetas: ThetaSequence, nu: np.ndarray
) -> float:
    """σ² for the linear family through a single shared feature Gram matrix.

    Uses unnormalized sums Σ = Σ_n φ_nφ_nᵀ and Ω_{i,j} = Σ_n φ_nφ_nᵀ ε_{i,n}ε_{j,n}, then
    rescales: σ² = (N/H) Σ_{i,j} ν_iᵀ Σ⁻¹ Ω_{i,j} Σ⁻¹ ν_j.
    """
    matrix = theta_matrix(thetas)
    horizon, n = dataset.horizon, dataset.n_transitions
    phi = fmap.rows(dataset.s, dataset.a)
    next_phi = policy_features(fmap, policy)[dataset.s_next]
    predictions = phi @ matrix.T
    next_predictions = np.hstack([next_phi @ matrix[1:].T, np.zeros((n, 1))])
    eps = predictions - dataset.r[:, None] - next_predictions

    gram = phi.T @ phi
    x = linalg.solve(gram, np.asarray(nu, dtype=np.float64).T, assume_a="pos")
    total = 0.0
    for i in range(horizon):
        for j in range(horizon):
            omega_ij = (phi * (eps[:, i] * eps[:, j])[:, None]).T @ phi
            total += float(x[:, i] @ omega_ij @ x[:, j])
    return _clamp_sigma2(n * total / horizon)
