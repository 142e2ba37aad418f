"""Closed-form FQE for the linear family.

With Σ̂ = Σ_n φ_nφ_nᵀ + NλI (the same normalization as the stage objective),
M̂ = Σ̂⁻¹ Σ_n φ_n φ^π(s_{n+1})ᵀ and R̂ = Σ̂⁻¹ Σ_n r_n φ_n, the stage parameters
satisfy θ̂_h = M̂ θ̂_{h+1} + R̂ with θ̂_{H+1} = 0.
"""

import numpy as np

from ..errors import ConfigurationError
from ..models.features import FeatureMap, ParamVector
from ..models.mdp import Dataset, Policy
from ..models.responses import FqeEstimate, SolverReport
from ..utils.linalg import solve_normal_equations


def policy_features(fmap: FeatureMap, policy: Policy) -> np.ndarray:
    """φ^π(s) = Σ_a π(a|s) φ(s, a) for every state, shape [S, m]."""
    table = fmap.table.reshape(fmap.n_states, fmap.n_actions, fmap.dim)
    return np.einsum("sa,sam->sm", policy.probs, table)


def closed_form_linear_fqe(
    dataset: Dataset, policy: Policy, fmap: FeatureMap, lambda_: float, xi: np.ndarray
) -> FqeEstimate:
    """Linear FQE by the backward recursion θ̂_h = M̂θ̂_{h+1} + R̂.

    The ridge matrix ΦᵀΦ + NλI equals N(Σ̂ + λI) for the N-normalized Σ̂ = ΦᵀΦ/N.

    Raises:
        SolverError: Σ̂ is singular (λ = 0 and the features are not spanned by the data).
    """
    if lambda_ < 0.0:
        raise ConfigurationError(f"lambda must be >= 0, got {lambda_}")
    if policy.probs.shape != (fmap.n_states, fmap.n_actions):
        raise ConfigurationError("policy and feature map disagree on the state/action sets")
    n, m = dataset.n_transitions, fmap.dim
    phi = fmap.rows(dataset.s, dataset.a)
    phi_next = policy_features(fmap, policy)[dataset.s_next]

    sigma = phi.T @ phi + n * lambda_ * np.eye(m)
    solved = solve_normal_equations(sigma, np.column_stack([phi.T @ phi_next, phi.T @ dataset.r]), what="Σ̂")
    m_hat, r_hat = solved[:, :m], solved[:, m]

    horizon = dataset.horizon
    thetas = np.empty((horizon, m))
    theta_next = np.zeros(m)
    for h in range(horizon - 1, -1, -1):
        thetas[h] = m_hat @ theta_next + r_hat
        theta_next = thetas[h]

    value = float(np.asarray(xi, dtype=np.float64) @ policy_features(fmap, policy) @ thetas[0])
    reports = []
    for h in range(horizon):
        target_next = phi_next @ thetas[h + 1] if h + 1 < horizon else np.zeros(n)
        e = phi @ thetas[h] - dataset.r - target_next
        grad = phi.T @ e / n + lambda_ * thetas[h]
        reports.append(
            SolverReport(
                stage=h + 1,
                method="closed_form",
                iters=0,
                final_grad_norm=float(np.linalg.norm(grad)),
                loss=float(0.5 * e @ e / n + 0.5 * lambda_ * thetas[h] @ thetas[h]),
                converged=True,
            )
        )
    return FqeEstimate(
        family="linear",
        horizon=horizon,
        d=m,
        thetas=[ParamVector(family="linear", theta=t) for t in thetas],
        value=value,
        per_stage=reports,
    )
