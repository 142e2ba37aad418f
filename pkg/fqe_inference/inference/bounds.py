"""Leading-order evaluation of the finite-sample error bounds.

Only the displayed O(K^{-1/2}) and explicit O(1/K) terms are evaluated; the
residual constant C/K (through B(δ), D and the derivative sup-norms κ_l) is
not computable and is reported as an omission note.
"""

import math

import numpy as np

from ..errors import ConfigurationError
from ..models.responses import BoundInputs, BoundReport, DivergenceReport, VarianceComponents
from ..utils.linalg import CovarianceSolver
from .divergence import restricted_chi2
from .variance import covariance_solvers

OMITTED_C_NOTE = (
    "excludes the O(1/K) remainder C/K; C depends on B(δ), D and the derivative bounds κ_1..κ_3, "
    "which are not computable from data"
)
POSITIVITY_NOTE = "positivity case; excludes the O(1/K) remainder, whose constant is not computable from data"


def _check(k: int, delta: float) -> None:
    if k < 1:
        raise ConfigurationError(f"K must be >= 1, got {k}")
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")


def _horizon_weights(horizon: int) -> np.ndarray:
    """H − h + 1 for h = 1..H."""
    return np.arange(horizon, 0, -1, dtype=np.float64)


def b0_diagnostic(components: VarianceComponents, solvers: list[CovarianceSolver] | None = None) -> float:
    """B₀ = max_h √(ν̂_hᵀ Σ̂_h⁻² ν̂_h); a diagnostic that enters no bound arithmetic."""
    solvers = solvers or covariance_solvers(components)
    return float(max(np.linalg.norm(solvers[h].solve(components.nu_h[h])) for h in range(components.horizon)))


def bound_variance_aware(
    sigma2: float, c2: float, components: VarianceComponents, k: int, delta: float
) -> BoundReport:
    """√(2 log(6/δ) σ̂²/K) plus (1/K)(2/3) log(6/δ) √(Ĉ₂d) Σ_h (H−h+1) √(ν̂_hᵀΣ̂_h⁻¹ν̂_h)."""
    _check(k, delta)
    solvers = covariance_solvers(components)
    divergences = restricted_chi2(components, solvers)
    log_term = math.log(6.0 / delta)
    quads = np.array([entry.quad for entry in divergences.per_h])
    spread = float(_horizon_weights(components.horizon) @ np.sqrt(quads))
    return BoundReport(
        kind="variance_aware",
        leading_term=math.sqrt(2.0 * log_term * max(sigma2, 0.0) / k),
        secondary_term=(2.0 / 3.0) * log_term * math.sqrt(c2 * components.d) * spread / k,
        omitted_constant_note=OMITTED_C_NOTE,
        inputs=BoundInputs(K=k, H=components.horizon, d=components.d, delta=delta, C2_hat=c2),
        b0=b0_diagnostic(components, solvers),
    )


def bound_reward_free(
    divergences: DivergenceReport, c2: float, k: int, horizon: int, d: int, delta: float, b0: float | None = None
) -> BoundReport:
    """[Σ_h (H−h+1)√(1+χ̂²_{G_h})]·√(log(12/δ)/(2KH)) and its explicit 1/K companion."""
    _check(k, delta)
    if len(divergences.per_h) != horizon:
        raise ConfigurationError(f"expected {horizon} divergence entries, got {len(divergences.per_h)}")
    quads = np.array([max(1.0 + entry.chi2, 0.0) for entry in divergences.per_h])
    bracket = float(_horizon_weights(horizon) @ np.sqrt(quads))
    return BoundReport(
        kind="reward_free",
        leading_term=bracket * math.sqrt(math.log(12.0 / delta) / (2.0 * k * horizon)),
        secondary_term=bracket * 4.0 * math.log(12.0 * d * horizon / delta) / (3.0 * k) * math.sqrt(c2 * d * horizon),
        omitted_constant_note=OMITTED_C_NOTE,
        inputs=BoundInputs(K=k, H=horizon, d=d, delta=delta, C2_hat=c2),
        b0=b0,
    )


def bound_positivity(
    components: VarianceComponents, cross_norms: np.ndarray, k: int, delta: float
) -> BoundReport:
    """Positivity-case leading term.

    [Σ_{h1,h2} (H−h1+1)(H−h2+1) √q_{h1} √q_{h2} σ_{h1,h2}]^{1/2} · √(log(12/δ)/(2HK)),
    with q_h = ν̂_hᵀΣ̂_h⁻¹ν̂_h and σ_{h1,h2} from ``cross_norm_matrix``.
    """
    _check(k, delta)
    horizon = components.horizon
    cross_norms = np.asarray(cross_norms, dtype=np.float64)
    if cross_norms.shape != (horizon, horizon):
        raise ConfigurationError(f"cross norms must have shape {(horizon, horizon)}, got {cross_norms.shape}")
    solvers = covariance_solvers(components)
    quads = np.array([entry.quad for entry in restricted_chi2(components, solvers).per_h])
    scaled = _horizon_weights(horizon) * np.sqrt(quads)
    bracket = float(scaled @ cross_norms @ scaled)
    return BoundReport(
        kind="positivity",
        leading_term=math.sqrt(max(bracket, 0.0)) * math.sqrt(math.log(12.0 / delta) / (2.0 * horizon * k)),
        secondary_term=0.0,
        omitted_constant_note=POSITIVITY_NOTE,
        inputs=BoundInputs(K=k, H=horizon, d=components.d, delta=delta),
        b0=b0_diagnostic(components, solvers),
    )


def shared_covariance(components: VarianceComponents, rtol: float = 1e-10) -> np.ndarray:
    """The common Σ̂ of a family whose gradient does not depend on θ."""
    first = components.sigma_h[0]
    scale = max(float(np.max(np.abs(first))), 1.0)
    if any(np.max(np.abs(s - first)) > rtol * scale for s in components.sigma_h[1:]):
        raise ConfigurationError("stage covariances differ; the shared-covariance bound needs a linear family")
    return first


def bound_positivity_linear(components: VarianceComponents, k: int, delta: float) -> BoundReport:
    """Linear/tabular refinement: (H(H+1)/2)·√(ν̃ᵀΣ̂⁻¹ν̃)·√(log(12/δ)/(2KH)), ν̃ = (2/(H(H+1)))Σ_h(H−h+1)ν̂_h.

    In the tabular case ν̃ᵀΣ̂⁻¹ν̃ = 1 + χ²(μ̃, μ̄).
    """
    _check(k, delta)
    horizon = components.horizon
    half = horizon * (horizon + 1) / 2.0
    nu_tilde = _horizon_weights(horizon) @ components.nu_h / half
    solver = CovarianceSolver(
        shared_covariance(components), stage="shared", allow_jitter=bool(components.jitter[0] > 0.0)
    )
    quad = max(solver.quad(nu_tilde), 0.0)
    return BoundReport(
        kind="positivity",
        leading_term=half * math.sqrt(quad) * math.sqrt(math.log(12.0 / delta) / (2.0 * k * horizon)),
        secondary_term=0.0,
        omitted_constant_note=POSITIVITY_NOTE + "; shared-covariance (linear) form",
        inputs=BoundInputs(K=k, H=horizon, d=components.d, delta=delta),
        b0=b0_diagnostic(components),
    )
