"""Restricted χ² divergences, data-coverage constants and cross-stage covariances."""

import logging

import numpy as np

from ..approximators.families import Approximator
from ..config import numerics
from ..errors import ConfigurationError
from ..estimation.fqe import ThetaSequence, theta_matrix
from ..models.features import FeatureMap
from ..models.mdp import Dataset
from ..models.responses import CrossCovariance, DivergenceEntry, DivergenceReport, PositivityReport, VarianceComponents
from ..utils.linalg import CovarianceSolver
from ..utils.rng import stream
from .variance import covariance_solvers

logger = logging.getLogger(__name__)


def restricted_chi2(
    components: VarianceComponents,
    solvers: list[CovarianceSolver] | None = None,
    tabular_chi2_value: float | None = None,
) -> DivergenceReport:
    """quad_h = ν̂_hᵀ Σ̂_h⁻¹ ν̂_h = 1 + χ²_{G_h} for every stage."""
    solvers = solvers or covariance_solvers(components)
    entries = []
    for h in range(components.horizon):
        quad = max(solvers[h].quad(components.nu_h[h]), 0.0)
        entries.append(DivergenceEntry(stage=h + 1, quad=quad, chi2=quad - 1.0))
    return DivergenceReport(per_h=entries, tabular_chi2=tabular_chi2_value)


def tabular_chi2(mu_tilde: np.ndarray, mu_bar: np.ndarray) -> float:
    """Standard χ²(μ̃, μ̄) = Σ μ̃²/μ̄ − 1; infinite when μ̃ puts mass where μ̄ has none."""
    mu_tilde = np.asarray(mu_tilde, dtype=np.float64).reshape(-1)
    mu_bar = np.asarray(mu_bar, dtype=np.float64).reshape(-1)
    if mu_tilde.shape != mu_bar.shape:
        raise ConfigurationError("χ² needs two distributions on the same support")
    support = mu_tilde > 0.0
    if np.any(mu_bar[support] <= 0.0):
        return float("inf")
    return float(np.sum(mu_tilde[support] ** 2 / mu_bar[support]) - 1.0)


def _observed_pairs(dataset: Dataset, fmap: FeatureMap) -> np.ndarray:
    """Row indices of the distinct (s, a) pairs present in the data, ascending."""
    return np.unique(fmap.index(dataset.s, dataset.a))


def _whitened_forms(
    components: VarianceComponents,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
    rows: np.ndarray,
) -> list[np.ndarray]:
    """For each stage, the matrix ∇f(θ_h, φ_p) Σ̂_h⁻¹ ∇f(θ_h, φ_q)ᵀ over the given pairs."""
    matrix = theta_matrix(thetas)
    solvers = covariance_solvers(components)
    forms = []
    for h in range(components.horizon):
        grads = approx.grad_batch(matrix[h], fmap.table[rows])
        forms.append(grads @ solvers[h].solve(grads.T))
    return forms


def empirical_c2(
    dataset: Dataset,
    components: VarianceComponents,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
) -> float:
    """Ĉ₂ = max over observed (s, a) and h of ∇f Σ̂_h⁻¹ ∇fᵀ / d."""
    forms = _whitened_forms(components, approx, fmap, thetas, _observed_pairs(dataset, fmap))
    return float(max(np.max(np.diag(form)) for form in forms) / components.d)


def average_leverage(
    dataset: Dataset,
    components: VarianceComponents,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
) -> np.ndarray:
    """Dataset average of ∇f Σ̂_h⁻¹ ∇fᵀ per stage; equals d when Σ̂_h was assembled from the same data."""
    counts = np.bincount(fmap.index(dataset.s, dataset.a), minlength=fmap.n_states * fmap.n_actions)
    rows = np.flatnonzero(counts)
    forms = _whitened_forms(components, approx, fmap, thetas, rows)
    weights = counts[rows] / dataset.n_transitions
    return np.array([float(weights @ np.diag(form)) for form in forms])


def check_positivity(
    dataset: Dataset,
    components: VarianceComponents,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
    n_pairs: int | None = None,
    seed: int = 0,
) -> PositivityReport:
    """Minimum of ∇f(θ_h, φ(s, a)) Σ̂_h⁻¹ ∇f(θ_h, φ(s', a'))ᵀ over observed pairs and all h.

    Args:
        dataset: Data defining the observed state-action pairs.
        components: Components providing Σ̂_h.
        approx: Function family.
        fmap: Feature map.
        thetas: Stage parameters.
        n_pairs: Ordered pairs sampled without replacement; None (or at least all pairs) checks every pair.
        seed: Seed of the pair sample.

    Returns:
        The minimum and whether it is at least −``numerics.positivity_tol``.
    """
    if n_pairs is not None and n_pairs < 1:
        raise ConfigurationError(f"n_pairs must be >= 1, got {n_pairs}")
    rows = _observed_pairs(dataset, fmap)
    forms = _whitened_forms(components, approx, fmap, thetas, rows)
    total = rows.size**2
    if n_pairs is None or n_pairs >= total:
        picked = np.arange(total)
    else:
        picked = stream(seed).choice(total, size=n_pairs, replace=False)
    minimum = float(min(form.reshape(-1)[picked].min() for form in forms))
    return PositivityReport(
        min_value=minimum,
        holds=minimum >= -numerics.positivity_tol,
        n_pairs_checked=int(picked.size),
    )


def cross_covariance(
    dataset: Dataset,
    approx: Approximator,
    fmap: FeatureMap,
    thetas: ThetaSequence,
    h1: int,
    h2: int,
    allow_jitter: bool = False,
) -> CrossCovariance:
    """Σ̂_{h1,h2} = (1/N) Σ_n ∇f(θ_{h1}, φ_n)ᵀ ∇f(θ_{h2}, φ_n) and ‖Σ̂_{h1}^{-1/2} Σ̂_{h1,h2} Σ̂_{h2}^{-1/2}‖₂."""
    matrix = theta_matrix(thetas)
    horizon = matrix.shape[0]
    for h in (h1, h2):
        if not 1 <= h <= horizon:
            raise ConfigurationError(f"stage must lie in [1, {horizon}], got {h}")
    phis = fmap.rows(dataset.s, dataset.a)
    n = dataset.n_transitions
    g1 = approx.grad_batch(matrix[h1 - 1], phis)
    g2 = approx.grad_batch(matrix[h2 - 1], phis)
    cross = g1.T @ g2 / n
    w1 = CovarianceSolver(g1.T @ g1 / n, stage=h1, allow_jitter=allow_jitter).inv_sqrt()
    w2 = w1 if h1 == h2 else CovarianceSolver(g2.T @ g2 / n, stage=h2, allow_jitter=allow_jitter).inv_sqrt()
    norm = float(np.linalg.norm(w1 @ cross @ w2, 2))
    return CrossCovariance(h1=h1, h2=h2, sigma_h1h2=cross, sigma_norm=norm)


def cross_norm_matrix(
    dataset: Dataset, approx: Approximator, fmap: FeatureMap, thetas: ThetaSequence, allow_jitter: bool = False
) -> np.ndarray:
    """σ_{h1,h2} for every pair of stages, shape [H, H]."""
    horizon = theta_matrix(thetas).shape[0]
    norms = np.ones((horizon, horizon))
    for h1 in range(1, horizon + 1):
        for h2 in range(h1 + 1, horizon + 1):
            value = cross_covariance(dataset, approx, fmap, thetas, h1, h2, allow_jitter).sigma_norm
            norms[h1 - 1, h2 - 1] = norms[h2 - 1, h1 - 1] = value
    return norms
