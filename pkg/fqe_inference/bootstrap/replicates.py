"""Weighted-FQE bootstrap replicates and quantile confidence intervals."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..approximators.families import Approximator
from ..config import numerics, settings
from ..errors import ConfigurationError, NumericError, SolverError, StudyError
from ..estimation.fqe import run_fqe
from ..models.features import FeatureMap
from ..models.mdp import Dataset, Policy
from ..models.requests import FqeConfig, WeightScheme
from ..models.responses import BootstrapResult, ConfidenceInterval, FqeEstimate
from ..utils.rng import stream, stream_key
from ..utils.stats import lower_quantile, sample_variance
from .weights import k0 as scheme_k0
from .weights import sample_weights

logger = logging.getLogger(__name__)


def bootstrap_distribution(
    dataset: Dataset,
    policy: Policy,
    xi: np.ndarray,
    approx: Approximator,
    fmap: FeatureMap,
    config: FqeConfig,
    scheme: WeightScheme,
    n_reps: int,
    seed: int,
    base: FqeEstimate | None = None,
    threads: int | None = None,
) -> BootstrapResult:
    """Run B weighted-FQE replicates; replicate b draws its weights from sub-stream (seed, b).

    Args:
        dataset: Logged episodes.
        policy: Target policy.
        xi: Initial state distribution.
        approx: Function family.
        fmap: Feature map.
        config: FQE options shared by the base fit and the replicates.
        scheme: Weighting scheme.
        n_reps: Number of replicates B >= 1.
        seed: Replicate seed.
        base: Already computed unweighted estimate (recomputed when None).
        threads: Worker threads (defaults to ``settings.threads``).

    Returns:
        Replicate values and errors, without an interval.

    Raises:
        SolverError: The base estimate did not converge.
        StudyError: More than ``numerics.max_failure_fraction`` of the replicates failed.
    """
    if n_reps < 1:
        raise ConfigurationError(f"number of bootstrap replicates must be >= 1, got {n_reps}")
    base = base or run_fqe(dataset, policy, xi, approx, fmap, config)
    if not base.converged:
        raise SolverError("the base FQE estimate did not converge; bootstrap replicates would be meaningless")

    key = stream_key(seed)
    k = dataset.n_episodes

    def replicate(b: int) -> float | None:
        weights = sample_weights(scheme, k, stream(seed, b, key=key))
        try:
            estimate = run_fqe(dataset, policy, xi, approx, fmap, config, weights=weights)
        except (SolverError, NumericError) as e:
            logger.debug(f"Replicate {b} failed: {e}")
            return None
        return estimate.value if estimate.converged else None

    workers = threads or settings.threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(replicate, range(n_reps)))
    else:
        outcomes = [replicate(b) for b in range(n_reps)]

    values = np.array([v for v in outcomes if v is not None])
    failed = n_reps - values.size
    if failed:
        logger.warning(f"{failed} of {n_reps} bootstrap replicates excluded ({scheme.label})")
    if failed > numerics.max_failure_fraction * n_reps or values.size == 0:
        raise StudyError(f"{failed} of {n_reps} bootstrap replicates failed", failed=failed, total=n_reps)

    return BootstrapResult(
        scheme=scheme.label,
        base_value=base.value,
        replicate_values=values,
        errors=values - base.value,
        k0=scheme_k0(scheme),
        n_failed=failed,
    )


def confidence_interval(result: BootstrapResult, delta: float, k0: float | None = None) -> ConfidenceInterval:
    """CI(δ) = [v̂ − q̂_{1−δ/2}/√k₀, v̂ − q̂_{δ/2}/√k₀] from lower empirical quantiles of the errors."""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    if result.errors.size < 2:
        raise ConfigurationError(f"a confidence interval needs at least 2 replicates, got {result.errors.size}")
    k0 = result.k0 if k0 is None else k0
    if k0 <= 0.0:
        raise ConfigurationError(f"k0 must be positive, got {k0}")
    root = math.sqrt(k0)
    upper_error = lower_quantile(result.errors, 1.0 - delta / 2.0)
    lower_error = lower_quantile(result.errors, delta / 2.0)
    return ConfidenceInterval(
        lo=result.base_value - upper_error / root,
        hi=result.base_value - lower_error / root,
        delta=delta,
        k0=k0,
    )


def bootstrap_variance(result: BootstrapResult, k: int, k0: float | None = None) -> float:
    """Bootstrap estimate of σ²: K·Var(errors)/k₀."""
    k0 = result.k0 if k0 is None else k0
    return k * sample_variance(result.errors) / k0
