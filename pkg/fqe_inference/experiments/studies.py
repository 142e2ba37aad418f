"""Monte-Carlo studies of the FQE limit theory on tabular instances.

Every study draws replication m at grid point i from ``generate_dataset`` with
seed ``derive_seed(config.seed, i, m)``, so the studies share one sampling path
and the same configuration reproduces the same datasets.
"""

import logging
import math
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from .. import __version__
from ..approximators.families import Approximator, make_approximator
from ..approximators.features import one_hot_features, random_linear_features
from ..bootstrap.replicates import bootstrap_distribution, confidence_interval
from ..config import numerics, settings
from ..errors import FqeInferenceError, StudyError
from ..estimation.fqe import run_fqe
from ..inference.bounds import bound_reward_free, bound_variance_aware
from ..inference.divergence import empirical_c2, restricted_chi2
from ..inference.variance import estimate_components, population_components, true_parameters
from ..mdp.canonical import canonical_instance
from ..mdp.core import exact_policy_value, generate_dataset
from ..models.features import FeatureMap
from ..models.mdp import Dataset, Policy, TabularMdp
from ..models.requests import StudyConfig, WeightScheme
from ..models.responses import FqeEstimate, StudyResult, StudyRow
from ..utils.rng import derive_seed
from ..utils.stats import ks_statistic, sample_variance

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Path components separating derived seeds of different purposes.
FEATURE_SEED_TAG = 7919
BOOTSTRAP_SEED_TAG = 1


@dataclass(frozen=True)
class StudySetup:
    """Instance, approximator and population quantities shared by every replication."""

    mdp: TabularMdp
    behavior: Policy
    target: Policy
    fmap: FeatureMap
    approx: Approximator
    true_value: float
    sigma2_oracle: float


def prepare(config: StudyConfig) -> StudySetup:
    """Resolve the instance and compute v_π and σ² at the true parameters."""
    if config.instance is not None:
        mdp, behavior, target = canonical_instance(config.instance)
    else:
        assert config.mdp is not None and config.behavior is not None and config.target is not None
        mdp, behavior, target = config.mdp, config.behavior, config.target
    if config.family == "tabular":
        fmap = one_hot_features(mdp.n_states, mdp.n_actions)
    else:
        # Full-rank random features span every Q table, so the linear class stays complete.
        fmap = random_linear_features(
            mdp.n_states, mdp.n_actions, mdp.n_states * mdp.n_actions, derive_seed(config.seed, FEATURE_SEED_TAG)
        )
    approx = make_approximator(config.family, fmap)
    theta_star = true_parameters(mdp, behavior, target, approx, fmap)
    sigma2 = population_components(mdp, behavior, target, approx, fmap, theta_star).sigma2
    return StudySetup(
        mdp=mdp,
        behavior=behavior,
        target=target,
        fmap=fmap,
        approx=approx,
        true_value=exact_policy_value(mdp, target),
        sigma2_oracle=sigma2,
    )


def _run_replications(fn: Callable[[int], T | None], n: int, label: str) -> list[T]:
    """Evaluate ``fn`` over replication indices, in index order, dropping failures."""
    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            outcomes = list(pool.map(fn, range(n)))
    else:
        outcomes = [fn(m) for m in range(n)]
    kept = [o for o in outcomes if o is not None]
    failed = n - len(kept)
    if failed:
        logger.warning(f"{label}: {failed} of {n} replications excluded")
    if failed > numerics.max_failure_fraction * n or not kept:
        raise StudyError(f"{label}: {failed} of {n} replications failed", failed=failed, total=n)
    return kept


def _fit(setup: StudySetup, config: StudyConfig, grid_index: int, k: int, m: int) -> tuple[Dataset, FqeEstimate]:
    dataset = generate_dataset(setup.mdp, setup.behavior, k, derive_seed(config.seed, grid_index, m))
    estimate = run_fqe(dataset, setup.target, setup.mdp.initial_dist, setup.approx, setup.fmap, config.fqe)
    return dataset, estimate


def _safe(fn: Callable[[int], T]) -> Callable[[int], T | None]:
    def wrapped(m: int) -> T | None:
        try:
            return fn(m)
        except FqeInferenceError as e:
            logger.debug(f"Replication {m} failed: {e}")
            return None

    return wrapped


def coverage_is_monotone(deltas: list[float], coverages: np.ndarray) -> bool:
    """Whether coverage does not increase as δ grows; intervals at a larger δ are nested inside smaller-δ ones."""
    ordered = np.asarray(coverages, dtype=np.float64)[np.argsort(deltas, kind="stable")]
    return bool(np.all(np.diff(ordered) <= 0.0))


def provenance(config: StudyConfig, study: str) -> dict[str, str]:
    return {
        "study": study,
        "version": __version__,
        "seed": str(config.seed),
        "config": config.model_dump_json(by_alias=True),
    }


def _error_rows(config: StudyConfig, study: str, with_plugin: bool) -> StudyResult:
    setup = prepare(config)
    logger.info(f"{study}: v_π={setup.true_value:.6f}, oracle σ²={setup.sigma2_oracle:.6f}")
    rows = []
    for i, k in enumerate(config.k_grid):
        start = time.perf_counter()

        def one(m: int, i: int = i, k: int = k) -> tuple[float, float | None] | None:
            dataset, estimate = _fit(setup, config, i, k, m)
            if not estimate.converged:
                return None
            plugin = None
            if with_plugin:
                plugin = estimate_components(
                    dataset,
                    setup.approx,
                    setup.fmap,
                    setup.target,
                    estimate,
                    mdp=setup.mdp,
                    nu_mode=config.nu_mode,
                    rollout_episodes=config.rollout_episodes,
                    rollout_seed=derive_seed(config.seed, i, m, 2),
                ).sigma2
            return estimate.value - setup.true_value, plugin

        results = _run_replications(_safe(one), config.replications, f"{study} K={k}")
        errors = np.array([r[0] for r in results])
        plugins = np.array([r[1] for r in results if r[1] is not None])
        mc_var = k * sample_variance(errors)

        ks = None
        if config.sigma_mode == "oracle" and setup.sigma2_oracle > 0.0:
            ks = ks_statistic(math.sqrt(k) * errors / math.sqrt(setup.sigma2_oracle))
        elif config.sigma_mode == "plugin" and with_plugin and np.all(plugins > 0.0):
            ks = ks_statistic(math.sqrt(k) * errors / np.sqrt(plugins))

        row = StudyRow(
            K=k,
            mean_error=float(errors.mean()),
            mc_variance_scaled=mc_var,
            sigma2_oracle=setup.sigma2_oracle,
            sigma2_plugin=float(plugins.mean()) if plugins.size else None,
            ks_statistic=ks,
            variance_ratio=mc_var / setup.sigma2_oracle if setup.sigma2_oracle > 0.0 else None,
            n_failed=config.replications - len(results),
            runtime=time.perf_counter() - start,
        )
        logger.info(f"{study} K={k}: K·Var={mc_var:.6f}, KS={ks}, failed={row.n_failed}")
        rows.append(row)
    return StudyResult(study=study, rows=rows, provenance=provenance(config, study))


def study_normality(config: StudyConfig) -> StudyResult:
    """Standardized errors √K(v̂ − v)/σ against N(0, 1), per K.

    σ is the oracle σ at θ* by default; ``sigma_mode="plugin"`` standardizes
    each replication by its own plug-in σ̂.
    """
    return _error_rows(config, "normality", with_plugin=True)


def study_cramer_rao(config: StudyConfig) -> StudyResult:
    """K·Var_MC(v̂) against σ² at θ*; ``variance_ratio`` is their quotient."""
    return _error_rows(config, "cramer_rao", with_plugin=config.sigma_mode == "plugin")


def study_coverage(config: StudyConfig) -> StudyResult:
    """Fraction of replications whose bootstrap CI(δ) contains v_π, per K, scheme and δ."""
    setup = prepare(config)
    rows = []
    for i, k in enumerate(config.k_grid):
        for s, scheme in enumerate(config.schemes):
            start = time.perf_counter()

            def one(
                m: int, i: int = i, k: int = k, s: int = s, scheme: WeightScheme = scheme
            ) -> tuple[float, list[bool]] | None:
                dataset, estimate = _fit(setup, config, i, k, m)
                if not estimate.converged:
                    return None
                result = bootstrap_distribution(
                    dataset,
                    setup.target,
                    setup.mdp.initial_dist,
                    setup.approx,
                    setup.fmap,
                    config.fqe,
                    scheme,
                    config.bootstrap_reps,
                    derive_seed(config.seed, i, m, BOOTSTRAP_SEED_TAG + s),
                    base=estimate,
                    threads=1,
                )
                hits = []
                for delta in config.deltas:
                    ci = confidence_interval(result, delta)
                    hits.append(ci.lo <= setup.true_value <= ci.hi)
                return estimate.value - setup.true_value, hits

            results = _run_replications(_safe(one), config.replications, f"coverage K={k} {scheme.label}")
            errors = np.array([r[0] for r in results])
            hits = np.array([r[1] for r in results])
            elapsed = time.perf_counter() - start
            coverages = hits.mean(axis=0)
            monotone = coverage_is_monotone(config.deltas, coverages)
            if not monotone:
                logger.warning(f"coverage K={k} {scheme.label} increases with δ: {coverages.tolist()}")
            for d, delta in enumerate(config.deltas):
                rows.append(
                    StudyRow(
                        K=k,
                        scheme=scheme.label,
                        delta=delta,
                        mean_error=float(errors.mean()),
                        mc_variance_scaled=k * sample_variance(errors),
                        sigma2_oracle=setup.sigma2_oracle,
                        coverage=float(coverages[d]),
                        coverage_monotone=monotone,
                        n_failed=config.replications - len(results),
                        runtime=elapsed,
                    )
                )
                logger.info(f"coverage K={k} {scheme.label} δ={delta}: {rows[-1].coverage:.3f}")
    return StudyResult(study="coverage", rows=rows, provenance=provenance(config, "coverage"))


def study_bounds(config: StudyConfig) -> StudyResult:
    """Fraction of replications in which each bound's leading term dominates |v̂ − v|."""
    setup = prepare(config)
    rows = []
    for i, k in enumerate(config.k_grid):
        start = time.perf_counter()

        def one(m: int, i: int = i, k: int = k) -> tuple[float, list[tuple[float, float]]] | None:
            dataset, estimate = _fit(setup, config, i, k, m)
            if not estimate.converged:
                return None
            components = estimate_components(
                dataset,
                setup.approx,
                setup.fmap,
                setup.target,
                estimate,
                mdp=setup.mdp,
                nu_mode=config.nu_mode,
                rollout_episodes=config.rollout_episodes,
                rollout_seed=derive_seed(config.seed, i, m, 2),
            )
            c2 = empirical_c2(dataset, components, setup.approx, setup.fmap, estimate)
            divergences = restricted_chi2(components)
            terms = []
            for delta in config.deltas:
                aware = bound_variance_aware(components.sigma2, c2, components, k, delta)
                free = bound_reward_free(divergences, c2, k, components.horizon, components.d, delta)
                terms.append((aware.leading_term, free.leading_term))
            return estimate.value - setup.true_value, terms

        results = _run_replications(_safe(one), config.replications, f"bounds K={k}")
        errors = np.array([r[0] for r in results])
        terms = np.array([r[1] for r in results])
        elapsed = time.perf_counter() - start
        for d, delta in enumerate(config.deltas):
            rows.append(
                StudyRow(
                    K=k,
                    delta=delta,
                    mean_error=float(errors.mean()),
                    mc_variance_scaled=k * sample_variance(errors),
                    sigma2_oracle=setup.sigma2_oracle,
                    bound_rate_variance_aware=float(np.mean(np.abs(errors) <= terms[:, d, 0])),
                    bound_rate_reward_free=float(np.mean(np.abs(errors) <= terms[:, d, 1])),
                    n_failed=config.replications - len(results),
                    runtime=elapsed,
                )
            )
    return StudyResult(study="bounds", rows=rows, provenance=provenance(config, "bounds"))
