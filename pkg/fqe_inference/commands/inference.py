"""The variance and bounds subcommands."""

import logging
from typing import Any

from ..errors import ConfigurationError
from ..inference.bounds import (
    bound_positivity,
    bound_positivity_linear,
    bound_reward_free,
    bound_variance_aware,
)
from ..inference.divergence import check_positivity, cross_norm_matrix, empirical_c2, restricted_chi2, tabular_chi2
from ..inference.variance import behavior_measure, covariance_solvers, estimate_components
from ..mdp.core import occupancy_measures
from ..mdp.io import read_policy
from ..models.requests import RunConfig
from ..models.responses import BoundReport, CommandOutput, FqeEstimate, VarianceComponents
from ..utils.records import provenance, write_table
from .common import Problem, fitted_estimate, load_problem

logger = logging.getLogger(__name__)

BOUND_COLUMNS = ["kind", "delta", "K", "H", "d", "leading_term", "secondary_term", "C2_hat", "b0", "note"]


def _components(run: RunConfig, problem: Problem) -> tuple[FqeEstimate, VarianceComponents]:
    estimate = fitted_estimate(run, problem)
    if not estimate.converged:
        logger.warning("FQE did not converge at every stage; plug-in quantities use the last iterate")
    components = estimate_components(
        problem.dataset,
        problem.approx,
        problem.fmap,
        problem.target,
        estimate,
        mdp=problem.mdp,
        nu_mode=run.nu_mode,
        rollout_episodes=run.rollout_episodes,
        rollout_seed=run.seed or 0,
        allow_jitter=run.jitter,
    )
    return estimate, components


def _tabular_chi2(run: RunConfig, problem: Problem) -> float | None:
    """χ²(μ̃, μ̄) from the behavior policy, when one was given."""
    if run.behavior_path is None:
        return None
    behavior = read_policy(run.behavior_path)
    mu_tilde = occupancy_measures(problem.mdp, problem.target).weighted_tilde
    return tabular_chi2(mu_tilde, behavior_measure(problem.mdp, behavior))


def variance(run: RunConfig) -> CommandOutput:
    """Plug-in σ̂², per-stage restricted χ² and Ĉ₂ as a one-row table."""
    problem = load_problem(run)
    estimate, components = _components(run, problem)
    solvers = covariance_solvers(components)
    divergences = restricted_chi2(components, solvers, _tabular_chi2(run, problem))
    c2 = empirical_c2(problem.dataset, components, problem.approx, problem.fmap, estimate)

    row: dict[str, Any] = {
        "value": estimate.value,
        "sigma2": components.sigma2,
        "C2_hat": c2,
        "tabular_chi2": divergences.tabular_chi2,
        "jitter": float(components.jitter.max()),
    }
    for entry in divergences.per_h:
        row[f"quad_{entry.stage}"] = entry.quad
        row[f"chi2_{entry.stage}"] = entry.chi2
    text = write_table(
        run.output,
        list(row),
        [row],
        provenance(run.subcommand, family=problem.approx.family, K=problem.dataset.n_episodes, nu_mode=run.nu_mode),
    )
    logger.info(f"σ̂² = {components.sigma2:.10g}, Ĉ₂ = {c2:.6g}")
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"sigma2": components.sigma2, "C2_hat": c2},
        files=[run.output] if run.output else [],
        table=None if run.output else text,
    )


def _bound_row(report: BoundReport) -> dict[str, Any]:
    inputs = report.inputs
    return {
        "kind": report.kind,
        "delta": inputs.delta,
        "K": inputs.K,
        "H": inputs.H,
        "d": inputs.d,
        "leading_term": report.leading_term,
        "secondary_term": report.secondary_term,
        "C2_hat": inputs.C2_hat,
        "b0": report.b0,
        "note": report.omitted_constant_note,
    }


def bounds(run: RunConfig) -> CommandOutput:
    """Evaluate the variance-aware and reward-free bounds for every δ.

    When the whitened gradient form is nonnegative on the observed pairs the
    positivity-case bound is added, and for families linear in θ its
    shared-covariance refinement too.
    """
    problem = load_problem(run)
    estimate, components = _components(run, problem)
    k = problem.dataset.n_episodes
    dataset, approx, fmap = problem.dataset, problem.approx, problem.fmap
    c2 = empirical_c2(dataset, components, approx, fmap, estimate)
    divergences = restricted_chi2(components)
    positivity = check_positivity(dataset, components, approx, fmap, estimate, run.n_pairs, run.seed or 0)
    cross = cross_norm_matrix(dataset, approx, fmap, estimate, run.jitter) if positivity.holds else None
    if not positivity.holds:
        logger.info(f"Positivity fails (min {positivity.min_value:.3e}); positivity bounds skipped")

    rows = []
    for delta in run.deltas:
        reports = [
            bound_variance_aware(components.sigma2, c2, components, k, delta),
            bound_reward_free(divergences, c2, k, components.horizon, components.d, delta),
        ]
        if cross is not None:
            reports.append(bound_positivity(components, cross, k, delta))
            if approx.linear_in_theta:
                try:
                    reports.append(bound_positivity_linear(components, k, delta))
                except ConfigurationError as e:
                    logger.warning(f"Shared-covariance bound skipped: {e}")
        rows.extend(_bound_row(report) for report in reports)

    text = write_table(
        run.output,
        BOUND_COLUMNS,
        rows,
        provenance(run.subcommand, family=approx.family, K=k, sigma2=components.sigma2, positivity=positivity.holds),
    )
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"sigma2": components.sigma2, "C2_hat": c2, "positivity": str(positivity.holds).lower()},
        files=[run.output] if run.output else [],
        table=None if run.output else text,
    )
