"""The fqe and grad-check subcommands."""

import logging

from ..approximators.families import LinearApproximator, SmoothNetApproximator, TabularApproximator, grad_check
from ..estimation.fqe import z_residual
from ..mdp.io import write_estimate
from ..models.requests import RunConfig
from ..models.responses import CommandOutput
from .common import fitted_estimate, load_problem

logger = logging.getLogger(__name__)


def fqe(run: RunConfig) -> CommandOutput:
    """Fit FQE, print v̂_π with the KKT residual and optionally save the estimate."""
    problem = load_problem(run)
    estimate = fitted_estimate(run, problem)
    residual = z_residual(
        problem.dataset, problem.approx, problem.fmap, problem.target, estimate, run.lambda_, run.regularizer
    )
    logger.info(f"v̂_π = {estimate.value:.10g} (converged={estimate.converged})")
    files = []
    if run.output:
        write_estimate(run.output, estimate)
        files.append(run.output)
    summary: dict[str, float | int | str | None] = {
        "value": estimate.value,
        "family": estimate.family,
        "d": estimate.d,
        "converged": str(estimate.converged).lower(),
        "z_residual_scaled": residual.scaled_norm,
    }
    for report in estimate.per_stage:
        summary[f"grad_norm_{report.stage}"] = report.final_grad_norm
    return CommandOutput(subcommand=run.subcommand, summary=summary, files=files)


def grad_check_command(run: RunConfig) -> CommandOutput:
    """Finite-difference check of a family's analytic gradient."""
    match run.family:
        case "tabular":
            approx = TabularApproximator(run.feature_dim, 1)
        case "linear":
            approx = LinearApproximator(run.feature_dim)
        case _:
            approx = SmoothNetApproximator(run.feature_dim, run.hidden_width)
    assert run.seed is not None
    report = grad_check(approx, run.trials, run.seed)
    logger.info(f"{approx!r}: max relative error {report.max_rel_error:.3e} over {report.n_trials} trial points")
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"family": report.family, "d": approx.d, "max_rel_error": report.max_rel_error, "step": report.step},
    )
