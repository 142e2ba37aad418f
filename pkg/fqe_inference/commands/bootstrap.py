"""The bootstrap-ci subcommand."""

import logging
from typing import Any

from ..bootstrap.replicates import bootstrap_distribution, bootstrap_variance, confidence_interval
from ..models.requests import RunConfig
from ..models.responses import CommandOutput
from ..utils.records import provenance, write_table, write_values
from ..utils.rng import derive_seed
from .common import fitted_estimate, load_problem

logger = logging.getLogger(__name__)

CI_COLUMNS = ["scheme", "delta", "base_value", "k0", "lo", "hi", "sigma2_bootstrap", "n_reps", "n_failed"]


def bootstrap_ci(run: RunConfig) -> CommandOutput:
    """Bootstrap confidence intervals for v̂_π, one row per scheme and δ.

    Scheme s draws its replicate weights from ``derive_seed(seed, s)``; with a
    single scheme that is the only stream used. ``--values-out`` receives the
    replicate errors v̂°_π − v̂_π of the first scheme, one per line.
    """
    problem = load_problem(run)
    base = fitted_estimate(run, problem)
    config = run.fqe_config()
    assert run.seed is not None
    k = problem.dataset.n_episodes

    rows: list[dict[str, Any]] = []
    files = []
    for s, scheme in enumerate(run.schemes):
        seed = run.seed if len(run.schemes) == 1 else derive_seed(run.seed, s)
        result = bootstrap_distribution(
            problem.dataset,
            problem.target,
            problem.mdp.initial_dist,
            problem.approx,
            problem.fmap,
            config,
            scheme,
            run.bootstrap_reps,
            seed,
            base=base,
        )
        sigma2 = bootstrap_variance(result, k)
        for delta in run.deltas:
            ci = confidence_interval(result, delta)
            rows.append(
                {
                    "scheme": scheme.label,
                    "delta": delta,
                    "base_value": result.base_value,
                    "k0": result.k0,
                    "lo": ci.lo,
                    "hi": ci.hi,
                    "sigma2_bootstrap": sigma2,
                    "n_reps": int(result.errors.size),
                    "n_failed": result.n_failed,
                }
            )
            logger.info(f"{scheme.label} CI({delta}) = [{ci.lo:.6f}, {ci.hi:.6f}]")
        if s == 0 and run.values_out:
            write_values(
                run.values_out, result.errors, provenance(run.subcommand, scheme=scheme.label, seed=seed, K=k)
            )
            files.append(run.values_out)

    header = provenance(run.subcommand, K=k, B=run.bootstrap_reps, seed=run.seed)
    text = write_table(run.output, CI_COLUMNS, rows, header)
    if run.output:
        files.insert(0, run.output)
    first = rows[0]
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"base_value": first["base_value"], "k0": first["k0"], "lo": first["lo"], "hi": first["hi"]},
        files=files,
        table=None if run.output else text,
    )
