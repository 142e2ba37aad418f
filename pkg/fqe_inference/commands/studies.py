"""The study-* subcommands."""

import logging
import os
from collections.abc import Callable

from ..config import settings
from ..experiments.studies import study_bounds, study_coverage, study_cramer_rao, study_normality
from ..models.requests import RunConfig, StudyConfig
from ..models.responses import CommandOutput, StudyResult, StudyRow
from ..utils.records import read_model, write_model, write_table

logger = logging.getLogger(__name__)

STUDIES: dict[str, tuple[str, Callable[[StudyConfig], StudyResult]]] = {
    "study-normality": ("normality", study_normality),
    "study-coverage": ("coverage", study_coverage),
    "study-cr": ("cramer_rao", study_cramer_rao),
    "study-bounds": ("bounds", study_bounds),
}

STUDY_COLUMNS = list(StudyRow.model_fields)


def study_config(run: RunConfig) -> StudyConfig:
    """The study definition from ``--config``, or assembled from the flags."""
    if run.study_config_path:
        config = read_model(run.study_config_path, StudyConfig)
        if run.seed is not None and run.seed != config.seed:
            logger.warning(f"--seed {run.seed} overrides the config seed {config.seed}")
            config = config.model_copy(update={"seed": run.seed})
        return config
    return StudyConfig(
        instance=run.instance or "two_state",
        family="linear" if run.family == "linear" else "tabular",
        fqe=run.fqe_config(),
        k_grid=run.k_grid,
        replications=run.replications,
        bootstrap_reps=max(run.bootstrap_reps, 2),
        deltas=run.deltas,
        schemes=run.schemes,
        seed=run.seed,
        nu_mode=run.nu_mode,
        rollout_episodes=run.rollout_episodes,
        sigma_mode=run.sigma_mode,
    )


def run_study(run: RunConfig) -> CommandOutput:
    """Run a Monte-Carlo study and write its table plus a JSON sidecar."""
    name, study = STUDIES[run.subcommand]
    config = study_config(run)
    result = study(config)

    table_path = run.output or os.path.join(settings.output_dir, f"{name}.csv")
    sidecar_path = os.path.splitext(table_path)[0] + ".json"
    write_table(
        table_path,
        STUDY_COLUMNS,
        (row.model_dump() for row in result.rows),
        {"tool": "fqe-inference", "schema_version": str(result.schema_version), **result.provenance},
    )
    write_model(sidecar_path, result)
    logger.info(f"{name}: {len(result.rows)} rows written to {table_path}")
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"study": name, "rows": len(result.rows), "seed": config.seed},
        files=[table_path, sidecar_path],
    )
