"""The gen-data subcommand."""

import logging
import os

from ..errors import ConfigurationError
from ..mdp.canonical import canonical_instance
from ..mdp.core import generate_dataset
from ..mdp.io import read_mdp, read_policy, write_dataset, write_mdp, write_policy
from ..models.requests import RunConfig
from ..models.responses import CommandOutput
from .common import require

logger = logging.getLogger(__name__)


def gen_data(run: RunConfig) -> CommandOutput:
    """Generate a behavior-policy dataset into the output directory.

    With ``--instance`` the canonical MDP and policies are written next to the
    dataset; otherwise ``--mdp`` and ``--behavior`` are read.
    """
    out_dir = run.output or "."
    files = []
    if run.instance is not None:
        mdp, behavior, target = canonical_instance(run.instance)
        for name, record in (("mdp.json", mdp), ("behavior.json", behavior), ("target.json", target)):
            path = os.path.join(out_dir, name)
            (write_mdp if name == "mdp.json" else write_policy)(path, record)  # type: ignore[operator]
            files.append(path)
    else:
        mdp = read_mdp(require(run.mdp_path, "--mdp or --instance", run.subcommand))
        behavior = read_policy(require(run.behavior_path, "--behavior", run.subcommand))

    if run.episodes is None:
        raise ConfigurationError("gen-data needs --episodes")
    assert run.seed is not None
    dataset = generate_dataset(mdp, behavior, run.episodes, run.seed)
    path = os.path.join(out_dir, "dataset.csv")
    write_dataset(path, dataset)
    files.append(path)
    logger.info(f"Generated {dataset.n_transitions} transitions (K={dataset.n_episodes}, seed={run.seed})")
    return CommandOutput(
        subcommand=run.subcommand,
        summary={"K": dataset.n_episodes, "H": dataset.horizon, "seed": run.seed},
        files=files,
    )
