"""Input loading shared by the subcommands."""

import logging
from dataclasses import dataclass

from ..approximators.families import Approximator, make_approximator
from ..approximators.features import one_hot_features
from ..errors import ConfigurationError
from ..estimation.fqe import run_fqe
from ..mdp.core import check_compatible
from ..mdp.io import read_dataset, read_estimate, read_features, read_mdp, read_policy
from ..models.features import FeatureMap
from ..models.mdp import Dataset, Policy, TabularMdp
from ..models.requests import RunConfig
from ..models.responses import FqeEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Problem:
    """Everything an estimation subcommand reads from disk."""

    mdp: TabularMdp
    target: Policy
    dataset: Dataset
    fmap: FeatureMap
    approx: Approximator


def require(value: str | None, flag: str, subcommand: str) -> str:
    if value is None:
        raise ConfigurationError(f"{subcommand} needs {flag}")
    return value


def load_problem(run: RunConfig) -> Problem:
    """Read the MDP, target policy, dataset and feature map named in ``run``."""
    mdp = read_mdp(require(run.mdp_path, "--mdp", run.subcommand))
    target = read_policy(require(run.target_path, "--target", run.subcommand))
    dataset = read_dataset(require(run.dataset_path, "--dataset", run.subcommand))
    check_compatible(mdp, target)
    if dataset.horizon != mdp.horizon:
        raise ConfigurationError(f"dataset horizon {dataset.horizon} differs from the MDP horizon {mdp.horizon}")
    fmap = read_features(run.features_path) if run.features_path else one_hot_features(mdp.n_states, mdp.n_actions)
    if (fmap.n_states, fmap.n_actions) != (mdp.n_states, mdp.n_actions):
        raise ConfigurationError("feature map and MDP disagree on the state/action sets")
    approx = make_approximator(run.family, fmap, run.hidden_width)
    logger.info(f"Loaded K={dataset.n_episodes}, H={dataset.horizon}, {approx!r}")
    return Problem(mdp=mdp, target=target, dataset=dataset, fmap=fmap, approx=approx)


def fitted_estimate(run: RunConfig, problem: Problem) -> FqeEstimate:
    """The estimate named by ``--estimate``, or a fresh FQE fit."""
    if run.estimate_path:
        estimate = read_estimate(run.estimate_path)
        if estimate.family != problem.approx.family or estimate.d != problem.approx.d:
            raise ConfigurationError(
                f"estimate is for {estimate.family} (d={estimate.d}), not {problem.approx.family} "
                f"(d={problem.approx.d})"
            )
        return estimate
    return run_fqe(
        problem.dataset, problem.target, problem.mdp.initial_dist, problem.approx, problem.fmap, run.fqe_config()
    )
