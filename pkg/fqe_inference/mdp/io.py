"""Reading and writing MDPs, policies, feature maps, datasets and estimates.

JSON records (MDP, policy, feature map, estimate) are pydantic dumps carrying
``schema_version``. A dataset file is comma-separated, one row per transition
with columns ``episode,h,s,a,r,s_next`` (episode from 0, stage h from 1),
after ``# key=value`` header lines that include K, H and the seed. Rewards are
written in shortest round-trip form, so reading a written dataset reproduces
it bit for bit.
"""

import logging

import numpy as np

from ..errors import ConfigurationError
from ..models.features import FeatureMap
from ..models.mdp import Dataset, Policy, TabularMdp
from ..models.responses import FqeEstimate
from ..utils.records import (
    check_schema,
    ensure_parent,
    provenance,
    read_header,
    read_model,
    require_file,
    write_model,
)

logger = logging.getLogger(__name__)

DATASET_COLUMNS = ("episode", "h", "s", "a", "r", "s_next")


def write_mdp(path: str, mdp: TabularMdp) -> None:
    write_model(path, mdp)


def read_mdp(path: str) -> TabularMdp:
    return read_model(path, TabularMdp)


def write_policy(path: str, policy: Policy) -> None:
    write_model(path, policy)


def read_policy(path: str) -> Policy:
    return read_model(path, Policy)


def write_features(path: str, fmap: FeatureMap) -> None:
    write_model(path, fmap)


def read_features(path: str) -> FeatureMap:
    return read_model(path, FeatureMap)


def write_estimate(path: str, estimate: FqeEstimate) -> None:
    write_model(path, estimate)


def read_estimate(path: str) -> FqeEstimate:
    return read_model(path, FqeEstimate)


def format_dataset(dataset: Dataset, command: str = "gen-data") -> str:
    """Dataset file contents."""
    header = provenance(
        command, K=dataset.n_episodes, H=dataset.horizon, seed="" if dataset.seed is None else dataset.seed
    )
    lines = [f"# {key}={value}" for key, value in header.items()]
    lines.append(",".join(DATASET_COLUMNS))
    for k in range(dataset.n_episodes):
        states, actions, rewards = dataset.states[k], dataset.actions[k], dataset.rewards[k]
        for h in range(dataset.horizon):
            lines.append(f"{k},{h + 1},{states[h]},{actions[h]},{float(rewards[h])!r},{states[h + 1]}")
    return "\n".join(lines) + "\n"


def write_dataset(path: str, dataset: Dataset, command: str = "gen-data") -> None:
    ensure_parent(path)
    with open(path, "w") as f:
        f.write(format_dataset(dataset, command))
    logger.info(f"Wrote {dataset.n_episodes} episodes to {path}")


def read_dataset(path: str) -> Dataset:
    """Parse a dataset file, checking the header against the rows.

    Raises:
        SchemaError: Unknown schema version.
        ConfigurationError: Malformed rows, missing transitions or broken episode chains.
    """
    require_file(path)
    with open(path) as f:
        header, body = read_header(f.readlines())
    check_schema(path, header)
    try:
        k, horizon = int(header["K"]), int(header["H"])
    except (KeyError, ValueError) as e:
        raise ConfigurationError(f"{path}: header must give integer K and H") from e
    seed = int(header["seed"]) if header.get("seed") else None

    if not body or tuple(c.strip() for c in body[0].split(",")) != DATASET_COLUMNS:
        raise ConfigurationError(f"{path}: expected column header {','.join(DATASET_COLUMNS)}")
    rows = body[1:]
    if len(rows) != k * horizon:
        raise ConfigurationError(f"{path}: expected {k * horizon} transitions, found {len(rows)}")

    states = np.empty((k, horizon + 1), dtype=np.int64)
    actions = np.empty((k, horizon), dtype=np.int64)
    rewards = np.empty((k, horizon))
    for line_no, line in enumerate(rows, start=1):
        fields = line.strip().split(",")
        try:
            episode, h, s, a, s_next = (int(fields[i]) for i in (0, 1, 2, 3, 5))
            r = float(fields[4])
        except (IndexError, ValueError) as e:
            raise ConfigurationError(f"{path}: malformed transition on data line {line_no}: {line.strip()!r}") from e
        if episode != (line_no - 1) // horizon or h != (line_no - 1) % horizon + 1:
            raise ConfigurationError(f"{path}: transitions must be ordered by episode then stage (line {line_no})")
        if h > 1 and states[episode, h - 1] != s:
            raise ConfigurationError(f"{path}: episode {episode} breaks its state chain at stage {h}")
        states[episode, h - 1] = s
        states[episode, h] = s_next
        actions[episode, h - 1] = a
        rewards[episode, h - 1] = r
    return Dataset(states=states, actions=actions, rewards=rewards, seed=seed)
