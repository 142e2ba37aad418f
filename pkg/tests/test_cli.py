"""Tests for the command-line front end and its exit codes."""

import json

import pytest

from fqe_inference import parse_and_dispatch
from fqe_inference.approximators import random_linear_features
from fqe_inference.mdp import canonical_instance, exact_policy_value
from fqe_inference.mdp.io import write_features
from fqe_inference.utils.records import read_table, read_values


def summary(text: str) -> dict[str, str]:
    """Parse the ``key=value`` summary line a subcommand prints first."""
    first = text.splitlines()[0]
    return dict(item.split("=", 1) for item in first.split())


@pytest.fixture
def instance_dir(tmp_path):
    """The two-state instance and a 400-episode dataset written by gen-data."""
    code = parse_and_dispatch(
        ["gen-data", "--instance", "two_state", "--episodes", "400", "--seed", "11", "--output", str(tmp_path)]
    )
    assert code == 0
    return tmp_path


def inputs(directory) -> list[str]:
    return [
        "--mdp",
        str(directory / "mdp.json"),
        "--target",
        str(directory / "target.json"),
        "--dataset",
        str(directory / "dataset.csv"),
    ]


class TestParsing:
    """Help, version and usage errors."""

    def test_help(self, capsys):
        assert parse_and_dispatch(["--help"]) == 0
        assert "gen-data" in capsys.readouterr().out

    def test_version(self, capsys):
        assert parse_and_dispatch(["--version"]) == 0
        assert "fqe-inference" in capsys.readouterr().out

    def test_missing_subcommand(self):
        assert parse_and_dispatch([]) == 2

    def test_unknown_flag(self):
        assert parse_and_dispatch(["fqe", "--frobnicate"]) == 2


class TestGenData:
    """Dataset generation."""

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            args = ["gen-data", "--instance", "four_state", "--episodes", "50", "--seed", "3"]
            assert parse_and_dispatch([*args, "--output", str(tmp_path / name)]) == 0
        assert (tmp_path / "a" / "dataset.csv").read_bytes() == (tmp_path / "b" / "dataset.csv").read_bytes()
        assert (tmp_path / "a" / "mdp.json").read_bytes() == (tmp_path / "b" / "mdp.json").read_bytes()

    def test_from_files(self, instance_dir, tmp_path, capsys):
        out = tmp_path / "again"
        code = parse_and_dispatch(
            [
                "gen-data",
                "--mdp",
                str(instance_dir / "mdp.json"),
                "--behavior",
                str(instance_dir / "behavior.json"),
                "--episodes",
                "400",
                "--seed",
                "11",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        assert summary(capsys.readouterr().out) == {"K": "400", "H": "2", "seed": "11"}
        assert (out / "dataset.csv").read_bytes() == (instance_dir / "dataset.csv").read_bytes()

    def test_needs_a_seed(self, tmp_path):
        args = ["gen-data", "--instance", "two_state", "--episodes", "5", "--output", str(tmp_path)]
        assert parse_and_dispatch(args) == 3

    def test_needs_an_mdp(self, tmp_path):
        assert parse_and_dispatch(["gen-data", "--episodes", "5", "--seed", "1", "--output", str(tmp_path)]) == 3


class TestEstimation:
    """fqe, variance and bounds."""

    def test_fqe_is_consistent(self, tmp_path, capsys):
        args = ["gen-data", "--instance", "two_state", "--episodes", "20000", "--seed", "5", "--output", str(tmp_path)]
        assert parse_and_dispatch(args) == 0
        capsys.readouterr()
        assert parse_and_dispatch(["fqe", *inputs(tmp_path)]) == 0
        values = summary(capsys.readouterr().out)
        mdp, _, target = canonical_instance("two_state")
        assert abs(float(values["value"]) - exact_policy_value(mdp, target)) < 0.01
        assert values["converged"] == "true"
        assert float(values["z_residual_scaled"]) <= 1e-6

    def test_full_rank_linear_features_match_tabular(self, instance_dir, capsys):
        """An invertible re-featurisation of one-hot leaves the λ=0 estimate unchanged."""
        features = instance_dir / "features.json"
        write_features(str(features), random_linear_features(2, 2, 4, seed=13))
        capsys.readouterr()
        assert parse_and_dispatch(["fqe", *inputs(instance_dir)]) == 0
        tabular = summary(capsys.readouterr().out)
        linear_args = ["fqe", *inputs(instance_dir), "--family", "linear", "--features", str(features)]
        assert parse_and_dispatch(linear_args) == 0
        linear = summary(capsys.readouterr().out)
        assert float(linear["value"]) == pytest.approx(float(tabular["value"]), rel=1e-8)

    def test_saved_estimate_gives_the_same_variance(self, instance_dir, capsys):
        estimate = instance_dir / "estimate.json"
        assert parse_and_dispatch(["fqe", *inputs(instance_dir), "--output", str(estimate)]) == 0
        assert json.loads(estimate.read_text())["schema_version"] == 1
        capsys.readouterr()
        assert parse_and_dispatch(["variance", *inputs(instance_dir)]) == 0
        refit = capsys.readouterr().out
        assert parse_and_dispatch(["variance", *inputs(instance_dir), "--estimate", str(estimate)]) == 0
        assert capsys.readouterr().out == refit
        assert "quad_1" in refit and "chi2_2" in refit

    def test_estimate_of_another_family_is_rejected(self, instance_dir):
        estimate = instance_dir / "estimate.json"
        assert parse_and_dispatch(["fqe", *inputs(instance_dir), "--output", str(estimate)]) == 0
        args = ["variance", *inputs(instance_dir), "--estimate", str(estimate), "--family", "smooth_net"]
        assert parse_and_dispatch(args) == 3

    def test_variance_with_behavior_reports_tabular_chi2(self, instance_dir, tmp_path):
        table = tmp_path / "variance.csv"
        args = ["variance", *inputs(instance_dir), "--behavior", str(instance_dir / "behavior.json")]
        assert parse_and_dispatch([*args, "--output", str(table)]) == 0
        _, rows = read_table(str(table))
        assert float(rows[0]["tabular_chi2"]) >= 0.0
        assert float(rows[0]["sigma2"]) > 0.0

    def test_bounds_table(self, instance_dir, tmp_path):
        table = tmp_path / "bounds.csv"
        args = ["bounds", *inputs(instance_dir), "--delta", "0.05", "0.1", "--output", str(table)]
        assert parse_and_dispatch(args) == 0
        header, rows = read_table(str(table))
        assert header["positivity"] == "True"
        kinds = {row["kind"] for row in rows}
        assert {"variance_aware", "reward_free", "positivity"} <= kinds
        assert {row["delta"] for row in rows} == {"0.05", "0.1"}

    def test_rollout_needs_a_seed(self, instance_dir):
        assert parse_and_dispatch(["variance", *inputs(instance_dir), "--nu-mode", "rollout"]) == 3


class TestBootstrap:
    """bootstrap-ci."""

    def test_interval_and_values(self, instance_dir, tmp_path, capsys):
        values = tmp_path / "errors.txt"
        args = ["bootstrap-ci", *inputs(instance_dir), "--bootstrap-reps", "30", "--seed", "4"]
        assert parse_and_dispatch([*args, "--values-out", str(values)]) == 0
        result = summary(capsys.readouterr().out)
        assert float(result["lo"]) <= float(result["base_value"]) <= float(result["hi"])
        assert len(read_values(str(values))) == 30

    def test_schemes_each_get_rows(self, instance_dir, tmp_path):
        table = tmp_path / "ci.csv"
        args = ["bootstrap-ci", *inputs(instance_dir), "--bootstrap-reps", "20", "--seed", "4", "--output", str(table)]
        schemes = ["--scheme", "vanilla", "multiplier-gamma", "--shape", "4", "--scale", "0.25"]
        assert parse_and_dispatch([*args, *schemes]) == 0
        _, rows = read_table(str(table))
        assert [row["scheme"] for row in rows] == ["vanilla", "multiplier-gamma(4,0.25)"]
        assert float(rows[1]["k0"]) == pytest.approx(0.25)

    def test_needs_a_seed(self, instance_dir):
        assert parse_and_dispatch(["bootstrap-ci", *inputs(instance_dir)]) == 3


class TestStudiesAndChecks:
    """Study subcommands and grad-check."""

    def test_study_writes_table_and_sidecar(self, tmp_path):
        table = tmp_path / "cr.csv"
        args = ["study-cr", "--episodes", "40", "--replications", "100", "--seed", "2", "--output", str(table)]
        assert parse_and_dispatch(args) == 0
        header, rows = read_table(str(table))
        assert header["study"] == "cramer_rao"
        assert [row["K"] for row in rows] == ["40"]
        assert json.loads((tmp_path / "cr.json").read_text())["study"] == "cramer_rao"

    def test_study_from_config_file(self, tmp_path):
        config = tmp_path / "study.json"
        config.write_text(json.dumps({"k_grid": [30], "replications": 100, "seed": 6, "schema_version": 1}))
        table = tmp_path / "normality.csv"
        assert parse_and_dispatch(["study-normality", "--config", str(config), "--output", str(table)]) == 0
        header, _ = read_table(str(table))
        assert header["seed"] == "6"

    def test_grad_check(self, capsys):
        args = ["grad-check", "--family", "smooth_net", "--feature-dim", "3", "--trials", "20", "--seed", "1"]
        assert parse_and_dispatch(args) == 0
        assert float(summary(capsys.readouterr().out)["max_rel_error"]) <= 1e-5


class TestExitCodes:
    """Error classes map to their documented exit statuses."""

    def test_missing_file(self, instance_dir):
        args = ["fqe", "--mdp", str(instance_dir / "nope.json"), "--target", str(instance_dir / "target.json")]
        assert parse_and_dispatch([*args, "--dataset", str(instance_dir / "dataset.csv")]) == 4

    def test_bad_delta(self, instance_dir):
        assert parse_and_dispatch(["bounds", *inputs(instance_dir), "--delta", "1.5"]) == 3

    def test_unknown_schema_version(self, instance_dir):
        path = instance_dir / "dataset.csv"
        path.write_text(path.read_text().replace("# schema_version=1", "# schema_version=2"))
        assert parse_and_dispatch(["fqe", *inputs(instance_dir)]) == 8

    def test_uncovered_pairs_are_a_solver_error(self, tmp_path):
        behavior = tmp_path / "behavior.json"
        behavior.write_text(json.dumps({"schema_version": 1, "probs": [[1.0, 0.0], [1.0, 0.0]]}))
        instance = ["gen-data", "--instance", "two_state", "--episodes", "5", "--seed", "1"]
        assert parse_and_dispatch([*instance, "--output", str(tmp_path)]) == 0
        args = ["gen-data", "--mdp", str(tmp_path / "mdp.json"), "--behavior", str(behavior), "--episodes", "20"]
        assert parse_and_dispatch([*args, "--seed", "1", "--output", str(tmp_path / "skewed")]) == 0
        fit = [
            "fqe",
            "--mdp",
            str(tmp_path / "mdp.json"),
            "--target",
            str(tmp_path / "target.json"),
            "--dataset",
            str(tmp_path / "skewed" / "dataset.csv"),
        ]
        assert parse_and_dispatch(fit) == 5
