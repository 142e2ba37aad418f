"""Tests for configuration, random streams, statistics, linear algebra helpers and record files."""

import numpy as np
import pytest
from pydantic import ValidationError

from fqe_inference.config import NumericDefaults, Settings, numerics
from fqe_inference.errors import ConfigurationError, InferenceError, SchemaError, SolverError
from fqe_inference.estimation import run_fqe
from fqe_inference.mdp import generate_dataset
from fqe_inference.mdp.io import (
    format_dataset,
    read_dataset,
    read_estimate,
    read_policy,
    write_dataset,
    write_estimate,
    write_policy,
)
from fqe_inference.models import FqeEstimate, Policy, SolverConfig
from fqe_inference.utils import CovarianceSolver, derive_seed, ks_statistic, lower_quantile, solve_normal_equations
from fqe_inference.utils.records import (
    format_value,
    provenance,
    read_table,
    read_values,
    write_table,
    write_values,
)
from fqe_inference.utils.rng import stream


class TestConfig:
    """Environment-backed settings and the fixed numerical defaults."""

    def test_runtime_settings_come_from_the_environment(self, monkeypatch):
        monkeypatch.setenv("FQE_THREADS", "3")
        monkeypatch.setenv("FQE_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("FQE_OUTPUT_DIR", "elsewhere")
        loaded = Settings()
        assert (loaded.threads, loaded.log_level, loaded.output_dir) == (3, "DEBUG", "elsewhere")

    def test_tolerances_ignore_the_environment(self, monkeypatch):
        monkeypatch.setenv("FQE_GRAD_TOL", "0.5")
        monkeypatch.setenv("FQE_JITTER_SCALE", "0.5")
        assert not hasattr(Settings(), "grad_tol")
        assert NumericDefaults().grad_tol == 1e-9
        assert NumericDefaults().jitter_scale == 1e-8
        assert SolverConfig().grad_tol == numerics.grad_tol

    def test_numerical_defaults_are_frozen(self):
        with pytest.raises(ValidationError):
            numerics.positivity_tol = 1.0  # type: ignore[misc]


class TestRng:
    """Counter-based sub-streams."""

    def test_sub_streams_are_independent_of_order(self):
        first = stream(4, 7).random(3)
        stream(4, 2).random(1000)
        np.testing.assert_array_equal(stream(4, 7).random(3), first)

    def test_sub_streams_differ(self):
        assert not np.array_equal(stream(4, 0).random(3), stream(4, 1).random(3))

    def test_derived_seeds(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
        assert derive_seed(1, 2, 3) >= 0


class TestStats:
    """Quantiles and the normality statistic."""

    @pytest.mark.parametrize("p, expected", [(0.95, 19.0), (0.05, 1.0), (1.0, 20.0), (0.5, 10.0)])
    def test_lower_quantile(self, p, expected):
        values = np.arange(20.0, 0.0, -1.0)
        assert lower_quantile(values, p) == expected

    def test_lower_quantile_rejects_bad_levels(self):
        with pytest.raises(ConfigurationError):
            lower_quantile(np.ones(3), 0.0)
        with pytest.raises(ConfigurationError):
            lower_quantile(np.array([]), 0.5)

    def test_ks_statistic(self):
        normal = stream(2).standard_normal(5000)
        assert ks_statistic(normal) < 0.03
        assert ks_statistic(normal + 1.0) > 0.3

    def test_ks_needs_samples(self):
        with pytest.raises(ConfigurationError):
            ks_statistic(np.array([0.0]))


class TestLinalg:
    """Normal-equation and covariance solves."""

    def test_rank_deficient_normal_equations(self):
        with pytest.raises(SolverError) as info:
            solve_normal_equations(np.diag([1.0, 0.0, 2.0]), np.ones(3))
        assert (info.value.rank, info.value.dim) == (2, 3)

    def test_covariance_solver(self):
        sigma = np.array([[2.0, 0.5], [0.5, 1.0]])
        solver = CovarianceSolver(sigma, stage=1)
        x = np.array([1.0, -1.0])
        assert solver.quad(x) == pytest.approx(float(x @ np.linalg.solve(sigma, x)))
        root = solver.inv_sqrt()
        np.testing.assert_allclose(root @ sigma @ root, np.eye(2), atol=1e-12)
        assert solver.jitter == 0.0

    def test_singular_covariance(self):
        sigma = np.diag([1.0, 0.0])
        with pytest.raises(InferenceError, match="jitter"):
            CovarianceSolver(sigma, stage=2)
        solver = CovarianceSolver(sigma, stage=2, allow_jitter=True)
        assert solver.jitter == pytest.approx(0.5e-8)


class TestRecords:
    """Tables, values files and JSON records."""

    @pytest.mark.parametrize(
        "value, expected",
        [(None, ""), (0.1, "0.1"), (True, "true"), (3, "3"), ("plain", "plain"), ("a, b", '"a, b"'), ('x"y', '"x""y"')],
    )
    def test_format_value(self, value, expected):
        assert format_value(value) == expected

    def test_table_round_trip(self, tmp_path):
        path = str(tmp_path / "out" / "table.csv")
        rows = [{"kind": "reward_free", "note": "C2, b0", "value": 0.125}, {"kind": "x", "value": None}]
        text = write_table(path, ["kind", "note", "value"], rows, provenance("bounds"))
        header, read_rows = read_table(path)
        assert header["command"] == "bounds"
        assert read_rows == [
            {"kind": "reward_free", "note": "C2, b0", "value": "0.125"},
            {"kind": "x", "note": "", "value": ""},
        ]
        assert text == (tmp_path / "out" / "table.csv").read_text()

    def test_table_text_only(self):
        text = write_table(None, ["a"], [{"a": 1}], {"schema_version": "1"})
        assert text == "# schema_version=1\na\n1\n"

    def test_values_round_trip(self, tmp_path):
        path = str(tmp_path / "values.txt")
        values = [0.1, -1e-17, 1.0 / 3.0]
        write_values(path, values, provenance("bootstrap-ci"))
        assert read_values(path) == values

    def test_unknown_schema_version(self, tmp_path):
        path = tmp_path / "values.txt"
        path.write_text("# schema_version=2\n1.0\n")
        with pytest.raises(SchemaError):
            read_values(str(path))

    def test_unknown_json_schema_version(self, tmp_path):
        path = tmp_path / "policy.json"
        write_policy(str(path), Policy.uniform(2, 2))
        path.write_text(path.read_text().replace('"schema_version": 1', '"schema_version": 2'))
        with pytest.raises(SchemaError):
            read_policy(str(path))

    def test_policy_round_trip(self, tmp_path):
        policy = Policy(probs=[[0.1, 0.9], [1.0 / 3.0, 2.0 / 3.0]])
        write_policy(str(tmp_path / "p.json"), policy)
        assert read_policy(str(tmp_path / "p.json")) == policy


class TestDatasetFiles:
    """The comma-separated dataset format."""

    def test_round_trip_is_bit_exact(self, tmp_path, four_state):
        mdp, behavior, _ = four_state
        dataset = generate_dataset(mdp, behavior, 25, seed=12)
        path = str(tmp_path / "data.csv")
        write_dataset(path, dataset)
        loaded = read_dataset(path)
        np.testing.assert_array_equal(loaded.states, dataset.states)
        np.testing.assert_array_equal(loaded.actions, dataset.actions)
        assert loaded.rewards.tobytes() == dataset.rewards.tobytes()
        assert loaded.seed == 12
        assert format_dataset(loaded) == format_dataset(dataset)

    def test_rows_are_one_based_in_stage(self, two_state):
        mdp, behavior, _ = two_state
        lines = format_dataset(generate_dataset(mdp, behavior, 2, seed=1)).splitlines()
        body = [line for line in lines if not line.startswith("#")]
        assert body[0] == "episode,h,s,a,r,s_next"
        assert [row.split(",")[:2] for row in body[1:]] == [["0", "1"], ["0", "2"], ["1", "1"], ["1", "2"]]

    def test_broken_chain_is_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("# schema_version=1\n# K=1\n# H=2\nepisode,h,s,a,r,s_next\n0,1,0,0,0.5,1\n0,2,0,1,0.5,1\n")
        with pytest.raises(ConfigurationError):
            read_dataset(str(path))

    def test_row_count_must_match_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("# schema_version=1\n# K=2\n# H=1\nepisode,h,s,a,r,s_next\n0,1,0,0,0.5,1\n")
        with pytest.raises(ConfigurationError):
            read_dataset(str(path))

    def test_estimate_round_trip(self, tmp_path, two_state, two_state_data, one_hot_2x2, tabular_2x2):
        mdp, _, target = two_state
        estimate = run_fqe(two_state_data, target, mdp.initial_dist, tabular_2x2, one_hot_2x2)
        write_estimate(str(tmp_path / "est.json"), estimate)
        loaded = read_estimate(str(tmp_path / "est.json"))
        assert isinstance(loaded, FqeEstimate)
        assert loaded.value == estimate.value
        np.testing.assert_array_equal(loaded.theta_matrix, estimate.theta_matrix)
