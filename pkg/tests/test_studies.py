"""Tests for the Monte-Carlo studies.

The fast tests use small grids; the ``slow`` class reproduces the acceptance
runs and takes minutes.
"""

import math

import numpy as np
import pytest

from fqe_inference.experiments import (
    coverage_is_monotone,
    prepare,
    study_bounds,
    study_coverage,
    study_cramer_rao,
    study_normality,
)
from fqe_inference.inference import tabular_mis_variance
from fqe_inference.mdp import canonical_instance, exact_policy_value
from fqe_inference.models import StudyConfig, WeightScheme


def without_runtime(result):
    return [row.model_dump(exclude={"runtime"}) for row in result.rows]


class TestSetup:
    """Population quantities shared by the replications."""

    def test_two_state_oracle(self):
        setup = prepare(StudyConfig(seed=1))
        mdp, behavior, target = canonical_instance("two_state")
        assert setup.true_value == pytest.approx(exact_policy_value(mdp, target))
        assert setup.sigma2_oracle == pytest.approx(tabular_mis_variance(mdp, behavior, target), abs=1e-10)

    def test_linear_family_matches_tabular_oracle(self):
        """Full-rank random features give the same θ*-level σ² as the table."""
        tabular = prepare(StudyConfig(instance="four_state", seed=2))
        linear = prepare(StudyConfig(instance="four_state", family="linear", seed=2))
        assert linear.fmap.dim == 12
        assert linear.sigma2_oracle == pytest.approx(tabular.sigma2_oracle, rel=1e-6)

    def test_explicit_instance_needs_all_parts(self, deterministic_chain):
        mdp, behavior, _ = deterministic_chain
        with pytest.raises(ValueError):
            StudyConfig(instance=None, mdp=mdp, behavior=behavior, seed=1)

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            StudyConfig(k_grid=[200, 100], seed=1)


class TestStudies:
    """Small runs of each study."""

    def test_normality_rows(self):
        config = StudyConfig(k_grid=[50, 100], replications=100, seed=3)
        result = study_normality(config)
        assert result.study == "normality"
        assert [row.K for row in result.rows] == [50, 100]
        for row in result.rows:
            assert row.n_failed <= 10
            assert 0.0 <= row.ks_statistic <= 1.0
            assert row.sigma2_plugin > 0.0
            assert 0.5 < row.variance_ratio < 2.0
        assert result.provenance["seed"] == "3"
        assert StudyConfig.model_validate_json(result.provenance["config"]).model_dump() == config.model_dump()

    def test_same_seed_same_table(self):
        config = StudyConfig(k_grid=[40], replications=100, seed=4)
        assert without_runtime(study_cramer_rao(config)) == without_runtime(study_cramer_rao(config))

    def test_plugin_standardization(self):
        result = study_normality(StudyConfig(k_grid=[80], replications=100, seed=5, sigma_mode="plugin"))
        assert result.rows[0].ks_statistic is not None

    def test_cramer_rao_skips_the_plug_in_by_default(self):
        result = study_cramer_rao(StudyConfig(k_grid=[40], replications=100, seed=6))
        assert result.rows[0].sigma2_plugin is None
        assert result.rows[0].ks_statistic is not None

    def test_deterministic_chain_has_no_error(self, deterministic_chain):
        """Deterministic dynamics and rewards: every covered fit is exact and σ² vanishes."""
        mdp, behavior, target = deterministic_chain
        config = StudyConfig(
            instance=None, mdp=mdp, behavior=behavior, target=target, k_grid=[20], replications=100, seed=7
        )
        row = study_normality(config).rows[0]
        assert row.sigma2_oracle == pytest.approx(0.0, abs=1e-20)
        assert abs(row.mean_error) < 1e-12

    def test_coverage(self):
        schemes = [WeightScheme(), WeightScheme(kind="multiplier", distribution="exponential")]
        config = StudyConfig(
            k_grid=[100], replications=100, bootstrap_reps=50, deltas=[0.1, 0.5], schemes=schemes, seed=8
        )
        result = study_coverage(config)
        assert [(row.scheme, row.delta) for row in result.rows] == [
            ("vanilla", 0.1),
            ("vanilla", 0.5),
            ("multiplier-exponential(1)", 0.1),
            ("multiplier-exponential(1)", 0.5),
        ]
        for row in result.rows:
            assert 0.0 <= row.coverage <= 1.0
        assert 0.75 <= result.rows[0].coverage <= 1.0
        # A wider interval covers at least as often on the same datasets.
        assert result.rows[0].coverage >= result.rows[1].coverage
        assert all(row.coverage_monotone is True for row in result.rows)

    @pytest.mark.parametrize(
        ("deltas", "coverages", "expected"),
        [
            ([0.05, 0.1, 0.5], [0.97, 0.9, 0.5], True),
            ([0.5, 0.05, 0.1], [0.5, 0.97, 0.9], True),
            ([0.1, 0.5], [0.8, 0.8], True),
            ([0.1, 0.5], [0.8, 0.85], False),
            ([0.5, 0.1], [0.9, 0.8], False),
        ],
    )
    def test_coverage_monotonicity_check(self, deltas, coverages, expected):
        assert coverage_is_monotone(deltas, np.array(coverages)) is expected

    def test_bounds(self):
        result = study_bounds(StudyConfig(k_grid=[100], replications=100, deltas=[0.1], seed=9))
        row = result.rows[0]
        assert row.bound_rate_variance_aware >= 0.9
        assert row.bound_rate_reward_free >= 0.9


@pytest.mark.slow
class TestAcceptance:
    """Monte-Carlo checks of the limit theory on the two-state instance."""

    def test_errors_are_asymptotically_normal(self):
        row = study_normality(StudyConfig(k_grid=[800], replications=2000, seed=100)).rows[0]
        assert row.ks_statistic <= 0.05

    def test_scaled_variance_matches_the_bound(self):
        row = study_cramer_rao(StudyConfig(k_grid=[800], replications=20000, seed=101)).rows[0]
        assert row.variance_ratio == pytest.approx(1.0, abs=0.1)

    def test_vanilla_coverage(self):
        config = StudyConfig(k_grid=[500], replications=1000, bootstrap_reps=200, deltas=[0.1], seed=102)
        row = study_coverage(config).rows[0]
        assert abs(row.coverage - 0.9) <= 0.03

    def test_bounds_hold(self):
        row = study_bounds(StudyConfig(k_grid=[500], replications=1000, deltas=[0.1], seed=103)).rows[0]
        assert row.bound_rate_variance_aware >= 0.95
        assert row.bound_rate_reward_free >= 0.95
        assert math.isfinite(row.mc_variance_scaled)
