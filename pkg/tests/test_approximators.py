"""Tests for feature maps and function families."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fqe_inference.approximators import (
    LinearApproximator,
    SmoothNetApproximator,
    TabularApproximator,
    custom_features,
    expected_next_value,
    expected_next_values,
    grad_check,
    make_approximator,
    one_hot_features,
    q_table,
    random_linear_features,
    state_value_table,
)
from fqe_inference.errors import ConfigurationError, NumericError
from fqe_inference.models import Policy


class TestFeatureMaps:
    """Feature map constructors."""

    def test_one_hot_rows_are_basis_vectors(self):
        fmap = one_hot_features(3, 2)
        np.testing.assert_array_equal(fmap.phi(2, 1), np.eye(6)[5])
        assert fmap.dim == 6

    def test_random_features_are_seeded(self):
        assert random_linear_features(4, 3, 5, seed=1) == random_linear_features(4, 3, 5, seed=1)
        assert random_linear_features(4, 3, 5, seed=1) != random_linear_features(4, 3, 5, seed=2)

    def test_custom_table_shape_is_checked(self):
        with pytest.raises(ConfigurationError):
            custom_features(np.ones((5, 2)), 3, 2)


class TestFamilies:
    """Evaluation and gradients of the three families."""

    @settings(max_examples=30, deadline=None)
    @given(
        family=st.sampled_from(["tabular", "linear", "smooth_net"]),
        phi=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    )
    def test_zero_parameters_give_zero(self, family, phi):
        """f(0, φ) = 0 for every family."""
        approx = {
            "tabular": TabularApproximator(2, 2),
            "linear": LinearApproximator(4),
            "smooth_net": SmoothNetApproximator(4, 3),
        }[family]
        assert approx.eval(approx.zeros(), np.array(phi)) == 0.0

    def test_smooth_net_dimension(self):
        assert SmoothNetApproximator(5, 3).d == 3 * 5 + 2 * 3 + 1

    def test_smooth_net_matches_direct_formula(self):
        approx = SmoothNetApproximator(2, 2)
        theta = np.array([0.5, -1.0, 0.25, 2.0, 0.1, -0.2, 1.5, -0.5, 0.3])
        phi = np.array([1.0, 2.0])
        hidden = np.tanh(np.array([0.5 - 2.0 + 0.1, 0.25 + 4.0 - 0.2]))
        assert approx.eval(theta, phi) == pytest.approx(hidden @ [1.5, -0.5] + 0.3, abs=1e-14)

    def test_linear_gradient_is_feature(self):
        approx = LinearApproximator(3)
        phi = np.array([0.5, -1.0, 2.0])
        np.testing.assert_array_equal(approx.grad(np.ones(3), phi), phi)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            LinearApproximator(3).eval(np.zeros(4), np.zeros(3))
        with pytest.raises(ConfigurationError):
            LinearApproximator(3).eval(np.zeros(3), np.zeros(2))

    def test_non_finite_output(self):
        with pytest.raises(NumericError):
            LinearApproximator(2).eval(np.array([1e308, 1e308]), np.array([10.0, 10.0]))

    def test_make_approximator(self):
        one_hot = one_hot_features(2, 3)
        assert make_approximator("tabular", one_hot).d == 6
        assert make_approximator("smooth_net", one_hot, hidden_width=2).d == 2 * 6 + 5
        with pytest.raises(ConfigurationError):
            make_approximator("tabular", random_linear_features(2, 3, 4, seed=0))
        with pytest.raises(ConfigurationError):
            make_approximator("spline", one_hot)


class TestPolicyExpectations:
    """Finite sums over actions."""

    def test_expected_next_value(self):
        fmap = one_hot_features(2, 2)
        approx = TabularApproximator(2, 2)
        theta = np.array([1.0, 2.0, 3.0, 4.0])
        policy = Policy(probs=[[0.25, 0.75], [0.5, 0.5]])
        assert expected_next_value(approx, theta, 0, policy, fmap) == pytest.approx(1.75)
        assert expected_next_value(approx, theta, 1, policy, fmap) == pytest.approx(3.5)
        values = expected_next_values(approx, theta, np.array([1, 0, 1]), policy, fmap)
        np.testing.assert_allclose(values, [3.5, 1.75, 3.5])
        np.testing.assert_allclose(state_value_table(approx, theta, policy, fmap), [1.75, 3.5])
        np.testing.assert_array_equal(q_table(approx, theta, fmap), [[1.0, 2.0], [3.0, 4.0]])

    def test_state_out_of_range(self):
        fmap = one_hot_features(2, 2)
        with pytest.raises(ConfigurationError):
            expected_next_value(TabularApproximator(2, 2), np.zeros(4), 2, Policy.uniform(2, 2), fmap)


class TestGradCheck:
    """Finite-difference gradient checks."""

    def test_smooth_net_gradient(self):
        report = grad_check(SmoothNetApproximator(4, 5), n_trials=100, seed=0)
        assert report.max_rel_error <= 1e-5
        assert report.n_trials == 100

    @pytest.mark.parametrize("approx", [LinearApproximator(6), TabularApproximator(3, 2)])
    def test_linear_families_are_exact(self, approx):
        assert grad_check(approx, n_trials=20, seed=1).max_rel_error <= 1e-12

    def test_wrong_gradient_is_detected(self):
        class Broken(LinearApproximator):
            def _grad_batch(self, theta, phis):
                return 2.0 * phis

        assert grad_check(Broken(3), n_trials=5, seed=2).max_rel_error > 0.4

    def test_needs_a_trial_point(self):
        with pytest.raises(ConfigurationError):
            grad_check(LinearApproximator(2), n_trials=0, seed=0)
