"""Tests for the FQE recursion, its stage solvers and the KKT residual."""

import numpy as np
import pytest
from sklearn.linear_model import Ridge

from fqe_inference.approximators import (
    LinearApproximator,
    SmoothNetApproximator,
    TabularApproximator,
    one_hot_features,
    random_linear_features,
)
from fqe_inference.bootstrap import sample_weights
from fqe_inference.errors import ConfigurationError, SolverError
from fqe_inference.estimation import build_targets, closed_form_linear_fqe, fit_stage, run_fqe, z_residual
from fqe_inference.estimation.fqe import episode_weights_to_transitions
from fqe_inference.mdp import exact_policy_value, generate_dataset, random_mdp, random_policy
from fqe_inference.models import Dataset, FqeConfig, Policy, SolverConfig, WeightScheme
from fqe_inference.utils.rng import stream


def empirical_model_value(dataset, policy, xi, n_states, n_actions):
    """Backward DP on the pooled empirical model P̂, r̂."""
    counts = np.zeros((n_states, n_actions, n_states))
    reward_sum = np.zeros((n_states, n_actions))
    for s, a, r, s_next in zip(dataset.s, dataset.a, dataset.r, dataset.s_next, strict=True):
        counts[s, a, s_next] += 1
        reward_sum[s, a] += r
    visits = counts.sum(axis=2)
    assert np.all(visits > 0), "test data must cover every pair"
    p_hat = counts / visits[:, :, None]
    r_hat = reward_sum / visits
    v_next = np.zeros(n_states)
    for _ in range(dataset.horizon):
        q = r_hat + p_hat @ v_next
        v_next = (policy.probs * q).sum(axis=1)
    return float(xi @ v_next)


class TestTabular:
    """One-hot features reproduce dynamic programming."""

    def test_matches_empirical_model_dp(self, four_state):
        mdp, _, target = four_state
        behavior = Policy.uniform(mdp.n_states, mdp.n_actions)
        dataset = generate_dataset(mdp, behavior, 500, seed=21)
        fmap = one_hot_features(mdp.n_states, mdp.n_actions)
        estimate = run_fqe(dataset, target, mdp.initial_dist, TabularApproximator(4, 3), fmap)
        expected = empirical_model_value(dataset, target, mdp.initial_dist, 4, 3)
        assert estimate.value == pytest.approx(expected, abs=1e-8)
        assert estimate.converged
        assert [report.stage for report in estimate.per_stage] == [1, 2, 3, 4]

    @pytest.mark.parametrize("instance", ["two_state", "four_state"])
    def test_consistent_for_large_k(self, instance, request):
        mdp, behavior, target = request.getfixturevalue(instance)
        dataset = generate_dataset(mdp, behavior, 20_000, seed=5)
        fmap = one_hot_features(mdp.n_states, mdp.n_actions)
        estimate = run_fqe(dataset, target, mdp.initial_dist, TabularApproximator(mdp.n_states, mdp.n_actions), fmap)
        assert abs(estimate.value - exact_policy_value(mdp, target)) < 0.01

    def test_uncovered_pair_is_a_solver_error(self, two_state):
        mdp, _, target = two_state
        dataset = generate_dataset(mdp, Policy.deterministic([0, 0], 2), 50, seed=1)
        with pytest.raises(SolverError) as info:
            run_fqe(dataset, target, mdp.initial_dist, TabularApproximator(2, 2), one_hot_features(2, 2))
        assert info.value.rank == 2
        assert info.value.dim == 4

    def test_ridge_handles_uncovered_pairs(self, two_state):
        mdp, _, target = two_state
        dataset = generate_dataset(mdp, Policy.deterministic([0, 0], 2), 50, seed=1)
        estimate = run_fqe(
            dataset, target, mdp.initial_dist, TabularApproximator(2, 2), one_hot_features(2, 2), FqeConfig(lambda_=0.1)
        )
        assert estimate.converged
        # Unvisited pairs are shrunk to zero.
        assert estimate.thetas[0].theta[1] == 0.0
        assert estimate.thetas[0].theta[3] == 0.0


class TestLinear:
    """Normal-equation FQE against the closed form and a ridge oracle."""

    @pytest.mark.parametrize("trial", range(20))
    def test_matches_closed_form(self, trial):
        rng = stream(1000, trial)
        horizon = int(rng.integers(1, 6))
        dim = int(rng.integers(2, 9))
        mdp = random_mdp(4, 3, horizon, seed=trial)
        behavior = Policy.uniform(4, 3)
        target = random_policy(4, 3, seed=trial)
        fmap = random_linear_features(4, 3, dim, seed=trial)
        dataset = generate_dataset(mdp, behavior, 200, seed=trial)
        lam = 0.0 if trial % 2 == 0 else 0.01
        config = FqeConfig(lambda_=lam, solver=SolverConfig(method="normal_equations"))
        estimate = run_fqe(dataset, target, mdp.initial_dist, LinearApproximator(dim), fmap, config)
        closed = closed_form_linear_fqe(dataset, target, fmap, lam, mdp.initial_dist)
        assert estimate.value == pytest.approx(closed.value, abs=1e-8)
        assert closed.per_stage[0].method == "closed_form"

    def test_closed_form_ridge_uses_the_n_normalized_covariance(self, four_state):
        """ΦᵀΦ + NλI in the code is N(Σ̂ + λI) with Σ̂ = ΦᵀΦ/N, so the last stage is (Σ̂ + λI)⁻¹Φᵀr/N."""
        mdp, behavior, target = four_state
        dataset = generate_dataset(mdp, behavior, 300, seed=12)
        fmap = random_linear_features(4, 3, 6, seed=12)
        lam = 0.05
        closed = closed_form_linear_fqe(dataset, target, fmap, lam, mdp.initial_dist)
        phi = fmap.rows(dataset.s, dataset.a)
        n = dataset.n_transitions
        sigma_hat = phi.T @ phi / n
        expected = np.linalg.solve(sigma_hat + lam * np.eye(6), phi.T @ dataset.r / n)
        np.testing.assert_allclose(closed.thetas[-1].theta, expected, rtol=1e-10, atol=1e-12)

    def test_stage_fit_matches_sklearn_ridge(self, four_state):
        mdp, behavior, _ = four_state
        dataset = generate_dataset(mdp, behavior, 300, seed=8)
        fmap = random_linear_features(4, 3, 6, seed=3)
        targets = dataset.r + 0.5
        lam = 0.05
        param, report = fit_stage(dataset, targets, LinearApproximator(6), fmap, FqeConfig(lambda_=lam))
        oracle = Ridge(alpha=dataset.n_transitions * lam, fit_intercept=False, solver="cholesky")
        oracle.fit(fmap.rows(dataset.s, dataset.a), targets)
        np.testing.assert_allclose(param.theta, oracle.coef_, atol=1e-8)
        assert report.method == "normal_equations"

    def test_weighted_stage_fit_matches_sklearn_ridge(self, four_state):
        mdp, behavior, _ = four_state
        dataset = generate_dataset(mdp, behavior, 300, seed=8)
        fmap = random_linear_features(4, 3, 6, seed=3)
        weights = sample_weights(WeightScheme(), dataset.n_episodes, stream(4))
        lam = 0.02
        param, _ = fit_stage(dataset, dataset.r, LinearApproximator(6), fmap, FqeConfig(lambda_=lam), weights=weights)
        oracle = Ridge(alpha=dataset.n_transitions * lam, fit_intercept=False, solver="cholesky")
        oracle.fit(fmap.rows(dataset.s, dataset.a), dataset.r, sample_weight=np.repeat(weights, dataset.horizon))
        np.testing.assert_allclose(param.theta, oracle.coef_, atol=1e-8)

    def test_iterative_solvers_agree_with_normal_equations(self, four_state):
        mdp, behavior, target = four_state
        dataset = generate_dataset(mdp, behavior, 200, seed=2)
        fmap = random_linear_features(4, 3, 5, seed=2)
        approx = LinearApproximator(5)
        values = {
            method: run_fqe(
                dataset,
                target,
                mdp.initial_dist,
                approx,
                fmap,
                FqeConfig(lambda_=0.01, solver=SolverConfig(method=method, max_iters=20_000)),
            )
            for method in ("normal_equations", "gauss_newton")
        }
        assert values["gauss_newton"].converged
        assert values["gauss_newton"].value == pytest.approx(values["normal_equations"].value, abs=1e-8)

    def test_normal_equations_need_a_linear_family(self, two_state_data, one_hot_2x2):
        config = FqeConfig(solver=SolverConfig(method="normal_equations"))
        with pytest.raises(ConfigurationError):
            fit_stage(two_state_data, two_state_data.r, SmoothNetApproximator(4, 2), one_hot_2x2, config)


class TestSmoothNet:
    """Gauss-Newton fits of the tanh network."""

    def test_converges_with_small_kkt_residual(self, two_state, two_state_data, one_hot_2x2):
        mdp, _, target = two_state
        approx = SmoothNetApproximator(4, 2)
        estimate = run_fqe(two_state_data, target, mdp.initial_dist, approx, one_hot_2x2)
        assert estimate.converged
        assert all(report.method == "gauss_newton" for report in estimate.per_stage)
        residual = z_residual(two_state_data, approx, one_hot_2x2, target, estimate)
        assert residual.scaled_norm <= 1e-6

    def test_interpolates_the_tabular_solution(self, two_state, two_state_data, one_hot_2x2, tabular_2x2):
        """Four distinct pairs and an over-parameterized net: both fits reach the pair means."""
        mdp, _, target = two_state
        net = run_fqe(two_state_data, target, mdp.initial_dist, SmoothNetApproximator(4, 2), one_hot_2x2)
        table = run_fqe(two_state_data, target, mdp.initial_dist, tabular_2x2, one_hot_2x2)
        assert net.value == pytest.approx(table.value, abs=1e-5)


class TestKktResidual:
    """The stacked estimating equations at the fitted parameters."""

    @pytest.mark.parametrize("family", ["tabular", "linear"])
    def test_vanishes_at_the_fit(self, family, four_state):
        mdp, behavior, target = four_state
        dataset = generate_dataset(mdp, behavior, 300, seed=4)
        if family == "tabular":
            fmap, approx = one_hot_features(4, 3), TabularApproximator(4, 3)
        else:
            fmap, approx = random_linear_features(4, 3, 7, seed=4), LinearApproximator(7)
        estimate = run_fqe(dataset, target, mdp.initial_dist, approx, fmap)
        residual = z_residual(dataset, approx, fmap, target, estimate)
        assert residual.scaled_norm <= 1e-6
        assert residual.per_stage_norms.shape == (4,)

    def test_includes_the_regularizer(self, two_state_data, one_hot_2x2, tabular_2x2, two_state):
        mdp, _, target = two_state
        lam = 0.05
        estimate = run_fqe(two_state_data, target, mdp.initial_dist, tabular_2x2, one_hot_2x2, FqeConfig(lambda_=lam))
        assert z_residual(two_state_data, tabular_2x2, one_hot_2x2, target, estimate, lam).scaled_norm <= 1e-10
        assert z_residual(two_state_data, tabular_2x2, one_hot_2x2, target, estimate, 0.0).scaled_norm > 1e-3

    def test_nonzero_away_from_the_fit(self, two_state_data, one_hot_2x2, tabular_2x2, two_state):
        _, _, target = two_state
        thetas = [np.zeros(4), np.zeros(4)]
        assert z_residual(two_state_data, tabular_2x2, one_hot_2x2, target, thetas).total_norm > 0.1


class TestInputs:
    """Targets and weights."""

    def test_targets_at_the_last_stage_are_rewards(self, two_state_data, one_hot_2x2, tabular_2x2, two_state):
        _, _, target = two_state
        targets = build_targets(two_state_data, tabular_2x2, one_hot_2x2, np.zeros(4), target)
        np.testing.assert_array_equal(targets, two_state_data.r)

    def test_weights_must_sum_to_k(self, two_state_data):
        weights = np.ones(two_state_data.n_episodes)
        weights[0] = 2.0
        with pytest.raises(ConfigurationError):
            episode_weights_to_transitions(two_state_data, weights)

    def test_weights_must_match_k(self, two_state_data):
        with pytest.raises(ConfigurationError):
            episode_weights_to_transitions(two_state_data, np.ones(3))

    def test_unit_weights_reproduce_the_unweighted_fit(self, two_state, two_state_data, one_hot_2x2, tabular_2x2):
        mdp, _, target = two_state
        plain = run_fqe(two_state_data, target, mdp.initial_dist, tabular_2x2, one_hot_2x2)
        weighted = run_fqe(
            two_state_data,
            target,
            mdp.initial_dist,
            tabular_2x2,
            one_hot_2x2,
            weights=np.ones(two_state_data.n_episodes),
        )
        assert weighted.value == plain.value

    @pytest.mark.parametrize("family", ["tabular", "linear"])
    @pytest.mark.parametrize("scale", [-2.5, 3.0])
    def test_scaling_rewards_scales_the_value(self, two_state, two_state_data, family, scale):
        """With λ = 0 the fit is linear in the rewards."""
        mdp, _, target = two_state
        if family == "tabular":
            approx, fmap = TabularApproximator(2, 2), one_hot_features(2, 2)
        else:
            approx, fmap = LinearApproximator(3), random_linear_features(2, 2, 3, seed=4)
        scaled = Dataset(
            states=two_state_data.states,
            actions=two_state_data.actions,
            rewards=scale * two_state_data.rewards,
            seed=two_state_data.seed,
        )
        base = run_fqe(two_state_data, target, mdp.initial_dist, approx, fmap)
        moved = run_fqe(scaled, target, mdp.initial_dist, approx, fmap)
        assert moved.value == pytest.approx(scale * base.value, rel=1e-12, abs=1e-14)
        for first, second in zip(base.thetas, moved.thetas, strict=True):
            np.testing.assert_allclose(second.theta, scale * first.theta, rtol=1e-10, atol=1e-13)

    def test_initial_distribution_length(self, two_state_data, one_hot_2x2, tabular_2x2, two_state):
        _, _, target = two_state
        with pytest.raises(ConfigurationError):
            run_fqe(two_state_data, target, np.array([1.0]), tabular_2x2, one_hot_2x2)
