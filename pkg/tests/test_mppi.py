"""MPPI algebra: softmin weights, temperature line search, plan updates,
and the reproducible per-sample RNG streams."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmpm.mppi import (
    MPPIConfig,
    line_search_beta,
    mppi_update,
    mppi_weights,
    sample_controls,
)

CFG = MPPIConfig()


class TestWeights:
    def test_frozen_values(self):
        w, _ = mppi_weights(np.array([0.0, 1.0, 2.0]), beta=1.0)
        np.testing.assert_allclose(w, [0.6652, 0.2447, 0.0900], atol=5e-5)

    @given(
        costs=st.lists(
            st.floats(min_value=-1e6, max_value=1e6), min_size=2, max_size=40
        ),
        beta=st.floats(min_value=1e-3, max_value=1e6),
    )
    @settings(max_examples=200, deadline=None)
    def test_partition_of_unity(self, costs, beta):
        w, eta = mppi_weights(np.asarray(costs), beta)
        assert abs(w.sum() - 1.0) <= 1e-12
        assert np.all(w >= 0.0)
        assert eta >= 1.0  # the best sample always contributes exp(0)

    def test_cost_shift_invariance(self):
        costs = np.array([3.0, 1.0, 4.0, 1.5])
        w1, _ = mppi_weights(costs, 0.7)
        w2, _ = mppi_weights(costs + 123.456, 0.7)
        np.testing.assert_array_equal(w1, w2)

    def test_small_beta_concentrates_on_best(self):
        costs = np.array([5.0, 0.5, 2.0])
        w, _ = mppi_weights(costs, beta=1e-6)
        np.testing.assert_allclose(w, [0.0, 1.0, 0.0], atol=1e-15)

    def test_large_beta_tends_uniform(self):
        costs = np.array([5.0, 0.5, 2.0, 1.0])
        w, _ = mppi_weights(costs, beta=1e9)
        np.testing.assert_allclose(w, 0.25, atol=1e-8)

    def test_eta_monotone_in_beta(self):
        costs = np.arange(10.0)
        etas = [mppi_weights(costs, b)[1] for b in (0.1, 1.0, 10.0, 100.0)]
        assert np.all(np.diff(etas) > 0)


class TestLineSearch:
    def test_lands_in_band(self):
        costs = np.arange(10.0)
        beta, converged = line_search_beta(costs, CFG)
        assert converged
        _, eta = mppi_weights(costs, beta)
        assert CFG.eta_lo_frac * 10 < eta < CFG.eta_hi_frac * 10

    def test_degenerate_equal_costs(self):
        beta, converged = line_search_beta(np.full(8, 3.0), CFG)
        assert beta == CFG.beta0
        assert not converged

    def test_scale_invariance_of_convergence(self):
        # the initial guess range/10 makes the search insensitive to the
        # absolute cost scale
        for scale in (1e-6, 1.0, 1e6):
            costs = scale * np.arange(20.0)
            _, converged = line_search_beta(costs, CFG)
            assert converged


class TestUpdate:
    def test_mean_is_convex_combination(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(0.0, 1.0, (30, 5))
        costs = rng.uniform(0.0, 10.0, 30)
        mean, beta = mppi_update(costs, samples, CFG)
        assert beta > 0
        assert np.all(mean >= samples.min(axis=0) - 1e-12)
        assert np.all(mean <= samples.max(axis=0) + 1e-12)

    def test_prefers_cheap_samples(self):
        samples = np.array([[1.0], [0.0], [-1.0]])
        costs = np.array([0.0, 5.0, 10.0])
        mean, _ = mppi_update(costs, samples, MPPIConfig(n_samples=3))
        assert mean[0] > 0.5  # pulled toward the cheapest sample


class TestSampling:
    def test_reproducible_for_same_seed(self):
        mean = np.zeros(4)
        a = sample_controls(mean, 0.4, 6, np.random.SeedSequence(42))
        b = sample_controls(mean, 0.4, 6, np.random.SeedSequence(42))
        np.testing.assert_array_equal(a, b)

    def test_per_sample_streams_stable_under_k(self):
        # sample s only depends on its own child stream, not on how many
        # siblings were drawn
        mean = np.ones(3)
        few = sample_controls(mean, 0.4, 3, np.random.SeedSequence(7))
        many = sample_controls(mean, 0.4, 8, np.random.SeedSequence(7))
        np.testing.assert_array_equal(few, many[:3])

    def test_zero_sigma_returns_mean(self):
        mean = np.array([0.3, -0.2])
        out = sample_controls(mean, 0.0, 5, np.random.SeedSequence(0))
        np.testing.assert_array_equal(out, np.tile(mean, (5, 1)))

    def test_moments(self):
        mean = np.full(2, 1.5)
        out = sample_controls(mean, 0.4, 4000, np.random.SeedSequence(1))
        assert out.mean() == pytest.approx(1.5, abs=0.02)
        assert out.std() == pytest.approx(0.4, abs=0.02)
