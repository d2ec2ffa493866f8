"""Blum-Mansour master: stationary solves, tree-theorem oracle, feedback routing."""

import warnings

import numpy as np
import pytest

from swapdyn.bm import BmLearner, StochasticMatrix, mctt_stationary, stationary_distribution
from swapdyn.errors import InputError


def random_stochastic(rng, m, floor=0.02):
    q = rng.random((m, m)) + floor
    return q / q.sum(axis=1, keepdims=True)


class TestStationary:
    def test_identity_tie_breaks_to_uniform(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = stationary_distribution(StochasticMatrix(np.eye(4)))
        np.testing.assert_allclose(out.probs, 0.25)
        assert any("ergodic" in str(w.message) for w in caught)

    def test_two_state_closed_form(self):
        p, q = 0.3, 0.6
        mat = StochasticMatrix(np.array([[1 - p, p], [q, 1 - q]]))
        np.testing.assert_allclose(stationary_distribution(mat).probs, [2 / 3, 1 / 3], atol=1e-12)

    def test_residual_always_small(self):
        rng = np.random.default_rng(30)
        for _ in range(200):
            m = int(rng.integers(2, 8))
            q = random_stochastic(rng, m)
            x = stationary_distribution(StochasticMatrix(q)).probs
            assert np.abs(q.T @ x - x).sum() <= 1e-10

    def test_matches_tree_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(60):
            m = int(rng.integers(2, 6))
            q = random_stochastic(rng, m)
            mat = StochasticMatrix(q)
            a = stationary_distribution(mat).probs
            b = mctt_stationary(mat).probs
            np.testing.assert_allclose(a, b, atol=1e-8)

    def test_reducible_matrix_minimum_norm(self):
        # block-diagonal chain: two closed classes, ties broken and flagged
        q = np.array([[1.0, 0.0], [0.0, 1.0]])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = stationary_distribution(StochasticMatrix(q))
        assert len(caught) == 1
        assert abs(out.probs.sum() - 1.0) <= 1e-12

    def test_validation(self):
        with pytest.raises(InputError):
            StochasticMatrix(np.array([[0.5, 0.6], [0.5, 0.5]]))
        with pytest.raises(InputError):
            StochasticMatrix(np.array([[1.1, -0.1], [0.5, 0.5]]))


class TestTreeOracle:
    def test_two_state_tree_weights(self):
        p, q = 0.25, 0.4
        mat = StochasticMatrix(np.array([[1 - p, p], [q, 1 - q]]))
        out = mctt_stationary(mat).probs
        np.testing.assert_allclose(out, [q / (p + q), p / (p + q)], atol=1e-14)

    def test_uniform_matrix_gives_uniform(self):
        for m in (2, 3, 5):
            mat = StochasticMatrix(np.full((m, m), 1.0 / m))
            np.testing.assert_allclose(mctt_stationary(mat).probs, 1.0 / m, atol=1e-14)

    def test_size_limit(self):
        rng = np.random.default_rng(32)
        q = random_stochastic(rng, 7)
        with pytest.raises(InputError):
            mctt_stationary(StochasticMatrix(q))

    def test_positive_entries_required(self):
        q = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(InputError):
            mctt_stationary(StochasticMatrix(q))


class TestBmLearner:
    def test_fresh_master_plays_uniform(self):
        for kind in ("oftrl", "mwu"):
            x, q = BmLearner(3, 0.05, kind=kind).next()
            np.testing.assert_allclose(x.probs, 1 / 3, atol=1e-12)
            np.testing.assert_allclose(q.rows, 1 / 3, atol=1e-12)

    def test_stationarity_invariant_over_run(self):
        rng = np.random.default_rng(33)
        learner = BmLearner(4, 0.05)
        for _ in range(50):
            x, q = learner.next()
            assert np.abs(q.rows.T @ x.probs - x.probs).sum() <= 1e-10
            learner.observe(rng.uniform(-1, 1, 4))

    def test_observe_routes_scaled_feedback(self):
        learner = BmLearner(3, 0.05)
        x, _ = learner.next()
        u = np.array([0.4, -0.2, 0.8])
        learner.observe(u)
        cum = learner.sub_cumulative
        for a in range(3):
            np.testing.assert_allclose(cum[a], x.probs[a] * u, atol=1e-15)
        # scaled feedback sums back to the full utility
        np.testing.assert_allclose(cum.sum(axis=0), u, atol=1e-12)

    def test_zero_utility_routes_zero(self):
        learner = BmLearner(3, 0.05)
        learner.next()
        learner.observe(np.zeros(3))
        np.testing.assert_allclose(learner.sub_cumulative, 0.0)

    def test_uniform_play_scales_by_one_over_m(self):
        learner = BmLearner(3, 0.05)
        learner.next()  # fresh rows are uniform, so the play is uniform
        u = np.array([0.9, 0.3, -0.6])
        learner.observe(u)
        np.testing.assert_allclose(learner.sub_cumulative, np.tile(u / 3, (3, 1)), atol=1e-14)

    def test_prime_sets_predictions_only(self):
        learner = BmLearner(3, 0.05)
        u0 = np.array([0.5, -0.5, 0.1])
        learner.prime(u0)
        np.testing.assert_allclose(learner.sub_prediction, np.tile(u0 / 3, (3, 1)), atol=1e-14)
        np.testing.assert_allclose(learner.sub_cumulative, 0.0)

    def test_rows_strictly_positive_with_oftrl(self):
        rng = np.random.default_rng(34)
        learner = BmLearner(3, 0.05)
        for _ in range(30):
            _, q = learner.next()
            assert np.all(q.rows > 0.0)
            learner.observe(rng.uniform(-1, 1, 3))

    def test_bad_inputs(self):
        learner = BmLearner(2, 0.05)
        learner.next()
        with pytest.raises(InputError):
            learner.observe(np.array([np.nan, 0.0]))
        with pytest.raises(InputError):
            BmLearner(3, 0.05, kind="hedge")
