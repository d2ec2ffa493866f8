"""Regret metrics and inequality checkers against independent oracles."""

import itertools

import numpy as np
import pytest

from swapdyn import metrics
from swapdyn.errors import InputError, PreconditionError
from swapdyn.games import InteractionGraph, expected_utility_vector, random_bimatrix
from swapdyn.harness import ExperimentConfig, run_experiment, theory_rate
from swapdyn.metrics import (
    PlayerTrace,
    Trace,
    ce_gap,
    external_regret,
    path_length_sq,
    swap_regret,
    swap_regret_series,
)


def brute_force_swap(xs, us):
    """Maximize over every one of the m^m swap functions explicitly."""
    T, m = xs.shape
    best = -np.inf
    base = float(np.einsum("td,td->", xs, us))
    for phi in itertools.product(range(m), repeat=m):
        val = sum(float(xs[:, a] @ us[:, phi[a]]) for a in range(m))
        best = max(best, val - base)
    return best


def brute_force_external(xs, us):
    base = float(np.einsum("td,td->", xs, us))
    return max(float(us[:, a].sum()) - base for a in range(us.shape[1]))


class TestExternalRegret:
    def test_single_step_examples(self):
        assert external_regret(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])) == 0.0
        assert external_regret(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == 1.0

    def test_matches_pure_comparator_enumeration(self):
        rng = np.random.default_rng(50)
        for _ in range(30):
            T, m = 5, 3
            xs = rng.dirichlet(np.ones(m), size=T)
            us = rng.uniform(-1, 1, (T, m))
            assert external_regret(xs, us) == pytest.approx(brute_force_external(xs, us), abs=1e-12)

    def test_empty_series_warns(self):
        with pytest.warns(UserWarning):
            assert external_regret(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0


class TestSwapRegret:
    def test_single_step_swap(self):
        assert swap_regret(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == 1.0

    def test_identity_optimal_series(self):
        # point masses on each round's best action: no swap improves
        us = np.array([[1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
        xs = np.eye(3)
        assert swap_regret(xs, us) == pytest.approx(0.0, abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(51)
        for _ in range(50):
            T = int(rng.integers(1, 7))
            xs = rng.dirichlet(np.ones(3), size=T)
            us = rng.uniform(-1, 1, (T, 3))
            assert swap_regret(xs, us) == pytest.approx(brute_force_swap(xs, us), abs=1e-12)

    def test_nonnegative_and_dominates_external(self):
        rng = np.random.default_rng(52)
        for _ in range(100):
            T, m = int(rng.integers(1, 9)), int(rng.integers(2, 5))
            xs = rng.dirichlet(np.ones(m), size=T)
            us = rng.uniform(-1, 1, (T, m))
            s = swap_regret(xs, us)
            assert s >= -1e-9
            assert s >= external_regret(xs, us) - 1e-9

    def test_series_final_matches_total(self):
        rng = np.random.default_rng(53)
        xs = rng.dirichlet(np.ones(3), size=20)
        us = rng.uniform(-1, 1, (20, 3))
        series = swap_regret_series(xs, us)
        assert series[-1] == pytest.approx(swap_regret(xs, us), abs=1e-12)
        for t in (5, 13):
            assert series[t - 1] == pytest.approx(swap_regret(xs[:t], us[:t]), abs=1e-12)


class TestPathLength:
    def test_constant_series_zero(self):
        assert path_length_sq(np.tile([0.2, 0.8], (5, 1))) == 0.0

    def test_single_jump(self):
        xs = np.array([[0.5, 0.5], [1.0, 0.0]])
        assert path_length_sq(xs) == pytest.approx(1.0)

    def test_additive_over_concatenation(self):
        rng = np.random.default_rng(54)
        xs = rng.dirichlet(np.ones(3), size=9)
        total = path_length_sq(xs)
        first = path_length_sq(xs[:5])
        second = path_length_sq(xs[4:])
        assert total == pytest.approx(first + second, abs=1e-12)


class TestCeGap:
    @staticmethod
    def _trace_from_game(game, T, seed):
        cfg = ExperimentConfig(game=game, horizon=T, eta=0.05, seed=seed)
        return run_experiment(cfg)

    def test_identity_with_swap_regret(self):
        trace = self._trace_from_game({"random_bimatrix": {"m": 3, "seed": 7}}, 40, 0)
        gaps = ce_gap(trace)
        for i, p in enumerate(trace.players):
            swap = swap_regret(p.strategies[1:], p.utilities[1:])
            assert gaps[i] * trace.horizon == pytest.approx(swap, abs=1e-12)

    def test_matches_materialized_joint_distribution(self):
        # 2x2 game, T=3: build the average joint tensor and maximize over the
        # four swap functions per player
        game = random_bimatrix(2, seed=12)
        trace = self._trace_from_game(game, 3, 1)
        T = trace.horizon
        mu = np.zeros((2, 2))
        for t in range(1, T + 1):
            mu += np.outer(trace.players[0].strategies[t], trace.players[1].strategies[t])
        mu /= T
        gaps = ce_gap(trace)
        for i in range(2):
            u = game.utilities[i]
            best = -np.inf
            for phi in itertools.product(range(2), repeat=2):
                gain = 0.0
                for a in range(2):
                    for b in range(2):
                        prof = [a, b]
                        dev = [phi[prof[i]] if j == i else prof[j] for j in range(2)]
                        gain += mu[a, b] * (u[tuple(dev)] - u[tuple(prof)])
                best = max(best, gain)
            assert gaps[i] == pytest.approx(best, abs=1e-10)

    def test_pure_nash_one_shot(self):
        # dominant-action game played at its equilibrium: all gaps zero
        a = np.array([[1.0, 1.0], [0.0, 0.0]])
        b = np.array([[1.0, 0.0], [1.0, 0.0]])
        xs = np.array([[1.0, 0.0], [1.0, 0.0]])
        players = []
        from swapdyn.games import NormalFormGame

        game = NormalFormGame((a, b))
        for i in range(2):
            u = expected_utility_vector(game, i, xs)
            players.append(
                PlayerTrace(
                    strategies=np.vstack([xs[i], xs[i]]),
                    utilities=np.vstack([u, u]),
                )
            )
        trace = Trace(players=tuple(players))
        np.testing.assert_allclose(ce_gap(trace), 0.0, atol=1e-12)


class TestCheckerFormulas:
    def test_rvu_preconditions(self):
        rng = np.random.default_rng(55)
        xs = rng.dirichlet(np.ones(3), size=2)
        us = rng.uniform(-1, 1, (2, 3))
        player = PlayerTrace(strategies=xs, utilities=us, eta=theory_rate(2, [3, 3]))
        with pytest.raises(PreconditionError):
            metrics.rvu_swap_check(player, eta=player.eta, m=3)  # T = 1
        xs3 = rng.dirichlet(np.ones(3), size=4)
        us3 = rng.uniform(-1, 1, (4, 3))
        player3 = PlayerTrace(strategies=xs3, utilities=us3, eta=1.0)
        with pytest.raises(PreconditionError):
            metrics.rvu_swap_check(player3, eta=1.0, m=3)
        # override lets the evaluation happen anyway
        rep = metrics.rvu_swap_check(player3, eta=1.0, m=3, override=True)
        assert rep.name == "rvu_swap"

    def test_swap_bound_coefficient(self):
        # n=2, m=3 for both players: coefficient is 256 sqrt(3) (9 + 18)
        T = 3
        xs = np.tile([1 / 3, 1 / 3, 1 / 3], (T + 1, 1))
        us = np.zeros((T + 1, 3))
        player = PlayerTrace(
            strategies=xs, utilities=us, eta=theory_rate(2, [3, 3]),
            algorithm="bm-oftrl-logbar",
        )
        rep = metrics.swap_bound_check(player, 2, [3, 3])
        expected = 256 * np.sqrt(3) * (9 + 18) * np.log(2) + 2 * 1e-6
        assert rep.passed
        assert rep.rhs == pytest.approx(expected)

    def test_path_bound_trivial_trace(self):
        xs = np.tile([0.5, 0.5, 0.0], (3, 1))
        us = np.zeros((3, 3))
        eta = theory_rate(2, [3, 3])
        players = tuple(
            PlayerTrace(strategies=xs, utilities=us, eta=eta, algorithm="bm-oftrl-logbar")
            for _ in range(2)
        )
        rep = metrics.path_bound_check(Trace(players=players))
        assert rep.passed and rep.lhs == 0.0

    def test_path_bound_rate_mismatch(self):
        xs = np.tile([0.5, 0.5], (3, 1))
        us = np.zeros((3, 2))
        players = tuple(
            PlayerTrace(strategies=xs, utilities=us, eta=0.1, algorithm="bm-oftrl-logbar")
            for _ in range(2)
        )
        with pytest.raises(PreconditionError):
            metrics.path_bound_check(Trace(players=players))

    def test_gamma_term_constant_rows(self):
        rows = np.tile(np.full((2, 2), 0.5), (4, 1, 1))
        xs = np.tile([0.5, 0.5], (4, 1))
        rep = metrics.gamma_term_check(xs, rows, eta=1 / 16)
        assert rep.passed and rep.lhs == 0.0

    def test_gamma_term_hand_built_perturbation(self):
        # one row moves by delta; the master stationary moves along with it
        delta = 0.01
        rows = np.array([
            [[0.6, 0.4], [0.5, 0.5]],
            [[0.6 + delta, 0.4 - delta], [0.5, 0.5]],
        ])
        from swapdyn.bm import _stationary

        xs = np.array([_stationary(rows[0]), _stationary(rows[1])])
        rep = metrics.gamma_term_check(xs, rows, eta=1 / 16)
        assert rep.passed
        lhs = np.abs(xs[1] - xs[0]).sum() ** 2
        rhs = 64 * 2 * (((rows[1] - rows[0]) / rows[0]) ** 2).sum()
        assert lhs < rhs

    def test_mul_stability_zero_utilities(self):
        rows = np.tile(np.full((1, 3), 1 / 3), (5, 1, 1))
        utils = np.zeros((5, 1, 3))
        rep = metrics.mul_stability_check(rows, 1 / 16, utils)
        assert rep.passed
        np.testing.assert_allclose(rep.extras["mu"], 0.0)

    def test_large_game_preset_identity(self):
        # c = n-1 collapses the aggregate preset to the general preset
        from swapdyn.harness import large_game_rate_aggregate

        assert large_game_rate_aggregate(3, [2, 2, 2, 2]) == pytest.approx(theory_rate(4, [2, 2, 2, 2]))

    def test_large_game_uniform_m_individual_coefficient(self):
        # with every player on m actions the individual budget collapses to
        # 512 sqrt(cn) m^(5/2) log T
        from swapdyn.harness import large_game_rate_individual

        n, m, c, T = 4, 2, 2, 3
        eta = large_game_rate_individual(c, n, [m] * n)
        xs = np.tile(np.full(m, 1.0 / m), (T + 1, 1))
        us = np.zeros((T + 1, m))
        players = tuple(
            PlayerTrace(strategies=xs, utilities=us, eta=eta, algorithm="bm-oftrl-logbar")
            for _ in range(n)
        )
        graph = InteractionGraph(
            tuple(frozenset({(i - 1) % n, (i + 1) % n}) for i in range(n)), c=c
        )
        rep = metrics.large_game_check(Trace(players=players), graph)
        assert rep.passed
        # a constant trace is tightest at the first prefix horizon t = 2
        expected = 512.0 * np.sqrt(c * n) * m**2.5 * np.log(2) + 2 * 1e-6
        assert rep.rhs == pytest.approx(expected)

    def test_decomposition_on_compliant_run(self):
        cfg = ExperimentConfig(
            game={"random_bimatrix": {"m": 3, "seed": 3}}, horizon=50, eta="theory", seed=5
        )
        trace = run_experiment(cfg)
        for p in trace.players:
            rep = metrics.decomposition_check(p)
            assert rep.passed
            assert abs(rep.lhs - rep.rhs) <= 1e-9

    def test_rvu_fabricated_violation_located(self):
        # a trace that no compliant learner could produce: the play stays on a
        # point mass while a fixed other action dominates, so swap regret grows
        # linearly and eventually crosses the logarithmic budget
        T, m = 120_000, 3
        eta = theory_rate(2, [3, 3])
        xs = np.zeros((T + 1, m))
        xs[:, 0] = 1.0
        us = np.zeros((T + 1, m))
        us[1:, 0] = -1.0
        us[1:, 1] = 1.0
        player = PlayerTrace(strategies=xs, utilities=us, eta=eta, algorithm="bm-oftrl-logbar")
        rep = metrics.rvu_swap_check(player, eta, m)
        assert not rep.passed
        assert rep.first_violation is not None
        # the located step is where 2t first exceeds the logarithmic budget
        ts = np.arange(2, T + 1)
        budget = 2 * m * m * np.log(ts) / eta + 4 * eta * 1.0 + ts * 1e-6
        expected_step = int(ts[np.argmax(2.0 * ts > budget)])
        assert rep.first_violation == expected_step

    def test_optimality_check_flags_doctored_utility(self):
        cfg = ExperimentConfig(
            game={"random_bimatrix": {"m": 3, "seed": 9}}, horizon=40, eta="theory", seed=2
        )
        trace = run_experiment(cfg)
        clean = metrics.optimality_check(trace.players[0])
        assert clean.passed
        us = trace.players[0].utilities.copy()
        us[25] = -us[25]
        doctored = PlayerTrace(
            strategies=trace.players[0].strategies,
            utilities=us,
            sub_rows=trace.players[0].sub_rows,
            eta=trace.players[0].eta,
            algorithm="bm-oftrl-logbar",
        )
        rep = metrics.optimality_check(doctored)
        assert not rep.passed
        assert rep.first_violation == 26  # the doctored step enters the next round's weights


class TestTraceValidation:
    def test_inconsistent_lengths_rejected(self):
        a = PlayerTrace(strategies=np.tile([0.5, 0.5], (3, 1)), utilities=np.zeros((3, 2)))
        b = PlayerTrace(strategies=np.tile([0.5, 0.5], (4, 1)), utilities=np.zeros((4, 2)))
        with pytest.raises(InputError):
            Trace(players=(a, b))

    def test_bad_strategy_rejected(self):
        with pytest.raises(InputError):
            PlayerTrace(strategies=np.array([[0.5, 0.6]]), utilities=np.zeros((1, 2)))

    def test_report_to_text(self):
        rep = metrics.CheckReport("demo", True, 1.0, 2.0, 1.0)
        assert "demo: PASS" in rep.to_text()
        rep = metrics.CheckReport("demo", False, 2.0, 1.0, -1.0, first_violation=7)
        assert "FAIL" in rep.to_text() and "step=7" in rep.to_text()
