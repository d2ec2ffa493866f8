"""Regret accounting and trace-level inequality checkers.

A recorded run is a ``Trace``: per player, strategies and utility vectors
for t = 0..T (row 0 holds the round-zero exchange) plus sub-learner rows
for master-style players.  Every guarantee the dynamics carry is re-checked
numerically on the trace: regret bounds at every prefix horizon, per-step
stability, and the exact swap decomposition, each with the additive slack
that absorbs solver tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import barrier
from .errors import InputError, PreconditionError

SLACK_PER_STEP = 1e-6


@dataclass(frozen=True)
class PlayerTrace:
    """One player's recorded series; index 0 is the round-zero exchange."""

    strategies: np.ndarray
    utilities: np.ndarray
    sub_rows: np.ndarray | None = None
    eta: float = 0.0
    algorithm: str = ""
    solver_tolerance: float = 1e-10

    def __post_init__(self):
        xs = np.asarray(self.strategies, dtype=float)
        us = np.asarray(self.utilities, dtype=float)
        object.__setattr__(self, "strategies", xs)
        object.__setattr__(self, "utilities", us)
        if xs.ndim != 2 or us.shape != xs.shape:
            raise InputError("strategies and utilities must share a (T+1, m) shape")
        if np.any(xs < 0.0) or np.any(np.abs(xs.sum(axis=1) - 1.0) > 1e-9):
            raise InputError("recorded strategies must be probability vectors")
        if self.sub_rows is not None:
            rows = np.asarray(self.sub_rows, dtype=float)
            object.__setattr__(self, "sub_rows", rows)
            m = xs.shape[1]
            if rows.shape != (xs.shape[0], m, m):
                raise InputError("sub-learner rows must have shape (T+1, m, m)")

    @property
    def horizon(self) -> int:
        return self.strategies.shape[0] - 1

    @property
    def m(self) -> int:
        return self.strategies.shape[1]


@dataclass(frozen=True)
class Trace:
    """Full multi-player history plus the configuration that produced it."""

    players: tuple
    game_name: str = ""
    seed: int = 0
    bandit: bool = False
    switch_steps: tuple = ()
    config: dict | None = None

    def __post_init__(self):
        players = tuple(self.players)
        object.__setattr__(self, "players", players)
        if not players:
            raise InputError("a trace needs at least one player")
        horizon = players[0].horizon
        for p in players:
            if p.horizon != horizon:
                raise InputError("player series lengths are inconsistent")

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def horizon(self) -> int:
        return self.players[0].horizon


@dataclass(frozen=True)
class CheckReport:
    """One checker's verdict: the bounded quantity, the bound, the margin."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    first_violation: int | None = None
    detail: str = ""
    extras: dict = field(default_factory=dict)

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (
            f"{self.name}: {status} lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
            f"margin={self.margin:.6g}"
        )
        if self.first_violation is not None:
            line += f" first_violation_step={self.first_violation}"
        if self.detail:
            line += f" ({self.detail})"
        return line


def _as_series(xs, us):
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    if xs.shape != us.shape or xs.ndim != 2:
        raise InputError("strategy and utility series must share a (T, m) shape")
    return xs, us


def external_regret(xs, us) -> float:
    """Gap to the best fixed action in hindsight over t = 1..T."""
    xs, us = _as_series(xs, us)
    if xs.shape[0] == 0:
        warnings.warn("external regret of an empty series is 0")
        return 0.0
    played = np.einsum("td,td->t", xs, us).sum()
    return float(us.sum(axis=0).max() - played)


def _swap_matrix(xs, us) -> np.ndarray:
    # V[a, b] = sum_t x_t[a] * u_t[b]
    return np.einsum("ta,tb->ab", xs, us)


def swap_regret(xs, us) -> float:
    """Gap to the best per-action relabeling, decomposed action by action."""
    xs, us = _as_series(xs, us)
    if xs.shape[0] == 0:
        warnings.warn("swap regret of an empty series is 0")
        return 0.0
    v = _swap_matrix(xs, us)
    return float((v.max(axis=1) - np.diag(v)).sum())


def swap_regret_series(xs, us) -> np.ndarray:
    """Cumulative swap regret after each step t = 1..T."""
    xs, us = _as_series(xs, us)
    v = np.cumsum(np.einsum("ta,tb->tab", xs, us), axis=0)
    diag = np.einsum("taa->ta", v)
    return (v.max(axis=2) - diag).sum(axis=1)


def external_regret_series(xs, us) -> np.ndarray:
    xs, us = _as_series(xs, us)
    cum_u = np.cumsum(us, axis=0)
    played = np.cumsum(np.einsum("td,td->t", xs, us))
    return cum_u.max(axis=1) - played


def path_length_sq(xs) -> float:
    """Cumulative squared l1 movement of a strategy series with t = 0..T."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape[0] < 2:
        return 0.0
    steps = np.abs(np.diff(xs, axis=0)).sum(axis=1)
    return float((steps**2).sum())


def path_length_sq_series(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    steps = np.abs(np.diff(xs, axis=0)).sum(axis=1)
    return np.cumsum(steps**2)


def ce_gap(trace: Trace) -> np.ndarray:
    """Per-player approximation level of the average correlated play.

    Computed from the history without materializing the joint tensor;
    identical to swap regret divided by the horizon.
    """
    if trace.horizon == 0:
        return np.zeros(trace.n)
    return np.array(
        [
            swap_regret(p.strategies[1:], p.utilities[1:]) / trace.horizon
            for p in trace.players
        ]
    )


@dataclass(frozen=True)
class RegretReport:
    """Per-player regret summary of one trace."""

    external: np.ndarray
    swap: np.ndarray
    path_length_sq: np.ndarray
    ce_gap: np.ndarray
    max_swap: float
    nash_gap_series: np.ndarray

    def __post_init__(self):
        if np.any(self.swap < -1e-9):
            raise InputError("swap regret must be nonnegative")
        if np.any(self.swap < self.external - 1e-9):
            raise InputError("swap regret cannot fall below external regret")


def summarize(trace: Trace) -> RegretReport:
    ext, swp, plen = [], [], []
    for p in trace.players:
        xs, us = p.strategies[1:], p.utilities[1:]
        ext.append(external_regret(xs, us) if len(xs) else 0.0)
        swp.append(swap_regret(xs, us) if len(xs) else 0.0)
        plen.append(path_length_sq(p.strategies))
    gaps = np.zeros(trace.horizon + 1)
    for p in trace.players:
        gaps = np.maximum(
            gaps,
            p.utilities.max(axis=1) - np.einsum("td,td->t", p.strategies, p.utilities),
        )
    return RegretReport(
        external=np.array(ext),
        swap=np.array(swp),
        path_length_sq=np.array(plen),
        ce_gap=ce_gap(trace),
        max_swap=float(np.max(swp)) if swp else 0.0,
        nash_gap_series=gaps,
    )


def _prefix_check(name, lhs_series, rhs_series, start_t) -> CheckReport:
    """Evaluate lhs(t) <= rhs(t) for every prefix horizon t >= start_t."""
    ok = lhs_series <= rhs_series
    if np.all(ok):
        tightest = int(np.argmin(rhs_series - lhs_series))
        return CheckReport(
            name,
            True,
            float(lhs_series[tightest]),
            float(rhs_series[tightest]),
            float(np.min(rhs_series - lhs_series)),
            None,
        )
    first = int(np.argmin(ok))
    return CheckReport(
        name,
        False,
        float(lhs_series[first]),
        float(rhs_series[first]),
        float(rhs_series[first] - lhs_series[first]),
        first + start_t,
    )


def rvu_swap_check(
    player: PlayerTrace, eta: float, m: int, override: bool = False
) -> CheckReport:
    """Swap regret against the variation-minus-movement bound, all prefixes.

    Bound: 2 m^2 log T / eta + 4 eta sum ||u_t - u_{t-1}||_inf^2
           - sum ||x_t - x_{t-1}||_1^2 / (2048 m eta), plus T * 1e-6 slack.
    Needs T >= 2 and eta <= 1/(128 sqrt(m)) unless overridden.
    """
    T = player.horizon
    if T < 2:
        raise PreconditionError("the swap-regret bound needs T >= 2")
    if eta > 1.0 / (128.0 * np.sqrt(m)) + 1e-15 and not override:
        raise PreconditionError(
            "learning rate above 1/(128 sqrt(m)); pass override=True to evaluate anyway"
        )
    xs, us = player.strategies, player.utilities
    swap = swap_regret_series(xs[1:], us[1:])
    var = np.cumsum(np.abs(np.diff(us, axis=0)).max(axis=1) ** 2)
    move = path_length_sq_series(xs)
    ts = np.arange(1, T + 1)
    rhs = (
        2.0 * m * m * np.log(ts) / eta
        + 4.0 * eta * var
        - move / (2048.0 * m * eta)
        + ts * SLACK_PER_STEP
    )
    return _prefix_check("rvu_swap", swap[1:], rhs[1:], start_t=2)


def _require_preset(trace: Trace, preset: float, what: str) -> None:
    for i, p in enumerate(trace.players):
        if p.algorithm != "bm-oftrl-logbar":
            raise PreconditionError(
                f"{what} applies to bm-oftrl-logbar runs; player {i} ran {p.algorithm!r}"
            )
        if not np.isclose(p.eta, preset, rtol=1e-9, atol=0.0):
            raise PreconditionError(
                f"{what} needs the preset rate {preset:.8g}; player {i} used {p.eta:.8g}"
            )


def path_bound_check(trace: Trace) -> CheckReport:
    """Total squared movement against the logarithmic budget, all prefixes.

    Bound: 8192 * max_i m_i * sum_i m_i^2 * log T at the theory preset rate.
    """
    from .harness import theory_rate

    T = trace.horizon
    if T < 2:
        raise PreconditionError("the path-length bound needs T >= 2")
    m_list = [p.m for p in trace.players]
    _require_preset(trace, theory_rate(trace.n, m_list), "the path-length bound")
    total = np.zeros(T)
    for p in trace.players:
        total += path_length_sq_series(p.strategies)
    ts = np.arange(1, T + 1)
    coeff = 8192.0 * max(m_list) * sum(m * m for m in m_list)
    rhs = coeff * np.log(ts) + ts * SLACK_PER_STEP
    return _prefix_check("path_bound", total[1:], rhs[1:], start_t=2)


def gamma_term_check(master_xs, sub_rows, eta: float) -> CheckReport:
    """Per-step master movement against the sub-learner local movement.

    ||x_t - x_{t-1}||_1^2 <= 64 m sum_a ||x_a_t - x_a_{t-1}||^2_{x_a_{t-1}}
    with 1e-6 slack; stated for eta <= 1/16.
    """
    if eta > 1.0 / 16.0 + 1e-15:
        raise PreconditionError("the movement bound needs eta <= 1/16")
    xs = np.asarray(master_xs, dtype=float)
    rows = np.asarray(sub_rows, dtype=float)
    m = xs.shape[1]
    lhs = np.abs(np.diff(xs, axis=0)).sum(axis=1) ** 2
    ratios = (np.diff(rows, axis=0) / rows[:-1]) ** 2
    rhs = 64.0 * m * ratios.sum(axis=(1, 2)) + SLACK_PER_STEP
    return _prefix_check("gamma_term", lhs, rhs, start_t=1)


def mul_stability_check(
    rows, eta: float, scaled_utils, tolerance: float = 1e-10
) -> CheckReport:
    """Per-step multiplicative stability of every sub-learner's iterates.

    sqrt(sum_r (1 - x_t[r]/x_{t-1}[r])^2) <= 6 eta ||u_{t-1}||_inf
    + 2 eta ||u_{t-2}||_inf + 4 tol / min_r x_{t-1}[r], for t >= 2, and the
    aggregate sum_a mu_a_t <= 8 eta.  ``rows`` and ``scaled_utils`` are
    (T+1, L, d) stacks over L learners sharing the rate.
    """
    if eta > 1.0 / 16.0 + 1e-15:
        raise PreconditionError("multiplicative stability needs eta <= 1/16")
    rows = np.asarray(rows, dtype=float)
    utils = np.asarray(scaled_utils, dtype=float)
    if rows.ndim != 3 or utils.shape != rows.shape:
        raise InputError("rows and scaled utilities must share a (T+1, L, d) shape")
    T = rows.shape[0] - 1
    if T < 2:
        return CheckReport("mul_stability", True, 0.0, 0.0, 0.0, detail="trivial horizon")
    ratio = 1.0 - rows[2:] / rows[1:-1]                     # (T-1, L, d), steps t=2..T
    lhs = np.sqrt((ratio**2).sum(axis=2))                   # (T-1, L)
    sup = np.abs(utils).max(axis=2)                         # (T+1, L)
    slack = 4.0 * tolerance / rows[1:-1].min(axis=2)
    rhs = 6.0 * eta * sup[1:-1] + 2.0 * eta * sup[:-2] + slack
    mu = np.abs(ratio).max(axis=2)                          # (T-1, L)
    agg_lhs = mu.sum(axis=1)
    agg_rhs = 8.0 * eta + slack.sum(axis=1)
    per_ok = np.all(lhs <= rhs, axis=1)
    agg_ok = agg_lhs <= agg_rhs
    step_ok = per_ok & agg_ok
    margin = float(min((rhs - lhs).min(), (agg_rhs - agg_lhs).min()))
    if np.all(step_ok):
        return CheckReport(
            "mul_stability",
            True,
            float(lhs.max()),
            float(rhs.min()),
            margin,
            None,
            detail="per-learner and aggregate ratio bounds",
            extras={"mu": mu, "aggregate_lhs": agg_lhs, "aggregate_rhs": agg_rhs},
        )
    first = int(np.argmin(step_ok)) + 2
    row = first - 2
    return CheckReport(
        "mul_stability",
        False,
        float(lhs[row].max() if not per_ok[row] else agg_lhs[row]),
        float(rhs[row].min() if not per_ok[row] else agg_rhs[row]),
        margin,
        first,
        detail="per-learner and aggregate ratio bounds",
        extras={"mu": mu, "aggregate_lhs": agg_lhs, "aggregate_rhs": agg_rhs},
    )


def swap_bound_check(player: PlayerTrace, n: int, m_list) -> CheckReport:
    """Individual swap regret against the closed-form budget, all prefixes.

    Bound: 256 max_j sqrt(m_j) ((n-1) m_i^2 + sum_j m_j^2) log T at the
    theory preset rate.
    """
    from .harness import theory_rate

    T = player.horizon
    if T < 2:
        raise PreconditionError("the swap-regret bound needs T >= 2")
    preset = theory_rate(n, m_list)
    if player.algorithm != "bm-oftrl-logbar" or not np.isclose(
        player.eta, preset, rtol=1e-9, atol=0.0
    ):
        raise PreconditionError("the individual bound needs bm-oftrl-logbar at the preset rate")
    m_i = player.m
    coeff = (
        256.0
        * max(np.sqrt(m) for m in m_list)
        * ((n - 1) * m_i**2 + sum(m * m for m in m_list))
    )
    swap = swap_regret_series(player.strategies[1:], player.utilities[1:])
    ts = np.arange(1, T + 1)
    rhs = coeff * np.log(ts) + ts * SLACK_PER_STEP
    return _prefix_check("swap_bound", swap[1:], rhs[1:], start_t=2)


def large_game_check(trace: Trace, graph) -> CheckReport:
    """Interaction-graph refinement: aggregate or individual bounds.

    At eta = 1/(128 c max sqrt(m)): sum_i SwapReg_i <= 256 c max sqrt(m)
    sum_j m_j^2 log T.  At eta = 1/(128 sqrt(cn) max sqrt(m)): SwapReg_i <=
    256 max sqrt(m) (sqrt(cn) m_i^2 + sqrt(c/n) sum m_j^2) log T.
    """
    from .harness import large_game_rate_aggregate, large_game_rate_individual

    T = trace.horizon
    if T < 2:
        raise PreconditionError("the refinement bounds need T >= 2")
    n = trace.n
    m_list = [p.m for p in trace.players]
    c = graph.c
    eta = trace.players[0].eta
    for i, p in enumerate(trace.players):
        if p.algorithm != "bm-oftrl-logbar" or p.eta != eta:
            raise PreconditionError("all players must run bm-oftrl-logbar at one shared rate")
    max_sqrt_m = max(np.sqrt(m) for m in m_list)
    sum_m_sq = sum(m * m for m in m_list)
    ts = np.arange(1, T + 1)
    swaps = [
        swap_regret_series(p.strategies[1:], p.utilities[1:]) for p in trace.players
    ]
    if np.isclose(eta, large_game_rate_aggregate(c, m_list), rtol=1e-9):
        total = np.sum(swaps, axis=0)
        rhs = 256.0 * c * max_sqrt_m * sum_m_sq * np.log(ts) + ts * SLACK_PER_STEP
        return _prefix_check("large_game_aggregate", total[1:], rhs[1:], start_t=2)
    if np.isclose(eta, large_game_rate_individual(c, n, m_list), rtol=1e-9):
        worst: CheckReport | None = None
        for i, swap in enumerate(swaps):
            coeff = 256.0 * max_sqrt_m * (
                np.sqrt(c * n) * m_list[i] ** 2 + np.sqrt(c / n) * sum_m_sq
            )
            rhs = coeff * np.log(ts) + ts * SLACK_PER_STEP
            rep = _prefix_check("large_game_individual", swap[1:], rhs[1:], start_t=2)
            if worst is None or rep.margin < worst.margin or not rep.passed:
                worst = rep
                if not rep.passed:
                    break
        return worst
    raise PreconditionError("the trace's rate matches neither large-game preset")


def decomposition_check(player: PlayerTrace) -> CheckReport:
    """Exact identity: master swap regret equals the sub-learners' external sum."""
    if player.sub_rows is None:
        raise InputError("the decomposition needs recorded sub-learner rows")
    xs, us = player.strategies, player.utilities
    T = player.horizon
    master = swap_regret(xs[1:], us[1:]) if T else 0.0
    total = 0.0
    for a in range(player.m):
        scaled = xs[1:, a : a + 1] * us[1:]
        total += external_regret(player.sub_rows[1:, a, :], scaled) if T else 0.0
    resid = abs(master - total)
    return CheckReport(
        "swap_decomposition",
        resid <= 1e-9,
        master,
        total,
        1e-9 - resid,
        detail="master swap regret vs sum of sub-learner external regrets",
    )


def optimality_check(player: PlayerTrace) -> CheckReport:
    """First-order optimality of every recorded sub-learner iterate.

    Rebuilds each sub-learner's weight vector from the master history and
    measures the Newton decrement of its objective at the recorded row; a
    doctored trace breaks this at the doctored step.
    """
    if player.sub_rows is None:
        raise InputError("the optimality check needs recorded sub-learner rows")
    xs, us = player.strategies, player.utilities
    eta, tol = player.eta, player.solver_tolerance
    T, m = player.horizon, player.m
    worst, worst_step = 0.0, None
    cum = np.zeros((m, m))
    for t in range(1, T + 1):
        pred = xs[t - 1][:, None] * us[t - 1][None, :]
        w = cum + pred
        w_red = w[:, :-1] - w[:, -1:]
        for a in range(m):
            row = player.sub_rows[t, a]
            rp = barrier.ReducedPoint(row[:-1])
            lam = barrier.newton_decrement(
                rp, barrier.barrier_gradient(rp) - eta * w_red[a]
            )
            if lam > worst:
                worst, worst_step = lam, t
        cum += xs[t][:, None] * us[t][None, :]
    bound = 10.0 * tol
    return CheckReport(
        "first_order_optimality",
        worst <= bound,
        worst,
        bound,
        bound - worst,
        worst_step if worst > bound else None,
        detail="largest Newton decrement over all recorded sub-learner iterates",
    )
