"""Experiment runner and reproducibility surface.

A configuration names a game, a horizon, per-player algorithms, a learning
rate (explicit or preset), and a seed.  Runs are synchronous simultaneous-
move loops: a round-zero feedback exchange, then for each round every
player moves, the oracle computes every player's expected-utility vector
from the simultaneous strategies, and feedback is delivered.  All
randomness flows from PCG64 streams derived from the seed, and the
evaluation order is fixed, so a (config, seed) pair reproduces its trace
byte for byte.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import games as games_mod
from . import metrics
from .bandit import DEFAULT_BANDIT_RATE, BanditBmLearner, BanditObservation
from .barrier import SolverSettings
from .bm import BmLearner
from .errors import InputError
from .games import NormalFormGame, expected_utility_vector
from .learners import MwuLearner
from .metrics import CheckReport, PlayerTrace, Trace
from .robust import RobustLearner

ALGORITHMS = ("bm-oftrl-logbar", "bm-mwu", "mwu", "robust", "bandit-bm-omd")
_CONFIG_KEYS = {"game", "horizon", "algorithms", "eta", "seed", "solver", "output", "checkers"}
_SOLVER_KEYS = {"decrement_tolerance", "max_iterations", "feasibility_backtrack_factor"}


def theory_rate(n: int, m_list) -> float:
    """Preset rate 1 / (128 (n-1) max_j sqrt(m_j))."""
    if n < 2:
        raise InputError("the preset rate needs at least two players")
    return 1.0 / (128.0 * (n - 1) * np.sqrt(max(m_list)))


def large_game_rate_aggregate(c: int, m_list) -> float:
    """Preset rate 1 / (128 c max_j sqrt(m_j)) for the aggregate refinement."""
    if c < 1:
        raise InputError("the neighborhood bound must be positive")
    return 1.0 / (128.0 * c * np.sqrt(max(m_list)))


def large_game_rate_individual(c: int, n: int, m_list) -> float:
    """Preset rate 1 / (128 sqrt(c n) max_j sqrt(m_j)) for individual bounds."""
    if c < 1 or n < 2:
        raise InputError("need a positive neighborhood bound and two players")
    return 1.0 / (128.0 * np.sqrt(c * n) * np.sqrt(max(m_list)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; unknown fields are rejected at parse time."""

    game: object
    horizon: int
    algorithms: object = "bm-oftrl-logbar"
    eta: object = "theory"
    seed: int = 0
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: str | None = None
    checkers: object = True

    def __post_init__(self):
        if self.horizon < 0:
            raise InputError("the horizon cannot be negative")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise InputError("a configuration must be a JSON object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise InputError(f"unknown configuration keys: {sorted(unknown)}")
        for key in ("game", "horizon"):
            if key not in doc:
                raise InputError(f"configuration is missing the {key!r} field")
        solver = doc.get("solver", {})
        if isinstance(solver, dict):
            bad = set(solver) - _SOLVER_KEYS
            if bad:
                raise InputError(f"unknown solver keys: {sorted(bad)}")
            solver = SolverSettings(**solver)
        return cls(
            game=doc["game"],
            horizon=int(doc["horizon"]),
            algorithms=doc.get("algorithms", "bm-oftrl-logbar"),
            eta=doc.get("eta", "theory"),
            seed=int(doc.get("seed", 0)),
            solver=solver,
            output=doc.get("output"),
            checkers=doc.get("checkers", True),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as err:
                raise InputError(f"malformed configuration file: {err}") from err
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "horizon": self.horizon,
            "algorithms": self.algorithms,
            "eta": self.eta,
            "seed": self.seed,
            "solver": {
                "decrement_tolerance": self.solver.decrement_tolerance,
                "max_iterations": self.solver.max_iterations,
                "feasibility_backtrack_factor": self.solver.feasibility_backtrack_factor,
            },
            "output": self.output,
            "checkers": self.checkers,
        }


def resolve_game(spec) -> NormalFormGame:
    """Builtin name, file path, or a random/ring specification."""
    if isinstance(spec, NormalFormGame):
        return spec
    if isinstance(spec, str):
        if spec == "shapley-variant":
            return games_mod.shapley_variant()
        if spec == "shapley-variant-normalized":
            return games_mod.shapley_variant(normalized=True)
        return games_mod.load_game(spec)
    if isinstance(spec, dict) and len(spec) == 1:
        kind, args = next(iter(spec.items()))
        if kind == "file":
            return games_mod.load_game(args)
        if kind == "random_bimatrix":
            return games_mod.random_bimatrix(int(args["m"]), int(args["seed"]))
        if kind == "ring":
            return games_mod.ring_game(int(args["n"]), int(args["m"]), int(args["seed"]))
    raise InputError(f"unrecognized game specification: {spec!r}")


def resolve_eta(spec, game: NormalFormGame) -> float:
    if isinstance(spec, str):
        if spec == "theory":
            return theory_rate(game.n, game.m_list)
        if spec == "large-game-aggregate":
            if game.graph is None:
                raise InputError("the large-game presets need an interaction graph")
            return large_game_rate_aggregate(game.graph.c, game.m_list)
        if spec == "large-game-individual":
            if game.graph is None:
                raise InputError("the large-game presets need an interaction graph")
            return large_game_rate_individual(game.graph.c, game.n, game.m_list)
        if spec == "bandit":
            return DEFAULT_BANDIT_RATE
        raise InputError(f"unknown rate preset {spec!r}")
    eta = float(spec)
    if not eta > 0.0:
        raise InputError("the learning rate must be positive")
    return eta


def _make_learner(tag, m, game, eta, horizon, settings):
    if tag == "bm-oftrl-logbar":
        return BmLearner(m, eta, kind="oftrl", settings=settings)
    if tag == "bm-mwu":
        return BmLearner(m, eta, kind="mwu")
    if tag == "mwu":
        return MwuLearner(m, eta)
    if tag == "robust":
        return RobustLearner(m, game.n, game.m_list, horizon, eta, settings)
    if tag == "bandit-bm-omd":
        return BanditBmLearner(m, eta, settings)
    raise InputError(f"unknown algorithm tag {tag!r}; pick one of {ALGORITHMS}")


def run_experiment(config: ExperimentConfig) -> Trace:
    """Run the synchronous loop and record the full trace."""
    game = resolve_game(config.game)
    n = game.n
    m_list = game.m_list
    T = config.horizon
    tags = config.algorithms
    if isinstance(tags, str):
        tags = [tags] * n
    tags = list(tags)
    if len(tags) != n:
        raise InputError("need one algorithm tag per player")
    bandit = any(t == "bandit-bm-omd" for t in tags)
    if bandit and not all(t == "bandit-bm-omd" for t in tags):
        raise InputError("bandit runs require every player to use bandit-bm-omd")
    eta = resolve_eta(config.eta, game)
    if bandit and isinstance(config.eta, str) and config.eta == "theory":
        eta = DEFAULT_BANDIT_RATE
    learners = [
        _make_learner(tags[i], m_list[i], game, eta, max(T, 1), config.solver)
        for i in range(n)
    ]

    xs = [np.empty((T + 1, m)) for m in m_list]
    us = [np.empty((T + 1, m)) for m in m_list]
    rows = [
        np.empty((T + 1, m, m)) if tags[i] in ("bm-oftrl-logbar", "bm-mwu", "robust", "bandit-bm-omd") else None
        for i, m in enumerate(m_list)
    ]

    strategies = [learner.current if hasattr(learner, "current") else np.full(m, 1.0 / m)
                  for learner, m in zip(learners, m_list)]
    for i in range(n):
        xs[i][0] = strategies[i]
        if rows[i] is not None:
            rows[i][0] = np.full((m_list[i], m_list[i]), 1.0 / m_list[i])

    if bandit:
        for i in range(n):
            us[i][0] = 0.0
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    else:
        u0 = [expected_utility_vector(game, i, strategies) for i in range(n)]
        for i in range(n):
            us[i][0] = u0[i]
            learners[i].prime(u0[i])
        rng = None

    for t in range(1, T + 1):
        for i, learner in enumerate(learners):
            if isinstance(learner, MwuLearner):
                strategies[i] = learner.next_strategy().probs
            else:
                x, q = learner.next()
                strategies[i] = x.probs
                rows[i][t] = q.rows
            xs[i][t] = strategies[i]
        u_t = [expected_utility_vector(game, i, strategies) for i in range(n)]
        if bandit:
            profile = games_mod.sample_profile(strategies, rng)
            for i, learner in enumerate(learners):
                learner.observe(BanditObservation(profile[i], float(u_t[i][profile[i]])))
        else:
            for i, learner in enumerate(learners):
                learner.observe(u_t[i])
        for i in range(n):
            us[i][t] = u_t[i]

    players = tuple(
        PlayerTrace(
            strategies=xs[i],
            utilities=us[i],
            sub_rows=rows[i],
            eta=eta,
            algorithm=tags[i],
            solver_tolerance=config.solver.decrement_tolerance,
        )
        for i in range(n)
    )
    switches = tuple(
        learner.switch_step if isinstance(learner, RobustLearner) else None
        for learner in learners
    )
    return Trace(
        players=players,
        game_name=game.name,
        seed=config.seed,
        bandit=bandit,
        switch_steps=switches,
        config=config.to_dict(),
    )


def write_csv(trace: Trace) -> str:
    """Serialize a trace to the documented CSV schema.

    Columns: t, player, action_count, swap_regret_cum, external_regret_cum,
    path_len_sq_cum, nash_gap, ce_gap, then one strategy column per action
    up to the widest player (narrower players leave trailing cells empty).
    """
    max_m = max(p.m for p in trace.players)
    header = [
        "t", "player", "action_count", "swap_regret_cum", "external_regret_cum",
        "path_len_sq_cum", "nash_gap", "ce_gap",
    ] + [f"x{j}" for j in range(max_m)]
    T = trace.horizon
    gap = np.zeros(T + 1)
    for p in trace.players:
        gap = np.maximum(
            gap, p.utilities.max(axis=1) - np.einsum("td,td->t", p.strategies, p.utilities)
        )
    series = []
    for p in trace.players:
        if T > 0:
            swap = np.concatenate([[0.0], metrics.swap_regret_series(p.strategies[1:], p.utilities[1:])])
            ext = np.concatenate([[0.0], metrics.external_regret_series(p.strategies[1:], p.utilities[1:])])
            path = np.concatenate([[0.0], metrics.path_length_sq_series(p.strategies)])
            ce = np.concatenate([[0.0], swap[1:] / np.arange(1, T + 1)])
        else:
            swap = ext = path = ce = np.zeros(1)
        series.append((swap, ext, path, ce))
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for t in range(T + 1):
        for i, p in enumerate(trace.players):
            swap, ext, path, ce = series[i]
            cells = [
                str(t), str(i), str(p.m),
                repr(float(swap[t])), repr(float(ext[t])), repr(float(path[t])),
                repr(float(gap[t])), repr(float(ce[t])),
            ]
            cells += [repr(float(v)) for v in p.strategies[t]]
            cells += [""] * (max_m - p.m)
            buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def save_run(trace: Trace, path) -> None:
    """Write the CSV plus a sidecar holding the generating configuration."""
    try:
        meta = json.dumps(trace.config, sort_keys=True)
    except TypeError as err:
        raise InputError(
            "this run's game was passed as an in-memory object; use a builtin name, "
            "file path, or generation spec so the sidecar can reproduce it"
        ) from err
    text = write_csv(trace)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    with open(str(path) + ".meta.json", "w") as fh:
        fh.write(meta)


def verify(trace: Trace, graph=None, checkers=True) -> list[CheckReport]:
    """Run every applicable checker on a recorded trace.

    Checkers whose preconditions the run does not meet (rate too large,
    horizon too short) are skipped, not failed.  Bandit traces are refused,
    and an empty trace passes vacuously with a warning.
    """
    if trace.bandit:
        raise InputError("bandit traces carry no utility vectors the full-information checkers can use")
    if trace.horizon == 0:
        warnings.warn("empty trace: verification passes vacuously")
        return []
    metrics.summarize(trace)  # raises if the regret identities are broken
    n = trace.n
    m_list = [p.m for p in trace.players]
    reports: list[CheckReport] = []
    preset = theory_rate(n, m_list) if n >= 2 else None
    all_preset_oftrl = preset is not None and all(
        p.algorithm == "bm-oftrl-logbar" and np.isclose(p.eta, preset, rtol=1e-9)
        for p in trace.players
    )
    for i, p in enumerate(trace.players):
        switched = bool(trace.switch_steps) and trace.switch_steps[i] is not None
        master_like = p.algorithm in ("bm-oftrl-logbar", "robust") and not switched
        if p.sub_rows is None or not master_like:
            continue
        tagged = lambda rep: reports.append(
            CheckReport(
                f"player{i}.{rep.name}", rep.passed, rep.lhs, rep.rhs, rep.margin,
                rep.first_violation, rep.detail, rep.extras,
            )
        )
        tagged(metrics.decomposition_check(p))
        tagged(metrics.optimality_check(p))
        if p.eta <= 1.0 / 16.0 + 1e-15:
            tagged(metrics.gamma_term_check(p.strategies, p.sub_rows, p.eta))
            scaled = np.einsum("ta,tb->tab", p.strategies, p.utilities)
            tagged(metrics.mul_stability_check(p.sub_rows, p.eta, scaled, p.solver_tolerance))
        if trace.horizon >= 2 and p.eta <= 1.0 / (128.0 * np.sqrt(p.m)) + 1e-15:
            tagged(metrics.rvu_swap_check(p, p.eta, p.m))
        if trace.horizon >= 2 and all_preset_oftrl:
            tagged(metrics.swap_bound_check(p, n, m_list))
    if trace.horizon >= 2 and all_preset_oftrl:
        reports.append(metrics.path_bound_check(trace))
    if graph is not None and trace.horizon >= 2:
        try:
            reports.append(metrics.large_game_check(trace, graph))
        except InputError:
            pass
    if isinstance(checkers, (list, tuple, set)):
        wanted = set(checkers)
        reports = [r for r in reports if any(w in r.name for w in wanted)]
    return reports
