"""Command-line interface.

Subcommands: ``run`` executes a configured experiment and writes the CSV
trace plus its sidecar, ``verify`` re-runs a trace deterministically and
evaluates every applicable checker, ``gen-game`` writes a seeded random
game file, and ``rates`` prints the preset learning rates.  Exit codes: 0
when everything passes, 1 on a checker failure, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

from . import games as games_mod
from .errors import InputError, PreconditionError
from .harness import (
    ExperimentConfig,
    large_game_rate_aggregate,
    large_game_rate_individual,
    resolve_game,
    run_experiment,
    save_run,
    theory_rate,
    verify,
    write_csv,
)


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    out = args.out or config.output
    if not out:
        raise InputError("no output path: pass --out or set 'output' in the configuration")
    trace = run_experiment(config)
    save_run(trace, out)
    print(f"wrote {out} ({trace.n} players, T={trace.horizon}, game {trace.game_name})")
    return 0


def _cmd_verify(args) -> int:
    meta_path = args.trace + ".meta.json"
    if not os.path.exists(meta_path):
        raise InputError(f"missing sidecar {meta_path}; verify needs the run configuration")
    with open(meta_path) as fh:
        config = ExperimentConfig.from_dict(json.load(fh))
    trace = run_experiment(config)
    expected = write_csv(trace)
    with open(args.trace, newline="") as fh:
        actual = fh.read()
    if actual != expected:
        exp_lines = expected.splitlines()
        act_lines = actual.splitlines()
        where = next(
            (k for k, (a, b) in enumerate(zip(act_lines, exp_lines)) if a != b),
            min(len(exp_lines), len(act_lines)),
        )
        print(f"trace does not match its deterministic re-run (first difference at line {where + 1})")
        return 1
    graph = resolve_game(config.game).graph
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        reports = verify(trace, graph=graph, checkers=config.checkers)
    for w in caught:
        print(f"warning: {w.message}")
    for rep in reports:
        print(rep.to_text())
    if not reports:
        print("no applicable checkers (vacuous pass)")
        return 0
    return 0 if all(r.passed for r in reports) else 1


def _parse_kv(pairs, required) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise InputError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key] = int(value)
    missing = set(required) - set(out)
    if missing:
        raise InputError(f"missing arguments: {sorted(missing)}")
    return out


def _cmd_gen_game(args) -> int:
    if args.random_bimatrix is None:
        raise InputError("gen-game currently supports --random-bimatrix m=<k> seed=<s>")
    spec = _parse_kv(args.random_bimatrix, required=("m", "seed"))
    game = games_mod.random_bimatrix(spec["m"], spec["seed"])
    games_mod.save_game(game, args.out)
    print(f"wrote {args.out} ({game.name})")
    return 0


def _cmd_rates(args) -> int:
    m_list = [int(v) for v in args.actions.split(",")]
    n = args.players
    if len(m_list) == 1:
        m_list = m_list * n
    if len(m_list) != n:
        raise InputError("--actions must list one count per player (or a single shared count)")
    print(f"theory: {theory_rate(n, m_list):.10g}")
    if args.neighbors is not None:
        c = args.neighbors
        print(f"large-game-aggregate: {large_game_rate_aggregate(c, m_list):.10g}")
        print(f"large-game-individual: {large_game_rate_individual(c, n, m_list):.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapdyn",
        description="Uncoupled no-swap-regret learning dynamics for normal-form games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment and write its CSV trace")
    p_run.add_argument("--config", required=True, help="path to a JSON configuration")
    p_run.add_argument("--out", help="CSV output path (overrides the configuration)")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="re-run a trace and evaluate all checkers")
    p_verify.add_argument("--trace", required=True, help="CSV trace written by run")
    p_verify.set_defaults(func=_cmd_verify)

    p_gen = sub.add_parser("gen-game", help="generate a game file")
    p_gen.add_argument("--random-bimatrix", nargs="*", metavar="KEY=VALUE",
                       help="random bimatrix spec: m=<actions> seed=<seed>")
    p_gen.add_argument("--out", required=True, help="game file output path")
    p_gen.set_defaults(func=_cmd_gen_game)

    p_rates = sub.add_parser("rates", help="print preset learning rates")
    p_rates.add_argument("--players", type=int, required=True)
    p_rates.add_argument("--actions", required=True, help="comma-separated action counts")
    p_rates.add_argument("--neighbors", type=int, help="neighborhood bound for the refinement presets")
    p_rates.set_defaults(func=_cmd_rates)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (InputError, PreconditionError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
