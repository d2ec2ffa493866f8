"""Normal-form games and the expected-utility feedback oracle.

Utility tensors are dense, one per player, shaped (m_1, ..., m_n) in C
order so the flat layout runs over profiles with player 1's action slowest.
Built-in instances cover the 3x3 bimatrix variant used for the cycling
experiments, seeded random bimatrix games, and ring games on an
interaction graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .barrier import Strategy
from .errors import InputError

_GAME_KEYS = {"players", "actions", "utilities", "neighborhoods", "normalize"}


@dataclass(frozen=True)
class InteractionGraph:
    """Sparse dependence structure: player i's utility reads only N_i."""

    neighborhoods: tuple[frozenset, ...]
    c: int

    def __post_init__(self):
        object.__setattr__(
            self, "neighborhoods", tuple(frozenset(ns) for ns in self.neighborhoods)
        )
        n = len(self.neighborhoods)
        for i, ns in enumerate(self.neighborhoods):
            if i in ns:
                raise InputError("a neighborhood must not contain the player itself")
            if any(j < 0 or j >= n for j in ns):
                raise InputError("neighborhood index out of range")
            if len(ns) > self.c:
                raise InputError(f"player {i} has {len(ns)} neighbors, above the bound {self.c}")
        for i in range(n):
            affected = sum(1 for j in range(n) if j != i and i in self.neighborhoods[j])
            if affected > self.c:
                raise InputError(f"player {i} affects {affected} players, above the bound {self.c}")


@dataclass(frozen=True)
class NormalFormGame:
    """n players, per-player action counts, dense utility tensors."""

    utilities: tuple
    name: str = "game"
    graph: InteractionGraph | None = field(default=None)

    def __post_init__(self):
        tensors = tuple(np.asarray(u, dtype=float) for u in self.utilities)
        object.__setattr__(self, "utilities", tensors)
        if not tensors:
            raise InputError("a game needs at least one player")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise InputError("need one tensor axis per player")
        for u in tensors:
            if u.shape != shape:
                raise InputError("all utility tensors must share the joint-profile shape")
            if not np.all(np.isfinite(u)):
                raise InputError("utilities must be finite")
        if self.graph is not None:
            if len(self.graph.neighborhoods) != len(tensors):
                raise InputError("interaction graph size must match the player count")
            self._probe_graph()

    def _probe_graph(self) -> None:
        # changing the action of a non-neighbor must never change the utility
        for i, u in enumerate(self.utilities):
            for j in range(self.n):
                if j == i or j in self.graph.neighborhoods[i]:
                    continue
                if float(np.ptp(u, axis=j).max()) > 1e-12:
                    raise InputError(
                        f"utility of player {i} varies with player {j}, "
                        "who is outside its declared neighborhood"
                    )

    @property
    def n(self) -> int:
        return len(self.utilities)

    @property
    def m_list(self) -> tuple:
        return self.utilities[0].shape

    @property
    def normalized(self) -> bool:
        return all(float(np.abs(u).max()) <= 1.0 + 1e-12 for u in self.utilities)

    def normalize(self) -> "NormalFormGame":
        """Rescale all tensors by the global maximum absolute utility."""
        scale = max(float(np.abs(u).max()) for u in self.utilities)
        if scale <= 1.0:
            return self
        return NormalFormGame(
            tuple(u / scale for u in self.utilities), name=self.name + "-normalized",
            graph=self.graph,
        )


def _probs(s) -> np.ndarray:
    return s.probs if isinstance(s, Strategy) else np.asarray(s, dtype=float)


def expected_utility_vector(game: NormalFormGame, i: int, strategies) -> np.ndarray:
    """Per-action expected utilities for player i against the others' mixes."""
    if len(strategies) != game.n:
        raise InputError("need one strategy per player")
    t = game.utilities[i]
    for j in range(game.n - 1, -1, -1):
        if j == i:
            continue
        p = _probs(strategies[j])
        if p.shape != (game.m_list[j],):
            raise InputError(f"strategy {j} has the wrong number of actions")
        t = np.tensordot(t, p, axes=(j, 0))
    return t


def nash_gap(game: NormalFormGame, strategies) -> float:
    """Largest best-response improvement across players."""
    gap = 0.0
    for i in range(game.n):
        u = expected_utility_vector(game, i, strategies)
        gap = max(gap, float(u.max() - u @ _probs(strategies[i])))
    return gap


def sample_profile(strategies, rng: np.random.Generator) -> tuple:
    """One categorical draw per player from a shared generator."""
    out = []
    for s in strategies:
        p = _probs(s)
        edges = np.cumsum(p)
        idx = int(np.searchsorted(edges, rng.random(), side="right"))
        out.append(min(idx, p.size - 1))
    return tuple(out)


def shapley_variant(normalized: bool = False) -> NormalFormGame:
    """General-sum 3x3 bimatrix game whose learning dynamics cycle.

    Its unique equilibrium is x* = (1/3, 1/3, 1/3), y* = (1/4, 2/5, 7/20).
    Raw payoffs sit in [0, 1.5]; the normalized view divides by 1.5.
    """
    a = np.array([[0.0, 0.5, 1.5], [1.5, 0.0, 1.0], [0.5, 1.5, 0.0]])
    b = np.array([[0.0, 1.5, 1.0], [1.0, 0.0, 1.5], [1.5, 1.0, 0.0]])
    game = NormalFormGame((a, b), name="shapley-variant")
    return game.normalize() if normalized else game


def random_bimatrix(m: int, seed: int) -> NormalFormGame:
    """Two m-by-m payoff matrices with i.i.d. Uniform[-1, 1] entries (PCG64)."""
    if m < 2:
        raise InputError("need at least two actions per player")
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.uniform(-1.0, 1.0, size=(m, m))
    b = rng.uniform(-1.0, 1.0, size=(m, m))
    return NormalFormGame((a, b), name=f"random-bimatrix-m{m}-seed{seed}")


def ring_game(n: int, m: int, seed: int) -> NormalFormGame:
    """n players on a cycle; each utility reads itself and both neighbors."""
    if n < 4:
        raise InputError("a ring game needs at least four players")
    rng = np.random.Generator(np.random.PCG64(seed))
    tensors = []
    neighborhoods = []
    for i in range(n):
        left, right = (i - 1) % n, (i + 1) % n
        local = rng.uniform(-1.0, 1.0, size=(m, m, m))
        shape = [1] * n
        shape[left] = m
        shape[i] = m
        shape[right] = m
        # local axes ordered by player index for the reshape to line up
        order = np.argsort([left, i, right])
        tensors.append(np.broadcast_to(
            np.transpose(local, order).reshape(shape), (m,) * n
        ).copy())
        neighborhoods.append(frozenset({left, right}))
    graph = InteractionGraph(tuple(neighborhoods), c=2)
    return NormalFormGame(tuple(tensors), name=f"ring-n{n}-m{m}-seed{seed}", graph=graph)


def save_game(game: NormalFormGame, path) -> None:
    """Write the self-describing JSON game format."""
    doc = {
        "players": game.n,
        "actions": list(game.m_list),
        "utilities": {str(i): game.utilities[i].ravel(order="C").tolist()
                      for i in range(game.n)},
    }
    if game.graph is not None:
        doc["neighborhoods"] = [sorted(ns) for ns in game.graph.neighborhoods]
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_game(path) -> NormalFormGame:
    """Read the JSON game format; out-of-range utilities need normalize: true."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise InputError(f"malformed game file: {err}") from err
    if not isinstance(doc, dict):
        raise InputError("game file must hold a JSON object")
    unknown = set(doc) - _GAME_KEYS
    if unknown:
        raise InputError(f"unknown game file keys: {sorted(unknown)}")
    for key in ("players", "actions", "utilities"):
        if key not in doc:
            raise InputError(f"game file is missing the {key!r} field")
    n = int(doc["players"])
    actions = [int(a) for a in doc["actions"]]
    if len(actions) != n:
        raise InputError("actions list length must equal the player count")
    size = int(np.prod(actions))
    tensors = []
    for i in range(n):
        key = str(i)
        if key not in doc["utilities"]:
            raise InputError(f"utilities for player {i} are missing")
        flat = np.asarray(doc["utilities"][key], dtype=float)
        if flat.shape != (size,):
            raise InputError(
                f"player {i} needs {size} utility entries, got {flat.size}"
            )
        tensors.append(flat.reshape(actions))
    graph = None
    if "neighborhoods" in doc:
        hoods = [frozenset(ns) for ns in doc["neighborhoods"]]
        out_deg = max((len(ns) for ns in hoods), default=0)
        in_deg = max(
            (sum(1 for ns in hoods if j in ns) for j in range(n)), default=0
        )
        graph = InteractionGraph(tuple(hoods), c=max(out_deg, in_deg))
    game = NormalFormGame(tuple(tensors), name="file-game", graph=graph)
    if not game.normalized:
        if not doc.get("normalize", False):
            raise InputError(
                "utilities fall outside [-1, 1]; set normalize: true to rescale"
            )
        game = game.normalize()
    return game
