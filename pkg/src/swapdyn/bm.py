"""Swap-regret master algorithm.

One external-regret sub-learner per action feeds a row-stochastic matrix
whose stationary distribution is played; observed utilities are routed back
to each sub-learner scaled by the played probability of its action.  The
stationary solve is a direct linear solve with iterative refinement, cross-
checked in tests against the spanning-tree enumeration oracle.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import barrier
from .barrier import DEFAULT_SETTINGS, SolverSettings, Strategy
from .errors import InputError, NumericalError
from .learners import _check_utility

_RESIDUAL_TARGET = 1e-10


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic matrix; row a is sub-learner a's strategy."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise InputError("a stochastic matrix must be square")
        if np.any(rows < 0.0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-12):
            raise InputError("every row must be nonnegative and sum to 1")

    @property
    def size(self) -> int:
        return self.rows.shape[0]


def _residual(q: np.ndarray, x: np.ndarray) -> float:
    return float(np.abs(q.T @ x - x).sum())


def _solve_replaced(q: np.ndarray) -> np.ndarray | None:
    """Direct solve of (Q^T - I)x = 0 with the last row swapped for sum(x)=1."""
    m = q.shape[0]
    a = q.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(a, b)
        r = b - a @ x
        if np.abs(r).max() > 1e-14:
            # one round of iterative refinement on the same system
            x += np.linalg.solve(a, r)
    except np.linalg.LinAlgError:
        return None
    return x


def _solve_least_squares(q: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of the augmented system; ties break to it."""
    m = q.shape[0]
    a = np.vstack([q.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    x = np.linalg.lstsq(a, b, rcond=None)[0]
    x += np.linalg.lstsq(a, b - a @ x, rcond=None)[0]
    return x


def _power_iteration(q: np.ndarray, iters: int = 20_000) -> np.ndarray:
    m = q.shape[0]
    x = np.full(m, 1.0 / m)
    qt = q.T
    for _ in range(iters):
        xn = qt @ x
        s = xn.sum()
        if s <= 0.0:
            break
        xn /= s
        if np.abs(xn - x).sum() <= 1e-15:
            return xn
        x = xn
    return x


def _clean(x: np.ndarray) -> np.ndarray:
    x = np.where(np.abs(x) < 1e-14, np.maximum(x, 0.0), x)
    return x / x.sum()


def _stationary(q: np.ndarray) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix, residual <= 1e-10."""
    x = _solve_replaced(q)
    if x is not None:
        x = _clean(x)
        if np.all(x >= 0.0) and _residual(q, x) <= _RESIDUAL_TARGET:
            return x
    # conditioning is poor or the chain is reducible: minimum-norm route
    x = _clean(_solve_least_squares(q))
    eigs = np.sort(np.abs(np.linalg.eigvals(q)))
    if len(eigs) > 1 and eigs[-2] > 1.0 - 1e-9:
        warnings.warn("transition matrix is not ergodic; returning a tie-broken stationary point")
    if np.all(x >= 0.0) and _residual(q, x) <= _RESIDUAL_TARGET:
        return x
    x = _clean(_power_iteration(q))
    if np.all(x >= 0.0) and _residual(q, x) <= _RESIDUAL_TARGET:
        return x
    raise NumericalError(
        f"stationary solve residual {_residual(q, x):.3e} above {_RESIDUAL_TARGET}", matrix=q
    )


def stationary_distribution(Q: StochasticMatrix) -> Strategy:
    """Distribution x with Q^T x = x, sum 1; uniform on the identity matrix."""
    return Strategy(_stationary(Q.rows))


def _tree_weight_sum(q: np.ndarray, root: int) -> float:
    """Sum over directed spanning trees rooted at ``root`` of edge products."""
    m = q.shape[0]
    others = [u for u in range(m) if u != root]
    total = 0.0
    choices = [[v for v in range(m) if v != u] for u in others]
    for assignment in itertools.product(*choices):
        parent = dict(zip(others, assignment))
        ok = True
        for u in others:
            seen = set()
            node = u
            while node != root:
                if node in seen:
                    ok = False
                    break
                seen.add(node)
                node = parent[node]
            if not ok:
                break
        if ok:
            w = 1.0
            for u in others:
                w *= q[u, parent[u]]
            total += w
    return total


def mctt_stationary(Q: StochasticMatrix) -> Strategy:
    """Brute-force stationary distribution via rooted spanning trees (m <= 6)."""
    q = Q.rows
    m = q.shape[0]
    if m > 6:
        raise InputError("tree enumeration is limited to m <= 6 states")
    if np.any(q <= 0.0):
        raise InputError("tree-theorem oracle expects strictly positive entries")
    sums = np.array([_tree_weight_sum(q, a) for a in range(m)])
    return Strategy(sums / sums.sum())


class BmLearner:
    """Blum-Mansour master over ``m`` actions.

    ``kind`` selects the sub-learner family: "oftrl" (log-barrier OFTRL,
    the default) or "mwu".  All sub-learners share the master's learning
    rate.  Sub-learner state is kept in (m, m) matrices, one row per
    action's learner, so a round advances all of them through one batched
    Newton solve.
    """

    def __init__(
        self,
        m: int,
        eta: float,
        kind: str = "oftrl",
        settings: SolverSettings = DEFAULT_SETTINGS,
    ):
        if kind not in ("oftrl", "mwu"):
            raise InputError(f"unknown sub-learner kind {kind!r}")
        if m < 1:
            raise InputError("need at least one action")
        if not eta > 0.0:
            raise InputError("the learning rate must be positive")
        self.m = m
        self.eta = eta
        self.kind = kind
        self.settings = settings
        self._cum = np.zeros((m, m))
        self._pred = np.zeros((m, m))
        self._warm = np.full((m, m - 1), 1.0 / m)
        self._rows = np.full((m, m), 1.0 / m)
        self._current = np.full(m, 1.0 / m)

    @property
    def current(self) -> np.ndarray:
        """The strategy matching the latest next() call (uniform at t=0)."""
        return self._current

    @property
    def sub_rows(self) -> np.ndarray:
        """Current sub-learner strategies, row a for action a."""
        return self._rows.copy()

    @property
    def sub_cumulative(self) -> np.ndarray:
        return self._cum.copy()

    @property
    def sub_prediction(self) -> np.ndarray:
        return self._pred.copy()

    def _advance_subs(self) -> np.ndarray:
        if self.m == 1:
            return self._rows
        if self.kind == "oftrl":
            w = self._pred + self._cum
            w_red = w[:, :-1] - w[:, -1:]
            sol = barrier.argmax_batch(w_red, self._warm, self.eta, self.settings)
            self._warm = sol
            self._rows = np.hstack([sol, 1.0 - sol.sum(axis=1, keepdims=True)])
        else:
            z = self.eta * self._cum
            z = z - z.max(axis=1, keepdims=True)
            p = np.exp(z)
            self._rows = p / p.sum(axis=1, keepdims=True)
        return self._rows

    def next(self) -> tuple[Strategy, StochasticMatrix]:
        q = self._advance_subs()
        self._current = _stationary(q)
        return Strategy(self._current), StochasticMatrix(q)

    def observe(self, u: np.ndarray) -> None:
        u = _check_utility(u, self.m)
        scaled = self._current[:, None] * u[None, :]
        self._cum = self._cum + scaled
        self._pred = scaled

    def prime(self, u0: np.ndarray) -> None:
        """Round-zero feedback: each sub-learner's first prediction, scaled."""
        u0 = _check_utility(u0, self.m)
        self._pred = self._current[:, None] * u0[None, :]
