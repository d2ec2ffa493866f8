"""Adversarial-robustness wrapper.

Runs the optimistic swap-regret master while the cumulative squared
sup-norm utility variation stays under the in-protocol budget, and switches
permanently to the multiplicative-weights master (tuned for a known
horizon) the first time the budget is exceeded.  In-protocol play never
trips the budget, so the wrapper is transparent there.
"""

from __future__ import annotations

import numpy as np

from .barrier import DEFAULT_SETTINGS, SolverSettings, Strategy
from .bm import BmLearner, StochasticMatrix
from .errors import InputError
from .learners import _check_utility


def variation_threshold(n: int, m_list, t: int) -> float:
    """In-protocol budget for the cumulative squared utility variation."""
    if n < 2:
        raise InputError("the budget formula needs at least two players")
    coeff = 8192.0 * (n - 1) * max(m_list) * sum(m * m for m in m_list)
    return coeff * np.log(t)


def fallback_rate(m: int, horizon: int) -> float:
    """Learning rate of the multiplicative-weights fallback."""
    return float(np.sqrt(m * np.log(m) / horizon))


class RobustLearner:
    """Swap-regret learner with a one-way switch to an adversarial fallback.

    ``eta`` drives the optimistic master; the fallback uses
    sqrt(m log m / horizon).  The wrapper needs the game dimensions
    (n, m_list) to evaluate the variation budget and the horizon to tune
    the fallback.
    """

    def __init__(
        self,
        m: int,
        n: int,
        m_list,
        horizon: int,
        eta: float,
        settings: SolverSettings = DEFAULT_SETTINGS,
    ):
        if m < 2:
            raise InputError("the wrapper needs at least two actions")
        if horizon < 1:
            raise InputError("the horizon must be positive")
        if m not in m_list:
            raise InputError("m must appear in m_list")
        self.m = m
        self.n = n
        self.m_list = tuple(int(v) for v in m_list)
        self.horizon = horizon
        self.eta = eta
        self.phase = "optimistic"
        self.switch_step: int | None = None
        self.variation_sum = 0.0
        self.t = 0
        self._last_u = np.zeros(m)
        self.optimistic = BmLearner(m, eta, kind="oftrl", settings=settings)
        self.fallback = BmLearner(m, fallback_rate(m, horizon), kind="mwu")
        self._coeff = 8192.0 * (n - 1) * max(self.m_list) * sum(v * v for v in self.m_list)

    @property
    def inner(self) -> BmLearner:
        return self.fallback if self.phase == "fallback" else self.optimistic

    @property
    def current(self) -> np.ndarray:
        return self.inner.current

    def threshold(self, t: int) -> float:
        return self._coeff * np.log(t)

    def next(self) -> tuple[Strategy, StochasticMatrix]:
        return self.inner.next()

    def observe(self, u: np.ndarray) -> None:
        u = _check_utility(u, self.m)
        if np.abs(u).max() > 1.0 + 1e-12:
            raise InputError("the wrapper requires utilities bounded by 1 in sup norm")
        self.t += 1
        self.variation_sum += float(np.abs(u - self._last_u).max()) ** 2
        self._last_u = u.copy()
        if self.phase == "optimistic":
            # the violating step still reaches the optimistic learner so its
            # internal sums stay consistent; the switch applies afterwards
            self.optimistic.observe(u)
            if self.t >= 2 and self.variation_sum > self.threshold(self.t):
                self.phase = "fallback"
                self.switch_step = self.t
        else:
            self.fallback.observe(u)

    def prime(self, u0: np.ndarray) -> None:
        u0 = _check_utility(u0, self.m)
        self._last_u = u0.copy()
        self.optimistic.prime(u0)
