"""Bandit-feedback learners.

Each round the player samples one action and observes only the expected
utility of that action against the opponents' mixed strategies.  The
learner is optimistic mirror descent under the log-barrier: a primary
iterate solved against a recency prediction (the utility seen the last time
each action was played) and a secondary iterate updated with an
importance-weighted estimate.  The master wrapper runs one such learner per
action and conditions all of them on the single sampled action, dividing
the estimate's correction by the sampling probability of that action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import barrier
from .barrier import DEFAULT_SETTINGS, SolverSettings, Strategy
from .bm import StochasticMatrix, _stationary
from .errors import InputError, PreconditionError

DEFAULT_BANDIT_RATE = 1.0 / 162.0
_MIN_WEIGHT = 1e-12


@dataclass(frozen=True)
class BanditObservation:
    """The sampled action and the scalar utility observed for it."""

    played: int
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise InputError("observed value must be finite")


def _proximal_step(target_red, g_red, eta, warm_red, settings):
    """Row-wise argmax of eta*<x, target> - D_R(x, g) in reduced coordinates."""
    gd = 1.0 - g_red.sum(axis=1, keepdims=True)
    grad_g = 1.0 / gd - 1.0 / g_red
    return barrier.argmax_batch(eta * target_red + grad_g, warm_red, 1.0, settings)


def _reduce(v):
    return v[..., :-1] - v[..., -1:]


class OmdLearner:
    """Log-barrier mirror descent with recency predictions, one simplex."""

    def __init__(
        self,
        d: int,
        eta: float = DEFAULT_BANDIT_RATE,
        settings: SolverSettings = DEFAULT_SETTINGS,
        override_rate: bool = False,
    ):
        if d < 2:
            raise InputError("need at least two actions")
        if eta > DEFAULT_BANDIT_RATE + 1e-15 and not override_rate:
            raise PreconditionError(
                "the bandit analysis needs eta <= 1/162; pass override_rate=True to force"
            )
        self.d = d
        self.eta = eta
        self.settings = settings
        self.g = np.full((1, d - 1), 1.0 / d)
        self.x = np.full(d, 1.0 / d)
        self._x_red = np.full((1, d - 1), 1.0 / d)
        self.rho = np.zeros(d, dtype=int)
        self.last_seen = np.zeros(d)
        self.t = 0

    @property
    def prediction(self) -> np.ndarray:
        return self.last_seen.copy()

    @property
    def current(self) -> np.ndarray:
        return self.x

    def next_strategy(self) -> Strategy:
        target = _reduce(self.last_seen)[None, :]
        self._x_red = _proximal_step(target, self.g, self.eta, self._x_red, self.settings)
        self.x = np.append(self._x_red[0], 1.0 - self._x_red[0].sum())
        return Strategy(self.x)

    def estimate(self, obs: BanditObservation, sampling_prob: float | None = None) -> np.ndarray:
        """Importance-weighted utility estimate around the prediction."""
        p = self.x[obs.played] if sampling_prob is None else sampling_prob
        if p < _MIN_WEIGHT:
            raise InputError("importance weight would overflow: sampled action has no mass")
        u_hat = self.last_seen.copy()
        u_hat[obs.played] += (obs.value - self.last_seen[obs.played]) / p
        return u_hat

    def observe(self, obs: BanditObservation, sampling_prob: float | None = None) -> None:
        if not 0 <= obs.played < self.d:
            raise InputError("played action index out of range")
        u_hat = self.estimate(obs, sampling_prob)
        target = _reduce(u_hat)[None, :]
        self.g = _proximal_step(target, self.g, self.eta, self.g, self.settings)
        self.t += 1
        self.rho[obs.played] = self.t
        self.last_seen[obs.played] = obs.value


class BanditBmLearner:
    """Swap-regret master in the sampled-action feedback model.

    Sub-learner state is matrix-backed: row a holds the mirror-descent
    learner of action a.  All sub-learners condition on the master's single
    sampled action; sub-learner a's observation is the master scalar scaled
    by the played probability of a, with the correction divided by the
    master's sampling probability so the estimate stays unbiased.
    """

    def __init__(
        self,
        m: int,
        eta: float = DEFAULT_BANDIT_RATE,
        settings: SolverSettings = DEFAULT_SETTINGS,
        override_rate: bool = False,
    ):
        if m < 2:
            raise InputError("need at least two actions")
        if eta > DEFAULT_BANDIT_RATE + 1e-15 and not override_rate:
            raise PreconditionError(
                "the bandit analysis needs eta <= 1/162; pass override_rate=True to force"
            )
        self.m = m
        self.eta = eta
        self.settings = settings
        self.g = np.full((m, m - 1), 1.0 / m)
        self.x_red = np.full((m, m - 1), 1.0 / m)
        self.rows = np.full((m, m), 1.0 / m)
        self.rho = np.zeros((m, m), dtype=int)
        self.last_seen = np.zeros((m, m))
        self.t = 0
        self._current = np.full(m, 1.0 / m)

    @property
    def current(self) -> np.ndarray:
        return self._current

    def next(self) -> tuple[Strategy, StochasticMatrix]:
        target = _reduce(self.last_seen)
        self.x_red = _proximal_step(target, self.g, self.eta, self.x_red, self.settings)
        self.rows = np.hstack([self.x_red, 1.0 - self.x_red.sum(axis=1, keepdims=True)])
        self._current = _stationary(self.rows)
        return Strategy(self._current), StochasticMatrix(self.rows)

    def observe(self, obs: BanditObservation) -> None:
        """Route the master's scalar observation to every sub-learner."""
        if not 0 <= obs.played < self.m:
            raise InputError("played action index out of range")
        p = self._current[obs.played]
        if p < _MIN_WEIGHT:
            raise InputError("importance weight would overflow: sampled action has no mass")
        values = self._current * obs.value           # sub-learner a sees x[a] * value
        u_hat = self.last_seen.copy()
        u_hat[:, obs.played] += (values - self.last_seen[:, obs.played]) / p
        target = _reduce(u_hat)
        self.g = _proximal_step(target, self.g, self.eta, self.g, self.settings)
        self.t += 1
        self.rho[:, obs.played] = self.t
        self.last_seen[:, obs.played] = values
