"""Single-simplex regret minimizers.

``OftrlLearner`` is the optimistic follow-the-regularized-leader update with
log-barrier regularization, solved by damped Newton in reduced coordinates.
``MwuLearner`` is the multiplicative-weights family kept as a baseline and
as the adversarial fallback's internal learner.

Both expose the same two-call protocol: ``next_strategy()`` returns the move
for the current round, ``observe(u)`` feeds back the utility vector.  A
``prime(u0)`` call installs round-zero feedback as the first prediction
without touching the cumulative sum.
"""

from __future__ import annotations

import numpy as np

from . import barrier
from .barrier import DEFAULT_SETTINGS, SolverSettings, Strategy
from .errors import InputError


def _check_utility(u: np.ndarray, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (d,):
        raise InputError(f"utility vector must have shape ({d},), got {u.shape}")
    if not np.all(np.isfinite(u)):
        raise InputError("utility vector contains NaN or infinite entries")
    return u


class OftrlLearner:
    """Log-barrier OFTRL over one simplex.

    The emitted strategy maximizes eta*<x, prediction + cumulative> - R(x);
    the prediction is the most recently observed utility (zero before any
    feedback), so the first move is the uniform barrier minimizer.
    """

    def __init__(self, d: int, eta: float, settings: SolverSettings = DEFAULT_SETTINGS):
        if d < 1:
            raise InputError("need at least one action")
        if not eta > 0.0:
            raise InputError("the learning rate must be positive")
        self.d = d
        self.eta = eta
        self.settings = settings
        self.cumulative = np.zeros(d)
        self.prediction = np.zeros(d)
        self._warm = np.full(d - 1, 1.0 / d)
        self._current = np.full(d, 1.0 / d)

    def weights(self) -> np.ndarray:
        return self.prediction + self.cumulative

    def reduced_weights(self) -> np.ndarray:
        w = self.weights()
        return w[:-1] - w[-1]

    def next_strategy(self) -> Strategy:
        if self.d == 1:
            return Strategy(self._current)
        sol = barrier.argmax_batch(
            self.reduced_weights()[None, :], self._warm[None, :], self.eta, self.settings
        )
        self._adopt(sol[0])
        return Strategy(self._current)

    def _adopt(self, reduced: np.ndarray) -> None:
        self._warm = reduced
        self._current = np.append(reduced, 1.0 - reduced.sum())

    @property
    def current(self) -> np.ndarray:
        return self._current

    def observe(self, u: np.ndarray) -> None:
        u = _check_utility(u, self.d)
        self.cumulative = self.cumulative + u
        self.prediction = u.copy()

    def prime(self, u0: np.ndarray) -> None:
        """Install round-zero feedback as the first prediction only."""
        self.prediction = _check_utility(u0, self.d).copy()


class MwuLearner:
    """Multiplicative weights over one simplex, optionally optimistic."""

    def __init__(self, d: int, eta: float, optimistic: bool = False):
        if d < 1:
            raise InputError("need at least one action")
        if not eta > 0.0:
            raise InputError("the learning rate must be positive")
        self.d = d
        self.eta = eta
        self.optimistic = optimistic
        self.cumulative = np.zeros(d)
        self.prediction = np.zeros(d)
        self._current = np.full(d, 1.0 / d)

    def next_strategy(self) -> Strategy:
        score = self.cumulative + (self.prediction if self.optimistic else 0.0)
        z = self.eta * score
        z = z - z.max()
        p = np.exp(z)
        self._current = p / p.sum()
        return Strategy(self._current)

    @property
    def current(self) -> np.ndarray:
        return self._current

    def observe(self, u: np.ndarray) -> None:
        u = _check_utility(u, self.d)
        self.cumulative = self.cumulative + u
        self.prediction = u.copy()

    def prime(self, u0: np.ndarray) -> None:
        self.prediction = _check_utility(u0, self.d).copy()
