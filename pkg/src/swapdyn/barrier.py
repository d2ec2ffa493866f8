"""Log-barrier geometry on the probability simplex.

A distribution over d actions is solved for in reduced coordinates: its
first d-1 entries, with the last entry implied as 1 minus their sum.  The
regularizer is the log-barrier of that reduced domain, normalized so the
uniform distribution has value 0.  The closed-form Hessian and its
Sherman-Morrison inverse keep every operation O(d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fast
from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class SolverSettings:
    """Stopping rule and safeguards for the damped Newton solver."""

    decrement_tolerance: float = 1e-10
    max_iterations: int = 100
    feasibility_backtrack_factor: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.decrement_tolerance <= 0.25:
            raise ValueError("decrement_tolerance must lie in (0, 1/4]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0.0 < self.feasibility_backtrack_factor < 1.0:
            raise ValueError("feasibility_backtrack_factor must lie in (0, 1)")


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class ReducedPoint:
    """Interior simplex point stored through its first d-1 coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.atleast_1d(np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 1:
            raise DomainError("reduced coordinates must form a vector")
        if coords.size and (np.any(coords <= 0.0) or float(coords.sum()) >= 1.0):
            raise DomainError("point is not strictly interior to the simplex")

    @property
    def dim(self) -> int:
        return self.coords.size + 1

    @property
    def last(self) -> float:
        return 1.0 - float(self.coords.sum())

    def to_strategy(self) -> "Strategy":
        return Strategy(np.append(self.coords, self.last))


@dataclass(frozen=True)
class Strategy:
    """Probability vector over a player's actions."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.atleast_1d(np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("strategy must be a nonempty vector")
        if np.any(probs < 0.0) or abs(float(probs.sum()) - 1.0) > 1e-12:
            raise DomainError("strategy must be nonnegative and sum to 1")

    @property
    def dim(self) -> int:
        return self.probs.size

    @property
    def interior(self) -> bool:
        return bool(np.all(self.probs > 0.0))

    def to_reduced(self) -> ReducedPoint:
        if not self.interior:
            raise DomainError("only interior strategies have reduced coordinates")
        return ReducedPoint(self.probs[:-1].copy())


@dataclass(frozen=True)
class BarrierEval:
    """Value, gradient and Hessian of the barrier at one reduced point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def uniform_strategy(d: int) -> Strategy:
    return Strategy(np.full(d, 1.0 / d))


def uniform_reduced(d: int) -> ReducedPoint:
    return ReducedPoint(np.full(d - 1, 1.0 / d))


def _require_interior(coords: np.ndarray) -> float:
    """Return the implicit last coordinate, raising off the open domain."""
    last = 1.0 - float(coords.sum())
    if coords.size and (np.any(coords <= 0.0) or last <= 0.0):
        raise DomainError("point is not strictly interior to the simplex")
    return last


def barrier_value(x: ReducedPoint) -> float:
    """Normalized log-barrier: 0 at the uniform point, +inf at the boundary."""
    coords = x.coords
    last = _require_interior(coords)
    d = coords.size + 1
    raw = -float(np.log(coords).sum()) - np.log(last)
    return raw - d * np.log(d)


def barrier_gradient(x: ReducedPoint) -> np.ndarray:
    """Component r is -1/x[r] + 1/x[d]."""
    coords = x.coords
    last = _require_interior(coords)
    return 1.0 / last - 1.0 / coords


def barrier_hessian(x: ReducedPoint) -> np.ndarray:
    """diag(1/x[r]^2) plus the rank-one term from the implicit coordinate."""
    coords = x.coords
    last = _require_interior(coords)
    k = coords.size
    hess = np.full((k, k), 1.0 / last**2)
    hess[np.diag_indices(k)] += 1.0 / coords**2
    return hess


def evaluate(x: ReducedPoint) -> BarrierEval:
    return BarrierEval(barrier_value(x), barrier_gradient(x), barrier_hessian(x))


def hessian_inverse_apply(x: ReducedPoint, v: np.ndarray) -> np.ndarray:
    """Apply the closed-form (Sherman-Morrison) inverse Hessian to v."""
    coords = x.coords
    last = _require_interior(coords)
    v = np.asarray(v, dtype=float)
    xsq = coords * coords
    denom = float(xsq.sum()) + last * last
    return xsq * v - xsq * (float(xsq @ v) / denom)


def primal_local_norm(x: Strategy, delta: np.ndarray) -> float:
    """Local norm of a full-dimensional difference whose entries sum to 0."""
    probs = x.probs
    if np.any(probs <= 0.0):
        raise DomainError("local norms need a strictly positive base point")
    delta = np.asarray(delta, dtype=float)
    ratios = delta / probs
    return float(np.sqrt(ratios @ ratios))


def dual_local_norm(x: Strategy, u: np.ndarray) -> float:
    """Dual local norm of a utility vector, invariant to constant shifts.

    Equals the dual norm of the reduced utility u[r] - u[d]; the optimal
    shift c* has the closed form sum(x^2 u) / sum(x^2).
    """
    probs = x.probs
    if np.any(probs <= 0.0):
        raise DomainError("local norms need a strictly positive base point")
    u = np.asarray(u, dtype=float)
    xsq = probs * probs
    c_star = float(xsq @ u) / float(xsq.sum())
    centered = u - c_star
    return float(np.sqrt(xsq @ (centered * centered)))


def omega(s):
    """s - log(1 + s); the growth function of self-concordant analysis."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("omega is defined for nonnegative arguments")
    out = s - np.log1p(s)
    return float(out) if out.ndim == 0 else out


def newton_decrement(x: ReducedPoint, grad: np.ndarray) -> float:
    """Dual local norm of a gradient at x: sqrt(g^T (hessian)^-1 g)."""
    coords = x.coords
    last = _require_interior(coords)
    grad = np.asarray(grad, dtype=float)
    xsq = coords * coords
    denom = float(xsq.sum()) + last * last
    xg = float(xsq @ grad)
    lam_sq = float(xsq @ (grad * grad)) - xg * xg / denom
    return float(np.sqrt(max(lam_sq, 0.0)))


def argmax_batch(
    w: np.ndarray,
    x0: np.ndarray,
    eta: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Row-wise maximizers of eta*<x, w[i]> - R(x) over the open simplex.

    ``w`` and ``x0`` are (B, k) arrays of reduced utilities and strictly
    feasible warm starts.  Damped Newton iterations with the closed-form
    inverse Hessian; each returned row has Newton decrement at most
    ``settings.decrement_tolerance``.  A step that would leave the open
    domain is shrunk by the feasibility backtrack factor.
    """
    w = np.asarray(w, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if w.shape != x0.shape or w.ndim != 2:
        raise DomainError("weights and warm starts must share a (B, k) shape")
    if x0.shape[1] == 0:
        return x0.copy()
    if np.any(x0 <= 0.0) or np.any(x0.sum(axis=1) >= 1.0):
        raise DomainError("warm starts must be strictly interior")
    if not eta > 0.0:
        raise DomainError("the learning rate must be positive")

    if _fast.newton_batch is not None:
        x = x0.copy()
        status, lam = _fast.newton_batch(
            np.ascontiguousarray(eta * w),
            x,
            settings.decrement_tolerance,
            settings.feasibility_backtrack_factor,
            settings.max_iterations,
        )
        if status == 1:
            raise ConvergenceError("damped Newton exceeded max_iterations", lam)
        if status == 2:
            raise ConvergenceError(
                "feasibility backtracking failed to re-enter the domain", lam
            )
        return x

    ew = eta * w
    x = x0.copy()
    tol = settings.decrement_tolerance
    factor = settings.feasibility_backtrack_factor
    lam = np.zeros(x.shape[0])

    for _ in range(settings.max_iterations):
        xd = 1.0 - x.sum(axis=1, keepdims=True)
        grad = 1.0 / xd - 1.0 / x - ew
        xsq = x * x
        denom = xsq.sum(axis=1, keepdims=True) + xd * xd
        xg = (xsq * grad).sum(axis=1, keepdims=True)
        hg = xsq * grad - xsq * (xg / denom)
        lam_sq = (grad * hg).sum(axis=1)
        np.maximum(lam_sq, 0.0, out=lam_sq)
        lam = np.sqrt(lam_sq)
        if np.all(lam <= tol):
            return x
        step = hg * (-1.0 / (1.0 + lam))[:, None]
        xn = x + step
        bad = (xn.min(axis=1) <= 0.0) | (xn.sum(axis=1) >= 1.0)
        guard = 0
        while np.any(bad):
            step[bad] *= factor
            xn[bad] = x[bad] + step[bad]
            bad[bad] = (xn[bad].min(axis=1) <= 0.0) | (xn[bad].sum(axis=1) >= 1.0)
            guard += 1
            if guard > 2000:
                raise ConvergenceError(
                    "feasibility backtracking failed to re-enter the domain",
                    float(np.max(lam)),
                )
        x = xn

    raise ConvergenceError("damped Newton exceeded max_iterations", float(np.max(lam)))


def damped_newton_argmax(
    w: np.ndarray,
    eta: float,
    warm_start: ReducedPoint,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ReducedPoint:
    """Maximize eta*<x, w> - R(x) over the open simplex from a warm start."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size == 0:
        return warm_start
    sol = argmax_batch(w[None, :], warm_start.coords[None, :], eta, settings)
    return ReducedPoint(sol[0])


def minkowski(x_ref: Strategy, x_target: Strategy) -> float:
    """Gauge of x_target with respect to the interior reference point.

    The smallest s >= 0 with x_ref + (x_target - x_ref)/s inside the
    simplex; 0 at the reference itself, 1 on the boundary.
    """
    ref = x_ref.probs
    if np.any(ref <= 0.0):
        raise DomainError("the reference point must be strictly interior")
    tgt = x_target.probs
    if tgt.shape != ref.shape:
        raise DomainError("points must share a dimension")
    return float(max(0.0, np.max(1.0 - tgt / ref)))


def diameter_bound_check(x_ref: Strategy, x_target: Strategy, theta: float) -> bool:
    """Barrier growth against the logarithmic bound in the gauge distance.

    True iff R(x_target) - R(x_ref) <= theta * log(1/(1 - pi)) within 1e-9,
    vacuously true when the gauge pi reaches 1 (unbounded right side).
    """
    pi = minkowski(x_ref, x_target)
    if pi >= 1.0:
        return True
    lhs = barrier_value(x_target.to_reduced()) - barrier_value(x_ref.to_reduced())
    rhs = theta * np.log(1.0 / (1.0 - pi))
    return bool(lhs <= rhs + 1e-9)
