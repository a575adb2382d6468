"""Objective oracles, convex feasible sets and their Euclidean projections."""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DimensionMismatch, NonConvergence, NonFiniteInput

MEMBERSHIP_TOL = 1e-10


def as_point(x, n: int | None = None, name: str = "x") -> np.ndarray:
    """Convert to a finite 1-D float array, optionally checking its length."""
    arr = np.array(x, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# Noise modes


@dataclass(frozen=True)
class Exact:
    """Noise-free evaluations."""


@dataclass(frozen=True)
class BoundedDeterministic:
    """Deterministic perturbation bounded by ``eps_f`` in absolute value."""

    eps_f: float
    phase: int = 0

    def __post_init__(self):
        if not self.eps_f >= 0:
            raise ConfigError("eps_f must be nonnegative")


@dataclass(frozen=True)
class Stochastic:
    """Additive centered Gaussian noise with standard deviation ``sigma``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ConfigError("sigma must be nonnegative")


NoiseMode = Exact | BoundedDeterministic | Stochastic


def hash_phase(x: np.ndarray, phase: int = 0) -> float:
    """Angle in [0, 2pi) obtained from a hash of the coordinates' bytes."""
    h = hashlib.blake2b(np.ascontiguousarray(x, dtype=float).tobytes(), digest_size=8,
                        key=int(phase).to_bytes(8, "little", signed=True))
    u = int.from_bytes(h.digest(), "little") / 2.0**64
    return 2.0 * math.pi * u


class ObjectiveOracle:
    """Zeroth-order oracle with evaluation accounting.

    Parameters
    ----------
    fun : callable
        Smooth objective ``f(x) -> float``. May be omitted when ``residual`` is
        given, in which case ``f = 0.5 * ||r(x)||^2``.
    n : int
        Problem dimension.
    mode : Exact, BoundedDeterministic or Stochastic
        Noise model applied on top of ``fun``.
    gradient, hessian : callable, optional
        Exact derivatives, used only by the classical baseline and for reporting.
    residual : callable, optional
        Vector residual map for least-squares objectives.
    record : bool
        Keep every evaluated point in ``history``.
    """

    def __init__(self, fun: Callable | None, n: int, mode: NoiseMode | None = None, *,
                 gradient: Callable | None = None, hessian: Callable | None = None,
                 residual: Callable | None = None, record: bool = False):
        if fun is None and residual is None:
            raise ConfigError("either fun or residual is required")
        if int(n) < 1:
            raise ConfigError("dimension must be positive")
        self.n = int(n)
        self.mode = Exact() if mode is None else mode
        self.gradient = gradient
        self.hessian = hessian
        self.residual = residual
        self._fun = fun
        self._lock = threading.Lock()
        self._count = 0
        self.record = record
        self.history: list[np.ndarray] = []

    # accounting -------------------------------------------------------------
    @property
    def eval_count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0
            self.history = []

    def _tick(self, x: np.ndarray, k: int = 1) -> None:
        with self._lock:
            self._count += k
            if self.record:
                self.history.append(x.copy())

    # evaluation -------------------------------------------------------------
    def true_value(self, x) -> float:
        """Noise-free objective value; does not touch the counter."""
        x = as_point(x, self.n)
        if self._fun is not None:
            return float(self._fun(x))
        r = np.asarray(self.residual(x), dtype=float)
        return 0.5 * float(r @ r)

    def __call__(self, x, rng: np.random.Generator | None = None) -> float:
        return self.evaluate(x, rng)

    def evaluate(self, x, rng: np.random.Generator | None = None) -> float:
        x = as_point(x, self.n)
        self._tick(x)
        f = self.true_value(x)
        mode = self.mode
        if isinstance(mode, BoundedDeterministic):
            if mode.eps_f > 0:
                f += mode.eps_f * math.cos(hash_phase(x, mode.phase))
        elif isinstance(mode, Stochastic):
            if mode.sigma > 0:
                if rng is None:
                    raise ConfigError("stochastic oracle needs an explicit rng stream")
                f += mode.sigma * float(rng.standard_normal())
        return f

    def sample(self, x, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n_samples`` independent stochastic evaluations at one point."""
        x = as_point(x, self.n)
        n_samples = int(n_samples)
        self._tick(x, n_samples)
        f = self.true_value(x)
        if isinstance(self.mode, Stochastic) and self.mode.sigma > 0:
            return f + self.mode.sigma * rng.standard_normal(n_samples)
        if isinstance(self.mode, BoundedDeterministic) and self.mode.eps_f > 0:
            f += self.mode.eps_f * math.cos(hash_phase(x, self.mode.phase))
        return np.full(n_samples, f)

    def evaluate_residuals(self, x) -> np.ndarray:
        """Residual vector at ``x``; counts as one evaluation."""
        if self.residual is None:
            raise ConfigError("oracle has no residual map")
        x = as_point(x, self.n)
        self._tick(x)
        return np.asarray(self.residual(x), dtype=float).reshape(-1)


def make_noisy_oracle(base: ObjectiveOracle, mode: NoiseMode) -> ObjectiveOracle:
    """Copy of ``base`` with a different noise mode and a fresh counter."""
    return ObjectiveOracle(base._fun, base.n, mode, gradient=base.gradient,
                           hessian=base.hessian, residual=base.residual, record=base.record)


# ---------------------------------------------------------------------------
# Feasible sets


class FeasibleSet:
    """Closed convex set described through its Euclidean projection."""

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(self.project(x) - x) <= tol * (1.0 + np.linalg.norm(x)))

    def project_many(self, X: np.ndarray) -> np.ndarray:
        """Row-wise projection; subclasses override with vectorized versions."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.project(x) for x in X]).reshape(X.shape)

    def contains_many(self, X: np.ndarray, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dist = np.linalg.norm(self.project_many(X) - X, axis=1)
        return dist <= tol * (1.0 + np.linalg.norm(X, axis=1))


@dataclass(frozen=True)
class WholeSpace(FeasibleSet):
    def project(self, x):
        return np.array(x, dtype=float)

    def project_many(self, X):
        return np.array(np.atleast_2d(X), dtype=float)


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatch("lower and upper bounds differ in length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise NonFiniteInput("bounds may not be NaN")
        if np.any(lo > hi):
            raise ConfigError("box requires lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def project(self, x):
        # np.clip handles infinite bounds without special cases
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def project_many(self, X):
        return np.clip(np.atleast_2d(np.asarray(X, dtype=float)), self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class Halfspace(FeasibleSet):
    """The set ``{x : a^T x <= b}``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = as_point(self.a, name="a")
        if not np.any(a != 0):
            raise ConfigError("halfspace normal must be nonzero")
        if not math.isfinite(self.b):
            raise NonFiniteInput("halfspace offset must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def project(self, x):
        x = np.asarray(x, dtype=float)
        viol = max(float(self.a @ x) - self.b, 0.0)
        return x - (viol / float(self.a @ self.a)) * self.a

    def project_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        viol = np.maximum(X @ self.a - self.b, 0.0)
        return X - np.outer(viol / float(self.a @ self.a), self.a)


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ConfigError("ball radius must be nonnegative")
        object.__setattr__(self, "center", as_point(self.center, name="center"))
        object.__setattr__(self, "radius", float(self.radius))

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / nd)

    def project_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        D = X - self.center
        nd = np.linalg.norm(D, axis=1)
        scale = np.where(nd > self.radius, self.radius / np.maximum(nd, 1e-300), 1.0)
        return self.center + D * scale[:, None]


@dataclass(frozen=True, eq=False)
class Intersection(FeasibleSet):
    """Intersection of convex sets, projected with Dykstra's algorithm."""

    sets: tuple
    tol: float = 1e-10
    max_iters: int = 10_000

    def __post_init__(self):
        if len(self.sets) == 0:
            raise ConfigError("intersection of zero sets")
        object.__setattr__(self, "sets", tuple(self.sets))

    def project(self, x):
        return dykstra(self.sets, x, tol=self.tol, max_iters=self.max_iters)

    def contains_many(self, X, tol: float = MEMBERSHIP_TOL):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for s in self.sets:
            ok &= s.contains_many(X, tol)
        return ok


def dykstra(sets: Sequence[FeasibleSet], x, tol: float = 1e-10, max_iters: int = 10_000) -> np.ndarray:
    """Project ``x`` onto the intersection of ``sets``."""
    x = np.array(x, dtype=float)
    if len(sets) == 1:
        return sets[0].project(x)
    incr = [np.zeros_like(x) for _ in sets]
    for _ in range(max_iters):
        change = 0.0
        for i, s in enumerate(sets):
            y = s.project(x + incr[i])
            incr[i] = x + incr[i] - y
            change = max(change, float(np.linalg.norm(y - x)))
            x = y
        if change <= tol * (1.0 + np.linalg.norm(x)):
            return x
    raise NonConvergence(f"Dykstra did not converge in {max_iters} sweeps")


def project(feasible: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``feasible``."""
    return feasible.project(as_point(x))


def distance_to_set(feasible: FeasibleSet, x) -> float:
    x = as_point(x)
    return float(np.linalg.norm(feasible.project(x) - x))


def project_ball_intersection(feasible: FeasibleSet, center, radius: float, y,
                              max_iters: int = 200) -> np.ndarray:
    """Projection of ``y`` onto ``feasible ∩ B(center, radius)`` for feasible ``center``.

    The minimizer is ``P_C((y + mu c) / (1 + mu))`` for the ball multiplier
    ``mu >= 0``; the distance to the center is nonincreasing in ``mu``, so
    ``mu`` is found by bracketing and Brent's method.
    """
    c = np.asarray(center, dtype=float)
    y = np.asarray(y, dtype=float)

    def z(mu):
        return feasible.project((y + mu * c) / (1.0 + mu))

    z0 = z(0.0)
    if np.linalg.norm(z0 - c) <= radius:
        return z0

    def excess(mu):
        return float(np.linalg.norm(z(mu) - c)) - radius

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            break
    try:
        mu = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12, maxiter=max_iters)
    except (ValueError, RuntimeError):
        mu = hi
    out = z(mu)
    d = out - c
    nd = np.linalg.norm(d)
    # convexity keeps the pulled-back point feasible
    return c + d * (radius / nd) if nd > radius else out
