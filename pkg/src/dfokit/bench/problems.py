"""Registry of small test problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..problem_model import Box, FeasibleSet, NoiseMode, ObjectiveOracle

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ProblemSpec:
    """A named objective with its start point and, when known, derivatives and solution."""

    name: str
    n: int
    fun: Callable | None
    x0: np.ndarray
    gradient: Callable | None = None
    hessian: Callable | None = None
    residual: Callable | None = None
    lipschitz: float | None = None
    feasible: FeasibleSet | None = None
    minimizer: np.ndarray | None = None
    f_min: float | None = None

    def oracle(self, mode: NoiseMode | None = None, record: bool = False) -> ObjectiveOracle:
        return ObjectiveOracle(self.fun, self.n, mode, gradient=self.gradient, hessian=self.hessian,
                               residual=self.residual, record=record)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.fun is not None:
            return float(self.fun(x))
        r = self.residual(x)
        return 0.5 * float(r @ r)

    def gradient_self_test(self, x=None, h: float = 1e-6, tol: float = 1e-5) -> bool:
        """Compare the analytic gradient with central differences."""
        if self.gradient is None:
            return True
        x = np.array(self.x0 if x is None else x, dtype=float)
        fd = np.empty(self.n)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            fd[i] = (self.value(x + e) - self.value(x - e)) / (2 * h)
        g = np.asarray(self.gradient(x), dtype=float)
        return bool(np.max(np.abs(fd - g)) <= tol * max(1.0, np.max(np.abs(g))))


def _bowl(n=5):
    return ProblemSpec("quadratic_bowl", n, lambda x: 0.5 * float(x @ x), np.ones(n),
                       gradient=lambda x: np.array(x, dtype=float), hessian=lambda x: np.eye(n),
                       lipschitz=1.0, minimizer=np.zeros(n), f_min=0.0)


def _ill_conditioned(n=5, cond=1e3):
    d = cond ** (np.arange(n) / (n - 1))
    return ProblemSpec("ill_conditioned", n, lambda x: 0.5 * float(x @ (d * x)), np.ones(n),
                       gradient=lambda x: d * x, hessian=lambda x: np.diag(d),
                       lipschitz=float(cond), minimizer=np.zeros(n), f_min=0.0)


def _rosen_res(x):
    return SQRT2 * np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def _rosenbrock():
    def fun(x):
        return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2

    def grad(x):
        return np.array([-400.0 * x[0] * (x[1] - x[0] ** 2) - 2.0 * (1.0 - x[0]),
                         200.0 * (x[1] - x[0] ** 2)])

    def hess(x):
        return np.array([[1200.0 * x[0] ** 2 - 400.0 * x[1] + 2.0, -400.0 * x[0]],
                         [-400.0 * x[0], 200.0]])

    return ProblemSpec("rosenbrock2", 2, fun, np.array([-1.2, 1.0]), gradient=grad, hessian=hess,
                       residual=_rosen_res, minimizer=np.ones(2), f_min=0.0)


def _himmelblau_res(x):
    return SQRT2 * np.array([x[0] ** 2 + x[1] - 11.0, x[0] + x[1] ** 2 - 7.0])


def _sum_of_squares():
    def grad(x):
        r = _himmelblau_res(x) / SQRT2
        J = np.array([[2 * x[0], 1.0], [1.0, 2 * x[1]]])
        return 2.0 * J.T @ r

    return ProblemSpec("sum_of_squares", 2, None, np.array([1.0, 1.0]), gradient=grad,
                       residual=_himmelblau_res, minimizer=np.array([3.0, 2.0]), f_min=0.0)


def _box_shifted():
    return ProblemSpec("box_shifted_quadratic", 2, lambda x: float(np.sum((x + 1.0) ** 2)), np.ones(2),
                       gradient=lambda x: 2.0 * (x + 1.0), hessian=lambda x: 2.0 * np.eye(2),
                       lipschitz=2.0, feasible=Box([0.0, 0.0], [np.inf, np.inf]),
                       minimizer=np.zeros(2), f_min=2.0)


def _slab(delta=0.1):
    target = np.array([1.0, 1.0])
    return ProblemSpec("slab", 2, lambda x: float(np.sum((x - target) ** 2)), np.zeros(2),
                       gradient=lambda x: 2.0 * (x - target), hessian=lambda x: 2.0 * np.eye(2),
                       lipschitz=2.0, feasible=Box([-np.inf, -delta], [np.inf, delta]),
                       minimizer=np.array([1.0, delta]), f_min=(1.0 - delta) ** 2)


PROBLEMS: dict[str, Callable[[], ProblemSpec]] = {
    "quadratic_bowl": _bowl,
    "ill_conditioned": _ill_conditioned,
    "rosenbrock2": _rosenbrock,
    "sum_of_squares": _sum_of_squares,
    "box_shifted_quadratic": _box_shifted,
    "slab": _slab,
}


def get_problem(name: str, **kwargs) -> ProblemSpec:
    if name not in PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")
    return PROBLEMS[name](**kwargs)
