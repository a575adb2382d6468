"""Records, reports, budget accounting and shared helpers for the drivers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleStart, NonConvergence
from ..interp import ModelKind, build_model
from ..problem_model import (FeasibleSet, ObjectiveOracle, WholeSpace, as_point,
                             project_ball_intersection)
from ..trs import cauchy_point, solve_trs_exact
from .config import TrConfig


class Status(str, enum.Enum):
    VERY_SUCCESSFUL = "VerySuccessful"
    SUCCESSFUL = "Successful"
    MODEL_IMPROVING = "ModelImproving"
    REPLACE_DISTANT = "ReplaceDistant"
    REPLACE_BAD = "ReplaceBad"
    UNSUCCESSFUL = "Unsuccessful"
    CRITICALITY_SKIP = "CriticalitySkip"


class Termination(str, enum.Enum):
    DELTA_MIN = "DeltaMin"
    MAX_EVALS = "MaxEvals"
    GRADIENT_TOL = "GradientTolWithCertificate"
    ITERATION_CAP = "IterationCap"


S = Status
LEGAL_STATUSES = {
    "classical": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.UNSUCCESSFUL},
    "first-order": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
    "second-order": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
    "inaccurate": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.MODEL_IMPROVING, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
    "self-correcting": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.REPLACE_DISTANT, S.REPLACE_BAD, S.UNSUCCESSFUL},
    "constrained": {S.VERY_SUCCESSFUL, S.SUCCESSFUL, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
    "noisy": {S.SUCCESSFUL, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
    "storm": {S.SUCCESSFUL, S.UNSUCCESSFUL, S.CRITICALITY_SKIP},
}
del S


@dataclass
class IterationRecord:
    """One row of a driver trace.

    ``x`` and ``delta`` are the iterate and radius at the start of iteration
    ``k``; ``f`` is the value at the iterate after the iteration, ``evals`` the
    oracle count after it. ``measure`` holds the second-order or constrained
    criticality measure when the driver uses one.
    """

    k: int
    x: np.ndarray | None
    delta: float
    norm_g: float
    status: Status
    evals: int
    rho: float | None = None
    measure: float | None = None
    f: float | None = None
    samples: int | None = None


@dataclass
class SolveReport:
    x: np.ndarray
    delta: float
    f: float
    reason: Termination
    trace: list = field(default_factory=list)
    evals: int = 0
    algo: str = ""
    f_final: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.trace)


class BudgetExhausted(Exception):
    """Raised internally when the next evaluation would exceed the budget."""


class Evaluator:
    """Budgeted, optionally cached and feasibility-checked access to an oracle."""

    def __init__(self, oracle: ObjectiveOracle, max_evals: int, feasible: FeasibleSet | None = None,
                 cache: bool = True, residuals: bool = False):
        self.oracle = oracle
        self.max_evals = int(max_evals)
        self.start = oracle.eval_count
        self.feasible = None if isinstance(feasible, WholeSpace) else feasible
        self.cache: dict | None = {} if cache else None
        self.residuals = residuals
        self.best_f = np.inf
        self.best_x = None
        self.log: list[np.ndarray] = []

    @property
    def used(self) -> int:
        return self.oracle.eval_count - self.start

    def _reserve(self, k: int = 1):
        if self.used + k > self.max_evals:
            raise BudgetExhausted

    def _check(self, x):
        if self.feasible is not None and not self.feasible.contains(x):
            raise InfeasibleStart(f"refusing to evaluate infeasible point {x}")

    def _note(self, x, f):
        if f < self.best_f:
            self.best_f, self.best_x = f, x.copy()

    def __call__(self, x) -> float:
        return self.value(x)[0]

    def value(self, x):
        """``(f, residuals or None)`` at ``x``."""
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        if self.cache is not None and key in self.cache:
            return self.cache[key]
        self._check(x)
        self._reserve()
        self.log.append(x.copy())
        if self.residuals:
            r = self.oracle.evaluate_residuals(x)
            out = (0.5 * float(r @ r), r)
        else:
            out = (self.oracle.evaluate(x), None)
        self._note(x, out[0])
        if self.cache is not None:
            self.cache[key] = out
        return out

    def sample(self, x, n, rng):
        from ..noise import sample_average
        self._reserve(int(n))
        self.log.append(np.asarray(x, dtype=float).copy())
        est = sample_average(self.oracle, x, n, rng)
        self._note(np.asarray(x, dtype=float), est.mean)
        return est


def model_from_values(iset, values, residuals):
    """Build the model of ``iset`` from stored function values or residual vectors."""
    if iset.kind == ModelKind.COMPOSITE:
        return build_model(iset, np.array(residuals))
    return build_model(iset, np.array(values))


def trust_region_step(g, H, delta):
    """Cauchy point for linear models, exact step otherwise."""
    if not np.any(H):
        return cauchy_point(g, H, delta)
    return solve_trs_exact(g, H, delta)


def classify(rho, measure_ok, config: TrConfig, delta):
    """Three-way acceptance shared by the classical, first-order and constrained drivers."""
    if rho is not None and measure_ok and rho >= config.eta_s:
        return Status.VERY_SUCCESSFUL, config.gamma_inc * delta
    if rho is not None and measure_ok and rho >= config.eta_u:
        return Status.SUCCESSFUL, delta
    return Status.UNSUCCESSFUL, config.gamma_dec * delta


def ratio(actual, predicted):
    """Acceptance ratio; a zero predicted decrease gives ``None`` (treated as rejection)."""
    if not predicted > 0:
        return None
    return actual / predicted


def termination_check(delta_next: float, config: TrConfig, evals: int | None = None,
                      certified: bool = False, norm_g: float | None = None,
                      delta: float | None = None) -> Termination | None:
    """Termination reason after an iteration, or ``None`` to continue."""
    if delta_next < config.delta_min:
        return Termination.DELTA_MIN
    if evals is not None and evals >= config.max_evals:
        return Termination.MAX_EVALS
    if (certified and norm_g is not None and delta is not None and config.grad_tol > 0
            and norm_g <= config.grad_tol and norm_g >= config.mu_c * delta):
        return Termination.GRADIENT_TOL
    return None


def criticality_measure(g, x, feasible: FeasibleSet | None, tol: float = 1e-8,
                        max_iters: int = 60) -> float:
    """``|min g^T d|`` over feasible steps ``x + d`` with ``||d|| <= 1``.

    Projections of ``x - t g`` onto the feasible steps approach the minimizer as
    ``t`` doubles. The loop stops once the projected point no longer moves or
    successive values agree to ``tol`` relative to their size.
    """
    g = np.asarray(g, dtype=float)
    gnorm = float(np.linalg.norm(g))
    if feasible is None or isinstance(feasible, WholeSpace):
        return gnorm
    if gnorm == 0.0:
        return 0.0
    x = np.asarray(x, dtype=float)
    prev, y_prev = None, None
    t = 1.0 / gnorm
    for _ in range(max_iters):
        y = project_ball_intersection(feasible, x, 1.0, x - t * g)
        val = float(g @ (y - x))
        if prev is not None and (np.linalg.norm(y - y_prev) <= 1e-12
                                 or abs(val - prev) <= tol * abs(val)):
            return abs(min(val, 0.0))
        prev, y_prev = val, y
        t *= 2.0
    raise NonConvergence("criticality measure did not settle")


def check_start(x0, oracle: ObjectiveOracle, feasible: FeasibleSet | None = None) -> np.ndarray:
    x0 = as_point(x0, oracle.n, "x0")
    if feasible is not None and not feasible.contains(x0):
        raise InfeasibleStart("starting point is not feasible")
    return x0
