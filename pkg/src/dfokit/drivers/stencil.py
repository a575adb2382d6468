"""Drivers that rebuild the model from a fresh stencil at every iteration."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..geometry import improve_geometry, init_feasible_set
from ..interp import (InterpolationSet, ModelKind, fully_linear_constants, n_quadratic,
                     quadratic_stencil, stencil_for)
from ..problem_model import BoundedDeterministic, FeasibleSet, ObjectiveOracle, WholeSpace
from ..trs import projected_gradient_cauchy, solve_trs_exact, solve_trs_secondorder
from .common import (BudgetExhausted, Evaluator, IterationRecord, SolveReport, Status, Termination,
                     check_start, classify, criticality_measure, model_from_values, ratio,
                     termination_check, trust_region_step)
from .config import TrConfig


def run_classical_tr(oracle: ObjectiveOracle, x0, config: TrConfig | None = None) -> SolveReport:
    """Derivative-based trust-region baseline.

    Uses the oracle's gradient and either its Hessian or a symmetric rank-one
    approximation, and stops as soon as ``||grad f|| <= grad_tol``.
    """
    config = TrConfig() if config is None else config
    if oracle.gradient is None:
        raise ConfigError("the classical baseline needs a gradient callback")
    use_exact = config.hessian == "exact"
    if use_exact and oracle.hessian is None:
        raise ConfigError("hessian='exact' needs a Hessian callback")
    x = check_start(x0, oracle)
    n = x.size
    ev = Evaluator(oracle, config.max_evals)
    trace: list[IterationRecord] = []
    delta = config.delta0
    fx = None
    reason = Termination.ITERATION_CAP
    try:
        fx = ev(x)
        g = np.asarray(oracle.gradient(x), dtype=float)
        H = np.asarray(oracle.hessian(x), dtype=float) if use_exact else np.eye(n)
        for k in range(config.max_iters):
            ng = float(np.linalg.norm(g))
            if ng <= config.grad_tol:
                reason = Termination.GRADIENT_TOL
                break
            step = solve_trs_exact(g, H, delta)
            x_trial = x + step.s
            f_trial = ev(x_trial)
            rho = ratio(fx - f_trial, step.predicted_decrease)
            status, delta_next = classify(rho, True, config, delta)
            x_old = x
            if status != Status.UNSUCCESSFUL:
                g_new = np.asarray(oracle.gradient(x_trial), dtype=float)
                if use_exact:
                    H = np.asarray(oracle.hessian(x_trial), dtype=float)
                else:
                    H = _sr1(H, step.s, g_new - g)
                x, fx, g = x_trial, f_trial, g_new
            elif not use_exact:
                H = _sr1(H, step.s, np.asarray(oracle.gradient(x_trial), dtype=float) - g)
            trace.append(IterationRecord(k, x_old, delta, ng, status, ev.used, rho=rho, f=fx))
            delta = delta_next
            stop = termination_check(delta, config, ev.used)
            if stop is not None:
                reason = stop
                break
    except BudgetExhausted:
        reason = Termination.MAX_EVALS
    return SolveReport(x, delta, ev.best_f, reason, trace, ev.used, "classical", f_final=fx)


def _sr1(H, s, y):
    r = y - H @ s
    denom = float(s @ r)
    if abs(denom) < 1e-8 * np.linalg.norm(s) * np.linalg.norm(r) or denom == 0.0:
        return H
    return H + np.outer(r, r) / denom


def _second_order_measure(g, H):
    tau = max(-float(np.linalg.eigvalsh(H)[0]), 0.0)
    return max(float(np.linalg.norm(g)), tau)


def _stencil_points(kind, x, rad, n_points):
    if kind == ModelKind.MIN_FROBENIUS and n_points is not None:
        n = x.size
        if not n + 2 <= n_points <= n_quadratic(n):
            raise ConfigError(f"min-Frobenius stencils need {n + 2}..{n_quadratic(n)} points, got {n_points}")
        return quadratic_stencil(x, rad)[:n_points]
    return stencil_for(kind, x, rad)


def _stencil_driver(algo, oracle, x0, config, kind, feasible=None, noise_floor=0.0, r=0.0, n_points=None):
    kind = ModelKind(kind)
    x = check_start(x0, oracle, feasible)
    constrained = feasible is not None and not isinstance(feasible, WholeSpace)
    ev = Evaluator(oracle, config.max_evals, feasible, residuals=kind == ModelKind.COMPOSITE)
    trace: list[IterationRecord] = []
    delta = config.delta0
    reason = Termination.ITERATION_CAP
    fx = None
    try:
        fx = ev(x)
        for k in range(config.max_iters):
            rad = max(delta, noise_floor)
            if feasible is None:
                iset = InterpolationSet(_stencil_points(kind, x, rad, n_points), x, rad, kind)
            else:
                iset = init_feasible_set(x, rad, kind, feasible)
                if constrained:
                    iset = improve_geometry(iset, config.lambda_threshold, x, iset.delta, feasible).iset
            vals = [ev.value(y) for y in iset.points]
            model = model_from_values(iset, [v[0] for v in vals], [v[1] for v in vals])
            g, H = model.g, model.H
            ng = float(np.linalg.norm(g))
            if algo == "second-order":
                measure = _second_order_measure(g, H)
            elif constrained:
                measure = criticality_measure(g, x, feasible)
            else:
                measure = ng
            rho = None
            x_old = x
            if measure < config.mu_c * delta:
                status, delta_next = Status.CRITICALITY_SKIP, config.gamma_dec * delta
            else:
                if algo == "second-order":
                    step = solve_trs_secondorder(g, H, delta)
                elif constrained:
                    step = projected_gradient_cauchy(g, H, delta, x, feasible, measure, config.kappa_s)
                else:
                    step = trust_region_step(g, H, delta)
                if step.predicted_decrease > 0:
                    x_trial = x + step.s
                    f_trial = ev(x_trial)
                    rho = ratio(fx - f_trial + r, step.predicted_decrease)
                if algo == "noisy":
                    if rho is not None and rho >= config.eta_s:
                        status, delta_next = Status.SUCCESSFUL, config.gamma_inc * delta
                    else:
                        status, delta_next = Status.UNSUCCESSFUL, config.gamma_dec * delta
                else:
                    status, delta_next = classify(rho, True, config, delta)
                if algo == "second-order":
                    delta_next = min(delta_next, config.delta_max)
                if status in (Status.VERY_SUCCESSFUL, Status.SUCCESSFUL):
                    x, fx = x_trial, f_trial
            trace.append(IterationRecord(k, x_old, delta, ng, status, ev.used, rho=rho,
                                         measure=measure if algo in ("second-order", "constrained") else None,
                                         f=fx))
            old_delta, delta = delta, delta_next
            stop = termination_check(delta, config, ev.used, certified=True, norm_g=ng, delta=old_delta)
            if stop is not None:
                reason = stop
                break
    except BudgetExhausted:
        reason = Termination.MAX_EVALS
    return SolveReport(x, delta, ev.best_f, reason, trace, ev.used, algo, f_final=fx)


def run_ibo_first_order(oracle: ObjectiveOracle, x0, config: TrConfig | None = None,
                        model_kind=ModelKind.LINEAR, n_points: int | None = None) -> SolveReport:
    """Model rebuilt on the canonical stencil of radius ``delta_k`` every iteration.

    For minimum Frobenius models ``n_points`` selects the first ``n_points``
    points of the structured quadratic stencil instead of the 2n+1 point
    plus/minus stencil.
    """
    config = TrConfig() if config is None else config
    kind = ModelKind(model_kind)
    if kind not in (ModelKind.LINEAR, ModelKind.MIN_FROBENIUS, ModelKind.COMPOSITE):
        raise ConfigError(f"first-order driver supports Linear, MinFrobenius, Composite, not {kind.value}")
    if kind == ModelKind.COMPOSITE and oracle.residual is None:
        raise ConfigError("composite models need a residual oracle")
    return _stencil_driver("first-order", oracle, x0, config, kind, n_points=n_points)


def run_ibo_second_order(oracle: ObjectiveOracle, x0, config: TrConfig | None = None) -> SolveReport:
    """Fully quadratic models on the structured stencil with second-order steps."""
    config = TrConfig() if config is None else config
    return _stencil_driver("second-order", oracle, x0, config, ModelKind.FULL_QUADRATIC)


def run_convex_constrained(oracle: ObjectiveOracle, x0, feasible: FeasibleSet,
                           config: TrConfig | None = None, model_kind=ModelKind.LINEAR) -> SolveReport:
    """Feasible interpolation sets, projected-gradient steps and the constrained criticality measure."""
    config = TrConfig() if config is None else config
    kind = ModelKind(model_kind)
    if kind not in (ModelKind.LINEAR, ModelKind.MIN_FROBENIUS):
        raise ConfigError(f"constrained driver supports Linear and MinFrobenius, not {kind.value}")
    return _stencil_driver("constrained", oracle, x0, config, kind, feasible=feasible)


def noise_radius_floor(n: int, eps_f: float, lipschitz: float = 1.0) -> float:
    """Interpolation radius balancing the smoothness and noise parts of the gradient error.

    The gradient error is at most ``kappa_mg * D + kappa_noise * eps_f / D`` for
    stencil radius ``D``; its minimizer is ``sqrt(kappa_noise * eps_f / kappa_mg)``.
    """
    if eps_f == 0:
        return 0.0
    x = np.zeros(n)
    c = fully_linear_constants(InterpolationSet(stencil_for(ModelKind.LINEAR, x, 1.0), x, 1.0), lipschitz)
    return float(np.sqrt(c.noise_kappa_mg * eps_f / c.kappa_mg))


def run_noisy_deterministic(oracle: ObjectiveOracle, x0, config: TrConfig | None = None) -> SolveReport:
    """Bounded-noise driver with acceptance tolerance ``r`` and an interpolation radius floor."""
    config = TrConfig() if config is None else config
    eps_f = config.eps_f
    if isinstance(oracle.mode, BoundedDeterministic) and eps_f == 0:
        eps_f = oracle.mode.eps_f
    if config.r < 2 * eps_f:
        raise ConfigError(f"acceptance tolerance r={config.r} is below 2*eps_f={2 * eps_f}")
    floor = noise_radius_floor(oracle.n, eps_f, config.lipschitz)
    return _stencil_driver("noisy", oracle, x0, config, ModelKind.LINEAR, noise_floor=floor, r=config.r)
