"""Drivers that keep one interpolation set across iterations."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DfoError
from ..geometry import (lagrange_maximizer, det_update_check, estimate_poisedness,
                        improve_geometry, lagrange_basis, lambda_at, replacement_index)
from ..interp import InterpolationSet, ModelKind, n_quadratic, quadratic_stencil, stencil_for
from ..problem_model import ObjectiveOracle
from .common import (BudgetExhausted, Evaluator, IterationRecord, SolveReport, Status, Termination,
                     check_start, model_from_values, ratio, termination_check, trust_region_step)
from .config import TrConfig


class _PointStore:
    """Interpolation points with their stored values and the index of the iterate."""

    def __init__(self, points, ev: Evaluator, kind: ModelKind, base: int = 0):
        self.points = np.array(points, dtype=float)
        self.kind = kind
        self.ev = ev
        vals = [ev.value(y) for y in self.points]
        self.f = [v[0] for v in vals]
        self.r = [v[1] for v in vals]
        self.base = base

    @property
    def x(self) -> np.ndarray:
        return self.points[self.base]

    @property
    def fx(self) -> float:
        return self.f[self.base]

    def iset(self, delta) -> InterpolationSet:
        return InterpolationSet(self.points, self.x, delta, self.kind)

    def replace(self, i, y, value=None):
        y = np.asarray(y, dtype=float)
        f, r = self.ev.value(y) if value is None else value
        self.points[i] = y
        self.f[i] = f
        self.r[i] = r

    def model(self, delta):
        return model_from_values(self.iset(delta), self.f, self.r)

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.points - self.x, axis=1)


def _initial_points(kind: ModelKind, x0, delta0, n_points: int | None):
    n = x0.size
    if kind == ModelKind.MIN_FROBENIUS:
        p = 2 * n + 1 if n_points is None else int(n_points)
        if not n + 2 <= p <= n_quadratic(n):
            raise ConfigError(f"min-Frobenius sets need {n + 2}..{n_quadratic(n)} points, got {p}")
        return quadratic_stencil(x0, delta0)[:p]
    if kind == ModelKind.LINEAR:
        if n_points not in (None, n + 1):
            raise ConfigError(f"linear sets have exactly {n + 1} points")
        return stencil_for(kind, x0, delta0)
    raise ConfigError(f"persistent-set drivers support Linear and MinFrobenius, not {kind.value}")


def _certified(store: _PointStore, delta, config: TrConfig, basis=None) -> bool:
    if np.max(store.distances()) > config.beta * delta:
        return False
    basis = lagrange_basis(store.iset(delta)) if basis is None else basis
    rep = estimate_poisedness(basis, store.x, delta, exclude=[store.base])
    return rep.lambda_inf <= config.lambda_threshold


def _replace_checked(store: _PointStore, basis, i, y, value=None):
    if det_update_check(basis, i, y) <= 0.0:
        raise DfoError("replacement would make the interpolation system singular")
    store.replace(i, y, value)


def _make_certified(store: _PointStore, delta, config: TrConfig):
    """Pull in distant points, then swap until the non-base poisedness meets the threshold."""
    for _ in range(store.points.shape[0]):
        dist = store.distances()
        i = int(np.argmax(dist))
        if dist[i] <= config.beta * delta:
            break
        basis = lagrange_basis(store.iset(delta))
        _, y = lagrange_maximizer(basis.polys[i], store.x, delta)
        _replace_checked(store, basis, i, y)
    res = improve_geometry(store.iset(delta), config.lambda_threshold, exclude=[store.base])
    for i in res.changed:
        store.replace(i, res.iset.points[i])


def run_ibo_inaccurate(oracle: ObjectiveOracle, x0, config: TrConfig | None = None,
                       model_kind=ModelKind.LINEAR, n_points: int | None = None) -> SolveReport:
    """Persistent interpolation set; geometry is repaired only after a rejected step.

    A rejected step with an uncertified model triggers a model-improving
    iteration that keeps the radius. The model is certified when every point
    lies within ``beta * delta`` and the non-base poisedness is at most
    ``lambda_threshold``.
    """
    config = TrConfig() if config is None else config
    kind = ModelKind(model_kind)
    x0 = check_start(x0, oracle)
    ev = Evaluator(oracle, config.max_evals)
    trace: list[IterationRecord] = []
    delta = config.delta0
    reason = Termination.ITERATION_CAP
    store = None
    try:
        store = _PointStore(_initial_points(kind, x0, delta, n_points), ev, kind)
        for k in range(config.max_iters):
            basis = lagrange_basis(store.iset(delta))
            model = store.model(delta)
            g, H = model.g, model.H
            ng = float(np.linalg.norm(g))
            crit_ok = ng >= config.mu_c * delta
            rho, trial = None, None
            x_old, fx_old = store.x.copy(), store.fx
            if crit_ok:
                step = trust_region_step(g, H, delta)
                if step.predicted_decrease > 0:
                    y = x_old + step.s
                    trial = (y, ev.value(y))
                    rho = ratio(fx_old - trial[1][0], step.predicted_decrease)
            certified = None
            if crit_ok and rho is not None and rho >= config.eta_u:
                if rho >= config.eta_s:
                    status, delta_next = Status.VERY_SUCCESSFUL, config.gamma_inc * delta
                else:
                    status, delta_next = Status.SUCCESSFUL, delta
                i = replacement_index(basis, trial[0])
                _replace_checked(store, basis, i, trial[0], trial[1])
                store.base = i
            else:
                certified = _certified(store, delta, config, basis)
                if not certified:
                    status, delta_next = Status.MODEL_IMPROVING, delta
                elif trial is None:
                    status, delta_next = Status.CRITICALITY_SKIP, config.gamma_dec * delta
                else:
                    status, delta_next = Status.UNSUCCESSFUL, config.gamma_dec * delta
                if trial is not None:
                    # keep the evaluated trial point when it is closer than the point it displaces
                    i = replacement_index(basis, trial[0], exclude=[store.base])
                    if (np.linalg.norm(store.points[i] - x_old) > np.linalg.norm(trial[0] - x_old)
                            and abs(lambda_at(basis, trial[0])[i]) > 1e-10):
                        _replace_checked(store, basis, i, trial[0], trial[1])
                if status == Status.MODEL_IMPROVING:
                    _make_certified(store, delta, config)
            trace.append(IterationRecord(k, x_old, delta, ng, status, ev.used, rho=rho, f=store.fx))
            old_delta, delta = delta, delta_next
            stop = termination_check(delta, config, ev.used, certified=bool(certified) and crit_ok,
                                     norm_g=ng, delta=old_delta)
            if stop is not None:
                reason = stop
                break
    except BudgetExhausted:
        reason = Termination.MAX_EVALS
    x = store.x.copy() if store is not None else x0
    return SolveReport(x, delta, ev.best_f, reason, trace, ev.used, "inaccurate",
                       f_final=store.fx if store is not None else None)


def run_self_correcting(oracle: ObjectiveOracle, x0, config: TrConfig | None = None,
                        model_kind=ModelKind.LINEAR, n_points: int | None = None) -> SolveReport:
    """Self-correcting geometry: repair distant or bad points before shrinking the radius.

    The step is evaluated at every iteration. Rejected steps lead to, in order,
    replacing the farthest point beyond ``beta * delta``, replacing the point
    whose Lagrange polynomial exceeds ``lambda_threshold`` (the iterate itself
    is never replaced), or shrinking the radius with the set unchanged.
    """
    config = TrConfig() if config is None else config
    kind = ModelKind(model_kind)
    x0 = check_start(x0, oracle)
    ev = Evaluator(oracle, config.max_evals)
    trace: list[IterationRecord] = []
    delta = config.delta0
    reason = Termination.ITERATION_CAP
    store = None
    try:
        store = _PointStore(_initial_points(kind, x0, delta, n_points), ev, kind)
        for k in range(config.max_iters):
            basis = lagrange_basis(store.iset(delta))
            model = store.model(delta)
            g, H = model.g, model.H
            ng = float(np.linalg.norm(g))
            x_old, fx_old = store.x.copy(), store.fx
            step = trust_region_step(g, H, delta)
            rho, trial = None, None
            if step.predicted_decrease > 0:
                y = x_old + step.s
                trial = (y, ev.value(y))
                rho = ratio(fx_old - trial[1][0], step.predicted_decrease)
            dist = store.distances()
            certified = False
            if rho is not None and rho >= config.eta_u and ng >= config.mu_c * delta:
                if rho >= config.eta_s:
                    status, delta_next = Status.VERY_SUCCESSFUL, config.gamma_inc * delta
                else:
                    status, delta_next = Status.SUCCESSFUL, delta
                i = replacement_index(basis, trial[0])
                _replace_checked(store, basis, i, trial[0], trial[1])
                store.base = i
            elif np.max(dist) > config.beta * delta:
                status, delta_next = Status.REPLACE_DISTANT, delta
                i = int(np.argmax(dist))
                _, y_new = lagrange_maximizer(basis.polys[i], x_old, delta)
                _replace_checked(store, basis, i, y_new)
            else:
                rep = estimate_poisedness(basis, x_old, delta, exclude=[store.base])
                if rep.lambda_inf > config.lambda_threshold:
                    status, delta_next = Status.REPLACE_BAD, delta
                    _replace_checked(store, basis, rep.index, rep.witness)
                else:
                    status, delta_next = Status.UNSUCCESSFUL, config.gamma_dec * delta
                    certified = True
            trace.append(IterationRecord(k, x_old, delta, ng, status, ev.used, rho=rho, f=store.fx))
            old_delta, delta = delta, delta_next
            stop = termination_check(delta, config, ev.used, certified=certified, norm_g=ng, delta=old_delta)
            if stop is not None:
                reason = stop
                break
    except BudgetExhausted:
        reason = Termination.MAX_EVALS
    x = store.x.copy() if store is not None else x0
    return SolveReport(x, delta, ev.best_f, reason, trace, ev.used, "self-correcting",
                       f_final=store.fx if store is not None else None)
