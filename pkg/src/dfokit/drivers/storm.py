"""Stochastic trust-region driver with sample-averaged models and estimates."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import ConfigError
from ..interp import InterpolationSet, ModelKind, build_model, stencil_for
from ..noise import MAX_SAMPLES, StreamFactory, required_samples
from ..problem_model import ObjectiveOracle, Stochastic
from .common import (BudgetExhausted, Evaluator, IterationRecord, SolveReport, Status, Termination,
                     check_start, ratio, termination_check, trust_region_step)
from .config import TrConfig

log = logging.getLogger(__name__)


def storm_sample_size(sigma, eps_f, alpha, delta) -> int:
    """Chebyshev sample size, with ``alpha = 1`` mapped to the cap when ``sigma > 0``."""
    if sigma == 0:
        return 1
    if alpha >= 1:
        log.warning("alpha = 1 requires unbounded samples; using %d", MAX_SAMPLES)
        return MAX_SAMPLES
    return required_samples(sigma, eps_f, alpha, delta)


def run_storm(oracle: ObjectiveOracle, x0, config: TrConfig | None = None,
              model_kind=ModelKind.LINEAR) -> SolveReport:
    """Stochastic trust-region method with probabilistically accurate models.

    Every model value is a sample average of
    ``required_samples(sigma, eps_f, alpha_m**(1/p), delta)`` draws and both
    ratio estimates use ``alpha_f**(1/2)``. Each average draws from its own
    stream ``SeedSequence([seed, counter])`` and no samples are shared. The radius
    moves by ``gamma_inc`` in both directions and is capped at
    ``gamma_inc**j_max * delta0``. ``max_evals`` counts individual samples.
    """
    config = TrConfig() if config is None else config
    kind = ModelKind(model_kind)
    if kind not in (ModelKind.LINEAR, ModelKind.MIN_FROBENIUS):
        raise ConfigError(f"stochastic driver supports Linear and MinFrobenius, not {kind.value}")
    sigma = config.sigma
    if sigma is None:
        sigma = oracle.mode.sigma if isinstance(oracle.mode, Stochastic) else 0.0
    eps_f = config.eps_f
    if sigma > 0 and eps_f <= 0:
        raise ConfigError("eps_f must be positive when sigma > 0")
    x = check_start(x0, oracle)
    n = x.size
    p = n + 1 if kind == ModelKind.LINEAR else 2 * n + 1
    alpha_point = config.alpha_m ** (1.0 / p)
    alpha_est = config.alpha_f ** 0.5
    delta_max = config.gamma_inc ** int(config.j_max) * config.delta0
    gamma = config.gamma_inc
    streams = StreamFactory(config.seed)
    ev = Evaluator(oracle, config.max_evals, cache=False)

    def estimate(y, N):
        _, rng = streams.next()
        return ev.sample(y, N, rng).mean

    trace: list[IterationRecord] = []
    delta = config.delta0
    reason = Termination.ITERATION_CAP
    fx_est = None
    try:
        for k in range(config.max_iters):
            used_before = ev.used
            N_m = storm_sample_size(sigma, eps_f, alpha_point, delta)
            iset = InterpolationSet(stencil_for(kind, x, delta), x, delta, kind)
            fvals = [estimate(y, N_m) for y in iset.points]
            model = build_model(iset, fvals)
            g, H = model.g, model.H
            ng = float(np.linalg.norm(g))
            rho = None
            x_old = x
            if ng < config.mu_c * delta:
                status, delta_next = Status.CRITICALITY_SKIP, delta / gamma
            else:
                step = trust_region_step(g, H, delta)
                if step.predicted_decrease > 0:
                    N_f = storm_sample_size(sigma, eps_f, alpha_est, delta)
                    f0 = estimate(x, N_f)
                    fs = estimate(x + step.s, N_f)
                    rho = ratio(f0 - fs, step.predicted_decrease)
                if rho is not None and rho >= config.eta_s:
                    status, delta_next = Status.SUCCESSFUL, min(gamma * delta, delta_max)
                    x = x + step.s
                    fx_est = fs
                else:
                    status, delta_next = Status.UNSUCCESSFUL, delta / gamma
            trace.append(IterationRecord(k, x_old, delta, ng, status, ev.used, rho=rho, f=fx_est,
                                         samples=ev.used - used_before))
            delta = delta_next
            stop = termination_check(delta, config, ev.used)
            if stop is not None:
                reason = stop
                break
    except BudgetExhausted:
        reason = Termination.MAX_EVALS
    return SolveReport(x, delta, ev.best_f, reason, trace, ev.used, "storm", f_final=fx_est)
