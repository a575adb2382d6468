"""Trust-region parameters with range validation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from ..errors import ConfigError
from ..trs import KAPPA_S_PROJECTED


@dataclass(frozen=True)
class TrConfig:
    """Parameters shared by all trust-region drivers.

    Attributes
    ----------
    gamma_dec, gamma_inc : float
        Radius shrink and growth factors, ``0 < gamma_dec < 1 < gamma_inc``.
    eta_u, eta_s : float
        Acceptance thresholds, ``0 < eta_u <= eta_s < 1``.
    mu_c : float
        Criticality threshold: steps are only accepted when the model
        criticality measure is at least ``mu_c * delta``.
    delta0, delta_max, delta_min : float
        Initial, maximal and terminal radii.
    max_evals, max_iters : int
        Evaluation budget (samples for the stochastic driver) and iteration cap.
    beta, lambda_threshold : float
        Distant-point factor and poisedness threshold for persistent sets.
    grad_tol : float
        Stop when a certified model has ``||g|| <= grad_tol``; 0 disables.
    r : float
        Acceptance tolerance for bounded noise, at least ``2 * eps_f``.
    eps_f, sigma : float
        Noise level for the noisy drivers; ``sigma`` overrides the oracle's.
    alpha_m, alpha_f : float
        Probabilities for accurate models and estimates, each in ``(1/2, 1]``.
    j_max : int
        The stochastic driver caps the radius at ``gamma_inc**j_max * delta0``.
    lipschitz : float
        Gradient Lipschitz constant assumed when computing model constants.
    hessian : str
        ``"exact"`` or ``"sr1"`` for the derivative-based baseline.
    """

    gamma_dec: float = 0.5
    gamma_inc: float = 2.0
    eta_u: float = 0.1
    eta_s: float = 0.7
    mu_c: float = 1.0
    delta0: float = 1.0
    delta_max: float = 1e3
    delta_min: float = 1e-8
    max_evals: int = 2000
    max_iters: int = 100_000
    beta: float = 2.0
    lambda_threshold: float = 10.0
    kappa_s: float = KAPPA_S_PROJECTED
    grad_tol: float = 0.0
    r: float = 0.0
    eps_f: float = 0.0
    sigma: float | None = None
    alpha_m: float = 0.9
    alpha_f: float = 0.9
    j_max: int = 10
    lipschitz: float = 1.0
    hessian: str = "exact"
    seed: int = 0

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        for name in ("gamma_dec", "gamma_inc", "eta_u", "eta_s", "mu_c", "delta0", "delta_max",
                     "delta_min", "beta", "lambda_threshold", "kappa_s", "grad_tol", "r", "eps_f",
                     "alpha_m", "alpha_f", "lipschitz"):
            v = getattr(self, name)
            need(isinstance(v, (int, float)) and math.isfinite(v), f"{name} must be a finite number")
        need(0 < self.gamma_dec < 1, "gamma_dec must lie in (0, 1)")
        need(self.gamma_inc > 1, "gamma_inc must exceed 1")
        need(0 < self.eta_u <= self.eta_s < 1, "thresholds need 0 < eta_u <= eta_s < 1")
        need(self.mu_c > 0, "mu_c must be positive")
        need(self.delta0 > 0, "delta0 must be positive")
        need(self.delta_max >= self.delta0, "delta_max must be at least delta0")
        need(self.delta_min >= 0, "delta_min must be nonnegative")
        need(int(self.max_evals) >= 1, "max_evals must be positive")
        need(int(self.max_iters) >= 1, "max_iters must be positive")
        need(self.beta > 1, "beta must exceed 1")
        need(self.lambda_threshold > 1, "lambda_threshold must exceed 1")
        need(0 < self.kappa_s < 1, "kappa_s must lie in (0, 1)")
        need(self.grad_tol >= 0, "grad_tol must be nonnegative")
        need(self.r >= 0, "r must be nonnegative")
        need(self.eps_f >= 0, "eps_f must be nonnegative")
        need(self.sigma is None or self.sigma >= 0, "sigma must be nonnegative")
        need(0.5 < self.alpha_m <= 1 and 0.5 < self.alpha_f <= 1, "alpha_m and alpha_f must lie in (1/2, 1]")
        need(self.alpha_m * self.alpha_f > 0.5, "alpha_m * alpha_f must exceed 1/2")
        need(int(self.j_max) >= 0, "j_max must be nonnegative")
        need(self.lipschitz > 0, "lipschitz must be positive")
        need(self.hessian in ("exact", "sr1"), "hessian must be 'exact' or 'sr1'")

    def replace(self, **changes) -> "TrConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, values: dict, base: "TrConfig | None" = None) -> "TrConfig":
        """Build from string or typed values, coercing to the declared field types."""
        base = cls() if base is None else base
        known = {f.name: f for f in dataclasses.fields(cls)}
        out = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}; valid keys: {', '.join(known)}")
            default = getattr(base, key)
            try:
                if key == "hessian":
                    out[key] = str(raw)
                elif key == "sigma":
                    out[key] = None if raw in (None, "", "none", "None") else float(raw)
                elif isinstance(default, int) and not isinstance(default, bool):
                    out[key] = int(float(raw)) if isinstance(raw, str) else int(raw)
                else:
                    out[key] = float(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r} has invalid value {raw!r}") from exc
        return dataclasses.replace(base, **out)
