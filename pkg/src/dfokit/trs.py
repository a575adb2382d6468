"""Trust-region subproblem solvers.

All solvers minimise ``g^T s + 0.5 s^T H s`` subject to ``||s|| <= delta``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .errors import (DimensionMismatch, FactorizationFailure, LineSearchFailure,
                     MaxItersExceeded, NoNegativeCurvature, NonFiniteInput)
from .problem_model import FeasibleSet, project_ball_intersection

KAPPA_S = 0.25
KAPPA_S_PROJECTED = 0.1


class TrsStatus(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    HARD_CASE = "HardCase"
    NEGATIVE_CURVATURE_EXIT = "NegativeCurvatureExit"
    BOUNDARY_EXIT = "BoundaryExit"
    CONVERGED = "Converged"


@dataclass
class TrsSolution:
    s: np.ndarray
    predicted_decrease: float
    lam: float | None
    status: TrsStatus


def model_change(g: np.ndarray, H: np.ndarray, s: np.ndarray) -> float:
    """Value of ``g^T s + 0.5 s^T H s``."""
    return float(g @ s + 0.5 * s @ (H @ s))


def _check(g, H, delta):
    g = np.asarray(g, dtype=float).reshape(-1)
    H = np.asarray(H, dtype=float)
    n = g.shape[0]
    if H.shape != (n, n):
        raise DimensionMismatch(f"H has shape {H.shape}, expected {(n, n)}")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        raise NonFiniteInput("g or H has non-finite entries")
    if not delta > 0:
        raise ValueError("trust-region radius must be positive")
    return g, 0.5 * (H + H.T), float(delta)


def _solution(g, H, s, lam, status) -> TrsSolution:
    dec = -model_change(g, H, s)
    return TrsSolution(s=s, predicted_decrease=max(dec, 0.0), lam=lam, status=status)


def cauchy_point(g, H, delta) -> TrsSolution:
    """Minimiser of the model along ``-g`` inside the ball.

    The step length is the exact one-dimensional minimiser
    ``t = ||g||^2 / g^T H g`` when the curvature is positive, clipped to the
    boundary ``delta / ||g||``.
    """
    g, H, delta = _check(g, H, delta)
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return TrsSolution(np.zeros_like(g), 0.0, None, TrsStatus.INTERIOR)
    t_max = delta / gnorm
    curv = float(g @ H @ g)
    if curv > 0 and gnorm**2 / curv < t_max:
        t = gnorm**2 / curv
        status = TrsStatus.INTERIOR
    else:
        t = t_max
        status = TrsStatus.BOUNDARY
    return _solution(g, H, -t * g, None, status)


def _try_cholesky(A):
    try:
        return cho_factor(A, lower=False, check_finite=False)
    except (LinAlgError, ValueError):
        return None


def solve_trs_exact(g, H, delta, tol: float = 1e-10, max_iters: int = 200) -> TrsSolution:
    """Globally optimal trust-region step.

    Safeguarded Newton iteration on ``1/||s(lam)|| - 1/delta`` with Cholesky
    factorizations of ``H + lam I``; the hard case is completed with a
    minimum-eigenvector component.
    """
    g, H, delta = _check(g, H, delta)
    n = g.shape[0]
    evals, evecs = np.linalg.eigh(H)
    lam_min = float(evals[0])
    hnorm = float(np.max(np.abs(evals)))
    gnorm = float(np.linalg.norm(g))
    scale = max(1.0, hnorm)

    if lam_min > 0:
        fac = _try_cholesky(H)
        if fac is not None:
            s = -cho_solve(fac, g)
            if np.linalg.norm(s) <= delta:
                return _solution(g, H, s, 0.0, TrsStatus.INTERIOR)

    lam_lo = max(0.0, -lam_min)
    lam_hi = gnorm / delta + hnorm + scale * 1e-12

    # hard-case detection at the left end of the bracket
    if lam_min <= 0:
        shift = lam_lo + 1e-12 * scale
        s_probe = _eig_step(g, evals, evecs, shift)
        if np.linalg.norm(s_probe) < delta:
            return _hard_case(g, H, delta, evals, evecs, lam_lo)
        lam = shift
    else:
        lam = 0.0

    fac = None
    for _ in range(60):
        fac = _try_cholesky(H + lam * np.eye(n))
        if fac is not None:
            break
        lam = max(lam * 2.0, lam + 1e-12 * scale)
    if fac is None:
        raise FactorizationFailure("H + lam I could not be factorized")

    for _ in range(max_iters):
        s = -cho_solve(fac, g)
        snorm = float(np.linalg.norm(s))
        if abs(snorm - delta) <= tol * delta:
            break
        if snorm < delta:
            lam_hi = min(lam_hi, lam)
        else:
            lam_lo = max(lam_lo, lam)
        R = fac[0]
        w = solve_triangular(R, s, trans="T", lower=False, check_finite=False)
        wn2 = float(w @ w)
        lam_new = lam + (snorm / delta - 1.0) * snorm**2 / wn2 if wn2 > 0 else lam_hi
        if not (lam_lo < lam_new < lam_hi):
            lam_new = 0.5 * (lam_lo + lam_hi)
        if lam_new == lam:
            break
        lam = lam_new
        fac = _try_cholesky(H + lam * np.eye(n))
        if fac is None:
            # landed at or below -lam_min through rounding; move right
            lam_lo = lam
            lam = 0.5 * (lam_lo + lam_hi)
            fac = _try_cholesky(H + lam * np.eye(n))
            if fac is None:
                raise FactorizationFailure("H + lam I lost definiteness inside the bracket")
    s = -cho_solve(fac, g)
    snorm = float(np.linalg.norm(s))
    if snorm > delta:
        s *= delta / snorm
    return _solution(g, H, s, float(lam), TrsStatus.BOUNDARY)


def _eig_step(g, evals, evecs, lam):
    coef = evecs.T @ g
    return -evecs @ (coef / (evals + lam))


def _hard_case(g, H, delta, evals, evecs, lam):
    tol = 1e-10 * max(1.0, float(np.max(np.abs(evals))))
    coef = evecs.T @ g
    shifted = evals + lam
    keep = shifted > tol
    s = -evecs[:, keep] @ (coef[keep] / shifted[keep])
    u = evecs[:, 0]
    # solve ||s + tau u|| = delta for the root of smaller magnitude
    su = float(s @ u)
    rem = delta**2 - float(s @ s)
    tau = -su + np.sign(su if su != 0 else 1.0) * np.sqrt(su**2 + max(rem, 0.0))
    s = s + tau * u
    return _solution(g, H, s, float(lam), TrsStatus.HARD_CASE)


def steihaug_toint(g, H_apply: Callable[[np.ndarray], np.ndarray] | np.ndarray, delta,
                   tol: float = 1e-10, max_iters: int | None = None) -> TrsSolution:
    """Truncated conjugate gradient for the trust-region subproblem.

    ``H_apply`` is either a symmetric matrix or a Hessian-vector product.
    Raises :class:`MaxItersExceeded` carrying the best iterate if the budget runs out.
    """
    g = np.asarray(g, dtype=float).reshape(-1)
    if not delta > 0:
        raise ValueError("trust-region radius must be positive")
    if callable(H_apply):
        hv = H_apply
    else:
        Hm = np.asarray(H_apply, dtype=float)
        if Hm.shape != (g.size, g.size):
            raise DimensionMismatch("H does not match g")
        hv = lambda v: Hm @ v  # noqa: E731
    n = g.size
    max_iters = n if max_iters is None else max_iters

    def pack(s, status):
        dec = -(float(g @ s) + 0.5 * float(s @ hv(s)))
        return TrsSolution(s=s, predicted_decrease=max(dec, 0.0), lam=None, status=status)

    s = np.zeros(n)
    r = g.copy()
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return pack(s, TrsStatus.CONVERGED)
    p = -r
    for _ in range(max_iters):
        Hp = hv(p)
        curv = float(p @ Hp)
        if curv <= 0:
            tau = _to_boundary(s, p, delta)
            return pack(s + tau * p, TrsStatus.NEGATIVE_CURVATURE_EXIT)
        rr = float(r @ r)
        alpha = rr / curv
        s_next = s + alpha * p
        if np.linalg.norm(s_next) >= delta:
            tau = _to_boundary(s, p, delta)
            return pack(s + tau * p, TrsStatus.BOUNDARY_EXIT)
        s = s_next
        r = r + alpha * Hp
        if np.linalg.norm(r) <= tol * gnorm:
            return pack(s, TrsStatus.CONVERGED)
        p = -r + (float(r @ r) / rr) * p
    raise MaxItersExceeded("truncated CG iteration limit reached", solution=pack(s, TrsStatus.CONVERGED))


def _to_boundary(s, p, delta):
    """Positive tau with ||s + tau p|| = delta."""
    a = float(p @ p)
    b = 2.0 * float(s @ p)
    c = float(s @ s) - delta**2
    disc = np.sqrt(max(b * b - 4 * a * c, 0.0))
    # numerically stable positive root
    if b >= 0:
        return (-2.0 * c) / (b + disc) if (b + disc) > 0 else 0.0
    return (-b + disc) / (2.0 * a)


def eigenstep(g, H, delta, tol_eig: float = 1e-12) -> TrsSolution:
    """Boundary step along a minimum-eigenvalue eigenvector, signed so that ``u^T g <= 0``."""
    g, H, delta = _check(g, H, delta)
    evals, evecs = np.linalg.eigh(H)
    if evals[0] >= -tol_eig:
        raise NoNegativeCurvature(f"lambda_min = {evals[0]:.3e} is not negative")
    u = evecs[:, 0]
    if float(u @ g) > 0:
        u = -u
    return _solution(g, H, delta * u, None, TrsStatus.BOUNDARY)


def solve_trs_secondorder(g, H, delta) -> TrsSolution:
    """Best of the Cauchy point, the eigenstep and the exact solution."""
    g, H, delta = _check(g, H, delta)
    candidates = [cauchy_point(g, H, delta)]
    try:
        candidates.append(eigenstep(g, H, delta))
    except NoNegativeCurvature:
        pass
    try:
        candidates.append(solve_trs_exact(g, H, delta))
    except FactorizationFailure:
        pass
    return max(candidates, key=lambda c: c.predicted_decrease)


def projected_gradient_cauchy(g, H, delta, x, feasible: FeasibleSet, pi_m: float,
                              kappa_s: float = KAPPA_S_PROJECTED, shrink: float = 0.5,
                              max_steps: int = 60) -> TrsSolution:
    """Search along the projected-gradient path inside the trust region.

    Steps are ``P(x - t g) - x`` with ``P`` the projection onto the feasible set
    intersected with ``B(x, delta)``. Starting from ``t0 = delta / ||g||``, ``t``
    doubles while the step stays inside the ball and the model keeps
    decreasing (the path can be shorter than ``delta`` along an active
    constraint), and is otherwise cut by ``shrink`` until the decrease reaches
    ``kappa_s * pi_m * min(delta, pi_m / (||H|| + 1), 1)``.
    """
    g, H, delta = _check(g, H, delta)
    x = np.asarray(x, dtype=float)
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0 or pi_m <= 0.0:
        return TrsSolution(np.zeros_like(g), 0.0, None, TrsStatus.INTERIOR)
    hnorm = float(np.linalg.norm(H, 2))
    target = kappa_s * pi_m * min(delta, pi_m / (hnorm + 1.0), 1.0)

    def trial(t):
        s = project_ball_intersection(feasible, x, delta, x - t * g) - x
        return s, -model_change(g, H, s)

    def done(s, dec):
        status = TrsStatus.BOUNDARY if np.linalg.norm(s) >= delta * (1 - 1e-12) else TrsStatus.INTERIOR
        return TrsSolution(s=s, predicted_decrease=dec, lam=None, status=status)

    t0 = delta / gnorm
    s, dec = trial(t0)
    best = (s, dec)
    t = t0
    for _ in range(max_steps):
        if np.linalg.norm(best[0]) >= delta * (1 - 1e-12):
            break
        t *= 2.0
        s, dec = trial(t)
        if dec <= best[1] * (1 + 1e-12):
            break
        best = (s, dec)
    if best[1] >= target:
        return done(*best)
    t = t0
    for _ in range(max_steps):
        t *= shrink
        s, dec = trial(t)
        if dec >= target:
            return done(s, dec)
    raise LineSearchFailure("no projected-gradient step met the decrease requirement")
