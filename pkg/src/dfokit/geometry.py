"""Lagrange polynomials, poisedness estimates and geometry management."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._sampling import ball_samples
from .errors import DfoError, IterationCap, NoFeasibleReplacement
from .interp import (InterpolationSet, ModelKind, QuadraticModel,
                     build_system, frobenius_matrix, linear_matrix, natural_basis, regression_system,
                     stencil_for, unpack_hessian)
from .problem_model import Ball, FeasibleSet, WholeSpace, project_ball_intersection
from .trs import solve_trs_exact

N_SAMPLES_UNCONSTRAINED = 1000
N_SAMPLES_CONSTRAINED = 10_000
LAMBDA_ZERO_TOL = 1e-10


def _is_unconstrained(feasible) -> bool:
    return feasible is None or isinstance(feasible, WholeSpace)


@dataclass
class LagrangeBasis:
    """Lagrange polynomials of an interpolation set.

    ``polys[i]`` is the model of the i-th unit vector of values, built from
    the i-th column of the inverse interpolation matrix; ``system`` keeps the
    factorization for evaluating all polynomials at once.
    """

    iset: InterpolationSet
    system: object
    polys: list

    @property
    def p(self) -> int:
        return self.iset.p

    @property
    def kind(self) -> ModelKind:
        return self.iset.kind

    def values(self, Y) -> np.ndarray:
        """Matrix of ``l_i(y)`` with one row per point of ``Y``."""
        return lambda_at_many(self, Y)


def lagrange_basis(iset: InterpolationSet) -> LagrangeBasis:
    kind = iset.kind
    system = regression_system(iset) if kind == ModelKind.REGRESSION else build_system(iset)
    n, p, d = iset.n, iset.p, iset.delta
    base = iset.base
    zero = np.zeros((n, n))
    polys = []
    if kind == ModelKind.REGRESSION:
        coef = system.pinv
        for i in range(p):
            polys.append(QuadraticModel(base, coef[0, i], coef[1:, i] / d, zero, kind))
    else:
        inv = system.inverse
        S = iset.scaled
        for i in range(p):
            col = inv[:, i]
            if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE):
                polys.append(QuadraticModel(base, col[0], col[1:] / d, zero, kind))
            elif kind == ModelKind.FULL_QUADRATIC:
                polys.append(QuadraticModel(base, col[0], col[1:n + 1] / d,
                                            unpack_hessian(col[n + 1:], n) / d**2, kind))
            else:
                lam = col[:p]
                H_hat = (S.T * lam) @ S
                polys.append(QuadraticModel(base, col[p], col[p + 1:] / d, H_hat / d**2, kind))
    return LagrangeBasis(iset, system, polys)


def _rhs(iset: InterpolationSet, Y) -> np.ndarray:
    """Right-hand sides whose transposed solve gives ``lambda(y)``, one row per y."""
    S = (np.atleast_2d(np.asarray(Y, dtype=float)) - iset.base) / iset.delta
    kind = iset.kind
    if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE, ModelKind.REGRESSION):
        return linear_matrix(S)
    if kind == ModelKind.FULL_QUADRATIC:
        return natural_basis(S)
    P = 0.5 * (S @ iset.scaled.T) ** 2
    return np.hstack([P, linear_matrix(S)])


def lambda_at(basis: LagrangeBasis, y) -> np.ndarray:
    """Vector ``[l_1(y), ..., l_p(y)]`` from a single transposed solve."""
    rhs = _rhs(basis.iset, y)[0]
    if basis.kind == ModelKind.REGRESSION:
        return basis.system.pinv.T @ rhs
    if basis.kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS):
        return basis.system.solve(rhs)[:basis.p]
    return basis.system.solve_transpose(rhs)


def lambda_at_many(basis: LagrangeBasis, Y) -> np.ndarray:
    rhs = _rhs(basis.iset, Y)
    if basis.kind == ModelKind.REGRESSION:
        return rhs @ basis.system.pinv
    # lambda(y)^T = rhs^T A^{-1}; for the symmetric saddle matrix keep the first p entries
    return (rhs @ basis.system.inverse)[:, :basis.p]


# ---------------------------------------------------------------------------
# poisedness


@dataclass
class PoisednessReport:
    lambda_inf: float
    lambda_one: float
    witness: np.ndarray
    index: int
    q: str = "inf"
    per_point: np.ndarray = field(default=None, repr=False)
    witnesses: list = field(default=None, repr=False)
    n_samples: int = 0
    radius: float = 0.0


def lagrange_maximizer(poly: QuadraticModel, x, delta):
    """Exact ``max |l(y)|`` over ``B(x, delta)`` by two trust-region solves in scaled variables."""
    c = poly.evaluate(x)
    g = delta * poly.gradient(x)
    H = delta**2 * poly.H
    up = solve_trs_exact(-g, -H, 1.0)
    down = solve_trs_exact(g, H, 1.0)
    hi = c + up.predicted_decrease
    lo = c - down.predicted_decrease
    if abs(hi) >= abs(lo):
        return abs(hi), x + delta * up.s
    return abs(lo), x + delta * down.s


def _region_projector(x, radius, feasible):
    ball = Ball(x, radius)

    def proj(y):
        if ball.contains(y) and feasible.contains(y):
            return np.asarray(y, dtype=float)
        return project_ball_intersection(feasible, x, radius, y)

    return proj


def feasible_ball_samples(x, radius, feasible: FeasibleSet, count: int) -> np.ndarray:
    """Low-discrepancy points of ``B(x, radius)`` moved into ``feasible``.

    Each sample is projected onto the set and pulled back toward ``x`` until it
    lies in the ball; convexity and ``x`` feasible keep it feasible.
    """
    Y = ball_samples(x, radius, count)
    if _is_unconstrained(feasible):
        return Y
    P = feasible.project_many(Y)
    D = P - x
    nd = np.linalg.norm(D, axis=1)
    scale = np.where(nd > radius, radius / np.maximum(nd, 1e-300), 1.0)
    return x + D * scale[:, None]


def _ascend(poly: QuadraticModel, sign: float, y0, proj, radius, iters: int = 50):
    """Projected-gradient ascent on ``sign * l`` from ``y0``."""
    y = proj(y0)
    val = sign * poly.evaluate(y)
    step = radius
    for _ in range(iters):
        gr = sign * poly.gradient(y)
        gn = np.linalg.norm(gr)
        if gn == 0 or step < 1e-8 * radius:
            break
        y_new = proj(y + (step / gn) * gr)
        v_new = sign * poly.evaluate(y_new)
        if v_new > val + 1e-15 * max(1.0, abs(val)):
            y, val = y_new, v_new
        else:
            step *= 0.5
    return val, y


def estimate_poisedness(basis: LagrangeBasis, x=None, delta=None, constrained: FeasibleSet | None = None,
                        exclude=(), n_samples: int | None = None) -> PoisednessReport:
    """Lambda-poisedness of ``basis`` over ``B(x, delta)`` or ``B(x, min(delta, 1)) ∩ C``.

    ``Lambda_inf`` maximizes every ``|l_i|`` (indices in ``exclude`` are skipped);
    ``Lambda_1`` is the largest ``||lambda(y)||_1`` over the sampled candidates
    together with all maximizers found, a certified lower bound.
    """
    iset = basis.iset
    x = iset.base if x is None else np.asarray(x, dtype=float)
    delta = iset.delta if delta is None else float(delta)
    unconstrained = _is_unconstrained(constrained)
    radius = delta if unconstrained else min(delta, 1.0)
    if n_samples is None:
        n_samples = N_SAMPLES_UNCONSTRAINED if unconstrained else N_SAMPLES_CONSTRAINED
    p = iset.p
    excluded = set(int(e) for e in exclude)

    samples = feasible_ball_samples(x, radius, constrained, n_samples) if n_samples > 0 else np.empty((0, iset.n))
    inside = iset.points[np.linalg.norm(iset.points - x, axis=1) <= radius * (1 + 1e-12)]
    if not unconstrained and inside.size:
        inside = inside[constrained.contains_many(inside)]
    candidates = np.vstack([samples, inside]) if inside.size else samples
    cand_vals = lambda_at_many(basis, candidates) if candidates.shape[0] else np.empty((0, p))

    per_point = np.zeros(p)
    witnesses = [x.copy() for _ in range(p)]
    proj = None if unconstrained else _region_projector(x, radius, constrained)
    for i, poly in enumerate(basis.polys):
        if unconstrained:
            val, y = lagrange_maximizer(poly, x, radius)
        else:
            val, y = -np.inf, x
            trs_val, trs_y = lagrange_maximizer(poly, x, radius)
            for sign in (1.0, -1.0):
                starts = [trs_y]
                if cand_vals.shape[0]:
                    starts.append(candidates[int(np.argmax(sign * cand_vals[:, i]))])
                for y0 in starts:
                    v, yy = _ascend(poly, sign, y0, proj, radius)
                    if v > val:
                        val, y = v, yy
        if cand_vals.shape[0]:
            j = int(np.argmax(np.abs(cand_vals[:, i])))
            if abs(cand_vals[j, i]) > val:
                val, y = abs(cand_vals[j, i]), candidates[j].copy()
        per_point[i] = val
        witnesses[i] = y

    active = [i for i in range(p) if i not in excluded]
    if not active:
        raise ValueError("every index excluded from the poisedness estimate")
    idx = max(active, key=lambda i: (per_point[i], -i))
    wit = np.vstack([candidates, np.array(witnesses)]) if candidates.shape[0] else np.array(witnesses)
    lam_one = float(np.max(np.abs(lambda_at_many(basis, wit)).sum(axis=1)))
    lam_inf = float(per_point[idx])
    return PoisednessReport(lambda_inf=lam_inf, lambda_one=max(lam_one, lam_inf), witness=witnesses[idx],
                            index=int(idx), per_point=per_point, witnesses=witnesses,
                            n_samples=int(n_samples), radius=radius)


# ---------------------------------------------------------------------------
# determinant updates and improvement


def _assemble(iset: InterpolationSet) -> np.ndarray:
    S = iset.scaled
    if iset.kind in (ModelKind.LINEAR, ModelKind.COMPOSITE):
        return linear_matrix(S)
    if iset.kind == ModelKind.FULL_QUADRATIC:
        return natural_basis(S)
    return frobenius_matrix(S)


def det_update_check(basis: LagrangeBasis, i: int, y) -> float:
    """``|det(A_new)| / |det(A)|`` when point ``i`` is replaced by ``y``.

    Equals ``|l_i(y)|`` for linear and quadratic bases and is at least
    ``l_i(y)^2`` for minimum Frobenius bases.
    """
    old = _assemble(basis.iset)
    new = _assemble(basis.iset.replace(i, y))
    s0, ld0 = np.linalg.slogdet(old)
    s1, ld1 = np.linalg.slogdet(new)
    if s1 == 0:
        return 0.0
    return float(np.exp(ld1 - ld0))


@dataclass
class Swap:
    index: int
    old: np.ndarray
    new: np.ndarray
    lagrange_value: float
    det_ratio: float


@dataclass
class ImprovementResult:
    iset: InterpolationSet
    basis: LagrangeBasis
    swaps: list
    report: PoisednessReport

    @property
    def changed(self) -> list:
        return sorted({s.index for s in self.swaps})


def improve_geometry(iset: InterpolationSet, target: float, x=None, delta=None,
                     constrained: FeasibleSet | None = None, basis: LagrangeBasis | None = None,
                     exclude=(), max_swaps: int = 100, n_samples: int | None = None) -> ImprovementResult:
    """Greedy swaps until the set is ``target``-poised.

    The set is first re-expressed around ``(x, delta)``. Each swap replaces the
    point whose Lagrange polynomial attains the current ``Lambda_inf`` by the
    maximizer, and the determinant growth of the swap is checked.
    """
    if not target > 1:
        raise ValueError("poisedness target must exceed 1")
    x = iset.base if x is None else np.asarray(x, dtype=float)
    delta = iset.delta if delta is None else float(delta)
    if not np.array_equal(x, iset.base) or delta != iset.delta:
        iset = iset.recentred(x, delta)
        basis = None
    basis = lagrange_basis(iset) if basis is None else basis
    swaps: list[Swap] = []
    mf = iset.kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS)
    while True:
        report = estimate_poisedness(basis, x, delta, constrained, exclude, n_samples)
        if report.lambda_inf <= target:
            return ImprovementResult(iset, basis, swaps, report)
        if len(swaps) >= max_swaps:
            raise IterationCap(f"poisedness still {report.lambda_inf:.3g} after {max_swaps} swaps")
        i, y = report.index, report.witness
        lval = float(lambda_at(basis, y)[i])
        ratio = det_update_check(basis, i, y)
        bound = lval**2 if mf else abs(lval)
        if ratio < bound * (1 - 1e-8) or ratio <= 1.0:
            raise DfoError(f"swap did not grow the determinant (ratio {ratio:.6g}, |l| {abs(lval):.6g})")
        swaps.append(Swap(i, iset.points[i].copy(), np.array(y, dtype=float), lval, ratio))
        iset = iset.replace(i, y)
        basis = lagrange_basis(iset)


def init_feasible_set(x, delta, kind, constrained: FeasibleSet | None,
                      n_samples: int = N_SAMPLES_CONSTRAINED) -> InterpolationSet:
    """Canonical stencil with infeasible points replaced by feasible ones.

    Unconstrained problems get the stencil of radius ``delta`` unchanged. Otherwise
    the stencil has radius ``min(delta, 1)`` and every infeasible point is replaced
    by the feasible candidate maximizing its Lagrange polynomial in absolute value;
    the projection of the point itself is listed first so it wins ties.
    """
    x = np.asarray(x, dtype=float)
    kind = ModelKind(kind)
    if _is_unconstrained(constrained):
        return InterpolationSet(stencil_for(kind, x, delta), x, delta, kind)
    r = min(float(delta), 1.0)
    iset = InterpolationSet(stencil_for(kind, x, r), x, r, kind)
    samples = feasible_ball_samples(x, r, constrained, n_samples)
    for i in range(iset.p):
        y = iset.points[i]
        if constrained.contains(y):
            continue
        basis = lagrange_basis(iset)
        py = constrained.project(y)
        d = py - x
        nd = np.linalg.norm(d)
        if nd > r:
            py = x + d * (r / nd)
        cands = np.vstack([py[None, :], samples])
        vals = np.abs(lambda_at_many(basis, cands)[:, i])
        j = int(np.argmax(vals))
        if vals[j] < LAMBDA_ZERO_TOL:
            raise NoFeasibleReplacement(f"no feasible candidate gives a nonzero Lagrange value for point {i}")
        iset = iset.replace(i, cands[j])
    return iset


def replacement_index(basis: LagrangeBasis, x_new, exclude=()) -> int:
    """Index maximizing ``||y_i - x_new||^2 |l_i(x_new)|``."""
    lam = np.abs(lambda_at(basis, x_new))
    dist2 = np.sum((basis.iset.points - np.asarray(x_new)) ** 2, axis=1)
    score = dist2 * lam
    for e in exclude:
        score[e] = -np.inf
    return int(np.argmax(score))
