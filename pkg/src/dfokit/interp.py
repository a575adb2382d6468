"""Polynomial interpolation and regression models in scaled variables.

Every linear system is assembled from the scaled displacements
``s_i = (y_i - x) / delta`` and the resulting coefficients are mapped back via
``g = g_hat / delta`` and ``H = H_hat / delta**2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (DimensionMismatch, InvalidPointCount, NonFiniteInput,
                     RankDeficient, SingularSystem)

COND_MAX = 1e12


class ModelKind(str, enum.Enum):
    LINEAR = "Linear"
    FULL_QUADRATIC = "FullQuadratic"
    MIN_FROBENIUS = "MinFrobenius"
    MIN_CHANGE_FROBENIUS = "MinChangeFrobenius"
    REGRESSION = "Regression"
    COMPOSITE = "Composite"


def n_quadratic(n: int) -> int:
    return (n + 1) * (n + 2) // 2


@dataclass
class QuadraticModel:
    """``m(y) = c + g^T (y - x) + 0.5 (y - x)^T H (y - x)``."""

    x: np.ndarray
    c: float
    g: np.ndarray
    H: np.ndarray
    kind: ModelKind = ModelKind.LINEAR
    system: "InterpSystem | None" = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        H = np.asarray(self.H, dtype=float)
        self.H = 0.5 * (H + H.T)
        self.c = float(self.c)

    @property
    def n(self) -> int:
        return self.x.size

    def evaluate(self, y) -> float:
        d = np.asarray(y, dtype=float) - self.x
        return self.c + float(self.g @ d) + 0.5 * float(d @ self.H @ d)

    __call__ = evaluate

    def evaluate_many(self, Y) -> np.ndarray:
        D = np.atleast_2d(np.asarray(Y, dtype=float)) - self.x
        return self.c + D @ self.g + 0.5 * np.einsum("ij,jk,ik->i", D, self.H, D)

    def gradient(self, y) -> np.ndarray:
        return self.g + self.H @ (np.asarray(y, dtype=float) - self.x)

    def recentre(self, x_new) -> "QuadraticModel":
        """Same polynomial expressed around a different base point."""
        x_new = np.asarray(x_new, dtype=float)
        return QuadraticModel(x_new, self.evaluate(x_new), self.gradient(x_new), self.H.copy(), self.kind)


@dataclass(frozen=True, eq=False)
class InterpolationSet:
    """Ordered interpolation points with base point, radius and basis kind."""

    points: np.ndarray
    base: np.ndarray
    delta: float
    kind: ModelKind = ModelKind.LINEAR

    def __post_init__(self):
        pts = np.atleast_2d(np.array(self.points, dtype=float))
        base = np.array(self.base, dtype=float).reshape(-1)
        if pts.shape[1] != base.size:
            raise DimensionMismatch("points and base point differ in dimension")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(base))):
            raise NonFiniteInput("interpolation points must be finite")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        pts.setflags(write=False)
        base.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def n(self) -> int:
        return self.base.size

    @property
    def p(self) -> int:
        return self.points.shape[0]

    @property
    def scaled(self) -> np.ndarray:
        return (self.points - self.base) / self.delta

    @property
    def beta(self) -> float:
        return float(np.max(np.linalg.norm(self.scaled, axis=1)))

    def replace(self, i: int, y) -> "InterpolationSet":
        pts = self.points.copy()
        pts[i] = np.asarray(y, dtype=float)
        return InterpolationSet(pts, self.base, self.delta, self.kind)

    def recentred(self, base=None, delta=None) -> "InterpolationSet":
        return InterpolationSet(self.points.copy(), self.base if base is None else base,
                                self.delta if delta is None else delta, self.kind)

    def index_of(self, y, tol: float = 0.0) -> int | None:
        d = np.linalg.norm(self.points - np.asarray(y, dtype=float), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None


# ---------------------------------------------------------------------------
# canonical stencils


def linear_stencil(x, delta) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.vstack([x, x + delta * np.eye(x.size)])


def pm_stencil(x, delta) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    return np.vstack([x, x + delta * eye, x - delta * eye])


def quadratic_stencil(x, delta) -> np.ndarray:
    """``{x, x + delta e_i, x - delta e_i, x + delta (e_i + e_j) for i < j}``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    eye = np.eye(n)
    pairs = [eye[i] + eye[j] for i in range(n) for j in range(i + 1, n)]
    rows = [x, x + delta * eye, x - delta * eye]
    if pairs:
        rows.append(x + delta * np.array(pairs))
    return np.vstack(rows)


def stencil_for(kind: ModelKind, x, delta) -> np.ndarray:
    kind = ModelKind(kind)
    if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE):
        return linear_stencil(x, delta)
    if kind == ModelKind.FULL_QUADRATIC:
        return quadratic_stencil(x, delta)
    return pm_stencil(x, delta)


# ---------------------------------------------------------------------------
# linear algebra


def natural_basis(S) -> np.ndarray:
    """Rows ``[1, s, 0.5 s_1^2, s_1 s_2, ..., s_1 s_n, 0.5 s_2^2, ...]``."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    m, n = S.shape
    iu, ju = np.triu_indices(n)
    quad = S[:, iu] * S[:, ju]
    quad[:, iu == ju] *= 0.5
    return np.hstack([np.ones((m, 1)), S, quad])


def unpack_hessian(coef: np.ndarray, n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n)
    H = np.zeros((n, n))
    H[iu, ju] = coef
    H[ju, iu] = coef
    return H


def linear_matrix(S) -> np.ndarray:
    S = np.atleast_2d(S)
    return np.hstack([np.ones((S.shape[0], 1)), S])


def frobenius_matrix(S) -> np.ndarray:
    """Saddle-point matrix ``[[P, M], [M^T, 0]]`` with ``P_ij = 0.5 (s_i^T s_j)^2``."""
    S = np.atleast_2d(S)
    p, n = S.shape
    P = 0.5 * (S @ S.T) ** 2
    M = linear_matrix(S)
    return np.block([[P, M], [M.T, np.zeros((n + 1, n + 1))]])


class InterpSystem:
    """Square interpolation matrix with a column-pivoted QR factorization."""

    def __init__(self, matrix: np.ndarray, kind: ModelKind, cond_max: float = COND_MAX):
        A = np.asarray(matrix, dtype=float)
        self.matrix = A
        self.kind = kind
        Q, R, piv = scipy.linalg.qr(A, pivoting=True)
        d = np.abs(np.diag(R))
        if d.size == 0 or d[-1] <= np.finfo(float).eps * d[0] * A.shape[0]:
            raise SingularSystem("interpolation matrix is numerically singular")
        self._Q, self._R, self._piv = Q, R, piv
        self._inv = None
        inv_norm = self.inverse_inf_norm
        cond = np.abs(A).sum(axis=1).max() * inv_norm
        if not np.isfinite(cond) or cond > cond_max:
            raise SingularSystem(f"interpolation matrix condition {cond:.3e} exceeds {cond_max:.1e}")
        self.condition = float(cond)

    def solve(self, b: np.ndarray) -> np.ndarray:
        z = scipy.linalg.solve_triangular(self._R, self._Q.T @ b)
        out = np.empty_like(z)
        out[self._piv] = z
        return out

    def solve_transpose(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        bp = b[self._piv]
        z = scipy.linalg.solve_triangular(self._R, bp, trans="T")
        return self._Q @ z

    @property
    def inverse(self) -> np.ndarray:
        if self._inv is None:
            self._inv = self.solve(np.eye(self.matrix.shape[0]))
        return self._inv

    @property
    def inverse_inf_norm(self) -> float:
        """Exact ``||A^{-1}||_inf`` from solving against the identity."""
        return float(np.abs(self.inverse).sum(axis=1).max())

    @property
    def logabsdet(self) -> float:
        return float(np.sum(np.log(np.abs(np.diag(self._R)))))


def _system_for(iset: InterpolationSet, cond_max: float = COND_MAX) -> InterpSystem:
    S = iset.scaled
    kind = iset.kind
    if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE):
        return InterpSystem(linear_matrix(S), kind, cond_max)
    if kind == ModelKind.FULL_QUADRATIC:
        return InterpSystem(natural_basis(S), kind, cond_max)
    if kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS):
        return InterpSystem(frobenius_matrix(S), kind, cond_max)
    raise ValueError(f"no square system for kind {kind}")


def build_system(iset: InterpolationSet, cond_max: float = COND_MAX) -> InterpSystem:
    """Validate point count and factorize the interpolation matrix of ``iset``."""
    check_point_count(iset)
    return _system_for(iset, cond_max)


def check_point_count(iset: InterpolationSet) -> None:
    n, p, kind = iset.n, iset.p, iset.kind
    if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE) and p != n + 1:
        raise InvalidPointCount(f"linear interpolation needs {n + 1} points, got {p}")
    if kind == ModelKind.FULL_QUADRATIC and p != n_quadratic(n):
        raise InvalidPointCount(f"quadratic interpolation needs {n_quadratic(n)} points, got {p}")
    if kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS) and not (n + 2 <= p <= n_quadratic(n)):
        raise InvalidPointCount(f"min-Frobenius interpolation needs {n + 2}..{n_quadratic(n)} points, got {p}")
    if kind == ModelKind.REGRESSION and p <= n + 1:
        raise InvalidPointCount(f"regression needs more than {n + 1} points, got {p}")


def _fvals(fvals, p):
    f = np.asarray(fvals, dtype=float).reshape(-1)
    if f.size != p:
        raise DimensionMismatch(f"expected {p} function values, got {f.size}")
    if not np.all(np.isfinite(f)):
        raise NonFiniteInput("function values must be finite")
    return f


def _with_kind(iset, kind):
    if iset.kind == kind:
        return iset
    return InterpolationSet(iset.points, iset.base, iset.delta, kind)


# ---------------------------------------------------------------------------
# builders


def build_linear(iset: InterpolationSet, fvals, cond_max: float = COND_MAX) -> QuadraticModel:
    iset = _with_kind(iset, ModelKind.LINEAR)
    system = build_system(iset, cond_max)
    f = _fvals(fvals, iset.p)
    coef = system.solve(f)
    n = iset.n
    return QuadraticModel(iset.base.copy(), coef[0], coef[1:] / iset.delta, np.zeros((n, n)),
                          ModelKind.LINEAR, system)


def build_full_quadratic(iset: InterpolationSet, fvals, cond_max: float = COND_MAX) -> QuadraticModel:
    iset = _with_kind(iset, ModelKind.FULL_QUADRATIC)
    system = build_system(iset, cond_max)
    f = _fvals(fvals, iset.p)
    coef = system.solve(f)
    n, d = iset.n, iset.delta
    H_hat = unpack_hessian(coef[n + 1:], n)
    return QuadraticModel(iset.base.copy(), coef[0], coef[1:n + 1] / d, H_hat / d**2,
                          ModelKind.FULL_QUADRATIC, system)


@dataclass
class RegressionSystem:
    matrix: np.ndarray
    pinv: np.ndarray
    kind: ModelKind = ModelKind.REGRESSION

    @property
    def inverse_inf_norm(self) -> float:
        return float(np.abs(self.pinv).sum(axis=1).max())


def regression_system(iset: InterpolationSet) -> RegressionSystem:
    M = linear_matrix(iset.scaled)
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise RankDeficient(f"smallest singular value {sv[-1]:.3e} vs largest {sv[0]:.3e}")
    pinv = (Vt.T / sv) @ U.T
    return RegressionSystem(M, pinv)


def build_regression(iset: InterpolationSet, fvals) -> QuadraticModel:
    iset = _with_kind(iset, ModelKind.REGRESSION)
    check_point_count(iset)
    f = _fvals(fvals, iset.p)
    system = regression_system(iset)
    coef = system.pinv @ f
    n = iset.n
    return QuadraticModel(iset.base.copy(), coef[0], coef[1:] / iset.delta, np.zeros((n, n)),
                          ModelKind.REGRESSION, system)


def build_min_frobenius(iset: InterpolationSet, fvals, H_prev=None,
                        cond_max: float = COND_MAX) -> QuadraticModel:
    """Interpolating quadratic whose Hessian is closest to ``H_prev`` in Frobenius norm.

    With ``H_prev`` omitted this is the minimum Frobenius norm model.
    """
    kind = ModelKind.MIN_FROBENIUS if H_prev is None else ModelKind.MIN_CHANGE_FROBENIUS
    iset = _with_kind(iset, kind)
    system = build_system(iset, cond_max)
    f = _fvals(fvals, iset.p)
    S = iset.scaled
    n, p, d = iset.n, iset.p, iset.delta
    if H_prev is None:
        H_prev_hat = np.zeros((n, n))
    else:
        H_prev = np.asarray(H_prev, dtype=float)
        if H_prev.shape != (n, n):
            raise DimensionMismatch("H_prev has the wrong shape")
        H_prev_hat = d**2 * 0.5 * (H_prev + H_prev.T)
    rhs = np.concatenate([f - 0.5 * np.einsum("ij,jk,ik->i", S, H_prev_hat, S), np.zeros(n + 1)])
    sol = system.solve(rhs)
    lam = sol[:p]
    H_hat = H_prev_hat + (S.T * lam) @ S
    return QuadraticModel(iset.base.copy(), sol[p], sol[p + 1:] / d, H_hat / d**2, kind, system)


@dataclass
class CompositeModel(QuadraticModel):
    """Gauss-Newton model together with the linearized residuals."""

    residual_value: np.ndarray = field(default=None)
    jacobian: np.ndarray = field(default=None)


def build_composite_least_squares(iset: InterpolationSet, residual_vectors,
                                  cond_max: float = COND_MAX) -> CompositeModel:
    """Gauss-Newton model ``(0.5 ||c||^2, J^T c, J^T J)`` from linear residual models."""
    iset = _with_kind(iset, ModelKind.COMPOSITE)
    system = build_system(iset, cond_max)
    R = np.atleast_2d(np.asarray(residual_vectors, dtype=float))
    if R.shape[0] != iset.p:
        raise DimensionMismatch(f"expected {iset.p} residual vectors, got {R.shape[0]}")
    if not np.all(np.isfinite(R)):
        raise NonFiniteInput("residual values must be finite")
    coef = system.solve(R)
    cvec = coef[0]
    J = coef[1:].T / iset.delta
    return CompositeModel(iset.base.copy(), 0.5 * float(cvec @ cvec), J.T @ cvec, J.T @ J,
                          ModelKind.COMPOSITE, system, residual_value=cvec, jacobian=J)


def build_model(iset: InterpolationSet, fvals, H_prev=None) -> QuadraticModel:
    """Dispatch on ``iset.kind``."""
    kind = iset.kind
    if kind == ModelKind.LINEAR:
        return build_linear(iset, fvals)
    if kind == ModelKind.FULL_QUADRATIC:
        return build_full_quadratic(iset, fvals)
    if kind == ModelKind.REGRESSION:
        return build_regression(iset, fvals)
    if kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS):
        return build_min_frobenius(iset, fvals, H_prev)
    if kind == ModelKind.COMPOSITE:
        return build_composite_least_squares(iset, fvals)
    raise ValueError(f"unknown model kind {kind}")


# ---------------------------------------------------------------------------
# accuracy constants


@dataclass(frozen=True)
class FullyLinearConstants:
    kappa_mf: float
    kappa_mg: float
    kappa_h: float
    inv_norm: float
    beta: float
    noise_kappa_mf: float
    noise_kappa_mg: float


def fully_linear_constants(iset: InterpolationSet, lipschitz: float = 1.0) -> FullyLinearConstants:
    """Fully linear constants implied by the interpolation matrix norms.

    Linear and composite sets use ``||M^{-1}||_inf``, regression uses the
    pseudoinverse, and min-Frobenius sets add the Hessian bound
    ``kappa_H = (L/2) p beta^4 ||F^{-1}||_inf``. The ``noise_*`` fields are the
    multipliers of ``eps_f`` and ``eps_f / delta`` for bounded noise.
    """
    L = float(lipschitz)
    n, p, beta = iset.n, iset.p, iset.beta
    root = 1.0 + np.sqrt(n)
    kind = iset.kind
    if kind in (ModelKind.LINEAR, ModelKind.COMPOSITE, ModelKind.REGRESSION):
        norm = (regression_system(iset) if kind == ModelKind.REGRESSION else build_system(iset)).inverse_inf_norm
        kmf = 0.5 * L * root * beta**2 * norm + 0.5 * L
        tmf = root * norm
        return FullyLinearConstants(kmf, 2 * kmf, 0.0, norm, beta, tmf, 2 * tmf)
    if kind in (ModelKind.MIN_FROBENIUS, ModelKind.MIN_CHANGE_FROBENIUS):
        f_norm = build_system(iset).inverse_inf_norm
        kh = 0.5 * L * p * beta**4 * f_norm
        m_norm = regression_system(iset).inverse_inf_norm
        kmf = 0.5 * (L + kh) * root * beta**2 * m_norm + 0.5 * (L + kh)
        tmf = root * m_norm
        return FullyLinearConstants(kmf, 2 * kmf + 2 * kh, kh, f_norm, beta, tmf, 2 * tmf)
    raise ValueError(f"no fully linear constants for kind {kind}")


def sup_abs_difference(m1: QuadraticModel, m2: QuadraticModel, delta: float) -> float:
    """``max |m1(y) - m2(y)|`` over ``B(m1.x, delta)``, from exact trust-region solves on both signs."""
    from .trs import solve_trs_exact

    m2 = m2.recentre(m1.x)
    dc, dg, dH = m1.c - m2.c, m1.g - m2.g, m1.H - m2.H
    lo = dc - solve_trs_exact(dg, dH, delta).predicted_decrease
    hi = dc + solve_trs_exact(-dg, -dH, delta).predicted_decrease
    return max(abs(lo), abs(hi))
