"""Closed-form constants of the canonical interpolation sets, checked numerically."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import estimate_poisedness, lagrange_basis, lambda_at
from ..interp import (InterpolationSet, ModelKind, build_system, frobenius_matrix, linear_stencil,
                      pm_stencil, quadratic_stencil, regression_system)

DIMENSIONS = (2, 3, 5, 10)


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    observed: float
    passed: bool


def explicit_frobenius_inverse(n: int) -> np.ndarray:
    """Closed-form inverse of the saddle matrix for the plus/minus stencil."""
    e = np.ones((n, 1))
    eye = np.eye(n)
    z = np.zeros
    return np.block([
        [np.array([[2.0 * n]]), -e.T, -e.T, np.ones((1, 1)), z((1, n))],
        [-e, eye / 2, eye / 2, z((n, 1)), eye / 2],
        [-e, eye / 2, eye / 2, z((n, 1)), -eye / 2],
        [np.ones((1, 1)), z((1, n)), z((1, n)), z((1, 1)), z((1, n))],
        [z((n, 1)), eye / 2, -eye / 2, z((n, 1)), z((n, n))],
    ])


def _set(kind, points_fn, n):
    x = np.zeros(n)
    return InterpolationSet(points_fn(x, 1.0), x, 1.0, kind)


def matrix_checks(dims=DIMENSIONS) -> list[Check]:
    out = []
    for n in dims:
        v = build_system(_set(ModelKind.LINEAR, linear_stencil, n)).inverse_inf_norm
        out.append(Check(f"coordinate stencil ||M^-1||_inf, n={n}", "<= 2", v, v <= 2 + 1e-12))
        v = regression_system(_set(ModelKind.REGRESSION, pm_stencil, n)).inverse_inf_norm
        out.append(Check(f"plus/minus stencil ||M^+||_inf, n={n}", "= 1", v, abs(v - 1) <= 1e-10))
        v = build_system(_set(ModelKind.MIN_FROBENIUS, pm_stencil, n)).inverse_inf_norm
        out.append(Check(f"plus/minus stencil ||F^-1||_inf, n={n}", f"= {4 * n + 1}", v,
                         abs(v - (4 * n + 1)) <= 1e-8))
        v = build_system(_set(ModelKind.FULL_QUADRATIC, quadratic_stencil, n)).inverse_inf_norm
        out.append(Check(f"structured quadratic ||Q^-1||_inf, n={n}", "<= 8", v, v <= 8 + 1e-12))
    F = frobenius_matrix(pm_stencil(np.zeros(2), 1.0))
    err = float(np.max(np.abs(np.linalg.inv(F) - explicit_frobenius_inverse(2))))
    out.append(Check("explicit F^-1 block form, n=2", "entrywise", err, err <= 1e-12))
    return out


def poisedness_checks(dims=DIMENSIONS) -> list[Check]:
    out = []
    for n in dims:
        rep = estimate_poisedness(lagrange_basis(_set(ModelKind.LINEAR, linear_stencil, n)))
        target = np.sqrt(n) + 1
        out.append(Check(f"coordinate stencil Lambda_inf, n={n}", f"= {target:.6f}", rep.lambda_inf,
                         abs(rep.lambda_inf - target) <= 1e-6))
        out.append(Check(f"coordinate stencil Lambda_1, n={n}", f">= {2 * np.sqrt(n) + 1:.6f}", rep.lambda_one,
                         rep.lambda_one >= 2 * np.sqrt(n) + 1 - 1e-6))
        rep = estimate_poisedness(lagrange_basis(_set(ModelKind.MIN_FROBENIUS, pm_stencil, n)))
        out.append(Check(f"plus/minus min-Frobenius Lambda_inf, n={n}", "= 1", rep.lambda_inf,
                         abs(rep.lambda_inf - 1) <= 1e-6))
        basis = lagrange_basis(_set(ModelKind.FULL_QUADRATIC, quadratic_stencil, n))
        rep = estimate_poisedness(basis)
        lo, hi = abs(n - 5) / 2, max(3.0, 1 + (n + 1) / 2)
        out.append(Check(f"structured quadratic Lambda_inf, n={n}", f"in [{lo:g}, {hi:g}]", rep.lambda_inf,
                         lo - 1e-9 <= rep.lambda_inf <= hi + 1e-9))
        l0 = float(lambda_at(basis, np.ones(n) / np.sqrt(n))[0])
        out.append(Check(f"structured quadratic l_0(e/sqrt(n)), n={n}", f"= {(5 - n) / 2:g}", l0,
                         abs(l0 - (5 - n) / 2) <= 1e-9))
    return out


def constant_checks() -> list[Check]:
    return matrix_checks() + poisedness_checks()


def format_checks(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check'.ljust(width)}  {'expected':>14}  {'observed':>14}  result"]
    for c in checks:
        lines.append(f"{c.name.ljust(width)}  {c.expected:>14}  {c.observed:14.8g}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
