"""Deterministic low-discrepancy samples in the unit ball."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.stats import norm, qmc


@lru_cache(maxsize=32)
def _unit_ball(n: int, count: int) -> np.ndarray:
    # Halton points in [0,1]^(n+1): n coordinates give a direction through the
    # normal quantile map, the last one the radius u^(1/n).
    pts = qmc.Halton(d=n + 1, scramble=False).random(count + 1)[1:]
    pts = np.clip(pts, 1e-12, 1 - 1e-12)
    z = norm.ppf(pts[:, :n])
    nz = np.linalg.norm(z, axis=1, keepdims=True)
    nz[nz == 0] = 1.0
    out = z / nz * pts[:, n:] ** (1.0 / n)
    out.setflags(write=False)
    return out


def unit_ball_samples(n: int, count: int) -> np.ndarray:
    """``count`` deterministic points in the closed unit ball of R^n."""
    return _unit_ball(int(n), int(count))


def ball_samples(center, radius: float, count: int) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    return center + radius * unit_ball_samples(center.size, count)
