"""Sample averaging and Chebyshev sample sizes for stochastic objectives."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .problem_model import ObjectiveOracle

log = logging.getLogger(__name__)

MAX_SAMPLES = 10_000_000


@dataclass(frozen=True)
class SampleEstimate:
    mean: float
    n_samples: int
    sample_variance: float
    stream: tuple

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("an estimate needs at least one sample")
        if not math.isfinite(self.mean):
            raise ValueError("sample mean is not finite")


def derive_stream(seed: int, *counter: int) -> np.random.Generator:
    """Independent generator for ``(seed, counter...)`` via seed-sequence splitting."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counter)]))


class StreamFactory:
    """Hands out a fresh, never reused stream per request."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.counter = 0

    def next(self) -> tuple[tuple, np.random.Generator]:
        key = (self.seed, self.counter)
        self.counter += 1
        return key, derive_stream(*key)


def sample_average(oracle: ObjectiveOracle, x, n_samples: int, rng: np.random.Generator,
                   stream_id: tuple = ()) -> SampleEstimate:
    """Mean of ``n_samples`` independent evaluations at ``x``."""
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ConfigError("sample size must be at least 1")
    vals = oracle.sample(x, n_samples, rng)
    # math.fsum gives an order-independent, correctly rounded reduction
    mean = math.fsum(vals) / n_samples
    var = float(np.var(vals, ddof=1)) if n_samples > 1 else 0.0
    return SampleEstimate(mean, n_samples, var, tuple(stream_id))


def required_samples(sigma: float, eps_f: float, alpha: float, delta: float,
                     max_samples: int = MAX_SAMPLES) -> int:
    """Chebyshev sample size ``ceil(sigma^2 / (eps_f^2 (1 - alpha) delta^4))``.

    The result is clamped to ``[1, max_samples]``; clamping from above is logged.
    """
    if not sigma >= 0:
        raise ConfigError("sigma must be nonnegative")
    if not eps_f > 0:
        raise ConfigError("eps_f must be positive")
    if not 0 < alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    if not delta > 0:
        raise ConfigError("delta must be positive")
    if sigma == 0:
        return 1
    v = sigma**2 / (eps_f**2 * (1.0 - alpha) * delta**4)
    if not math.isfinite(v) or v > max_samples:
        log.warning("sample size %.3g clamped to %d", v, max_samples)
        return int(max_samples)
    # shave rounding noise so exact integers (1e5 computed as 100000.00000000001) stay put
    return max(1, math.ceil(v * (1.0 - 1e-12)))
