import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfokit.errors import ConfigError
from dfokit.noise import (MAX_SAMPLES, SampleEstimate, StreamFactory, derive_stream, required_samples,
                          sample_average)
from dfokit.problem_model import ObjectiveOracle, Stochastic


def noisy(sigma, value=1.5):
    return ObjectiveOracle(lambda x: value, 1, Stochastic(sigma))


class TestSampleAverage:
    def test_single_draw(self):
        o = noisy(1.0)
        est = sample_average(o, [0.0], 1, derive_stream(0, 0))
        assert est.n_samples == 1 and est.sample_variance == 0.0
        assert est.mean == o.evaluate([0.0], derive_stream(0, 0))

    def test_zero_sigma_exact(self):
        est = sample_average(noisy(0.0), [0.0], 50, derive_stream(1))
        assert est.mean == 1.5

    def test_clt_tolerance(self):
        est = sample_average(noisy(1.0), [0.0], 10_000, derive_stream(7))
        assert abs(est.mean - 1.5) <= 0.05

    def test_reproducible_and_counted(self):
        o = noisy(0.3)
        a = sample_average(o, [0.0], 100, derive_stream(3, 4), stream_id=(3, 4))
        b = sample_average(o, [0.0], 100, derive_stream(3, 4))
        assert a.mean == b.mean and a.stream == (3, 4) and o.eval_count == 200

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            sample_average(noisy(1.0), [0.0], 0, derive_stream(0))
        with pytest.raises(ValueError):
            SampleEstimate(0.0, 0, 0.0, ())


class TestStreams:
    def test_distinct_counters(self):
        f = StreamFactory(9)
        (k1, r1), (k2, r2) = f.next(), f.next()
        assert k1 == (9, 0) and k2 == (9, 1)
        assert r1.standard_normal() != r2.standard_normal()

    def test_same_key_same_stream(self):
        assert derive_stream(5, 2).random() == derive_stream(5, 2).random()


class TestRequiredSamples:
    def test_zero_sigma(self):
        assert required_samples(0.0, 1.0, 0.9, 0.1) == 1

    def test_formula_value(self):
        assert required_samples(1.0, 1.0, 0.9, 0.1) == 100_000

    def test_delta_quartic(self):
        a = required_samples(1.0, 1.0, 0.9, 0.2)
        assert required_samples(1.0, 1.0, 0.9, 0.1) == 16 * a

    @pytest.mark.parametrize("args", [(1, 1, 0.0, 1), (1, 1, 1.0, 1), (1, 0, 0.5, 1), (-1, 1, 0.5, 1), (1, 1, 0.5, 0)])
    def test_bad_ranges(self, args):
        with pytest.raises(ConfigError):
            required_samples(*args)

    def test_clamped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert required_samples(1.0, 1e-3, 0.99, 1e-3) == MAX_SAMPLES
        assert "clamped" in caplog.text

    @given(sigma=st.floats(0.01, 10), eps=st.floats(0.01, 10), alpha=st.floats(0.01, 0.99),
           delta=st.floats(0.05, 10), k=st.floats(1.0, 4.0))
    def test_monotone(self, sigma, eps, alpha, delta, k):
        n = required_samples(sigma, eps, alpha, delta)
        assert required_samples(sigma, eps * k, alpha, delta) <= n
        assert required_samples(sigma, eps, alpha, delta * k) <= n
        # shrinking 1 - alpha by k can only raise the count
        assert required_samples(sigma, eps, 1 - (1 - alpha) / k, delta) >= n
        assert 1 <= n <= MAX_SAMPLES

    def test_chebyshev_coverage(self):
        sigma, eps_f, delta, alpha = 1.0, 0.5, 1.0, 0.8
        N = required_samples(sigma, eps_f, alpha, delta)
        rng = derive_stream(2024)
        means = rng.normal(0.0, sigma, size=(10_000, N)).mean(axis=1)
        assert np.mean(np.abs(means) <= eps_f * delta**2) >= alpha
