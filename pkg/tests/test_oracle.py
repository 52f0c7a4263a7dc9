import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQRT2
from gauss_counter.errors import EmptyRun, InvalidParameters
from gauss_counter.forward import forward_distribution, forward_from_spec
from gauss_counter.oracle import (
    SampleRun,
    empirical_distribution,
    mc_distribution,
    mc_probability,
    sample_counts,
    scaled_laguerre,
    synthetic_run,
)
from gauss_counter.state_model import GaussianStateSpec, NormalParameters
from gauss_counter.suites import state_from_parameters
from scipy.special import eval_genlaguerre


def test_scaled_laguerre_matches_scipy():
    y = np.linspace(0, 20, 41)
    got = scaled_laguerre(10, 2, y)
    for n in range(11):
        assert np.allclose(got[n], np.exp(-y / 2) * eval_genlaguerre(n, 2, y), rtol=1e-10, atol=1e-12)


def test_mc_vacuum_is_exact():
    est, se = mc_probability(GaussianStateSpec(np.eye(2), [0, 0]), 0, samples=10**6, seed=1)
    assert abs(est - 1.0) <= max(5 * se, 1e-12)


def test_mc_thermal_and_coherent():
    est, se = mc_probability(GaussianStateSpec(3 * np.eye(2), [0, 0]), 2, samples=10**6, seed=2)
    assert abs(est - 0.125) <= 5 * se
    est, se = mc_probability(GaussianStateSpec(np.eye(2), [SQRT2, 0]), 1, samples=10**6, seed=3)
    assert abs(est - math.exp(-1)) <= 5 * se


def test_mc_agrees_with_forward(mixed_s2):
    spec = state_from_parameters(mixed_s2, np.random.default_rng(7))
    est, se = mc_distribution(spec, 16, samples=10**6, seed=4)
    exact = forward_from_spec(spec, 16).probabilities
    assert np.all(np.abs(est - exact) <= 5 * se + 1e-15)


def test_mc_seed_reproducible():
    spec = GaussianStateSpec(np.diag([2.0, 0.8]), [0.3, -0.2])
    a = mc_distribution(spec, 8, samples=20_000, seed=11)
    b = mc_distribution(spec, 8, samples=20_000, seed=11)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_mc_rejects_tiny_sample_sizes():
    with pytest.raises(ValueError):
        mc_distribution(GaussianStateSpec(np.eye(2), [0, 0]), 2, samples=100)


@pytest.mark.parametrize("eta", [1.0, 0.5, 0.1])
def test_vacuum_counts(eta):
    run = sample_counts(NormalParameters([1.0], [2], [0.0]), 5000, eta, seed=1)
    assert run.counts == {0: 5000}


def test_thermal_vacuum_frequency(thermal):
    n = 10**6
    run = sample_counts(thermal, n, seed=5)
    p0 = run.counts[0] / n
    assert abs(p0 - 0.5) <= 5 * math.sqrt(0.25 / n)


def test_thinning_scales_mean(thermal):
    n = 10**6
    run = sample_counts(thermal, n, efficiency=0.5, seed=6)
    # thinned thermal is geometric with mean 0.5, variance 0.5 * 1.5
    assert abs(run.mean() - 0.5) <= 5 * math.sqrt(0.75 / n)


def test_empirical_within_binomial_bands(thermal):
    n = 10**6
    dist = empirical_distribution(sample_counts(thermal, n, seed=5), 8)
    for k, phat in enumerate(dist.probabilities):
        p = 2.0 ** -(k + 1)
        assert abs(phat - p) <= 5 * math.sqrt(p * (1 - p) / n)


@given(st.integers(0, 2**63 - 1))
@settings(max_examples=10)
def test_sampling_reproducible(seed):
    params = NormalParameters([2.0, 1.0], [2, 2], [SQRT2, 0.0])
    assert sample_counts(params, 3000, 0.7, seed) == sample_counts(params, 3000, 0.7, seed)


def test_empirical_examples():
    run = SampleRun(0, 100, {0: 50, 1: 50}, mode_count=1)
    assert empirical_distribution(run, 2).probabilities.tolist() == [0.5, 0.5, 0.0]
    with pytest.raises(EmptyRun):
        empirical_distribution(SampleRun(0, 0, {}, mode_count=1))


def test_sample_run_validation():
    with pytest.raises(InvalidParameters):
        SampleRun(0, 10, {0: 5})
    with pytest.raises(InvalidParameters):
        SampleRun(0, 10, {0: 10}, efficiency=0.0)
    with pytest.raises(InvalidParameters):
        SampleRun(0, 10, {-1: 10})


def test_sample_run_dict_round_trip():
    run = SampleRun(3, 10, {0: 4, 2: 6}, 0.9, 1)
    back = SampleRun.from_dict(run.to_dict())
    assert back == run


def test_synthetic_run_keeps_tail(thermal):
    dist = forward_distribution(thermal, 8)
    run = synthetic_run(dist, 1e12)
    assert run.truncation == 8
    assert run.counts[9] == pytest.approx(1e12 * 2.0**-9, rel=1e-6)
    assert run.sample_count == pytest.approx(1e12)
