import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import E, SQRT2, normal_parameters
from gauss_counter._numerics import context
from gauss_counter.errors import NumericalInstability
from gauss_counter.forward import (
    NORMALIZATION_SLACK,
    f_from_parameters,
    forward_distribution,
    forward_from_spec,
    p0_from_parameters,
    tail_cutoff,
)
from gauss_counter.serialization import dumps, loads, read_object
from gauss_counter.state_model import GaussianStateSpec, NormalParameters, random_orthogonal
from gauss_counter.suites import state_from_parameters


@pytest.mark.parametrize(
    "params, p0",
    [
        (NormalParameters([1.0], [2], [0.0]), 1.0),
        (NormalParameters([1.0], [2], [SQRT2]), math.exp(-1)),
        (NormalParameters([3.0], [2], [0.0]), 0.5),
    ],
)
def test_p0_examples(params, p0):
    assert p0_from_parameters(params) == pytest.approx(p0, rel=1e-15)
    assert float(p0_from_parameters(params, context(40))) == pytest.approx(p0, rel=1e-15)


def test_f_examples():
    assert f_from_parameters(NormalParameters([3.0], [2], [0.0]), 4) == pytest.approx([0.75**n for n in range(1, 5)])
    assert f_from_parameters(NormalParameters([1.0], [2], [SQRT2]), 4) == pytest.approx(
        [(1 + n) * 0.5**n for n in range(1, 5)]
    )
    assert f_from_parameters(NormalParameters([1.0], [6], [0.0]), 4) == pytest.approx([3 * 0.5**n for n in range(1, 5)])


@pytest.mark.parametrize("method", ["chain", "direct"])
def test_thermal_geometric_law(thermal, method):
    p = forward_distribution(thermal, 16, method=method).probabilities
    assert np.max(np.abs(p - 2.0 ** -(np.arange(17) + 1))) <= 1e-12


@pytest.mark.parametrize("method", ["chain", "direct"])
def test_coherent_poisson_law(coherent, method):
    p = forward_distribution(coherent, 16, method=method).probabilities
    expected = np.array([math.exp(-1) / math.factorial(n) for n in range(17)])
    assert np.max(np.abs(p - expected)) <= 1e-12


@given(st.floats(1.05, 8.0), st.floats(0.0, 3.0))
def test_known_laws_parametric(gamma, c):
    nbar = (gamma - 1) / 2
    p = forward_distribution(NormalParameters([gamma], [2], [0.0]), 16).probabilities
    geo = np.array([nbar**n / (1 + nbar) ** (n + 1) for n in range(17)])
    assert np.max(np.abs(p - geo)) <= 1e-10
    mean = c**2 / 2
    p = forward_distribution(NormalParameters([1.0], [2], [c]), 16).probabilities
    poisson = np.array([math.exp(-mean) * mean**n / math.factorial(n) for n in range(17)])
    assert np.max(np.abs(p - poisson)) <= 1e-10


def test_two_mode_vacuum():
    p = forward_distribution(NormalParameters([1.0], [4], [0.0]), 4).probabilities
    assert p.tolist() == pytest.approx([1, 0, 0, 0, 0], abs=1e-15)


@pytest.mark.parametrize("xi", [0.1, 0.5, 1.0])
def test_squeezed_vacuum_has_even_parity(xi):
    spec = GaussianStateSpec(np.diag([math.exp(2 * xi), math.exp(-2 * xi)]), [0, 0])
    p = forward_from_spec(spec, 20).probabilities
    assert np.all(p[1::2] <= 1e-10)
    # p_0 = 1/cosh(xi) for single-mode squeezed vacuum
    assert p[0] == pytest.approx(1 / math.cosh(xi), rel=1e-12)


def test_same_displacement_norm_same_distribution():
    a = forward_from_spec(GaussianStateSpec(np.eye(2), [SQRT2, 0]), 10).probabilities
    b = forward_from_spec(GaussianStateSpec(np.eye(2), [1, 1]), 10).probabilities
    assert np.allclose(a, b, atol=1e-15)


@given(normal_parameters(), st.integers(0, 2**32 - 1))
def test_rotation_invariance(params, seed):
    rng = np.random.default_rng(seed)
    spec = state_from_parameters(params, rng)
    n = 8 * params.mode_count
    base = forward_from_spec(spec, n).probabilities
    rotated = forward_from_spec(spec.rotated(random_orthogonal(spec.covariance.shape[0], rng)), n).probabilities
    assert np.max(np.abs(base - rotated)) <= 1e-9


@given(normal_parameters())
def test_chain_and_direct_agree(params):
    n = 8 * params.mode_count
    chain = forward_distribution(params, n).probabilities
    direct = forward_distribution(params, n, method="direct").probabilities
    assert np.allclose(chain, direct, rtol=1e-10, atol=1e-15)


@given(normal_parameters())
def test_normalization_under_tail_rule(params):
    n = tail_cutoff(params)
    total = forward_distribution(params, n, method="direct").total()
    assert 1 - 1e-6 <= total <= 1 + NORMALIZATION_SLACK
    assert np.all(forward_distribution(params, min(n, 40)).probabilities >= 0)


def test_unphysical_spectrum_is_rejected():
    # a sub-vacuum spectrum gives a "distribution" whose mass exceeds one
    params = NormalParameters([0.3], [2], [0.0])
    with pytest.raises(NumericalInstability):
        forward_distribution(params, 30, method="direct")
    unchecked = forward_distribution(params, 30, method="direct", check=False)
    assert unchecked.total() > 1


def test_precise_values_carried(thermal):
    dist = forward_distribution(thermal, 8, digits=50)
    ctx = context(50)
    assert all(abs(v - ctx.mpf(2) ** -(n + 1)) < ctx.mpf(10) ** -45 for n, v in enumerate(dist.values(ctx)))
    _, back = read_object(loads(dumps("photon_distribution", dist.to_dict())))
    assert back.digits >= 50
    assert all(abs(a - b) < ctx.mpf(10) ** -48 for a, b in zip(back.values(ctx), dist.values(ctx)))
    assert back.probabilities.tolist() == dist.probabilities.tolist()


def test_bad_method(thermal):
    with pytest.raises(ValueError):
        forward_distribution(thermal, 4, method="quadrature")


def test_large_photon_number_reachable():
    params = NormalParameters([4.0, 2.0], [2, 2], [1.5, 0.5])
    chain = forward_distribution(params, 100).probabilities
    direct = forward_distribution(params, 100, method="direct").probabilities
    assert np.allclose(chain, direct, rtol=1e-9, atol=1e-300)
