import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import SQRT2
from gauss_counter.errors import InvalidParameters, StructureMismatch
from gauss_counter.forward import forward_distribution
from gauss_counter.inverse import invert_distribution
from gauss_counter.ml import FitConfig, fit, negative_log_likelihood
from gauss_counter.oracle import SampleRun, sample_counts, synthetic_run
from gauss_counter.state_model import NormalParameters

SYNTHETIC_COUNT = 1e12


@pytest.fixture(scope="module")
def thermal_run():
    return sample_counts(NormalParameters([3.0], [2], [0.0]), 10**5, seed=17)


def test_truth_beats_wrong_temperature(thermal_run):
    truth = NormalParameters([3.0], [2], [0.0])
    wrong = NormalParameters([2.5], [2], [0.0])
    assert negative_log_likelihood(truth, thermal_run) <= negative_log_likelihood(wrong, thermal_run)


def test_nll_skips_empty_bins():
    params = NormalParameters([3.0], [2], [0.0])
    run = SampleRun(0, 10, {0: 6, 3: 4}, mode_count=1)
    expected = -(6 * math.log(0.5) + 4 * math.log(2.0**-4))
    config = FitConfig(1, (2,), max_photons=8)
    assert negative_log_likelihood(params, run, config) == pytest.approx(expected, rel=1e-14)


def test_overflow_bin_uses_remaining_mass():
    params = NormalParameters([3.0], [2], [0.0])
    run = SampleRun(0, 10, {0: 6, 20: 4}, mode_count=1)
    config = FitConfig(1, (2,), max_photons=8)
    expected = -(6 * math.log(0.5) + 4 * math.log(2.0**-9))
    assert negative_log_likelihood(params, run, config) == pytest.approx(expected, rel=1e-10)


def test_free_displacement_mle_beats_truth(thermal_run):
    """With c free the optimum may leave c = 0, but never at a worse likelihood than the truth."""
    truth = NormalParameters([3.0], [2], [0.0])
    free = fit(thermal_run, FitConfig(1, (2,), restarts=4))
    fixed = fit(thermal_run, FitConfig(1, (2,), free_displacements=(False,), restarts=2))
    assert free.nll <= fixed.nll + 1e-6
    assert fixed.nll <= negative_log_likelihood(truth, thermal_run) + 1e-6


def test_thermal_fit(thermal_run):
    result = fit(thermal_run, FitConfig(1, (2,), free_displacements=(False,), restarts=2))
    assert result.parameters.eigenvalues[0] == pytest.approx(3.0, rel=0.05)
    assert result.log_likelihood == -result.nll


def test_vacuum_fit_reaches_analytic_optimum():
    run = sample_counts(NormalParameters([1.0], [2], [0.0]), 10**4, seed=3)
    result = fit(run, FitConfig(1, (2,), lambda_bounds=(1.0, 5.0), restarts=2))
    assert abs(result.nll) <= 1e-9
    assert result.parameters.displacement_norms[0] == pytest.approx(0.0, abs=1e-6)
    assert result.parameters.eigenvalues[0] == pytest.approx(1.0, abs=1e-6)


def _entropy_nll(run):
    return -math.fsum(v * math.log(v / run.sample_count) for v in run.counts.values())


@pytest.mark.parametrize(
    "params",
    [
        NormalParameters([3.0], [2], [0.0]),
        NormalParameters([1.0], [2], [SQRT2]),
        NormalParameters([2.0, 1.0], [2, 2], [SQRT2, 0.0]),
    ],
    ids=["thermal", "coherent", "two-mode"],
)
def test_exact_data_fit_matches_inversion(params):
    dist = forward_distribution(params)
    run = synthetic_run(dist, SYNTHETIC_COUNT)
    inverted = invert_distribution(forward_distribution(params, 8 * params.mode_count)).parameters
    config = FitConfig(params.mode_count, tuple(params.multiplicities), restarts=3)
    result = fit(run, config)
    assert np.allclose(result.parameters.eigenvalues, inverted.eigenvalues, rtol=1e-4)
    assert np.allclose(result.parameters.displacement_norms, inverted.displacement_norms, atol=1e-4)
    # the multinomial optimum is the empirical entropy; no fit can go below it
    floor = _entropy_nll(run)
    assert result.nll >= floor - 1e-10 * floor
    assert negative_log_likelihood(params, run) == pytest.approx(floor, rel=1e-10)


def test_three_mode_fit_from_supplied_start():
    params = NormalParameters([4.0, 2.0, 0.8], [2, 2, 2], [1.0, 0.0, 0.5])
    run = synthetic_run(forward_distribution(params), SYNTHETIC_COUNT)
    inverted = invert_distribution(forward_distribution(params, 24)).parameters
    config = FitConfig(3, (2, 2, 2), restarts=2, seed=1)
    result = fit(run, config, start=inverted)
    assert result.traces[0]["origin"] == "given"
    assert np.allclose(result.parameters.eigenvalues, inverted.eigenvalues, rtol=1e-4)
    assert np.allclose(result.parameters.displacement_norms, inverted.displacement_norms, atol=1e-4)


def test_fit_is_deterministic(thermal_run):
    config = FitConfig(1, (2,), restarts=3, seed=9, exact_start=False)
    a, b = fit(thermal_run, config), fit(thermal_run, config)
    assert a.nll == b.nll
    assert a.parameters.eigenvalues.tolist() == b.parameters.eigenvalues.tolist()
    assert a.traces == b.traces
    best = [t["best_nll"] for t in a.traces]
    assert all(x >= y for x, y in zip(best, best[1:]))
    assert best[-1] == a.nll


def test_structure_mismatch(thermal_run):
    with pytest.raises(StructureMismatch):
        FitConfig(1, (2, 2))
    with pytest.raises(StructureMismatch):
        fit(thermal_run, FitConfig(2, (2, 2)))
    with pytest.raises(StructureMismatch):
        fit(thermal_run, FitConfig(1, (2,)), start=NormalParameters([2.0, 1.0], [1, 1], [0, 0]))


def test_bad_config():
    with pytest.raises(InvalidParameters):
        FitConfig(1, (2,), lambda_bounds=(2.0, 1.0))
    with pytest.raises(InvalidParameters):
        FitConfig(1, (2,), max_photons=4)


@given(
    st.lists(st.floats(-30, 30), min_size=3, max_size=3),
    st.lists(st.floats(-30, 30), min_size=2, max_size=2),
)
@settings(max_examples=60)
def test_decoded_parameters_respect_bounds(u, v):
    config = FitConfig(3, (1, 3, 2), free_displacements=(True, False, True), lambda_bounds=(0.2, 6.0), c_max=3.0)
    try:
        params = config.decode(np.array(u + v))
    except InvalidParameters:
        # saturated coordinates can merge neighbouring eigenvalues; the objective maps these to +inf
        assume(False)
    lam = params.eigenvalues
    assert np.all((lam >= 0.2) & (lam <= 6.0))
    assert np.all(np.diff(lam) <= 0)
    assert params.displacement_norms[1] == 0.0
    assert np.all(params.displacement_norms <= 3.0)
    back = config.decode(config.encode(params))
    assert np.allclose(back.eigenvalues, lam, rtol=1e-8)
