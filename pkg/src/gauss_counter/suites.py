"""Randomized parameter sets for round-trip and oracle experiments.

Spectra are drawn so that pairing the k-th largest with the k-th smallest
entry gives products >= 1, i.e. each one is the spectrum of some physical
state (put gamma_k on q_k and gamma_{2S+1-k} on p_k).
"""

import numpy as np

from .state_model import GaussianStateSpec, NormalParameters, random_orthogonal

LAMBDA_RANGE = (0.3, 5.0)
C_RANGE = (0.0, 2.0)
MIN_GAP = 0.05


def is_physical_spectrum(spectrum):
    gam = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    s = len(gam) // 2
    return bool(np.all(gam[:s] * gam[::-1][:s] >= 1 - 1e-12))


def random_partition(total, rng):
    """Random composition of ``total`` into positive parts."""
    cuts = np.flatnonzero(rng.random(total - 1) < 0.5) + 1
    edges = np.concatenate(([0], cuts, [total]))
    return [int(x) for x in np.diff(edges)]


def _distinct_values(h, rng, lam_range, min_gap, max_tries=10_000):
    lo, hi = lam_range
    for _ in range(max_tries):
        lam = np.sort(np.exp(rng.uniform(np.log(lo), np.log(hi), size=h)))[::-1]
        if h == 1 or np.all((lam[:-1] - lam[1:]) / lam[:-1] >= min_gap):
            return lam
    raise RuntimeError("could not draw well-separated eigenvalues")


def random_parameters(
    mode_count,
    rng,
    multiplicities=None,
    lam_range=LAMBDA_RANGE,
    c_range=C_RANGE,
    min_gap=MIN_GAP,
    zero_displacement=None,
    physical=True,
    max_tries=10_000,
):
    """Random NormalParameters with the given (or a random) multiplicity pattern.

    ``zero_displacement`` is a boolean mask forcing c_k = 0.
    """
    for _ in range(max_tries):
        mult = list(multiplicities) if multiplicities is not None else random_partition(2 * mode_count, rng)
        lam = _distinct_values(len(mult), rng, lam_range, min_gap)
        if physical and not is_physical_spectrum(np.repeat(lam, mult)):
            continue
        c = rng.uniform(*c_range, size=len(mult))
        if zero_displacement is not None:
            c = np.where(zero_displacement, 0.0, c)
        return NormalParameters(lam, mult, c)
    raise RuntimeError("could not draw a physical spectrum")


def degenerate_suite(mode_count, rng):
    """Hand-picked structures: repeated eigenvalues, no displacement,
    displacement on a single eigenspace, fully degenerate spectrum."""
    s = mode_count
    out = [
        random_parameters(s, rng, multiplicities=[2 * s]),
        random_parameters(s, rng, multiplicities=[2 * s], zero_displacement=[True]),
    ]
    if s >= 2:
        out.append(random_parameters(s, rng, multiplicities=[2 * s - 2, 2]))
        out.append(random_parameters(s, rng, multiplicities=[3, 2 * s - 3]))
        out.append(random_parameters(s, rng, multiplicities=[2] * s, zero_displacement=[True] * s))
        mask = [True] * s
        mask[rng.integers(s)] = False
        out.append(random_parameters(s, rng, multiplicities=[2] * s, zero_displacement=mask))
    else:
        out.append(random_parameters(s, rng, multiplicities=[1, 1]))
        out.append(random_parameters(s, rng, multiplicities=[1, 1], zero_displacement=[True, False]))
    return out


def state_from_parameters(params, rng=None):
    """A GaussianStateSpec with the given normal parameters.

    The covariance is diagonal in a random orthonormal basis (identity basis
    when ``rng`` is None) and each eigenspace gets displacement norm c_k.
    """
    spectrum = params.spectrum()
    dim = len(spectrum)
    disp = np.zeros(dim)
    start = 0
    for m, c in zip(params.multiplicities, params.displacement_norms):
        disp[start] = c
        start += m
    cov = np.diag(spectrum)
    if rng is None:
        return GaussianStateSpec(cov, disp)
    o = random_orthogonal(dim, rng)
    return GaussianStateSpec(o @ cov @ o.T, o @ disp)
