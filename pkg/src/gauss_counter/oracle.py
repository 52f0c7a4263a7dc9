"""Independent checks and simulated data.

``mc_distribution`` estimates ``p_n = (2 pi)**S E_W[W_n(r)]`` by sampling the
state's Wigner function (a Gaussian with mean d and covariance Gamma/2). The
projector's Wigner function is evaluated through generalized Laguerre
polynomials,

    (2 pi)**S W_n(r) = 2**S (-1)**n exp(-r**2) L_n^(S-1)(2 r**2),

with the three-term recurrence run on ``exp(-r**2)``-scaled values, so it
shares nothing with the monomial coefficients used elsewhere.

Random numbers come from numpy's PCG64. Work is split into fixed-size
shards whose seeds are spawned from the master seed, so results do not
depend on the number of workers.
"""

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._numerics import worker_count
from .errors import EmptyRun, InvalidParameters, NumericalInstability
from .forward import PhotonDistribution, forward_distribution, tail_cutoff
from .state_model import validate_state

SHARD_SIZE = 1 << 16
MIN_MC_SAMPLES = 10_000


def scaled_laguerre(max_order, alpha, y):
    """``exp(-y/2) * L_k^(alpha)(y)`` for k = 0..max_order, stacked along axis 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty((max_order + 1,) + y.shape)
    out[0] = np.exp(-y / 2)
    if max_order >= 1:
        out[1] = (1 + alpha - y) * out[0]
    for k in range(1, max_order):
        out[k + 1] = ((2 * k + 1 + alpha - y) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def _gaussian_factor(spec):
    half = 0.5 * (spec.covariance + spec.covariance.T) / 2
    vals, vecs = np.linalg.eigh(half)
    factor = vecs * np.sqrt(np.clip(vals, 0, None))
    resid = np.linalg.norm(factor @ factor.T - half)
    if resid > 1e-10 * max(np.linalg.norm(half), 1.0):
        raise NumericalInstability(f"covariance factorization residual {resid:.3e}")
    return factor


def _shard_sizes(samples):
    full, rest = divmod(samples, SHARD_SIZE)
    return [SHARD_SIZE] * full + ([rest] if rest else [])


def _run_shards(fn, samples, seed):
    sizes = _shard_sizes(samples)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(size, ss) for size, ss in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def mc_distribution(spec, max_photons, samples=1_000_000, seed=0):
    """Monte Carlo estimates and standard errors of ``p_0..p_max_photons``."""
    validate_state(spec, "mathematical").raise_if_failed()
    if samples < MIN_MC_SAMPLES:
        raise ValueError(f"at least {MIN_MC_SAMPLES} samples are required")
    s = spec.mode_count
    factor = _gaussian_factor(spec)
    mean = spec.displacement
    signs = (-1.0) ** np.arange(max_photons + 1)

    def shard(size, ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        r = mean + rng.standard_normal((size, 2 * s)) @ factor.T
        r2 = np.einsum("ij,ij->i", r, r)
        vals = (2.0**s) * signs[:, None] * scaled_laguerre(max_photons, s - 1, 2 * r2)
        return vals.sum(axis=1), (vals**2).sum(axis=1)

    parts = _run_shards(shard, int(samples), seed)
    total = np.sum([p[0] for p in parts], axis=0)
    total_sq = np.sum([p[1] for p in parts], axis=0)
    est = total / samples
    var = np.maximum(total_sq / samples - est**2, 0.0) * samples / (samples - 1)
    return est, np.sqrt(var / samples)


def mc_probability(spec, photon_number, samples=1_000_000, seed=0):
    """``(estimate, standard_error)`` for a single photon number."""
    est, se = mc_distribution(spec, photon_number, samples, seed)
    return float(est[photon_number]), float(se[photon_number])


@dataclass(frozen=True)
class SampleRun:
    """Histogram of detected photon numbers.

    Counts are normally integers; synthetic runs built from exact
    probabilities carry fractional expected counts. When ``truncation`` is
    set, keys above it stand for "more than ``truncation`` photons".
    """

    seed: int
    sample_count: float
    counts: dict
    efficiency: float = 1.0
    mode_count: int = None
    truncation: int = field(default=None, compare=False)

    def __post_init__(self):
        counts = {int(k): v for k, v in dict(self.counts).items() if v}
        if any(k < 0 for k in counts):
            raise InvalidParameters("photon numbers must be non-negative")
        if any(v < 0 for v in counts.values()):
            raise InvalidParameters("counts must be non-negative")
        total = sum(counts.values())
        if not math.isclose(total, self.sample_count, rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidParameters(f"counts sum to {total}, expected {self.sample_count}")
        if not 0 < self.efficiency <= 1:
            raise InvalidParameters("efficiency must lie in (0, 1]")
        object.__setattr__(self, "counts", dict(sorted(counts.items())))

    @property
    def max_observed(self):
        return max(self.counts) if self.counts else 0

    def mean(self):
        return sum(k * v for k, v in self.counts.items()) / self.sample_count

    def to_dict(self):
        out = {
            "seed": self.seed,
            "sample_count": self.sample_count,
            "efficiency": self.efficiency,
            "counts": {str(k): v for k, v in self.counts.items()},
        }
        if self.mode_count is not None:
            out["mode_count"] = self.mode_count
        if self.truncation is not None:
            out["truncation"] = self.truncation
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(
            seed=data.get("seed"),
            sample_count=data["sample_count"],
            counts={int(k): v for k, v in data["counts"].items()},
            efficiency=data.get("efficiency", 1.0),
            mode_count=data.get("mode_count"),
            truncation=data.get("truncation"),
        )


def sample_counts(params, samples, efficiency=1.0, seed=0):
    """Simulate ``samples`` detections with binomial loss ``efficiency``.

    Photon numbers are drawn by inverse CDF from the exact distribution
    truncated by the tail rule (remaining mass folded into the last bin),
    then each photon survives independently with probability ``efficiency``.
    """
    if not 0 < efficiency <= 1:
        raise InvalidParameters("efficiency must lie in (0, 1]")
    samples = int(samples)
    if samples < 1:
        raise InvalidParameters("samples must be positive")
    cutoff = tail_cutoff(params)
    dist = forward_distribution(params, cutoff, digits=30)
    cdf = np.cumsum(dist.probabilities)
    cdf[-1] = 1.0

    def shard(size, ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        n = np.searchsorted(cdf, rng.random(size), side="right")
        n = np.minimum(n, cutoff)
        if efficiency < 1:
            n = rng.binomial(n, efficiency)
        return np.bincount(n, minlength=cutoff + 1)

    hist = np.sum(_run_shards(shard, samples, seed), axis=0)
    counts = {int(k): int(v) for k, v in enumerate(hist) if v}
    return SampleRun(seed, samples, counts, efficiency, params.mode_count)


def empirical_distribution(run, max_photons=None, mode_count=None):
    """Relative frequencies ``p_0..p_N`` of a run."""
    if run.sample_count <= 0 or not run.counts:
        raise EmptyRun("run contains no samples")
    s = mode_count or run.mode_count
    if s is None:
        raise InvalidParameters("mode_count is unknown for this run")
    if max_photons is None:
        max_photons = run.max_observed
    freq = np.zeros(max_photons + 1)
    for k, v in run.counts.items():
        if k <= max_photons:
            freq[k] = v / run.sample_count
    return PhotonDistribution(int(s), freq, sample_count=run.sample_count)


def synthetic_run(dist, sample_count, seed=None):
    """Run whose counts equal the expected counts ``sample_count * p_n``.

    Mass beyond ``dist.max_photons`` goes to the key ``max_photons + 1``.
    """
    p = np.clip(dist.probabilities, 0, None)
    counts = Counter({n: sample_count * float(x) for n, x in enumerate(p) if x > 0})
    tail = 1.0 - math.fsum(p)
    if tail > 0:
        counts[dist.max_photons + 1] = sample_count * tail
    total = math.fsum(counts.values())
    return SampleRun(seed, total, dict(counts), 1.0, dist.mode_count, dist.max_photons)
