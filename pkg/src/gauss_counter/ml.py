"""Maximum-likelihood fits of normal parameters to photon-count histograms.

The structure (number of distinct eigenvalues, their multiplicities and
which displacements are free) is a fixed hypothesis per fit. Continuous
parameters are searched with Nelder-Mead in an unconstrained space:

    lambda_1 = L + (U - L) * sigmoid(u_1)
    lambda_k = L + (lambda_{k-1} - L) * sigmoid(u_k)       (k >= 2)
    c_j      = c_max * sigmoid(v_j)                        (free j only)

so every point maps to a strictly decreasing spectrum inside [L, U] and
displacements inside [0, c_max]. Coordinates at +-SNAP land exactly on the
bounds in double precision, which the final polish step exploits.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from ._numerics import worker_count
from .errors import GaussCounterError, InvalidParameters, StructureMismatch
from .forward import NEGATIVE_CLAMP, NORMALIZATION_SLACK, forward_distribution
from .inverse import invert_distribution
from .oracle import empirical_distribution
from .state_model import NormalParameters

SNAP = 40.0


@dataclass(frozen=True)
class FitConfig:
    mode_count: int
    multiplicities: tuple
    free_displacements: tuple = None
    max_photons: int = None
    lambda_bounds: tuple = (0.05, 50.0)
    c_max: float = 10.0
    restarts: int = 4
    max_evals: int = 4000
    seed: int = 0
    exact_start: bool = True

    def __post_init__(self):
        m = tuple(int(x) for x in self.multiplicities)
        object.__setattr__(self, "multiplicities", m)
        if not m or any(x < 1 for x in m) or sum(m) != 2 * self.mode_count:
            raise StructureMismatch(f"multiplicities {m} do not sum to 2S = {2 * self.mode_count}")
        free = self.free_displacements
        free = (True,) * len(m) if free is None else tuple(bool(x) for x in free)
        if len(free) != len(m):
            raise StructureMismatch("free_displacements must have one entry per eigenvalue")
        object.__setattr__(self, "free_displacements", free)
        lo, hi = (float(x) for x in self.lambda_bounds)
        if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
            raise InvalidParameters("lambda bounds must be finite with 0 < min < max")
        object.__setattr__(self, "lambda_bounds", (lo, hi))
        if not (math.isfinite(self.c_max) and self.c_max > 0):
            raise InvalidParameters("c_max must be finite and positive")
        if self.max_photons is not None and self.max_photons < 8 * self.mode_count:
            raise InvalidParameters("max_photons must be at least 8S")
        if self.restarts < 1 or self.max_evals < 1:
            raise InvalidParameters("restarts and max_evals must be positive")

    @property
    def dimension(self):
        return len(self.multiplicities) + sum(self.free_displacements)

    def decode(self, x):
        """NormalParameters for an unconstrained point ``x``."""
        lo, hi = self.lambda_bounds
        h = len(self.multiplicities)
        lam, top = [], hi
        for u in x[:h]:
            top = lo + (top - lo) * float(expit(u))
            lam.append(top)
        v = iter(x[h:])
        c = [self.c_max * float(expit(next(v))) if free else 0.0 for free in self.free_displacements]
        return NormalParameters(lam, self.multiplicities, c, tol_distinct=0.0)

    def encode(self, params):
        """Unconstrained point for ``params``, clipped to +-SNAP."""
        lo, hi = self.lambda_bounds
        x, top = [], hi
        for lam in params.eigenvalues:
            ratio = (min(max(lam, lo), top) - lo) / (top - lo) if top > lo else 0.0
            x.append(float(logit(ratio)))
            top = lo + (top - lo) * float(expit(x[-1]))
        for c, free in zip(params.displacement_norms, self.free_displacements):
            if free:
                x.append(float(logit(min(c / self.c_max, 1.0))))
        return np.clip(np.array(x), -SNAP, SNAP)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FitResult:
    parameters: NormalParameters
    nll: float
    traces: list = field(default_factory=list)
    converged: bool = True

    @property
    def log_likelihood(self):
        return -self.nll

    def to_dict(self):
        return {
            "parameters": self.parameters.to_dict(),
            "nll": self.nll,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "traces": self.traces,
        }


def _bins(run, max_photons):
    """Counts for 0..max_photons plus the overflow count."""
    cut = max_photons
    counts = np.zeros(cut + 1)
    overflow = 0.0
    for k, v in run.counts.items():
        if k <= cut and (run.truncation is None or k <= run.truncation):
            counts[k] = v
        else:
            overflow += v
    return counts, overflow


def default_max_photons(run, mode_count):
    top = run.truncation if run.truncation is not None else run.max_observed
    return max(int(top), 8 * mode_count)


def _nll(params, counts, overflow):
    try:
        p = forward_distribution(params, len(counts) - 1, method="direct", check=False).probabilities
    except GaussCounterError:
        return math.inf
    # Same acceptance rule as the checked forward route, without its logging.
    rest = 1.0 - math.fsum(p)
    if p.min() < -NEGATIVE_CLAMP or rest < -NORMALIZATION_SLACK:
        return math.inf
    used = counts > 0
    if np.any(p[used] <= 0):
        return math.inf
    total = -math.fsum(counts[used] * np.log(p[used]))
    if overflow > 0:
        if rest <= 0:
            return math.inf
        total -= overflow * math.log(rest)
    return total


def negative_log_likelihood(params, run, config=None):
    """Multinomial negative log-likelihood over bins 0..N plus an overflow bin.

    Bins without counts contribute nothing. Parameters whose distribution
    cannot be computed, or that put zero mass on an observed bin, give +inf.
    """
    s = params.mode_count
    n = config.max_photons if config is not None and config.max_photons is not None else None
    counts, overflow = _bins(run, n if n is not None else default_max_photons(run, s))
    return _nll(params, counts, overflow)


def _exact_start(run, config):
    try:
        dist = empirical_distribution(run, 8 * config.mode_count, config.mode_count)
        params = invert_distribution(dist).parameters
    except (GaussCounterError, ValueError, ArithmeticError):
        return None
    if tuple(params.multiplicities) != config.multiplicities:
        return None
    return config.encode(params)


def _polish(objective, x, fx):
    """Try pushing each coordinate onto a bound; keep improvements."""
    x = np.array(x, dtype=float)
    improved = True
    while improved:
        improved = False
        for i in range(len(x)):
            for target in (-SNAP, SNAP):
                trial = x.copy()
                trial[i] = target
                ft = objective(trial)
                if ft < fx:
                    x, fx, improved = trial, ft, True
    return x, fx


def _local_search(objective, x0, max_evals):
    # rejected points score +inf; the simplex convergence test then subtracts inf from inf
    with np.errstate(invalid="ignore"):
        return _nelder_mead(objective, x0, max_evals)


def _nelder_mead(objective, x0, max_evals):
    opts = {"maxfev": max_evals, "xatol": 1e-10, "fatol": 1e-15, "adaptive": True}
    res = minimize(objective, x0, method="Nelder-Mead", options=opts)
    nfev, ok = res.nfev, bool(res.success)
    x, fx = res.x, float(res.fun)
    # A restart from the converged simplex guards against premature collapse.
    res2 = minimize(objective, x, method="Nelder-Mead", options=opts)
    nfev += res2.nfev
    if res2.fun <= fx:
        x, fx, ok = res2.x, float(res2.fun), ok and bool(res2.success)
    x, fx = _polish(objective, x, fx)
    if abs(float(np.max(np.abs(x)))) >= SNAP:
        res3 = minimize(objective, x, method="Nelder-Mead", options=opts)
        nfev += res3.nfev
        if res3.fun < fx:
            x, fx = res3.x, float(res3.fun)
    return np.clip(x, -SNAP, SNAP), fx, nfev, ok


def fit(run, config, start=None):
    """Best NormalParameters under ``config``'s structure hypothesis.

    Restart 0 starts from ``start`` when given, otherwise (if
    ``config.exact_start``) from an exact inversion of the run's first 8S+1
    frequencies when that succeeds with a matching structure. Remaining
    restarts use seeded random points.
    """
    if run.mode_count is not None and run.mode_count != config.mode_count:
        raise StructureMismatch(f"run has S = {run.mode_count}, config has S = {config.mode_count}")
    n = config.max_photons if config.max_photons is not None else default_max_photons(run, config.mode_count)
    counts, overflow = _bins(run, n)
    scale = float(run.sample_count)

    def objective(x):
        try:
            params = config.decode(x)
        except GaussCounterError:
            return math.inf
        return _nll(params, counts, overflow) / scale

    rng = np.random.default_rng(config.seed)
    starts, origins = [], []
    if start is not None:
        if tuple(start.multiplicities) != config.multiplicities:
            raise StructureMismatch("start point does not match the structure hypothesis")
        starts.append(config.encode(start))
        origins.append("given")
    elif config.exact_start:
        x0 = _exact_start(run, config)
        if x0 is not None:
            starts.append(x0)
            origins.append("exact_inversion")
    while len(starts) < config.restarts:
        starts.append(rng.normal(0.0, 1.5, size=config.dimension))
        origins.append("random")

    workers = min(worker_count(), len(starts))
    if workers <= 1:
        outcomes = [_local_search(objective, x0, config.max_evals) for x0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda x0: _local_search(objective, x0, config.max_evals), starts))

    traces, best = [], None
    for i, ((x, fx, nfev, ok), origin) in enumerate(zip(outcomes, origins)):
        if best is None or fx < best[1]:
            best = (i, fx, x, ok)
        traces.append(
            {
                "restart": i,
                "origin": origin,
                "nll": fx * scale,
                "evaluations": int(nfev),
                "converged": ok,
                "best_nll": best[1] * scale,
            }
        )
    _, fx, x, ok = best
    if not math.isfinite(fx):
        raise InvalidParameters("no restart found a point with finite likelihood")
    return FitResult(config.decode(x), fx * scale, traces, ok)
