"""Exact photon-number distributions from normal parameters.

The default route follows the inversion algebra backwards: closed-form
``f_n`` -> moments of r**2 -> relative probabilities (affine binomial map)
-> scaled by the closed-form vacuum probability ``p_0``. The alternating
binomial sum in the last step cancels heavily, so the chain runs in
extended precision with guard digits chosen from the size of its terms.

A second, float-only route (``method="direct"``) expands the photon-number
generating function

    sum_n p_n z**n = p_0 * prod_k (1 - b_k z)**(-m_k/2)
                         * exp(2 w_k z / (1 - b_k z)),
    b_k = (lambda_k - 1)/(lambda_k + 1),  w_k = (c_k / (1 + lambda_k))**2,

through its logarithmic derivative. It has no cancellation and is what the
likelihood fits use.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import EXACT_DIGITS, FLOAT_DIGITS, context, fsum
from .errors import InvalidParameters, NumericalInstability
from .projector_kernel import moment_probability_map
from .state_model import (
    GaussianStateSpec,
    ModifiedNormalParameters,
    NormalParameters,
    extract_normal_parameters,
)

log = logging.getLogger(__name__)

NEGATIVE_CLAMP = 1e-12
NORMALIZATION_SLACK = 1e-9
TAIL_MASS = 1e-6


@dataclass(frozen=True)
class PhotonDistribution:
    """Probabilities ``p_0..p_N`` of the total photon number.

    ``precise`` optionally holds the same values at ``digits`` significant
    digits (mpmath numbers); the inverse engine uses them when present.
    """

    mode_count: int
    probabilities: np.ndarray
    precise: tuple = field(default=None, compare=False, repr=False)
    digits: int = FLOAT_DIGITS
    sample_count: float = None

    def __post_init__(self):
        p = np.atleast_1d(np.array(self.probabilities, dtype=float))
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)
        if self.precise is not None:
            object.__setattr__(self, "precise", tuple(self.precise))
            if len(self.precise) != len(p):
                raise InvalidParameters("precise values do not match probabilities")

    @property
    def max_photons(self):
        return len(self.probabilities) - 1

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, n):
        return self.probabilities[n]

    def values(self, ctx=None, count=None):
        """Entries ``p_0..p_{count-1}`` as floats or as ``ctx`` numbers."""
        src = self.precise if self.precise is not None else self.probabilities
        src = src[: count if count is not None else len(src)]
        if ctx is None:
            return [float(x) for x in src]
        return [ctx.mpf(x) if not isinstance(x, (float, np.floating)) else ctx.mpf(float(x)) for x in src]

    def total(self):
        return float(np.sum(self.probabilities))

    def to_dict(self):
        out = {"mode_count": self.mode_count, "max_photons": self.max_photons}
        out["probabilities"] = list(self.precise) if self.precise is not None else self.probabilities.tolist()
        if self.precise is not None:
            out["digits"] = self.digits
        if self.sample_count is not None:
            out["sample_count"] = self.sample_count
        return out

    @classmethod
    def from_dict(cls, data):
        raw = list(data["probabilities"])
        precise, digits = None, FLOAT_DIGITS
        if any(not isinstance(x, (int, float)) for x in raw):
            digits = max(max(_decimal_digits(x) for x in raw), int(data.get("digits", 0)))
            ctx = context(max(digits, FLOAT_DIGITS) + 5)
            precise = tuple(ctx.mpf(x if isinstance(x, (int, float)) else str(x)) for x in raw)
        return cls(
            mode_count=int(data["mode_count"]),
            probabilities=[float(x) for x in raw],
            precise=precise,
            digits=digits,
            sample_count=data.get("sample_count"),
        )


def _decimal_digits(x):
    if isinstance(x, (int, float)):
        return FLOAT_DIGITS
    text = str(x).lower().split("e")[0].replace("-", "").replace(".", "").lstrip("0")
    return max(len(text), 1)


# --- closed forms ---------------------------------------------------------


def _modified_values(params, ctx=None):
    """(lambda', c', m) lists in float or ``ctx`` arithmetic."""
    one = 1.0 if ctx is None else ctx.mpf(1)
    lam = [one * float(x) for x in params.eigenvalues]
    c = [one * float(x) for x in params.displacement_norms]
    lp = [x / (1 + x) for x in lam]
    cp = [(ci / x) ** 2 for ci, x in zip(c, lam)]
    return lp, cp, [int(m) for m in params.multiplicities]


def _f_series(lp, cp, m, n_max, ctx=None):
    out = []
    for n in range(1, n_max + 1):
        terms = []
        for a, w, mk in zip(lp, cp, m):
            terms.append(mk * a**n / 2)
            terms.append(n * w * a ** (n + 1))
        out.append(fsum(terms, ctx))
    return out


def f_from_parameters(modified, n_max, ctx=None):
    """``f_n = sum_k m_k/2 lambda'_k**n + n c'_k lambda'_k**(n+1)`` for n = 1..n_max."""
    if isinstance(modified, NormalParameters):
        lp, cp, m = _modified_values(modified, ctx)
    elif isinstance(modified, ModifiedNormalParameters):
        one = 1.0 if ctx is None else ctx.mpf(1)
        lp = [one * float(x) for x in modified.lambda_prime]
        cp = [one * float(x) for x in modified.c_prime]
        m = [int(x) for x in modified.multiplicities]
    else:
        raise TypeError("expected NormalParameters or ModifiedNormalParameters")
    if n_max < 1:
        raise ValueError("n_max must be positive")
    return _f_series(lp, cp, m, int(n_max), ctx)


def p0_from_parameters(params, ctx=None):
    """Vacuum probability ``prod_k (2/(lambda_k+1))**(m_k/2) exp(-c_k**2/(lambda_k+1))``."""
    if ctx is None:
        lam = params.eigenvalues
        c = params.displacement_norms
        m = params.multiplicities
        return float(np.exp(np.sum(m / 2 * np.log(2 / (lam + 1)) - c**2 / (lam + 1))))
    total = ctx.mpf(0)
    for lam, mk, c in zip(params.eigenvalues, params.multiplicities, params.displacement_norms):
        lam = ctx.mpf(float(lam))
        c = ctx.mpf(float(c))
        total += ctx.mpf(int(mk)) / 2 * ctx.log(2 / (lam + 1)) - c**2 / (lam + 1)
    return ctx.exp(total)


# --- distributions --------------------------------------------------------


def _scaled_moments_from_f(f, ctx=None):
    """``s_n = 2**n mu_n / n!`` directly from f (positive recursion, no factorials)."""
    one = 1.0 if ctx is None else ctx.mpf(1)
    a = [one]
    for n in range(1, len(f) + 1):
        a.append(fsum([f[k - 1] * a[n - k] for k in range(1, n + 1)], ctx) / n)
    return [a[n] * 2**n for n in range(1, len(f) + 1)]


def _cancellation_digits(params, size):
    """Decimal digits lost in the alternating binomial sum, estimated at low precision."""
    ctx = context(20)
    lp, cp, m = _modified_values(params, ctx)
    s = _scaled_moments_from_f(_f_series(lp, cp, m, size, ctx), ctx)
    worst = 0.0
    s_all = [ctx.mpf(1)] + s
    log_s = [float(ctx.log10(x)) if x > 0 else -math.inf for x in s_all]
    for k in range(size + 1):
        for l in range(k + 1):
            worst = max(worst, math.log10(math.comb(k + params.mode_count - 1, l + params.mode_count - 1)) + log_s[l])
    return int(math.ceil(worst))


def _direct_probabilities(params, size):
    lam = params.eigenvalues
    c = params.displacement_norms
    m = params.multiplicities
    beta = (lam - 1.0) / (lam + 1.0)
    omega = (c / (1.0 + lam)) ** 2
    k = np.arange(1, size + 1)[:, None]
    powers = beta[None, :] ** (k - 1)
    g = np.sum(m / 2 * powers * beta + 2 * k * omega * powers, axis=1)
    p = np.zeros(size + 1)
    p[0] = p0_from_parameters(params)
    for n in range(1, size + 1):
        p[n] = math.fsum(g[:n] * p[n - 1 :: -1][:n]) / n
    return p


def _finalize(params, values, precise, digits, check, method):
    p = np.array([float(x) for x in values])
    if not np.all(np.isfinite(p)):
        raise NumericalInstability("non-finite photon-number probability; lower N or raise precision")
    if check:
        worst = p.min()
        if worst < -NEGATIVE_CLAMP:
            raise NumericalInstability(
                f"negative probability {worst:.3e}; parameters may be unphysical or precision too low"
            )
        if worst < 0:
            log.warning("clamping negative probabilities down to %.3e", worst)
            p = np.where(p < 0, 0.0, p)
        if p.sum() > 1 + NORMALIZATION_SLACK:
            raise NumericalInstability(
                f"probabilities sum to {p.sum():.12g} > 1; parameters are not a physical state"
            )
    return PhotonDistribution(params.mode_count, p, precise=precise, digits=digits)


def forward_distribution(params, max_photons=None, method="chain", digits=EXACT_DIGITS, check=True):
    """Photon-number distribution ``p_0..p_N`` of the state with normal parameters ``params``.

    Args:
        params: NormalParameters.
        max_photons: N; defaults to the tail rule of :func:`tail_cutoff`.
        method: ``"chain"`` (cumulant chain, extended precision) or ``"direct"`` (float64).
        digits: significant digits kept by the chain route.
        check: enforce non-negativity and normalization (disable for spectra
            that do not belong to a physical state).
    """
    if not isinstance(params, NormalParameters):
        raise TypeError("expected NormalParameters")
    size = tail_cutoff(params) if max_photons is None else int(max_photons)
    if size < 0:
        raise ValueError("max_photons must be non-negative")
    if method == "direct":
        return _finalize(params, _direct_probabilities(params, size), None, FLOAT_DIGITS, check, method)
    if method != "chain":
        raise ValueError(f"unknown method {method!r}")
    if size == 0:
        ctx = context(digits)
        p0 = p0_from_parameters(params, ctx)
        return _finalize(params, [p0], (p0,), digits, check, method)
    guard = _cancellation_digits(params, size) + 10
    ctx = context(digits + guard)
    lp, cp, m = _modified_values(params, ctx)
    f = _f_series(lp, cp, m, size, ctx)
    scaled = _scaled_moments_from_f(f, ctx)
    relative = moment_probability_map(params.mode_count, size).relative_from_scaled(scaled, ctx)
    p0 = p0_from_parameters(params, ctx)
    values = [p0] + [p0 * r for r in relative]
    out_ctx = context(digits)
    precise = tuple(out_ctx.mpf(v) for v in values)
    return _finalize(params, values, precise, digits, check, method)


def tail_cutoff(params, tail=TAIL_MASS, minimum=None):
    """Smallest convenient N with ``1 - sum_{n<=N} p_n <= tail``.

    Starts from mean + 10 standard deviations (and at least 8S) and extends
    until the computed tail mass is below ``tail``.
    """
    mean = params.mean_photon_number()
    sd = math.sqrt(max(params.photon_number_variance(), 0.0))
    n = max(int(math.ceil(mean + 10 * sd)), 8 * params.mode_count, minimum or 0)
    for _ in range(40):
        p = _direct_probabilities(params, n)
        if not np.all(np.isfinite(p)):
            break
        if 1.0 - math.fsum(p) <= tail:
            return n
        n = int(math.ceil(n * 1.5))
    return n


def forward_from_spec(spec, max_photons=None, tol_distinct=None, **kwargs):
    if not isinstance(spec, GaussianStateSpec):
        raise TypeError("expected GaussianStateSpec")
    if tol_distinct is None:
        params = extract_normal_parameters(spec)
    else:
        params = extract_normal_parameters(spec, tol_distinct)
    return forward_distribution(params, max_photons, **kwargs)
