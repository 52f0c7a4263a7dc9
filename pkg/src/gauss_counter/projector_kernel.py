"""Wigner polynomials of the n-photon projector and the affine map between
photon-number probabilities and moments of r**2.

The projector's Wigner function is ``W_n(r) = exp(-r**2) * P_n(r**2)`` with

    P_n(x) = sum_l (-1)**(n+l) * 2**l * C(n+S-1, l+S-1) / (pi**S * l!) * x**l.

Writing ``s_l = 2**l * mu_l / l!`` for the scaled moments of r**2 under the
tilted distribution, the relative probabilities are

    p_k / p_0 = sum_{l=0..k} (-1)**(k+l) * C(k+S-1, l+S-1) * s_l,   s_0 = 1,

i.e. an integer unit-lower-triangular matrix acting on ``s``. The unscaled
matrix ``M`` and offset ``b`` are exposed for reference.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._numerics import fsum
from .errors import NonFiniteInput, NumericalInstability, ZeroP0


@lru_cache(maxsize=None)
def _binomial_rows(mode_count, size):
    """Integer matrix ``C(k+S-1, l+S-1)`` for 0 <= l <= k <= size, as tuples."""
    s = mode_count
    return tuple(tuple(math.comb(k + s - 1, l + s - 1) for l in range(k + 1)) for k in range(size + 1))


@dataclass(frozen=True)
class ProjectorPolynomial:
    mode_count: int
    photon_number: int

    def rational_coefficients(self):
        """Coefficients times ``pi**S``, exact."""
        n, s = self.photon_number, self.mode_count
        return [
            Fraction((-1) ** (n + l) * 2**l * math.comb(n + s - 1, l + s - 1), math.factorial(l))
            for l in range(n + 1)
        ]

    def log_abs_coefficients(self):
        n, s = self.photon_number, self.mode_count
        l = np.arange(n + 1)
        lbinom = np.array([math.lgamma(n + s) - math.lgamma(k + s) - math.lgamma(n - k + 1) for k in l])
        return l * math.log(2) + lbinom - np.array([math.lgamma(k + 1) for k in l]) - s * math.log(math.pi)

    def signs(self):
        n = self.photon_number
        return np.array([(-1) ** (n + l) for l in range(n + 1)])

    @property
    def coefficients(self):
        """Monomial coefficients ``a_0..a_n`` as floats."""
        logs = self.log_abs_coefficients()
        if np.max(logs) > 700:
            raise NumericalInstability(
                f"P_{self.photon_number} coefficients overflow double precision; "
                "use rational_coefficients()"
            )
        if self.photon_number <= 60:
            scale = math.pi ** (-self.mode_count)
            return np.array([float(a) * scale for a in self.rational_coefficients()])
        return self.signs() * np.exp(logs)

    def __call__(self, x):
        """Horner evaluation of ``P_n`` at ``x`` (scalar or array)."""
        out = np.zeros_like(np.asarray(x, dtype=float))
        for a in self.coefficients[::-1]:
            out = out * x + a
        return out

    def wigner(self, r2):
        """``W_n`` as a function of r**2."""
        r2 = np.asarray(r2, dtype=float)
        return np.exp(-r2) * self(r2)

    def to_dict(self):
        return {
            "mode_count": self.mode_count,
            "photon_number": self.photon_number,
            "coefficients": self.coefficients.tolist(),
        }


def projector_polynomial(mode_count, photon_number):
    if mode_count < 1 or photon_number < 0:
        raise ValueError("mode_count must be >= 1 and photon_number >= 0")
    return ProjectorPolynomial(int(mode_count), int(photon_number))


@dataclass(frozen=True)
class MomentProbabilityMap:
    mode_count: int
    size: int

    @property
    def matrix(self):
        """``M[k-1, l-1] = (-1)**(k+l) * 2**l / l! * C(k+S-1, l+S-1)`` for k >= l >= 1."""
        rows = _binomial_rows(self.mode_count, self.size)
        out = np.zeros((self.size, self.size))
        for k in range(1, self.size + 1):
            for l in range(1, k + 1):
                out[k - 1, l - 1] = (-1) ** (k + l) * 2.0**l / math.factorial(l) * rows[k][l]
        return out

    @property
    def offset(self):
        """``b[k-1] = (-1)**k * C(k+S-1, S-1)``, the contribution of mu_0 = 1."""
        rows = _binomial_rows(self.mode_count, self.size)
        return np.array([(-1) ** k * rows[k][0] for k in range(1, self.size + 1)], dtype=float)

    def relative_from_scaled(self, scaled, ctx=None):
        """Relative probabilities ``p_k/p_0`` (k = 1..size) from scaled moments ``s_1..s_size``."""
        rows = _binomial_rows(self.mode_count, self.size)
        s = [1] + list(scaled[: self.size])
        out = []
        for k in range(1, self.size + 1):
            row = rows[k]
            terms = [(-1) ** (k + l) * row[l] * s[l] for l in range(k + 1)]
            out.append(fsum(terms, ctx))
        return out

    def scaled_from_relative(self, relative, ctx=None):
        """Forward substitution of the unit-diagonal system; ``relative`` holds p_1/p_0..p_size/p_0."""
        rows = _binomial_rows(self.mode_count, self.size)
        s = [1]
        for k in range(1, self.size + 1):
            row = rows[k]
            rest = [(-1) ** (k + l) * row[l] * s[l] for l in range(k)]
            s.append(relative[k - 1] - fsum(rest, ctx))
        return s[1:]

    def apply(self, moments, ctx=None):
        """``b + M @ mu`` for raw moments ``mu_1..mu_size``."""
        return self.relative_from_scaled(scale_moments(moments, ctx), ctx)

    def solve(self, relative, ctx=None):
        """``M^{-1} (p_rel - b)``: raw moments from relative probabilities."""
        return unscale_moments(self.scaled_from_relative(relative, ctx), ctx)


def moment_probability_map(mode_count, size):
    if mode_count < 1 or size < 1:
        raise ValueError("mode_count and size must be positive")
    return MomentProbabilityMap(int(mode_count), int(size))


def scale_moments(moments, ctx=None):
    one = 1 if ctx is None else ctx.mpf(1)
    return [one * mu * 2**l / math.factorial(l) for l, mu in enumerate(moments, start=1)]


def unscale_moments(scaled, ctx=None):
    one = 1 if ctx is None else ctx.mpf(1)
    return [one * s * math.factorial(l) / 2**l for l, s in enumerate(scaled, start=1)]


def _check_probabilities(p, n):
    if len(p) < n + 1:
        raise ValueError(f"need at least {n + 1} probabilities, got {len(p)}")
    for x in p[: n + 1]:
        try:
            finite = math.isfinite(x)
        except TypeError:
            finite = x == x and abs(x) != float("inf")
        if not finite:
            raise NonFiniteInput("probabilities must be finite")
    if not p[0] > 0:
        raise ZeroP0("p_0 must be positive")


def probabilities_to_scaled_moments(p, mode_count, n=None, ctx=None):
    """Scaled moments ``s_k = 2**k mu_k / k!`` for k = 1..n."""
    if n is None:
        n = len(p) - 1
    _check_probabilities(p, n)
    p0 = p[0] if ctx is None else ctx.mpf(p[0])
    rel = [(x if ctx is None else ctx.mpf(x)) / p0 for x in p[1 : n + 1]]
    return moment_probability_map(mode_count, n).scaled_from_relative(rel, ctx)


def probabilities_to_moments(p, mode_count, n=None, ctx=None):
    """Moments ``mu_1..mu_n`` of r**2 under the tilted distribution."""
    scaled = probabilities_to_scaled_moments(p, mode_count, n, ctx)
    return unscale_moments(scaled, ctx)
