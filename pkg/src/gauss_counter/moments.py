"""Moments of r**2, raw cumulants and the normalized coefficients f_n.

``f_n = kappa_n / (n-1)!`` is the degree n-1 coefficient of the logarithmic
derivative of the moment generating function. With ``a_n = mu_n / n!`` the
moment/cumulant recursion reads ``n a_n = sum_{k=1..n} f_k a_{n-k}``, which
is what both directions below use (no factorial growth in the
intermediates). ``mu_0 = 1`` is implied everywhere.
"""

import math

from ._numerics import fsum
from .errors import NonFiniteInput
from .projector_kernel import probabilities_to_moments


def _finite(values):
    for v in values:
        try:
            ok = math.isfinite(v)
        except (TypeError, OverflowError):
            ok = v == v
        if not ok:
            raise NonFiniteInput("non-finite entry in input vector")


def f_to_moments(f, ctx=None):
    """Moments ``mu_1..mu_n`` from ``f_1..f_n``."""
    _finite(f)
    one = 1.0 if ctx is None else ctx.mpf(1)
    a = [one]
    for n in range(1, len(f) + 1):
        a.append(fsum([f[k - 1] * a[n - k] for k in range(1, n + 1)], ctx) / n)
    return [a[n] * math.factorial(n) for n in range(1, len(f) + 1)]


def moments_to_f(mu, ctx=None):
    """``f_1..f_n`` from moments ``mu_1..mu_n``."""
    _finite(mu)
    one = 1.0 if ctx is None else ctx.mpf(1)
    a = [one] + [one * m / math.factorial(n) for n, m in enumerate(mu, start=1)]
    f = []
    for n in range(1, len(mu) + 1):
        rest = fsum([f[k - 1] * a[n - k] for k in range(1, n)], ctx)
        f.append(n * a[n] - rest)
    return f


def f_to_cumulants(f):
    return [math.factorial(n - 1) * v for n, v in enumerate(f, start=1)]


def moments_to_cumulants(mu, ctx=None):
    return f_to_cumulants(moments_to_f(mu, ctx))


def probabilities_to_f(p, mode_count, n=None, ctx=None):
    """``f_1..f_n`` straight from photon-number probabilities ``p_0..p_n``.

    Defaults to ``n = 8S`` when enough probabilities are supplied.
    """
    if n is None:
        n = min(len(p) - 1, 8 * mode_count)
    mu = probabilities_to_moments(p, mode_count, n, ctx)
    return moments_to_f(mu, ctx)


def moment_triple(p, mode_count, n=None, ctx=None):
    """``(mu, kappa, f)`` for the debug dump."""
    if n is None:
        n = len(p) - 1
    mu = probabilities_to_moments(p, mode_count, n, ctx)
    f = moments_to_f(mu, ctx)
    return mu, f_to_cumulants(f), f
