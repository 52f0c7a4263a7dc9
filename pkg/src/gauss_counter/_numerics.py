"""Small numeric helpers shared by the engines.

Extended-precision work uses a private ``mpmath.MPContext`` per call so that
concurrent callers with different precisions never share mutable state.
"""

import math
import os

import mpmath

# Decimal digits carried by an IEEE double.
FLOAT_DIGITS = 16
# Working precision used for exact (theorem-level) round trips.
EXACT_DIGITS = 120


def context(dps):
    ctx = mpmath.MPContext()
    ctx.dps = int(dps)
    return ctx


def fsum(values, ctx=None):
    if ctx is None:
        return math.fsum(values)
    return ctx.fsum(values)


def to_float(x):
    return float(x)


def digits_of(x):
    """Significant decimal digits carried by ``x`` (a float or an mpf)."""
    if isinstance(x, float) or isinstance(x, int):
        return FLOAT_DIGITS
    prec = getattr(x, "context", None)
    if prec is not None:
        return int(prec.dps)
    return FLOAT_DIGITS


def log10_binomial(n, k):
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(10)


def worker_count(default=None):
    """Worker cap from ``GAUSS_COUNTER_THREADS`` (falls back to the CPU count)."""
    raw = os.environ.get("GAUSS_COUNTER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    if default is not None:
        return default
    return max(1, min(8, os.cpu_count() or 1))
