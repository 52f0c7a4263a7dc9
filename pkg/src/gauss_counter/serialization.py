"""Versioned JSON documents.

Every document carries ``schema_version`` (currently 1), the package
``version`` and a ``kind``. Floats are written with 17 significant digits so
doubles survive a round trip; mpmath numbers are written with all of their
digits. On reading, numbers with more than 17 significant digits are kept
as ``Decimal`` so extended-precision probabilities are not truncated.
"""

import json
import math
from decimal import Decimal

import mpmath
import numpy as np

from . import __version__
from .errors import InvalidParameters

SCHEMA_VERSION = 1
FLOAT_DIGITS_OUT = 17

KINDS = (
    "state",
    "normal_parameters",
    "photon_distribution",
    "sample_run",
    "inversion_report",
    "fit_result",
    "roundtrip",
    "projector_polynomial",
    "moments",
    "error",
)


def _is_mpf(x):
    # each mpmath context builds its own mpf class, so test for the payload
    return hasattr(x, "_mpf_")


def _number(x):
    if _is_mpf(x):
        if not mpmath.isfinite(x):
            return "null"
        digits = max(FLOAT_DIGITS_OUT, int(x.context.dps))
        return mpmath.nstr(x, digits, min_fixed=-4, max_fixed=digits, strip_zeros=False)
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, f".{FLOAT_DIGITS_OUT}g") if x != int(x) or abs(x) >= 1e17 else repr(x)


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)) or _is_mpf(obj):
        return _number(obj)
    if isinstance(obj, Decimal):
        return str(obj) if obj.is_finite() else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def envelope(kind, payload):
    """``payload`` with the schema header prepended."""
    if kind not in KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    out = {"schema_version": SCHEMA_VERSION, "version": __version__, "kind": kind}
    out.update(payload)
    return out


def dumps(kind, payload, indent=2):
    return _encode(envelope(kind, payload), indent, 0) + "\n"


def _parse_float(text):
    mantissa = text.lower().split("e")[0].lstrip("+-").replace(".", "").lstrip("0")
    if len(mantissa) > FLOAT_DIGITS_OUT:
        return Decimal(text)
    return float(text)


def loads(text):
    """Parse a document; returns the raw dict (header included)."""
    try:
        data = json.loads(text, parse_float=_parse_float)
    except json.JSONDecodeError as exc:
        raise InvalidParameters(f"input is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidParameters("input must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InvalidParameters(f"unsupported schema_version {version}")
    return data


def detect_kind(data):
    """Kind of a parsed document, from its header or, failing that, its keys."""
    kind = data.get("kind")
    if kind is not None:
        return kind
    if "covariance" in data:
        return "state"
    if "eigenvalues" in data:
        return "normal_parameters"
    if "probabilities" in data:
        return "photon_distribution"
    if "counts" in data:
        return "sample_run"
    if "parameters" in data and "diagnostics" in data:
        return "inversion_report"
    if "parameters" in data and "nll" in data:
        return "fit_result"
    raise InvalidParameters("cannot tell what kind of document this is")


def read_object(data, expected=None):
    """Library object for a parsed document.

    ``expected`` restricts the accepted kinds; inversion reports and fit
    results yield their ``NormalParameters``.
    """
    from .forward import PhotonDistribution
    from .oracle import SampleRun
    from .state_model import GaussianStateSpec, NormalParameters

    kind = detect_kind(data)
    if expected is not None and kind not in expected:
        raise InvalidParameters(f"expected one of {sorted(expected)}, got {kind!r}")
    body = {k: v for k, v in data.items() if k not in ("schema_version", "version", "kind")}
    try:
        if kind == "state":
            return kind, GaussianStateSpec.from_dict(_floats(body))
        if kind == "normal_parameters":
            return kind, NormalParameters.from_dict(_floats(body))
        if kind in ("inversion_report", "fit_result"):
            return kind, NormalParameters.from_dict(_floats(body["parameters"]))
        if kind == "photon_distribution":
            return kind, PhotonDistribution.from_dict(body)
        if kind == "sample_run":
            return kind, SampleRun.from_dict(_floats(body))
    except KeyError as exc:
        raise InvalidParameters(f"missing field {exc.args[0]!r} in {kind} document") from exc
    raise InvalidParameters(f"documents of kind {kind!r} cannot be used as input")


def _floats(obj):
    if isinstance(obj, Decimal):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_floats(v) for v in obj]
    return obj
