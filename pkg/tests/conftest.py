import logging
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from gauss_counter.state_model import NormalParameters

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SQRT2 = math.sqrt(2.0)
E = math.e


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def thermal():
    return NormalParameters([3.0], [2], [0.0])


@pytest.fixture
def coherent():
    return NormalParameters([1.0], [2], [SQRT2])


@pytest.fixture
def mixed_s2():
    return NormalParameters([2.0, 1.0], [2, 2], [SQRT2, 0.0])


@pytest.fixture(autouse=True)
def _quiet_clamp_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="gauss_counter.forward")


@st.composite
def normal_parameters(draw, max_modes=3, lam=(0.3, 5.0), c=(0.0, 2.0), physical=True, c_floor=0.0):
    """Valid NormalParameters with well-separated eigenvalues.

    Displacements below ``c_floor`` are replaced by zero.
    """
    s = draw(st.integers(1, max_modes))
    parts = []
    left = 2 * s
    while left:
        k = draw(st.integers(1, left))
        parts.append(k)
        left -= k
    h = len(parts)
    logs = draw(
        st.lists(st.floats(math.log(lam[0]), math.log(lam[1])), min_size=h, max_size=h, unique=True)
    )
    vals = np.sort(np.exp(logs))[::-1]
    if h > 1:
        assume(np.all((vals[:-1] - vals[1:]) / vals[:-1] >= 0.05))
    spectrum = np.repeat(vals, parts)
    if physical:
        assume(np.all(spectrum[:s] * spectrum[::-1][:s] >= 1))
    cs = draw(st.lists(st.floats(*c), min_size=h, max_size=h))
    cs = [x if x >= c_floor else 0.0 for x in cs]
    return NormalParameters(vals, parts, cs)
