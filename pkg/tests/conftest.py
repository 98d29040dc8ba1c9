import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from dwpf.numerics import BracketContext
from dwpf.params import random_params

settings.register_profile("dwpf", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dwpf")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def trig(gamma=0.7):
    return BracketContext.trig(gamma)


def elliptic(gamma=0.6, tau=0.9j):
    return BracketContext.elliptic(gamma, tau)


def draw(seed, L, ctx=None, **kw):
    return random_params(np.random.default_rng(seed), L, ctx or trig(), **kw)


def draw_refl(seed, L, ctx=None):
    return draw(seed, L, ctx or elliptic(), dynamical=True, reflecting=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
