import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dwpf.errors import DynamicalPole, SizeLimit
from dwpf.functional import eigenvalues_refl
from dwpf.numerics import BracketContext
from dwpf.oracle import (SpinState, a_operator_eigenvalues, count_dw_configs, dwpf_contract,
                         dwpf_enumerate, refl_contract)
from dwpf.params import ModelParams, relative_residual

from conftest import draw, draw_refl, elliptic, seeds, trig


@pytest.mark.parametrize("L,count", [(1, 1), (2, 2), (3, 7), (4, 42), (5, 429)])
def test_configuration_counts_are_asm_numbers(L, count):
    assert count_dw_configs(L) == count


def test_single_site_is_c_weight():
    p = ModelParams([0.3], [0.1], trig(1.0))
    assert dwpf_enumerate(p).value == pytest.approx(math.sin(1.0))
    assert dwpf_contract(p).value == pytest.approx(math.sin(1.0))


def test_two_by_two_closed_form():
    # two configurations: c c b b and c c a a in some order of rows
    ctx = trig(0.9)
    p = ModelParams([0.2, -0.5], [0.4, 0.1], ctx)
    s = lambda w: np.sin(0.9 * w)  # noqa: E731
    w = [[p.x[i].real - p.y[j].real for j in range(2)] for i in range(2)]
    expect = s(1) ** 2 * (s(w[0][0] + 1) * s(w[1][1] + 1) + s(w[0][1]) * s(w[1][0]))
    assert abs(dwpf_enumerate(p).value - expect) < 1e-14


@given(seeds, st.integers(1, 4), st.sampled_from(["trig", "rational"]))
def test_enumeration_matches_contraction(seed, L, mode):
    ctx = trig(0.7) if mode == "trig" else BracketContext.rational()
    p = draw(seed, L, ctx)
    assert relative_residual(dwpf_enumerate(p), dwpf_contract(p)) < 1e-10


@given(seeds, st.integers(2, 4))
def test_enumeration_with_perturbed_c_weight_differs(seed, L):
    p = draw(seed, L)
    assert relative_residual(dwpf_enumerate(p, c_scale=1.1), dwpf_contract(p)) > 1e-4


def test_enumeration_term_count():
    assert dwpf_enumerate(draw(3, 4)).terms == 42


def test_size_limits():
    with pytest.raises(SizeLimit):
        dwpf_enumerate(draw(1, 5))
    with pytest.raises(SizeLimit):
        count_dw_configs(6)
    with pytest.raises(ValueError):
        dwpf_contract(draw(1, 2, elliptic()))


def test_spin_state():
    s = SpinState(3, 0b101)
    assert s.spins() == (0, 1, 0)
    assert SpinState.all_up(3).bits == 7 and SpinState.all_down(3).bits == 0
    with pytest.raises(ValueError):
        SpinState(2, 4)


# reflecting end

@given(seeds, st.integers(1, 3))
def test_reference_eigenvalues_match_lattice(seed, L):
    p = draw_refl(seed, L + 1)
    sub, x0 = p.with_(x=p.x[1:], y=p.y[1:]), p.x[0]
    bottom, top = a_operator_eigenvalues(sub, x0)
    ev = eigenvalues_refl(sub, x0)
    assert relative_residual(bottom, ev.up_a) < 1e-10
    assert relative_residual(top, ev.down_a) < 1e-10


def test_refl_contract_single_site_by_hand():
    # one double row with one column: only the c-c path through k_+ survives
    p = draw_refl(5, 1, trig(0.7))
    from dwpf.closed_forms import tfk_determinant
    assert relative_residual(refl_contract(p), tfk_determinant(p)) < 1e-12


def test_refl_contract_rejects_z_pole():
    p = draw_refl(2, 2, trig(0.7)).with_(z=0.0)
    with pytest.raises(DynamicalPole):
        refl_contract(p)


def test_refl_contract_needs_kappa():
    with pytest.raises(ValueError):
        refl_contract(draw(1, 2))
