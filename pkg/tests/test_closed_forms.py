import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dwpf import closed_forms as cf
from dwpf.errors import BoundaryPole, GenericPositionViolation
from dwpf.numerics import BracketContext
from dwpf.oracle import dwpf_contract, refl_contract
from dwpf.params import ModelParams, relative_residual

from conftest import draw, draw_refl, elliptic, seeds, trig

rr = relative_residual
six_vertex_ctx = st.one_of(st.floats(0.3, 1.2).map(BracketContext.trig),
                           st.just(BracketContext.rational()))
elliptic_ctx = st.builds(lambda g, t: BracketContext.elliptic(g, t), st.floats(0.4, 0.8),
                         st.builds(complex, st.floats(-0.3, 0.3), st.floats(0.3, 2.0)))


@given(seeds, st.integers(1, 6), six_vertex_ctx)
def test_izergin_matches_contraction(seed, L, ctx):
    p = draw(seed, L, ctx)
    assert rr(cf.izergin_determinant(p), dwpf_contract(p)) < 1e-8


@given(seeds, st.integers(1, 6), six_vertex_ctx)
def test_sums_match_izergin(seed, L, ctx):
    p = draw(seed, L, ctx)
    det = cf.izergin_determinant(p)
    for f in (cf.symmetrized_sum, cf.antisym_sum, cf.lagrange_sum):
        assert rr(f(p), det) < 1e-8


def test_sum_term_counts_are_factorial():
    p = draw(7, 5)
    for f in (cf.symmetrized_sum, cf.antisym_sum, cf.lagrange_sum):
        assert f(p).terms == math.factorial(5)


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_sums_are_thread_count_invariant(threads):
    p = draw(11, 8)
    assert cf.symmetrized_sum(p, threads=threads).value == cf.symmetrized_sum(p, threads=1).value


def test_threads_fall_back_to_environment(monkeypatch):
    monkeypatch.setenv("DWPF_THREADS", "3")
    assert cf.resolve_threads(None) == 3
    assert cf.resolve_threads(2) == 2


@given(seeds, st.integers(2, 5))
def test_symmetric_in_spectral_parameters(seed, L):
    p = draw(seed, L)
    perm = np.random.default_rng(seed).permutation(L)
    q = p.with_x([p.x[i] for i in perm])
    assert rr(cf.izergin_determinant(p), cf.izergin_determinant(q)) < 1e-10


@given(seeds, st.integers(1, 5))
def test_duality_between_x_and_y(seed, L):
    p = draw(seed, L)
    dual = ModelParams(tuple(v - 1 for v in p.y), p.x, p.ctx)
    assert rr(cf.izergin_determinant(p), cf.izergin_determinant(dual)) < 1e-9


@pytest.mark.parametrize("L", [2, 3, 4])
def test_degree_in_one_variable(L):
    # e^{i(L-1)g x} Z is a polynomial of degree L-1 in e^{2igx}, not less
    g = 0.7
    p = draw(L, L, trig(g))
    ts = np.linspace(-1, 1, 2 * L) + 0.05j
    vals = np.array([cf.izergin_determinant(p.with_x([t, *p.x[1:]], special=True)).value
                     for t in ts])
    basis = np.array([[cmath.exp(1j * g * t * (2 * n - (L - 1))) for n in range(L)] for t in ts])
    fit = basis @ np.linalg.lstsq(basis, vals, rcond=None)[0]
    assert np.abs(fit - vals).max() / np.abs(vals).max() < 1e-10
    low = basis[:, : L - 1]
    fit_low = low @ np.linalg.lstsq(low, vals, rcond=None)[0]
    assert np.abs(fit_low - vals).max() / np.abs(vals).max() > 1e-6


def test_izergin_rejects_elliptic_and_coincident_x():
    with pytest.raises(ValueError):
        cf.izergin_determinant(draw(1, 2, elliptic()))
    p = draw(1, 2)
    with pytest.raises(GenericPositionViolation):
        cf.izergin_determinant(p.with_x([p.x[0], p.x[0]]))


# reflecting end

@given(seeds, st.integers(1, 3), st.one_of(elliptic_ctx, st.just(BracketContext.trig(0.7)),
                                           st.just(BracketContext.rational())))
def test_tfk_matches_face_transfer(seed, L, ctx):
    p = draw_refl(seed, L, ctx)
    assert rr(refl_contract(p), cf.tfk_determinant(p)) < 1e-8


@given(seeds, st.integers(1, 4), elliptic_ctx)
def test_reflecting_formulas_agree(seed, L, ctx):
    p = draw_refl(seed, L, ctx)
    tfk = cf.tfk_determinant(p)
    assert rr(cf.refl_symmetrized_sum(p), tfk) < 1e-8
    assert rr(cf.crossing_symmetrized_sum(p), tfk) < 1e-8


@given(seeds, st.integers(2, 4))
def test_crossing_sum_sign_form(seed, L):
    p = draw_refl(seed, L)
    assert rr(cf.crossing_symmetrized_sum(p, form="sign"), cf.crossing_symmetrized_sum(p)) < 1e-11


def test_crossing_sum_counts_reflections():
    assert cf.crossing_symmetrized_sum(draw_refl(4, 3)).terms == 8
    with pytest.raises(ValueError):
        cf.crossing_symmetrized_sum(draw_refl(4, 2), form="other")


@given(seeds, st.integers(1, 3))
def test_mn_crossing_exchanges_terms(seed, n):
    p = draw_refl(seed, n)
    xs = list(p.x)
    t1, t2 = cf.m_n_terms(p, xs, n)
    xs[-1] = -xs[-1] - 1
    s1, s2 = cf.m_n_terms(p, xs, n)
    assert rr(t1, s2) < 1e-10 and rr(t2, s1) < 1e-10


@given(seeds, st.integers(1, 3), st.data())
def test_renormalised_value_is_crossing_symmetric(seed, L, data):
    p = draw_refl(seed, L)
    i = data.draw(st.integers(0, L - 1))
    x = list(p.x)
    x[i] = -x[i] - 1
    assert rr(cf.zbar(p), cf.zbar(p.with_x(x))) < 1e-9
    assert rr(cf.zbar(p, refl_contract), cf.zbar(p.with_x(x), refl_contract)) < 1e-8


@pytest.mark.parametrize("L", [1, 2, 3])
def test_crossing_doubles_the_degree(L):
    # zbar is a degree 2(L-1) trig polynomial in x_1 + 1/2 with crossing symmetry
    g = 0.7
    p = draw_refl(L + 20, L, trig(g))
    ts = np.linspace(-1, 1, 4 * L) + 0.05j
    vals = np.array([cf.zbar(p.with_x([t, *p.x[1:]], special=True)).value for t in ts])
    basis = np.array([[cmath.exp(2j * g * (t + 0.5) * (n - (L - 1))) for n in range(2 * L - 1)]
                      for t in ts])
    fit = basis @ np.linalg.lstsq(basis, vals, rcond=None)[0]
    assert np.abs(fit - vals).max() / np.abs(vals).max() < 1e-9


@given(seeds, st.sampled_from([0.6, 1.1]))
def test_crossing_sum_independent_of_boundary_draw(seed, gamma):
    p = draw_refl(seed, 3, elliptic(gamma))
    rng = np.random.default_rng(seed)
    from dwpf.validation import redraw_boundary
    for _ in range(3):
        q = redraw_boundary(rng, p)
        assert rr(cf.crossing_symmetrized_sum(q), cf.tfk_determinant(q)) < 1e-8


@given(seeds, st.integers(1, 4), st.sampled_from(["trig", "rational"]))
def test_six_vertex_reflecting_limit(seed, L, mode):
    ctx = trig(0.7) if mode == "trig" else BracketContext.rational()
    p = draw(seed, L, ctx, reflecting=True)
    assert p.z is None
    assert rr(cf.six_vertex_refl_formula(p), cf.tfk_determinant(p)) < 1e-9
    assert rr(cf.six_vertex_refl_formula(p), refl_contract(p)) < 1e-8


def test_z_ell_reduces_to_symmetrized_sum_without_z():
    p = draw(3, 3, reflecting=True)
    assert rr(cf.z_ell(p), cf.symmetrized_sum(p)) < 1e-12


def test_refl_prefactor_guards_boundary_pole():
    p = draw_refl(9, 2, trig(0.7))
    with pytest.raises(BoundaryPole):
        cf.refl_prefactor(p.with_(z=-p.kappa - p.x[0]))
