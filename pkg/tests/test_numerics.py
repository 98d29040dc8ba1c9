import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dwpf.errors import InvalidContext, SeriesDivergence, SizeLimit
from dwpf.numerics import (BracketContext, Mode, bracket, bracket_array, bracket_product,
                           cofactor_determinant, determinant, for_each_permutation,
                           for_each_reflection, heap_permutations, lex_permutations,
                           permutation_block, permutation_block_count, permutation_sign,
                           permutation_table, product_oracle_bracket, reflection_masks,
                           unrank_permutation)

finite = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, finite, st.floats(-0.5, 0.5))
taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.3, 2.0))


def test_trig_bracket_is_sine():
    ctx = BracketContext.trig(1.0)
    assert bracket(ctx, math.pi / 2) == pytest.approx(1.0)


def test_rational_bracket_is_identity_and_ignores_gamma():
    ctx = BracketContext(Mode.RATIONAL, gamma=3.0)
    assert ctx.gamma == 1.0
    assert bracket(ctx, 0.25 + 1j) == 0.25 + 1j


@pytest.mark.parametrize("ctx", [BracketContext.trig(0.8), BracketContext.rational(),
                                 BracketContext.elliptic(0.6, 0.7j)])
def test_bracket_vanishes_at_zero(ctx):
    assert abs(bracket(ctx, 0)) < 1e-15


def test_elliptic_reduces_to_trig_for_tiny_nome():
    ell = BracketContext.elliptic(0.7, 12j)
    assert abs(bracket(ell, 0.4 + 0.1j) - cmath.sin(0.7 * (0.4 + 0.1j))) < 1e-12


@given(cplx, taus)
def test_elliptic_series_matches_triple_product(w, tau):
    ctx = BracketContext.elliptic(0.6, tau)
    a, b = bracket(ctx, w), product_oracle_bracket(ctx, w)
    assert abs(a - b) <= 1e-11 * max(abs(b), 1e-3)


@given(cplx, taus)
def test_elliptic_bracket_is_odd_and_pi_antiperiodic(w, tau):
    ctx = BracketContext.elliptic(0.6, tau)
    v = bracket(ctx, w)
    assert abs(bracket(ctx, -w) + v) < 1e-12 * max(1, abs(v))
    # theta_1(u + pi) = -theta_1(u)
    assert abs(bracket(ctx, w + math.pi / 0.6) + v) < 1e-10 * max(1, abs(v))


def test_bracket_array_matches_scalar():
    for ctx in (BracketContext.trig(0.5), BracketContext.elliptic(0.5, 0.8j),
                BracketContext.rational()):
        w = np.array([[0.1, 0.2 + 0.1j], [-0.7, 1.3j]])
        expect = np.array([[bracket(ctx, v) for v in row] for row in w])
        assert np.allclose(bracket_array(ctx, w), expect, atol=1e-14)


def test_bracket_product_empty_is_one():
    assert bracket_product(BracketContext.trig(), []) == 1


def test_context_invariants():
    with pytest.raises(InvalidContext):
        BracketContext.trig(0)
    with pytest.raises(InvalidContext):
        BracketContext.elliptic(0.5, -0.1j)
    with pytest.raises(InvalidContext):
        BracketContext(series_tol=0)
    with pytest.raises(InvalidContext):
        BracketContext(max_terms=0)
    assert Mode.parse("trigonometric") is Mode.TRIGONOMETRIC


def test_series_divergence_is_reported():
    ctx = BracketContext(Mode.ELLIPTIC, 0.5, 0.02j, max_terms=2)
    with pytest.raises(SeriesDivergence):
        bracket(ctx, 0.3)


# -- determinants

@given(st.integers(1, 6), st.integers(0, 2**31))
def test_lu_determinant_matches_cofactor_expansion(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = cofactor_determinant(m)
    assert abs(determinant(m) - ref) <= 1e-10 * max(1, abs(ref))


def test_determinant_of_singular_matrix_is_zero():
    assert determinant([[1, 2], [2, 4]]) == 0
    assert determinant(np.zeros((3, 3))) == 0


def test_determinant_rejects_non_square():
    with pytest.raises(ValueError):
        determinant(np.ones((2, 3)))


def test_determinant_needs_pivoting():
    assert determinant([[0, 1], [1, 0]]) == -1


# -- permutations

@pytest.mark.parametrize("L", range(1, 7))
def test_heap_covers_symmetric_group_with_signs(L):
    seen = {}
    for perm, sign in heap_permutations(L):
        assert sign == permutation_sign(perm)
        seen[perm] = sign
    assert len(seen) == math.factorial(L)


@pytest.mark.parametrize("L", [1, 3, 5])
def test_lex_order_matches_itertools(L):
    got = [p for p, _ in lex_permutations(L)]
    assert got == list(itertools.permutations(range(L)))


@given(st.integers(1, 7), st.data())
def test_unrank_and_chunked_lex_agree(L, data):
    total = math.factorial(L)
    start = data.draw(st.integers(0, total - 1))
    count = data.draw(st.integers(1, total))
    chunk = list(lex_permutations(L, start, count))
    assert chunk[0][0] == tuple(unrank_permutation(L, start))
    for perm, sign in chunk:
        assert sign == permutation_sign(perm)
    assert len(chunk) == min(count, total - start)


def test_for_each_permutation_visits_all():
    out = []
    for_each_permutation(4, lambda p, s: out.append(s))
    assert len(out) == 24 and sum(out) == 0


@pytest.mark.parametrize("L", [1, 4, 8, 9])
def test_permutation_blocks_reproduce_lex_order(L):
    perms = [permutation_block(L, k) for k in range(permutation_block_count(L))]
    allp = np.concatenate([p for p, _ in perms])
    signs = np.concatenate([s for _, s in perms])
    assert len(allp) == math.factorial(L)
    ref, ref_sign = permutation_table(L, 0, math.factorial(L))
    assert np.array_equal(allp, ref)
    assert np.array_equal(signs, ref_sign)


def test_reflection_signs():
    masks = list(reflection_masks(3))
    assert len(masks) == 8
    assert all(s == (-1) ** bin(m).count("1") for m, s in masks)
    acc = []
    for_each_reflection(2, lambda m, s: acc.append(s))
    assert acc == [1, -1, -1, 1]


def test_enumeration_size_limits():
    with pytest.raises(SizeLimit):
        list(heap_permutations(0))
    with pytest.raises(SizeLimit):
        list(heap_permutations(13))
    with pytest.raises(SizeLimit):
        list(reflection_masks(25))
