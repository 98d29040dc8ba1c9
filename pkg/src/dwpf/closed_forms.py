"""Closed-form expressions for both partition functions.

Sums over S_L are evaluated block-wise (see :func:`numerics.permutation_block`):
each block is a vectorised numpy product over (i, j) pairs, and blocks are
reduced in index order, so the result does not depend on ``threads``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .errors import BoundaryPole, DynamicalPole, PoleAtEvaluation, ReflectionPole
from .numerics import (BracketContext, Mode, bracket, bracket_array, determinant,
                       permutation_block, permutation_block_count, reflection_masks)
from .params import ModelParams, PartitionValue

POLE_GUARD = 1e-12


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else $DWPF_THREADS, else 1."""
    if threads is None:
        threads = int(os.environ.get("DWPF_THREADS", "1") or 1)
    return max(1, int(threads))


def _perm_sum(L: int, summand: Callable[[np.ndarray, np.ndarray], np.ndarray],
              threads: int | None = None) -> tuple[complex, float, int]:
    """Sum ``summand(perms, signs)`` over S_L; returns (sum, max |term|, count)."""
    nblocks = permutation_block_count(L)

    def run(k):
        perms, signs = permutation_block(L, k)
        terms = summand(perms, signs)
        return complex(terms.sum()), float(np.abs(terms).max()), len(terms)

    n = resolve_threads(threads)
    if n == 1 or nblocks == 1:
        parts = [run(k) for k in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(run, range(nblocks)))
    total = 0j
    for s, _, _ in parts:
        total += s
    return total, max(m for _, m, _ in parts), sum(c for _, _, c in parts)


def _br(ctx: BracketContext, w) -> np.ndarray:
    return bracket_array(ctx, w)


def _diff(a, b) -> np.ndarray:
    return np.subtract.outer(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _add(a, b) -> np.ndarray:
    return np.add.outer(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _require_nonzero(vals, exc, what):
    if np.any(np.abs(vals) < POLE_GUARD):
        raise exc(f"{what} vanishes")


def _pairs(L):
    return [(i, j) for i in range(L) for j in range(i + 1, L)]


# -- domain-wall boundaries ----------------------------------------------------------

def _scaled_det(w: np.ndarray) -> complex:
    """prod(w) * det(1/w), evaluated without dividing by any entry.

    Row i of 1/w is scaled by prod_k w[i, k], giving entries prod_{k != j} w[i, k];
    this stays finite where an entry of w vanishes.
    """
    n = w.shape[0]
    m = np.empty_like(w)
    for j in range(n):
        m[:, j] = np.prod(np.delete(w, j, axis=1), axis=1)
    return determinant(m)


def izergin_determinant(p: ModelParams) -> PartitionValue:
    """Izergin's determinant for the six-vertex domain-wall partition function."""
    if p.ctx.mode is Mode.ELLIPTIC:
        raise ValueError("izergin_determinant needs trig or rational mode")
    p.check_generic()
    ctx, L = p.ctx, p.L
    d = _diff(p.x, p.y)
    w = _br(ctx, d) * _br(ctx, d + 1)
    den = 1 + 0j
    for i, j in _pairs(L):
        den *= bracket(ctx, p.x[i] - p.x[j]) * bracket(ctx, p.y[j] - p.y[i])
    value = bracket(ctx, 1) ** L / den * _scaled_det(w)
    return PartitionValue(value, "izergin", max(abs(value), 1e-300))


def _sym_sum_terms(ctx, x, y, extra=None):
    """Summand of the symmetrized sum, optionally times extra(perms)."""
    L = len(x)
    A = _br(ctx, _diff(x, y))            # [x_a - y_j]
    B = _br(ctx, _diff(x, y) + 1)        # [x_b - y_i + 1]
    dx = _diff(x, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        C = _br(ctx, dx + 1) / _br(ctx, dx)
    c1 = bracket(ctx, 1) ** L

    def summand(perms, signs):
        t = np.full(len(perms), c1, dtype=complex)
        for i, j in _pairs(L):
            si, sj = perms[:, i], perms[:, j]
            t *= A[si, j] * B[sj, i] * C[si, sj]
        if extra is not None:
            t *= extra(perms)
        return t

    return summand


def symmetrized_sum(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Sum over S_L acting on x of pairwise products, with the [1]^L factor."""
    p.check_generic()
    total, scale, n = _perm_sum(p.L, _sym_sum_terms(p.ctx, p.x, p.y), threads)
    return PartitionValue(total, "symmetrized_sum", scale, n)


def antisym_sum(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Signed sum divided by the Vandermonde-type product of [x_i - x_j]."""
    p.check_generic()
    ctx, L = p.ctx, p.L
    A = _br(ctx, _diff(p.x, p.y))
    B = _br(ctx, _diff(p.x, p.y) + 1)
    C = _br(ctx, _diff(p.x, p.x) + 1)
    vdm = 1 + 0j
    for i, j in _pairs(L):
        vdm *= bracket(ctx, p.x[i] - p.x[j])
    pref = bracket(ctx, 1) ** L / vdm

    def summand(perms, signs):
        t = signs.astype(complex) * pref
        for i, j in _pairs(L):
            si, sj = perms[:, i], perms[:, j]
            t *= A[si, j] * B[sj, i] * C[si, sj]
        return t

    total, scale, n = _perm_sum(L, summand, threads)
    return PartitionValue(total, "antisym_sum", scale, n)


def lagrange_sum(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Symmetrized sum over permutations of the inhomogeneities."""
    p.check_generic()
    ctx, L = p.ctx, p.L
    A = _br(ctx, _diff(p.x, p.y))         # [x_i - y_b]
    B = _br(ctx, _diff(p.x, p.y) + 1)     # [x_j - y_a + 1]
    dy = _diff(p.y, p.y)
    with np.errstate(divide="ignore", invalid="ignore"):
        C = _br(ctx, dy + 1) / _br(ctx, dy)
    c1 = bracket(ctx, 1) ** L

    def summand(perms, signs):
        t = np.full(len(perms), c1, dtype=complex)
        for i, j in _pairs(L):
            si, sj = perms[:, i], perms[:, j]
            t *= A[i, sj] * B[j, si] * C[si, sj]
        return t

    total, scale, n = _perm_sum(L, summand, threads)
    return PartitionValue(total, "lagrange_sum", scale, n)


# -- reflecting end ---------------------------------------------------------------

def _zb(ctx, z, w):
    """[z + w], or 1 when z is dropped."""
    return 1.0 if z is None else bracket(ctx, z + w)


def refl_prefactor(p: ModelParams) -> complex:
    """Product over i of [k - y_i, 2x_i][z + k + y_i, z + 2i - L - 2]/[z + k + x_i, z + L - i].

    Every bracket containing z is dropped when ``p.z`` is None.
    """
    if p.kappa is None:
        raise ValueError("reflecting-end formulas need kappa")
    ctx, L, k, z = p.ctx, p.L, p.kappa, p.z
    out = 1 + 0j
    for n in range(1, L + 1):
        x, y = p.x[n - 1], p.y[n - 1]
        den = _zb(ctx, z, k + x) * _zb(ctx, z, L - n)
        if z is not None:
            if abs(bracket(ctx, z + k + x)) < POLE_GUARD:
                raise BoundaryPole("[z + kappa + x_i] vanishes")
            if abs(bracket(ctx, z + L - n)) < POLE_GUARD:
                raise DynamicalPole(f"[z + {L - n}] vanishes")
        out *= (bracket(ctx, k - y) * bracket(ctx, 2 * x)
                * _zb(ctx, z, k + y) * _zb(ctx, z, 2 * n - L - 2) / den)
    return out


def tfk_determinant(p: ModelParams) -> PartitionValue:
    """Determinant formula for the reflecting-end partition function."""
    p.check_generic(reflecting=True)
    ctx, L = p.ctx, p.L
    dm, dp = _diff(p.x, p.y), _add(p.x, p.y)
    w = _br(ctx, dm + 1) * _br(ctx, dm) * _br(ctx, dp + 1) * _br(ctx, dp)
    den = 1 + 0j
    for i, j in _pairs(L):
        xi, xj, yi, yj = p.x[i], p.x[j], p.y[i], p.y[j]
        den *= (bracket(ctx, xi + xj + 1) * bracket(ctx, xi - xj)
                * bracket(ctx, yj + yi) * bracket(ctx, yj - yi))
    value = refl_prefactor(p) * bracket(ctx, 1) ** L / den * _scaled_det(w)
    return PartitionValue(complex(value), "tfk_determinant", max(abs(value), 1e-300))


def _check_reflection_poles(p: ModelParams) -> None:
    for v in p.x:
        if abs(p.br(2 * v + 1)) < POLE_GUARD:
            raise ReflectionPole("[2 x_i + 1] vanishes")


def _mn_tables(p: ModelParams):
    """Per-(value, slot) factors of the two terms of m_n.

    Rows index the x variable, column n-1 the slot n. Pair tables P1/P2 give
    the product factors for a pair (x_a at slot j < n, x_b at slot n).
    """
    ctx, k, z = p.ctx, p.kappa, p.z
    x = np.asarray(p.x)
    y = np.asarray(p.y)
    L = p.L
    slots = np.arange(1, L + 1)
    X = x[:, None]
    Y = y[None, :]
    den = (_br(ctx, k + Y) * _br(ctx, 2 * X + 1))
    if z is not None:
        den = den * _br(ctx, z + k - Y) * _br(ctx, z + slots[None, :])
    t1 = _br(ctx, k + X) * _br(ctx, X + Y + 1)
    t2 = _br(ctx, k - X - 1) * _br(ctx, X - Y)
    if z is not None:
        t1 = t1 * _br(ctx, z + k - X) * _br(ctx, z + slots[None, :] + X - Y)
        t2 = t2 * _br(ctx, z + k + X + 1) * _br(ctx, z + (slots[None, :] - 1) - X - Y)
    t1 = t1 / den
    t2 = t2 / den
    t2 = t2 * np.where((slots - 1) % 2, -1, 1)[None, :]
    # factors involving x_b (slot n) and y_j (slot j < n)
    q1 = _br(ctx, _diff(x, y) + 1) * _br(ctx, _add(x, y) + 1)
    q2 = _br(ctx, _diff(x, y)) * _br(ctx, _add(x, y))
    # factors involving x_a (slot j) and x_b (slot n): indexed [a, b]
    r1 = _br(ctx, _diff(x, x) + 1) * _br(ctx, _add(x, x))
    r2 = _br(ctx, _diff(x, x).T + 1) * _br(ctx, _add(x, x) + 2)
    return t1, t2, q1, q2, r1, r2


def m_n_terms(p: ModelParams, xs, n: int) -> tuple[complex, complex]:
    """The two terms of m_n(xs[0], ..., xs[n-1]) as a pair."""
    sub = p.with_x(list(xs) + list(p.x[len(xs):]), special=True)
    t1, t2, q1, q2, r1, r2 = _mn_tables(sub)
    b = n - 1
    first, second = t1[b, b], t2[b, b]
    for j in range(n - 1):
        first *= q1[b, j] * r1[j, b]
        second *= q2[b, j] * r2[j, b]
    return complex(first), complex(second)


def refl_symmetrized_sum(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Symmetrized sum over S_L with the two-term m_n factors."""
    p.check_generic(reflecting=True)
    _check_reflection_poles(p)
    ctx, L = p.ctx, p.L
    pref = refl_prefactor(p) * bracket(ctx, 1) ** L
    t1, t2, q1, q2, r1, r2 = _mn_tables(p)
    num = _br(ctx, _diff(p.x, p.y)) * _br(ctx, _add(p.x, p.y) + 1)  # [a, j]
    with np.errstate(divide="ignore", invalid="ignore"):
        den = _br(ctx, _diff(p.x, p.x)) * _br(ctx, _add(p.x, p.x) + 1)

    def summand(perms, signs):
        out = np.full(len(perms), pref, dtype=complex)
        for n in range(L):
            b = perms[:, n]
            f1, f2 = t1[b, n], t2[b, n]
            for j in range(n):
                a = perms[:, j]
                f1 = f1 * q1[b, j] * r1[a, b]
                f2 = f2 * q2[b, j] * r2[a, b]
            out *= f1 + f2
        for i, j in _pairs(L):
            a, b = perms[:, i], perms[:, j]
            out *= num[a, j] / den[a, b]
        return out

    total, scale, cnt = _perm_sum(L, summand, threads)
    return PartitionValue(total, "refl_symmetrized_sum", scale, cnt)


def z_ell(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Symmetrized sum for the elliptic SOS model with domain-wall boundaries.

    With ``p.z`` None the z-dependent ratios are dropped and this reduces to
    :func:`symmetrized_sum`.
    """
    p.check_generic()
    ctx, L, z = p.ctx, p.L, p.z
    extra = None
    if z is not None:
        slots = np.arange(1, L + 1)
        zs = _br(ctx, z + slots)
        _require_nonzero(zs, DynamicalPole, "[z + i]")
        D = _br(ctx, z + slots[None, :] + _diff(p.x, p.y)) / zs[None, :]  # [a, i]

        def extra(perms):
            return np.prod(D[perms, np.arange(L)[None, :]], axis=1)

    total, scale, n = _perm_sum(L, _sym_sum_terms(ctx, p.x, p.y, extra), threads)
    return PartitionValue(total, "z_ell", scale, n)


def _reflected(x, mask):
    return tuple(-v - 1 if (mask >> i) & 1 else v for i, v in enumerate(x))


def crossing_symmetrized_sum(p: ModelParams, form: str = "sum",
                             threads: int | None = None) -> PartitionValue:
    """Sum over the 2^L crossings x_i -> -x_i - 1 of z_ell-weighted terms.

    ``form="sign"`` evaluates the regrouped version where the [2x_i + 1] and
    [k + y_i] denominators are pulled out of the sum with sgn(r).
    """
    if form not in ("sum", "sign"):
        raise ValueError("form must be 'sum' or 'sign'")
    p.check_generic(reflecting=True)
    _check_reflection_poles(p)
    ctx, L, k, z = p.ctx, p.L, p.kappa, p.z
    pref = refl_prefactor(p)
    if form == "sign":
        for i in range(L):
            pref /= bracket(ctx, k + p.y[i]) * bracket(ctx, 2 * p.x[i] + 1)
    total, scale = 0j, 0.0
    for mask, sign in reflection_masks(L):
        xr = _reflected(p.x, mask)
        t = 1 + 0j
        for i in range(L):
            t *= bracket(ctx, k + xr[i]) * _zb(ctx, z, k - xr[i]) / _zb(ctx, z, k - p.y[i])
            if form == "sum":
                t /= bracket(ctx, k + p.y[i]) * bracket(ctx, 2 * xr[i] + 1)
        if form == "sign":
            t *= sign
        for i, j in _pairs(L):
            t *= bracket(ctx, xr[i] + xr[j]) / bracket(ctx, xr[i] + xr[j] + 1)
        t *= np.prod(_br(ctx, _add(xr, p.y) + 1))
        inner = z_ell(p.with_x(xr, special=True), threads)
        term = pref * t * inner.value
        total += term
        scale = max(scale, abs(pref * t) * inner.scale)
    return PartitionValue(total, "crossing_symmetrized_sum", scale, 1 << L)


def six_vertex_refl_formula(p: ModelParams, threads: int | None = None) -> PartitionValue:
    """Non-dynamical reflecting-end value from domain-wall values at crossed x."""
    if p.ctx.mode is Mode.ELLIPTIC:
        raise ValueError("six_vertex_refl_formula needs trig or rational mode")
    if p.kappa is None:
        raise ValueError("six_vertex_refl_formula needs kappa")
    p.check_generic(reflecting=True)
    ctx, L, k = p.ctx, p.L, p.kappa
    a = lambda w: bracket(ctx, w + 1)  # noqa: E731
    b = lambda w: bracket(ctx, w)  # noqa: E731
    pref = 1 + 0j
    for i in range(L):
        den = bracket(ctx, k + p.y[i]) * a(2 * p.x[i])
        if abs(den) < POLE_GUARD:
            raise ReflectionPole("[k + y_i][2 x_i + 1] vanishes")
        pref *= bracket(ctx, k - p.y[i]) * b(2 * p.x[i]) / den
    total, scale = 0j, 0.0
    for mask, sign in reflection_masks(L):
        xr = _reflected(p.x, mask)
        t = complex(sign)
        for i in range(L):
            t *= bracket(ctx, k + xr[i])
        for i, j in _pairs(L):
            t *= b(xr[i] + xr[j]) / a(xr[i] + xr[j])
        t *= np.prod(_br(ctx, _add(xr, p.y) + 1))
        inner = symmetrized_sum(p.with_x(xr, special=True), threads)
        total += pref * t * inner.value
        scale = max(scale, abs(pref * t) * inner.scale)
    return PartitionValue(total, "six_vertex_refl", scale, 1 << L)


def zbar(p: ModelParams, F: Callable[[ModelParams], PartitionValue] | None = None) -> PartitionValue:
    """Renormalised Z times prod_i [z + k + x_i]/[2 x_i], symmetric under x_i -> -x_i - 1.

    ``F`` defaults to :func:`tfk_determinant`.
    """
    F = tfk_determinant if F is None else F
    base = F(p)
    factor = 1 + 0j
    for v in p.x:
        den = bracket(p.ctx, 2 * v)
        if abs(den) < POLE_GUARD:
            raise PoleAtEvaluation("[2 x_i] vanishes")
        factor *= _zb(p.ctx, p.z, p.kappa + v) / den
    return PartitionValue(complex(base.value * factor), "zbar:" + base.method,
                          base.scale * abs(factor), base.terms)
