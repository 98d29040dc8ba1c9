"""Functional equations, Korepin-type recurrences and the recursive recipe."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DynamicalPole, PoleAtEvaluation
from .numerics import Mode, bracket
from .params import ModelParams, PartitionValue

POLE_GUARD = 1e-12

Evaluator = Callable[[ModelParams], "PartitionValue | complex"]


@dataclass(frozen=True)
class CoeffSet:
    """Coefficients M_0, M_1..M_L of a linear functional equation at x0."""

    m0: complex
    m: tuple
    x0: complex
    params: ModelParams

    def all(self) -> tuple:
        return (self.m0,) + self.m


@dataclass(frozen=True)
class Eigenvalues:
    """Diagonal actions of the double-row operators on the reference states."""

    up_a: complex
    up_dtilde: complex
    down_a: complex


def _den(ctx, w, exc=PoleAtEvaluation, what="denominator"):
    v = bracket(ctx, w)
    if abs(v) < POLE_GUARD:
        raise exc(f"[{what}] vanishes")
    return v


# -- six-vertex ----------------------------------------------------------------------

def coeffs_6v(p: ModelParams, x0: complex) -> CoeffSet:
    """Coefficients of the domain-wall functional equation."""
    ctx, L, x, y = p.ctx, p.L, p.x, p.y
    br = lambda w: bracket(ctx, w)  # noqa: E731
    ratio = 1 + 0j
    for j in range(L):
        ratio *= br(x0 - y[j] + 1) * br(x[j] - x0 + 1) / _den(ctx, x[j] - x0, what="x_j - x_0")
    m0 = 1 + 0j
    for j in range(L):
        m0 *= br(x0 - y[j])
    m0 -= ratio
    ms = []
    for i in range(L):
        mi = br(1) / _den(ctx, x[i] - x0, what="x_i - x_0")
        for j in range(L):
            mi *= br(x[i] - y[j] + 1)
            if j != i:
                mi *= br(x[j] - x[i] + 1) / _den(ctx, x[j] - x[i], what="x_j - x_i")
        ms.append(mi)
    return CoeffSet(m0, tuple(ms), complex(x0), p)


# -- reflecting end -----------------------------------------------------------------

def eigenvalues_refl(p: ModelParams, x: complex) -> Eigenvalues:
    """Reference-state eigenvalues of the double-row A, D-tilde operators.

    ``p.z = None`` drops every bracket containing z.
    """
    ctx, L, k, z, y = p.ctx, p.L, p.kappa, p.z, p.y
    br = lambda w: bracket(ctx, w)  # noqa: E731

    def zb(w):
        return 1.0 if z is None else br(z + w)

    def zd(w, exc=DynamicalPole):
        if z is None:
            return 1.0
        return _den(ctx, z + w, exc, f"z + {w}")

    plus_one = minus = 1 + 0j
    for yj in y:
        plus_one *= br(x - yj + 1) * br(x + yj + 1)
        minus *= br(x - yj) * br(x + yj)
    d2 = _den(ctx, 2 * x + 1, what="2x + 1")
    up_a = br(k + x) * zb(k - x) / zd(k + x) * plus_one
    up_dt = (br(k - x - 1) * br(2 * x) * zb(k + x + 1) * zb(-L)
             / (d2 * zd(k + x) * zd(-(L - 1))) * minus)
    down_a = (br(k - x) * br(1) * zb(L - 1 - 2 * x) / (d2 * zd(L - 1)) * plus_one
              + br(k + x + 1) * br(2 * x) * zb(k - x - 1) * zb(L)
              / (d2 * zd(k + x) * zd(L - 1)) * minus)
    return Eigenvalues(up_a, up_dt, down_a)


def coeffs_refl(p: ModelParams, x0: complex) -> CoeffSet:
    """Coefficients of the reflecting-end functional equation."""
    if p.kappa is None:
        raise ValueError("coeffs_refl needs kappa")
    ctx, L, z, x = p.ctx, p.L, p.z, p.x
    br = lambda w: bracket(ctx, w)  # noqa: E731

    def zb(w):
        return 1.0 if z is None else br(z + w)

    def zd(w):
        return 1.0 if z is None else _den(ctx, z + w, DynamicalPole, f"z + {w}")

    ev0 = eigenvalues_refl(p, x0)
    m0 = ev0.up_a
    for j in range(L):
        m0 *= (br(x[j] - x0 + 1) * br(x0 + x[j])
               / (_den(ctx, x[j] - x0, what="x_j - x_0") * _den(ctx, x0 + x[j] + 1, what="x_0 + x_j + 1")))
    m0 = ev0.down_a - m0

    ms = []
    for i in range(L):
        ev = eigenvalues_refl(p, x[i])
        xi = x[i]
        # [x0 - x_i - z - (L-1)]: with +(L-1) the pole at x0 = x_i does not cancel for L > 1
        zx = 1.0 if z is None else br(x0 - xi - z - (L - 1))
        t1 = (ev.up_a * br(1) * br(2 * xi) * zx
              / (_den(ctx, x0 - xi, what="x_0 - x_i") * _den(ctx, 2 * xi + 1, what="2x_i + 1") * zd(L - 1)))
        t2 = (ev.up_dtilde * br(1) * zb(L - 2 - x0 - xi) * zb(-(L - 1))
              / (_den(ctx, x0 + xi + 1, what="x_0 + x_i + 1") * zd(L - 1) * zd(-L)))
        for j in range(L):
            if j == i:
                continue
            d = _den(ctx, x[j] - xi, what="x_j - x_i") * _den(ctx, xi + x[j] + 1, what="x_i + x_j + 1")
            t1 *= br(x[j] - xi + 1) * br(xi + x[j]) / d
            t2 *= -br(xi - x[j] + 1) * br(xi + x[j] + 2) / d
        ms.append(t1 + t2)
    return CoeffSet(m0, tuple(ms), complex(x0), p)


# -- residual ------------------------------------------------------------------------

def _value(v) -> tuple[complex, float]:
    if isinstance(v, PartitionValue):
        return v.value, v.scale
    return complex(v), abs(complex(v))


def functional_residual(p: ModelParams, x0: complex, F: Evaluator,
                        coeffs: Callable[[ModelParams, complex], CoeffSet] = coeffs_6v) -> float:
    """|sum_nu M_nu(x0; x) F(x0, .., x_nu omitted, ..)| / max summand magnitude."""
    cs = coeffs(p, x0)
    terms = [cs.m0 * _value(F(p))[0]]
    for i in range(p.L):
        xs = (x0,) + p.x[:i] + p.x[i + 1:]
        terms.append(cs.m[i] * _value(F(p.with_x(xs)))[0])
    scale = max(abs(t) for t in terms)
    if scale == 0:
        return 0.0
    return abs(sum(terms)) / scale


# -- Korepin recurrences ----------------------------------------------------------

class Korepin(str, enum.Enum):
    X1_EQ_Y1 = "x1=y1"
    XL_EQ_Y1_MINUS_1 = "xL=y1-1"
    XL_EQ_YL = "xL=yL"
    REFL_PM = "refl"


def specialize(p: ModelParams, variant: Korepin, sign: int = 1) -> ModelParams:
    """Parameters with the specialization of ``variant`` substituted."""
    x = list(p.x)
    y = p.y
    if variant is Korepin.X1_EQ_Y1:
        x[0] = y[0]
    elif variant is Korepin.XL_EQ_Y1_MINUS_1:
        x[-1] = y[0] - 1
    elif variant is Korepin.XL_EQ_YL:
        x[-1] = y[-1]
    else:
        x[-1] = sign * y[-1]
    return p.with_x(x, special=True)


def reduced(p: ModelParams, variant: Korepin) -> ModelParams:
    """Parameters of the size L-1 partition function on the right-hand side."""
    L = p.L
    if variant is Korepin.X1_EQ_Y1:
        return p.reduced(0, 0)
    if variant is Korepin.XL_EQ_Y1_MINUS_1:
        return p.reduced(L - 1, 0)
    return p.reduced(L - 1, L - 1)


def korepin_factor(p: ModelParams, variant: Korepin, sign: int = 1) -> complex:
    """Proportionality factor between Z_L at the specialization and Z_{L-1}.

    Only the parameters that survive the specialization are read from ``p``.
    For ``REFL_PM`` the specialization is x_L = sign * y_L.
    """
    variant = Korepin(variant)
    ctx, L, x, y = p.ctx, p.L, p.x, p.y
    br = lambda w: bracket(ctx, w)  # noqa: E731
    out = br(1)
    if variant is Korepin.X1_EQ_Y1:
        for i in range(1, L):
            out *= br(x[i] - y[0] + 1) * br(y[0] - y[i] + 1)
    elif variant is Korepin.XL_EQ_Y1_MINUS_1:
        for i in range(L - 1):
            out *= br(x[i] - y[0])
        for i in range(1, L):
            out *= br(y[0] - 1 - y[i])
    elif variant is Korepin.XL_EQ_YL:
        for i in range(L - 1):
            out *= br(x[i] - y[-1] + 1) * br(y[-1] - y[i] + 1)
    else:
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        out *= _refl_factor(p, sign)
    return out


def _refl_factor(p: ModelParams, s: int) -> complex:
    ctx, L, k, z, x, y = p.ctx, p.L, p.kappa, p.z, p.x, p.y
    br = lambda w: bracket(ctx, w)  # noqa: E731
    yl = y[-1]

    def zr(shift):
        # [z + shift - 1]/[z + shift]
        if z is None:
            return 1.0
        return br(z + shift - 1) / _den(ctx, z + shift, DynamicalPole, f"z + {shift}")

    # k_-(y_L) for the upper sign, k_+(-y_L) for the lower one
    if s == 1:
        kv = br(k - yl)
    else:
        kv = br(k - yl)
        if z is not None:
            kv *= br(z + k + yl) / _den(ctx, z + k - yl, what="z + kappa - y_L")
    out = kv * br(s * 2 * yl) * zr(s * (L - 1))
    # the last y-factor is [s y_L - s y_i + 1]; for s = -1 the determinant
    # expansion at x_L = -y_L gives [-y_L + y_i + 1], not [-y_L - y_i + 1]
    for i in range(1, L):
        xi, yi = x[i - 1], y[i - 1]
        out *= (br(xi - s * yl + 1) * br(xi + s * yl)
                * br(s * yl + s * yi + 1) * br(s * yl - s * yi + 1) * zr(s * (2 * i - L - 1)))
    return out


# -- recipe ---------------------------------------------------------------------------

def recipe_build(p: ModelParams, order: Sequence[int] | None = None,
                 cache: dict | None = None) -> PartitionValue:
    """Reconstruct Z_L from Z_1 = [1] by iterating the recursive recipe.

    At size n the recipe eliminates inhomogeneity ``order[n-1]`` (an index
    into the original y). The default order eliminates y_n at step n, i.e.
    always the last remaining one. ``cache`` memoizes sub-results keyed by
    (x-subset, remaining y indices) and may be shared across calls with the
    same parameters; it is not thread-safe.
    """
    if p.ctx.mode is Mode.ELLIPTIC:
        raise ValueError("recipe_build needs trig or rational mode")
    p.check_generic()
    L = p.L
    order = list(range(L)) if order is None else list(order)
    if sorted(order) != list(range(L)):
        raise ValueError("order must be a permutation of range(L)")
    cache = {} if cache is None else cache
    ctx = p.ctx
    br = lambda w: bracket(ctx, w)  # noqa: E731
    c1 = br(1)

    def build(xs: tuple, ys: tuple) -> complex:
        n = len(xs)
        if n == 1:
            return c1
        key = (xs, ys)
        if key in cache:
            return cache[key]
        # eliminate the inhomogeneity scheduled for this size
        k = order[n - 1]
        while k not in ys:
            raise ValueError("order does not match the remaining inhomogeneities")
        yk = p.y[k]
        rest_y = tuple(j for j in ys if j != k)
        total = 0j
        for jpos, j in enumerate(xs):
            xj = p.x[j]
            t = c1
            for i in ys:
                if i != k:
                    t *= br(xj - p.y[i] + 1)
            for i in xs:
                if i != j:
                    xi = p.x[i]
                    t *= br(xi - yk) * br(xi - xj + 1) / br(xi - xj)
            total += t * build(xs[:jpos] + xs[jpos + 1:], rest_y)
        cache[key] = total
        return total

    value = build(tuple(range(L)), tuple(range(L)))
    return PartitionValue(value, "recipe", max(abs(value), 1e-300))


# -- special zeroes -------------------------------------------------------------------

def special_zero_check(p: ModelParams, k: int, F: Evaluator | None = None,
                       offset: complex = 0.0) -> float:
    """|F| / scale with x_1 = y_k - 1 and x_2 = y_k + offset.

    ``F`` defaults to the symmetrized sum. A nonzero ``offset`` moves off the
    zero (negative control). At the zero every summand is rounding noise, so
    the scale also includes F's summand scale at the unspecialized ``p``.
    """
    from .closed_forms import symmetrized_sum

    if p.L < 2:
        raise ValueError("special zeroes need L >= 2")
    F = symmetrized_sum if F is None else F
    x = list(p.x)
    x[0] = p.y[k] - 1
    x[1] = p.y[k] + offset
    v, scale = _value(F(p.with_x(x, special=True)))
    scale = max(scale, _value(F(p))[1])
    return abs(v) / max(scale, 1e-300)
