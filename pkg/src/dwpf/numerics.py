"""Complex arithmetic substrate.

The bracket ``[w]`` used by every weight and closed formula, dense complex
determinants, and enumeration of the symmetric group S_L and of the
reflection group (Z_2)^L with signs.
"""

from __future__ import annotations

import cmath
import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import InvalidContext, SeriesDivergence, SizeLimit

MAX_PERMUTATION_L = 12
MAX_REFLECTION_L = 24


class Mode(str, enum.Enum):
    ELLIPTIC = "elliptic"
    TRIGONOMETRIC = "trig"
    RATIONAL = "rational"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, Mode):
            return value
        aliases = {"trigonometric": "trig", "ell": "elliptic", "rat": "rational"}
        key = str(value).lower()
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class BracketContext:
    """Evaluation mode and global parameters for the bracket ``[w]``.

    ``tau`` is only used in elliptic mode. In rational mode ``gamma`` is
    forced to 1.
    """

    mode: Mode = Mode.TRIGONOMETRIC
    gamma: complex = 1.0
    tau: complex = 1j
    series_tol: float = 1e-18
    max_terms: int = 64

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.mode is Mode.RATIONAL:
            object.__setattr__(self, "gamma", 1.0)
        if self.mode is not Mode.RATIONAL and self.gamma == 0:
            raise InvalidContext("gamma must be nonzero")
        if self.mode is Mode.ELLIPTIC and complex(self.tau).imag <= 0:
            raise InvalidContext("elliptic mode needs Im(tau) > 0")
        if not self.series_tol > 0:
            raise InvalidContext("series_tol must be positive")
        if self.max_terms < 1:
            raise InvalidContext("max_terms must be >= 1")

    @property
    def nome(self) -> complex:
        """q = exp(i pi tau)."""
        return cmath.exp(1j * math.pi * complex(self.tau))

    @classmethod
    def trig(cls, gamma: complex = 1.0) -> "BracketContext":
        return cls(Mode.TRIGONOMETRIC, gamma)

    @classmethod
    def elliptic(cls, gamma: complex, tau: complex) -> "BracketContext":
        return cls(Mode.ELLIPTIC, gamma, tau)

    @classmethod
    def rational(cls) -> "BracketContext":
        return cls(Mode.RATIONAL)


def _theta_bracket(ctx: BracketContext, w: complex) -> complex:
    # e^{-i pi tau/4} theta_1(u)/2 = sum_n (-1)^n q^{n(n+1)} sin((2n+1)u)
    u = ctx.gamma * w
    q = ctx.nome
    total = cmath.sin(u)
    for n in range(1, ctx.max_terms):
        term = (-1) ** n * q ** (n * (n + 1)) * cmath.sin((2 * n + 1) * u)
        total += term
        if abs(term) <= ctx.series_tol * max(abs(total), 1e-300):
            return total
    raise SeriesDivergence(
        f"theta series did not converge in {ctx.max_terms} terms (w={w!r})"
    )


def bracket(ctx: BracketContext, w: complex) -> complex:
    """[w]: normalised theta_1, sin(gamma w) or w depending on ``ctx.mode``."""
    if ctx.mode is Mode.TRIGONOMETRIC:
        return cmath.sin(ctx.gamma * w)
    if ctx.mode is Mode.RATIONAL:
        return complex(w)
    return _theta_bracket(ctx, w)


def bracket_product(ctx: BracketContext, ws: Sequence[complex]) -> complex:
    """[w1, w2, ...] = [w1][w2]...; the empty product is 1."""
    out = 1 + 0j
    for w in ws:
        out *= bracket(ctx, w)
    return out


def bracket_array(ctx: BracketContext, w) -> np.ndarray:
    """Vectorised bracket over an array of arguments."""
    w = np.asarray(w, dtype=complex)
    if ctx.mode is Mode.TRIGONOMETRIC:
        return np.sin(ctx.gamma * w)
    if ctx.mode is Mode.RATIONAL:
        return w.copy()
    flat = np.array([_theta_bracket(ctx, v) for v in w.ravel()], dtype=complex)
    return flat.reshape(w.shape)


def product_oracle_bracket(ctx: BracketContext, w: complex, terms: int = 200) -> complex:
    """Elliptic bracket from the Jacobi triple-product form.

    Independent of the sine series in :func:`bracket`; used only for
    cross-checks.
    """
    u = ctx.gamma * w
    q = ctx.nome
    out = cmath.sin(u)
    c2 = cmath.cos(2 * u)
    for n in range(1, terms + 1):
        q2n = q ** (2 * n)
        out *= (1 - q2n) * (1 - 2 * q2n * c2 + q2n * q2n)
    return out


# -- determinants -------------------------------------------------------------

def determinant(m) -> complex:
    """Determinant by LU decomposition with partial pivoting.

    Returns exactly 0 when a pivot column is numerically null.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("determinant needs a non-empty square matrix")
    n = a.shape[0]
    det = 1 + 0j
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < 1e-300:
            return 0j
        if p != k:
            a[[k, p]] = a[[p, k]]
            det = -det
        det *= a[k, k]
        if k + 1 < n:
            f = a[k + 1:, k] / a[k, k]
            a[k + 1:, k + 1:] -= np.outer(f, a[k, k + 1:])
    return complex(det)


def cofactor_determinant(m) -> complex:
    """Laplace expansion along the first row. Exponential cost; oracle only."""
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return complex(a[0, 0])
    total = 0j
    for j in range(n):
        if a[0, j] == 0:
            continue
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * cofactor_determinant(minor)
    return total


# -- permutations and reflections ----------------------------------------------

def _check_perm_size(L: int) -> None:
    if not 1 <= L <= MAX_PERMUTATION_L:
        raise SizeLimit(f"permutation enumeration supports 1 <= L <= {MAX_PERMUTATION_L}, got {L}")


def heap_permutations(L: int) -> Iterator[tuple[tuple[int, ...], int]]:
    """All permutations of range(L) with their signs, in Heap's order.

    Every step of Heap's algorithm is a single transposition, so the sign
    flips on each yield after the first.
    """
    _check_perm_size(L)
    a = list(range(L))
    c = [0] * L
    sign = 1
    yield tuple(a), sign
    i = 1
    while i < L:
        if c[i] < i:
            if i % 2 == 0:
                a[0], a[i] = a[i], a[0]
            else:
                a[c[i]], a[i] = a[i], a[c[i]]
            sign = -sign
            yield tuple(a), sign
            c[i] += 1
            i = 1
        else:
            c[i] = 0
            i += 1


def unrank_permutation(L: int, rank: int) -> list[int]:
    """Permutation of lexicographic rank ``rank`` (0-based)."""
    pool = list(range(L))
    out = []
    for k in range(L, 0, -1):
        f = math.factorial(k - 1)
        idx, rank = divmod(rank, f)
        out.append(pool.pop(idx))
    return out


def permutation_sign(perm: Sequence[int]) -> int:
    """Sign via inversion count."""
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inv % 2 else 1


def lex_permutations(L: int, start: int = 0, count: int | None = None):
    """Lexicographic permutations with signs, starting at rank ``start``."""
    _check_perm_size(L)
    total = math.factorial(L)
    stop = total if count is None else min(total, start + count)
    if start >= stop:
        return
    a = unrank_permutation(L, start)
    sign = permutation_sign(a)
    for _ in range(start, stop):
        yield tuple(a), sign
        # next permutation: swap at pivot, then reverse the suffix
        i = L - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            break
        j = L - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        m = L - i - 1
        a[i + 1:] = reversed(a[i + 1:])
        if (1 + m // 2) % 2:
            sign = -sign


def for_each_permutation(L: int, visitor: Callable[[tuple[int, ...], int], None],
                         start: int = 0, count: int | None = None) -> None:
    """Call ``visitor(perm, sign)`` on S_L, or on a lexicographic chunk of it."""
    if start == 0 and count is None:
        it = heap_permutations(L)
    else:
        it = lex_permutations(L, start, count)
    for perm, sign in it:
        visitor(perm, sign)


def reflection_masks(L: int, start: int = 0, count: int | None = None):
    """Bitmasks over L sites with sign (-1)^popcount."""
    if not 1 <= L <= MAX_REFLECTION_L:
        raise SizeLimit(f"reflection enumeration supports 1 <= L <= {MAX_REFLECTION_L}, got {L}")
    total = 1 << L
    stop = total if count is None else min(total, start + count)
    for mask in range(start, stop):
        yield mask, -1 if bin(mask).count("1") % 2 else 1


def for_each_reflection(L: int, visitor: Callable[[int, int], None],
                        start: int = 0, count: int | None = None) -> None:
    for mask, sign in reflection_masks(L, start, count):
        visitor(mask, sign)


def permutation_table(L: int, start: int = 0, count: int | None = None):
    """(perms, signs) as int arrays of shape (n, L) and (n,)."""
    perms, signs = [], []

    def visit(p, s):
        perms.append(p)
        signs.append(s)

    for_each_permutation(L, visit, start, count)
    return np.array(perms, dtype=np.intp).reshape(-1, L), np.array(signs, dtype=np.int8)


# -- vectorised permutation blocks -----------------------------------------------

BLOCK_TAIL = 7


def _lex_table(n: int):
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    inv = np.zeros(len(perms), dtype=np.intp)
    for i in range(n):
        for j in range(i + 1, n):
            inv += perms[:, i] > perms[:, j]
    return perms, np.where(inv % 2, -1, 1).astype(np.int8)


_TABLE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _cached_table(n: int):
    if n not in _TABLE_CACHE:
        _TABLE_CACHE[n] = _lex_table(n)
    return _TABLE_CACHE[n]


def permutation_block_count(L: int, tail: int = BLOCK_TAIL) -> int:
    _check_perm_size(L)
    return math.factorial(L) // math.factorial(min(L, tail))


def permutation_block(L: int, index: int, tail: int = BLOCK_TAIL):
    """Block ``index`` of S_L in lexicographic order, as (perms, signs) arrays.

    Each block holds the min(L, tail)! permutations sharing one fixed prefix,
    so concatenating blocks 0, 1, ... reproduces the full lexicographic order.
    """
    _check_perm_size(L)
    t = min(L, tail)
    sub, sub_sign = _cached_table(t)
    head = unrank_permutation(L, index * math.factorial(t))[: L - t]
    rest = np.array(sorted(set(range(L)) - set(head)), dtype=np.intp)
    perms = np.empty((len(sub), L), dtype=np.intp)
    perms[:, : L - t] = head
    perms[:, L - t:] = rest[sub]
    head_sign = permutation_sign(head + sorted(rest.tolist()))
    return perms, (sub_sign * head_sign).astype(np.int8)
