"""Vertex weights, R- and K-matrices, and structural residuals.

Basis convention for two-site spaces: index ``2*s1 + s2`` with spin 0 = up
(equivalently a right-pointing horizontal arrow) and 1 = down, so the
ordering is {uu, ud, du, dd}.

A dynamical argument ``z=None`` means "drop every bracket containing z",
which is how the non-dynamical six-vertex limit of the SOS weights is taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryPole, DynamicalPole
from .numerics import BracketContext, bracket

POLE_GUARD = 1e-12

UP, DOWN = 0, 1


def spin_height(s: int) -> int:
    """+1 for up, -1 for down."""
    return 1 if s == UP else -1


@dataclass(frozen=True)
class SixVertexWeights:
    ctx: BracketContext

    def a(self, w):
        return bracket(self.ctx, w + 1)

    def b(self, w):
        return bracket(self.ctx, w)

    def c(self, w):
        return bracket(self.ctx, 1)


def _z_ratio(ctx, z, shift):
    """[z + shift]/[z], or 1 when z is dropped."""
    if z is None:
        return 1.0
    return bracket(ctx, z + shift) / bracket(ctx, z)


def _guard_z(ctx, z):
    if z is not None and abs(bracket(ctx, z)) < POLE_GUARD:
        raise DynamicalPole(f"[z] vanishes at z={z!r}")


@dataclass(frozen=True)
class DynamicalWeights:
    ctx: BracketContext

    def a(self, sign, w, z):
        return bracket(self.ctx, w + 1)

    def b(self, sign, w, z):
        return bracket(self.ctx, w) * _z_ratio(self.ctx, z, -sign)

    def c(self, sign, w, z):
        return bracket(self.ctx, 1) * _z_ratio(self.ctx, z, sign * w)


@dataclass(frozen=True)
class KWeights:
    ctx: BracketContext
    kappa: complex

    def k_plus(self, x, z):
        k = self.kappa
        out = bracket(self.ctx, k + x)
        if z is not None:
            out *= bracket(self.ctx, z + k - x) / bracket(self.ctx, z + k + x)
        return out

    def k_minus(self, x, z):
        return bracket(self.ctx, self.kappa - x)


def r_matrix(ctx: BracketContext, w: complex, c_scale: float = 1.0) -> np.ndarray:
    """Six-vertex R-matrix. ``c_scale`` != 1 perturbs c (negative controls only)."""
    wt = SixVertexWeights(ctx)
    a, b, c = wt.a(w), wt.b(w), c_scale * wt.c(w)
    return np.array([[a, 0, 0, 0],
                     [0, b, c, 0],
                     [0, c, b, 0],
                     [0, 0, 0, a]], dtype=complex)


def dyn_r_matrix(ctx: BracketContext, w: complex, z: complex | None) -> np.ndarray:
    """Dynamical R-matrix with entries (a+, b+|c-, c+|b-, a-)."""
    _guard_z(ctx, z)
    wt = DynamicalWeights(ctx)
    return np.array([[wt.a(+1, w, z), 0, 0, 0],
                     [0, wt.b(+1, w, z), wt.c(-1, w, z), 0],
                     [0, wt.c(+1, w, z), wt.b(-1, w, z), 0],
                     [0, 0, 0, wt.a(-1, w, z)]], dtype=complex)


def k_matrix(ctx: BracketContext, x: complex, z: complex | None, kappa: complex) -> np.ndarray:
    if z is not None and abs(bracket(ctx, z + kappa + x)) < POLE_GUARD:
        raise BoundaryPole(f"[z+kappa+x] vanishes at x={x!r}")
    kw = KWeights(ctx, kappa)
    return np.diag([kw.k_plus(x, z), kw.k_minus(x, z)]).astype(complex)


# -- face (height) weights ------------------------------------------------------

# Height offsets (BL, BR, TR) relative to the top-left face, in the frame where
# the first line runs left to right and the second bottom to top.
_FACE_PATTERNS = {
    (-1, -2, -1): ("a", +1),
    (+1, +2, +1): ("a", -1),
    (-1, 0, +1): ("b", +1),
    (+1, 0, -1): ("b", -1),
    (-1, 0, -1): ("c", +1),
    (+1, 0, +1): ("c", -1),
}


def face_weight(ctx: BracketContext, w: complex, z: complex | None,
                tl: int, bl: int, br: int, tr: int) -> complex:
    """SOS weight of a vertex from the heights of its four faces.

    Heights are integer offsets from the reference height ``z``; the weight
    is evaluated at the top-left height. Returns 0 for disallowed profiles.
    """
    key = (bl - tl, br - tl, tr - tl)
    kind = _FACE_PATTERNS.get(key)
    if kind is None:
        return 0j
    name, sign = kind
    zt = None if z is None else z + tl
    if zt is not None and abs(bracket(ctx, zt)) < POLE_GUARD:
        raise DynamicalPole(f"[z] vanishes at height z{tl:+d}")
    return getattr(DynamicalWeights(ctx), name)(sign, w, zt)


# -- residuals ------------------------------------------------------------------

def _embed(pair: tuple[int, int], mat_of_spectator) -> np.ndarray:
    """8x8 operator acting as a 4x4 block on ``pair`` of three spaces.

    ``mat_of_spectator(s)`` gives the block when the third space has spin s.
    """
    a, b = pair
    c = 3 - a - b
    blocks = {s: mat_of_spectator(s) for s in (UP, DOWN)}
    out = np.zeros((8, 8), dtype=complex)
    for sin in range(8):
        si = ((sin >> 2) & 1, (sin >> 1) & 1, sin & 1)
        for sout in range(8):
            so = ((sout >> 2) & 1, (sout >> 1) & 1, sout & 1)
            if so[c] != si[c]:
                continue
            out[sout, sin] = blocks[si[c]][2 * so[a] + so[b], 2 * si[a] + si[b]]
    return out


def _rel(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


def ybe_residual(ctx: BracketContext, x_i, x_j, x_k, c_scale: float = 1.0) -> float:
    """Relative max-norm residual of R12 R13 R23 = R23 R13 R12."""
    r12 = _embed((0, 1), lambda s: r_matrix(ctx, x_i - x_j, c_scale))
    r13 = _embed((0, 2), lambda s: r_matrix(ctx, x_i - x_k, c_scale))
    r23 = _embed((1, 2), lambda s: r_matrix(ctx, x_j - x_k, c_scale))
    return _rel(r12 @ r13 @ r23, r23 @ r13 @ r12)


# Calibrated: with shift sign -1 the dynamical YBE holds identically, with +1
# it does not. Heights h(up) = +1, h(down) = -1.
DYNAMICAL_SHIFT_SIGN = -1


def dyn_ybe_residual(ctx: BracketContext, x_i, x_j, x_k, z,
                     shift_sign: int = DYNAMICAL_SHIFT_SIGN) -> float:
    """Residual of R12(z+s h3) R13(z) R23(z+s h1) = R23(z) R13(z+s h2) R12(z).

    h_l is the spin of the spectator line. ``z=None`` drops all z-factors, in
    which case this reduces to :func:`ybe_residual`.
    """
    def shifted(w, pair):
        if z is None:
            return _embed(pair, lambda s: dyn_r_matrix(ctx, w, None))
        return _embed(pair, lambda s: dyn_r_matrix(ctx, w, z + shift_sign * spin_height(s)))

    def plain(w, pair):
        return _embed(pair, lambda s: dyn_r_matrix(ctx, w, z))

    lhs = shifted(x_i - x_j, (0, 1)) @ plain(x_i - x_k, (0, 2)) @ shifted(x_j - x_k, (1, 2))
    rhs = plain(x_j - x_k, (1, 2)) @ shifted(x_i - x_k, (0, 2)) @ plain(x_i - x_j, (0, 1))
    return _rel(lhs, rhs)


_SWAP = np.eye(4)[[0, 2, 1, 3]]


def reflection_residual(ctx: BracketContext, x_i, x_ip, z, kappa,
                        kappa_prime: complex | None = None) -> float:
    """Residual of the diagonal dynamical reflection equation at fixed height.

    R_{ii'}(x_i - x_i') K_i(x_i) R_{i'i}(x_i + x_i') K_i'(x_i') equals
    K_i'(x_i') R_{ii'}(x_i + x_i') K_i(x_i) R_{i'i}(x_i - x_i').
    ``kappa_prime`` replaces kappa in the K_i' factor on the left only
    (negative control).
    """
    eye = np.eye(2)
    kp_left = kappa if kappa_prime is None else kappa_prime
    k_i = np.kron(k_matrix(ctx, x_i, z, kappa), eye)
    k_ip_l = np.kron(eye, k_matrix(ctx, x_ip, z, kp_left))
    k_ip_r = np.kron(eye, k_matrix(ctx, x_ip, z, kappa))
    r_minus = dyn_r_matrix(ctx, x_i - x_ip, z)
    r_plus = dyn_r_matrix(ctx, x_i + x_ip, z)
    lhs = r_minus @ k_i @ (_SWAP @ r_plus @ _SWAP) @ k_ip_l
    rhs = k_ip_r @ r_plus @ k_i @ (_SWAP @ r_minus @ _SWAP)
    return _rel(lhs, rhs)
