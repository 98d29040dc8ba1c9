"""Ground-truth evaluators for both partition functions.

Lattice conventions: row i carries x_i and the top row is x_1 (B(x_1) acts
last); column j carries y_j and column 1 is leftmost. Horizontal arrows are
encoded as spins with right-pointing = up, vertical arrows pointing up = up.
Domain walls: left and right horizontal arrows point out of the lattice,
vertical arrows point in at the top and bottom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DynamicalPole, SizeLimit
from .models import DOWN, UP, KWeights, face_weight, r_matrix
from .numerics import Mode
from .params import ModelParams, PartitionValue

ENUMERATE_MAX_L = 4
COUNT_MAX_L = 5
CONTRACT_MAX_L = 12
REFL_CONTRACT_MAX_L = 8


@dataclass(frozen=True)
class SpinState:
    """Arrow configuration on the L vertical lines; bit j set means line j up."""

    L: int
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.L):
            raise ValueError("bits out of range")

    @classmethod
    def all_up(cls, L):
        return cls(L, (1 << L) - 1)

    @classmethod
    def all_down(cls, L):
        return cls(L, 0)

    def spins(self) -> tuple[int, ...]:
        """Per-site spins in the 0 = up, 1 = down encoding."""
        return tuple(UP if (self.bits >> j) & 1 else DOWN for j in range(self.L))


def _require_six_vertex(p: ModelParams) -> None:
    if p.ctx.mode is Mode.ELLIPTIC:
        raise ValueError("six-vertex weights need trig or rational mode")


# -- brute-force enumeration ----------------------------------------------------

def _enumerate(L: int, weight):
    """Depth-first walk over all domain-wall configurations.

    ``weight(i, j, h_in, v_in, h_out, v_out)`` gives the vertex weight, or
    None to only count. Rows are filled bottom (i = L-1) to top, columns left
    to right; each vertex chooses its top arrow and the ice rule fixes the
    right arrow.
    """
    total = 0j
    count = 0
    vert = [UP] * L  # arrows on the vertical edges below the current row

    def visit(i, j, h, acc):
        nonlocal total, count
        if j == L:
            if h != UP:  # right boundary points right
                return
            if i == 0:
                if all(v == DOWN for v in vert):
                    total += acc
                    count += 1
                return
            visit(i - 1, 0, DOWN, acc)
            return
        v_in = vert[j]
        ups_in = (h == UP) + (v_in == UP)
        for v_out in (UP, DOWN):
            h_out_ups = ups_in - (v_out == UP)
            if h_out_ups not in (0, 1):
                continue
            h_out = UP if h_out_ups == 1 else DOWN
            w = 1 if weight is None else weight(i, j, h, v_in, h_out, v_out)
            if w == 0:
                continue
            vert[j] = v_out
            visit(i, j + 1, h_out, acc * w)
            vert[j] = v_in

    visit(L - 1, 0, DOWN, 1 + 0j)
    return total, count


def count_dw_configs(L: int) -> int:
    """Number of ice-rule configurations with domain-wall boundaries."""
    if not 1 <= L <= COUNT_MAX_L:
        raise SizeLimit(f"count_dw_configs supports 1 <= L <= {COUNT_MAX_L}")
    return _enumerate(L, None)[1]


def dwpf_enumerate(p: ModelParams, c_scale: float = 1.0) -> PartitionValue:
    """Sum of vertex-weight products over every domain-wall configuration.

    ``c_scale`` rescales the c-weight (negative controls only).
    """
    if p.L > ENUMERATE_MAX_L:
        raise SizeLimit(f"dwpf_enumerate supports L <= {ENUMERATE_MAX_L}")
    _require_six_vertex(p)
    mats = [[r_matrix(p.ctx, p.x[i] - p.y[j], c_scale) for j in range(p.L)] for i in range(p.L)]

    def weight(i, j, h_in, v_in, h_out, v_out):
        return mats[i][j][2 * h_out + v_out, 2 * h_in + v_in]

    total, count = _enumerate(p.L, weight)
    return PartitionValue(total, "enumerate", max(abs(total), 1e-300), count)


# -- operator contraction -----------------------------------------------------------

def _apply_b(psi: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    """Apply B = <right| R_L ... R_1 |left> to a (2,)*L state tensor."""
    # auxiliary space enters pointing left (down) and is appended as axis 0
    state = np.stack([np.zeros_like(psi), psi])
    for j, r in enumerate(mats):
        r4 = r.reshape(2, 2, 2, 2)  # (h_out, v_out, h_in, v_in)
        state = np.tensordot(r4, state, axes=([2, 3], [0, j + 1]))
        # tensordot puts (h_out, v_out) first; move v_out back to site j
        state = np.moveaxis(state, 1, j + 1)
    return state[UP]


def dwpf_contract(p: ModelParams, c_scale: float = 1.0) -> PartitionValue:
    """<down...down| B(x_1) ... B(x_L) |up...up> on the 2^L space.

    ``c_scale`` rescales the c-weight (negative controls only).
    """
    L = p.L
    if L > CONTRACT_MAX_L:
        raise SizeLimit(f"dwpf_contract supports L <= {CONTRACT_MAX_L}")
    _require_six_vertex(p)
    psi = np.zeros((2,) * L, dtype=complex)
    psi[(UP,) * L] = 1
    for i in reversed(range(L)):
        mats = [r_matrix(p.ctx, p.x[i] - p.y[j], c_scale) for j in range(L)]
        psi = _apply_b(psi, mats)
    value = complex(psi[(DOWN,) * L])
    return PartitionValue(value, "contract", max(abs(value), 1e-300), 1)


# -- reflecting end: height-model transfer --------------------------------------------

def _h(spin: int) -> int:
    return 1 if spin == UP else -1


def _double_row(p: ModelParams, x: complex, mid_base: int, psi: dict,
                lower: int = UP, upper: int = UP) -> dict:
    """Apply a double-row operator to a sparse state.

    ``psi`` maps vertical-arrow tuples to amplitudes. Face heights are integer
    offsets from z; the wall faces sit at 0. Crossing an up arrow westward
    raises the height by one, crossing a right-pointing arrow northward
    likewise. ``mid_base`` is the height of the face right of the lattice
    between the two lines; ``lower`` and ``upper`` are the horizontal arrows
    at the right end (UP = pointing right). B has both pointing right.
    """
    L, ctx, z, y = p.L, p.ctx, p.z, p.y

    # lower line, traversed from the right boundary towards the wall;
    # key (aux, arrows) where aux is the horizontal arrow east of the column
    cur = {(lower, s): amp for s, amp in psi.items()}
    for j in reversed(range(L)):
        nxt = {}
        for (aux, arrows), amp in cur.items():
            ne = mid_base + sum(_h(arrows[l]) for l in range(j + 1, L))
            se = ne - 1 if aux == UP else ne + 1
            sw = se + _h(arrows[j])
            for m in (UP, DOWN):
                nw = ne + _h(m)
                if abs(nw - sw) != 1:
                    continue
                # rotated frame: column j plays the horizontal role, w = x + y_j
                wt = face_weight(ctx, x + y[j], z, sw, se, ne, nw)
                if wt == 0:
                    continue
                aux_w = UP if nw == sw + 1 else DOWN
                new = arrows[:j] + (m,) + arrows[j + 1:]
                key = (aux_w, new)
                nxt[key] = nxt.get(key, 0) + amp * wt
        cur = nxt

    # the wall: middle wall face at z-1 takes k+, at z+1 takes k-; the top
    # wall face is back at z, so the arrow keeps its sense around the bend
    kw = KWeights(ctx, p.kappa)
    k_plus, k_minus = kw.k_plus(x, z), kw.k_minus(x, z)
    walled = {}
    for (aux, arrows), amp in cur.items():
        if aux == DOWN:
            key, k = (UP, arrows), k_plus
        else:
            key, k = (DOWN, arrows), k_minus
        walled[key] = walled.get(key, 0) + amp * k

    # upper line, from the wall to the right boundary; aux is the arrow west
    # of the column
    cur = walled
    for j in range(L):
        nxt = {}
        for (aux, arrows), amp in cur.items():
            se = mid_base + sum(_h(arrows[l]) for l in range(j + 1, L))
            sw = se + _h(arrows[j])
            nw = sw + 1 if aux == UP else sw - 1
            for t in (UP, DOWN):
                ne = nw - _h(t)
                if abs(ne - se) != 1:
                    continue
                wt = face_weight(ctx, x - y[j], z, nw, sw, se, ne)
                if wt == 0:
                    continue
                aux_e = UP if ne == se + 1 else DOWN
                new = arrows[:j] + (t,) + arrows[j + 1:]
                key = (aux_e, new)
                nxt[key] = nxt.get(key, 0) + amp * wt
        cur = nxt

    out = {}
    for (aux, arrows), amp in cur.items():
        if aux == upper:
            out[arrows] = out.get(arrows, 0) + amp
    return out


def refl_contract(p: ModelParams) -> PartitionValue:
    """Reflecting-end partition function <down..| B(x_1,z)..B(x_L,z) |..up>.

    Built face by face: the wall is on the left, each double row consists of
    a lower line (parameter -x_i, running towards the wall) and an upper line
    (parameter x_i, running away from it), and the face below the lowest line
    at the wall has height z. ``p.z = None`` drops every z-dependent factor.
    """
    L = p.L
    if L > REFL_CONTRACT_MAX_L:
        raise SizeLimit(f"refl_contract supports L <= {REFL_CONTRACT_MAX_L}")
    if p.kappa is None:
        raise ValueError("refl_contract needs kappa")
    if p.z is not None and abs(p.br(p.z)) < 1e-12:
        raise DynamicalPole("[z] vanishes")
    psi = {(UP,) * L: 1 + 0j}
    for level, i in enumerate(reversed(range(L))):
        psi = _double_row(p, p.x[i], 1 - L + 2 * level, psi)
    value = complex(psi.get((DOWN,) * L, 0j))
    return PartitionValue(value, "refl_contract", max(abs(value), 1e-300), 1)


def a_operator_eigenvalues(p: ModelParams, x: complex) -> tuple[complex, complex]:
    """Diagonal elements of the double-row A(x, z) on the reference states.

    A has the lower line pointing left and the upper line pointing right at
    the right end. Returns (<up..|A|up..> at the bottom of the lattice,
    <down..|A|down..> at the top), i.e. with right-boundary heights z - L and
    z + L respectively.
    """
    if p.kappa is None:
        raise ValueError("a_operator_eigenvalues needs kappa")
    L = p.L
    up, down = (UP,) * L, (DOWN,) * L
    bottom = _double_row(p, x, -L - 1, {up: 1 + 0j}, DOWN, UP).get(up, 0j)
    top = _double_row(p, x, L - 1, {down: 1 + 0j}, DOWN, UP).get(down, 0j)
    return complex(bottom), complex(top)
