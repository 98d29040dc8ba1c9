"""Model parameters, result values and seeded random draws."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GenericPositionViolation, SizeLimit
from .numerics import BracketContext, bracket

GENERIC_GUARD = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Spectral parameters ``x``, inhomogeneities ``y`` and optional z, kappa.

    ``special=True`` skips the generic-position guard so that recurrences can
    be evaluated exactly at x_i = y_j and similar points.
    """

    x: tuple
    y: tuple
    ctx: BracketContext = field(default_factory=BracketContext)
    z: complex | None = None
    kappa: complex | None = None
    special: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(complex(v) for v in self.x))
        object.__setattr__(self, "y", tuple(complex(v) for v in self.y))
        if len(self.x) != len(self.y) or not self.x:
            raise SizeLimit("x and y must have the same positive length")
        if self.z is not None:
            object.__setattr__(self, "z", complex(self.z))
        if self.kappa is not None:
            object.__setattr__(self, "kappa", complex(self.kappa))

    @property
    def L(self) -> int:
        return len(self.x)

    def with_x(self, x: Sequence[complex], **kw) -> "ModelParams":
        return replace(self, x=tuple(x), **kw)

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    def reduced(self, drop_x: int, drop_y: int) -> "ModelParams":
        """Same parameters with x[drop_x] and y[drop_y] removed."""
        x = self.x[:drop_x] + self.x[drop_x + 1:]
        y = self.y[:drop_y] + self.y[drop_y + 1:]
        return replace(self, x=x, y=y)

    def br(self, w: complex) -> complex:
        return bracket(self.ctx, w)

    def check_generic(self, reflecting: bool = False, tol: float = GENERIC_GUARD) -> None:
        """Raise GenericPositionViolation near a coincidence of parameters."""
        if self.special:
            return
        for i, j in itertools.combinations(range(self.L), 2):
            bad = [("x_i - x_j", self.x[i] - self.x[j]),
                   ("y_i - y_j", self.y[i] - self.y[j])]
            if reflecting:
                bad += [("x_i + x_j + 1", self.x[i] + self.x[j] + 1),
                        ("y_i + y_j", self.y[i] + self.y[j])]
            for label, w in bad:
                if abs(self.br(w)) < tol:
                    raise GenericPositionViolation(f"[{label}] ~ 0 for (i, j) = ({i}, {j})")


@dataclass(frozen=True)
class PartitionValue:
    """A computed value with the method that produced it.

    ``scale`` is the largest summand magnitude (or |value| for closed forms
    without a sum) and is the denominator for relative comparisons.
    """

    value: complex
    method: str
    scale: float
    terms: int = 1

    def __complex__(self):
        return complex(self.value)


def relative_residual(a: PartitionValue | complex, b: PartitionValue | complex) -> float:
    """|a - b| / max(scale_a, scale_b)."""
    va, vb = complex(a), complex(b)
    sa = a.scale if isinstance(a, PartitionValue) else abs(va)
    sb = b.scale if isinstance(b, PartitionValue) else abs(vb)
    den = max(sa, sb, 1e-300)
    return abs(va - vb) / den


# -- random draws -----------------------------------------------------------------

SAMPLE_MARGIN = 1e-2
MAX_RETRIES = 1000


def _draw(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-0.2, 0.2, n)


def pole_arguments(p: ModelParams, reflecting: bool) -> list[complex]:
    """Every bracket argument that appears in a denominator somewhere."""
    L = p.L
    args = []
    for i, j in itertools.combinations(range(L), 2):
        args += [p.x[i] - p.x[j], p.y[i] - p.y[j]]
        if reflecting:
            args += [p.x[i] + p.x[j] + 1, p.y[i] + p.y[j], p.x[i] + p.x[j]]
    for i in range(L):
        for j in range(L):
            args += [p.x[i] - p.y[j], p.x[i] - p.y[j] + 1]
            if reflecting:
                args += [p.x[i] + p.y[j], p.x[i] + p.y[j] + 1]
    if reflecting:
        for v in p.x:
            args += [2 * v + 1, 2 * v]
    if p.kappa is not None:
        k = p.kappa
        for i in range(L):
            args += [k + p.y[i], k - p.y[i], k + p.x[i], k - p.x[i], k - p.x[i] - 1]
            if p.z is not None:
                z = p.z
                args += [z + k + p.x[i], z + k - p.y[i], z + k + p.y[i],
                         z + k - p.x[i], z + k + p.x[i] + 1, z + k - p.x[i] - 1]
    if p.z is not None:
        args += [p.z + n for n in range(-2 * L - 2, 2 * L + 3)]
    return args


def is_well_separated(p: ModelParams, reflecting: bool, margin: float = SAMPLE_MARGIN) -> bool:
    return all(abs(p.br(w)) > margin for w in pole_arguments(p, reflecting))


def random_params(rng: np.random.Generator, L: int, ctx: BracketContext, *,
                  dynamical: bool = False, reflecting: bool = False,
                  margin: float = SAMPLE_MARGIN) -> ModelParams:
    """Draw x, y (and z, kappa if requested), rejection-resampled off all poles.

    Real parts are uniform in (-1.5, 1.5), imaginary parts in (-0.2, 0.2).
    """
    for _ in range(MAX_RETRIES):
        x, y = _draw(rng, L), _draw(rng, L)
        z = complex(_draw(rng, 1)[0]) if dynamical else None
        kappa = complex(_draw(rng, 1)[0]) if reflecting else None
        p = ModelParams(tuple(x), tuple(y), ctx, z=z, kappa=kappa)
        if is_well_separated(p, reflecting, margin):
            return p
    raise GenericPositionViolation(f"no generic draw after {MAX_RETRIES} retries")
