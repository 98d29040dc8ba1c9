"""The cross-validation check matrix.

Each check evaluates one identity on a few seeded random draws and reports
the largest relative residual. Seeds are derived per check from the base
seed and the check id, so a check's result does not depend on which other
checks run or in what order.
"""

from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import closed_forms as cf
from . import functional as fn
from . import models, oracle
from .numerics import BracketContext, Mode
from .params import (ModelParams, PartitionValue, is_well_separated, random_params,
                     relative_residual)

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240611
DEFAULT_DRAWS = 3
PERTURB_C_SCALE = 1.1
DW_COUNTS = (1, 2, 7, 42, 429)


@dataclass(frozen=True)
class ValidationConfig:
    seed: int = DEFAULT_SEED
    draws: int = DEFAULT_DRAWS
    mode: Mode = Mode.TRIGONOMETRIC  # six-vertex family; elliptic maps to trig
    tol: float | None = None  # overrides every check's tolerance
    perturb: bool = False  # add perturbed-weight twins of the oracle checks


@dataclass(frozen=True)
class Check:
    id: str
    lhs: str
    rhs: str
    L: int
    tol: float
    run: Callable[[np.random.Generator, int], float] = field(repr=False)
    expect_pass: bool = True


@dataclass(frozen=True)
class CheckResult:
    id: str
    lhs: str
    rhs: str
    L: int
    seed: int
    residual: float
    tol: float
    passed: bool
    expect_pass: bool
    wall_ms: float

    @property
    def ok(self) -> bool:
        return self.passed == self.expect_pass

    def as_dict(self, timings: bool = False) -> dict:
        out = {"id": self.id, "lhs": self.lhs, "rhs": self.rhs, "L": self.L,
               "seed": self.seed, "residual": self.residual, "tol": self.tol,
               "pass": self.passed, "expect_pass": self.expect_pass, "ok": self.ok}
        if timings:
            out["wall_ms"] = self.wall_ms
        return out


@dataclass(frozen=True)
class ValidationReport:
    results: tuple[CheckResult, ...]
    base_seed: int

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.results)

    def summary(self) -> dict:
        n = len(self.results)
        controls = sum(not r.expect_pass for r in self.results)
        return {"checks": n, "ok": sum(r.ok for r in self.results),
                "failed": sum(not r.ok for r in self.results),
                "negative_controls": controls}

    def timings_by_method(self) -> dict:
        out: dict[str, float] = {}
        for r in self.results:
            out[r.lhs] = out.get(r.lhs, 0.0) + r.wall_ms
        return dict(sorted(out.items()))

    def as_dict(self, timings: bool = False) -> dict:
        out = {"schema": 1, "seed": self.base_seed, "summary": self.summary(),
               "checks": [r.as_dict(timings) for r in self.results]}
        if timings:
            out["wall_ms_by_method"] = self.timings_by_method()
        return out


def check_seed(base: int, check_id: str) -> int:
    """Deterministic 32-bit seed for one check."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, zlib.crc32(check_id.encode())])
    return int(ss.generate_state(1)[0])


# -- random contexts and parameters --------------------------------------------------

def trig_ctx(rng: np.random.Generator) -> BracketContext:
    return BracketContext.trig(float(rng.uniform(0.4, 0.9)))


def elliptic_ctx(rng: np.random.Generator) -> BracketContext:
    tau = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.3, 2.0))
    return BracketContext.elliptic(float(rng.uniform(0.4, 0.8)), tau)


def six_vertex_ctx(mode: Mode, rng: np.random.Generator) -> BracketContext:
    if mode is Mode.RATIONAL:
        return BracketContext.rational()
    return trig_ctx(rng)


def split_x0(q: ModelParams) -> tuple[ModelParams, complex]:
    """Use the first spectral parameter of an L+1 draw as x_0 for size L."""
    return q.with_(x=q.x[1:], y=q.y[1:]), q.x[0]


def redraw_boundary(rng: np.random.Generator, p: ModelParams) -> ModelParams:
    """Same x, y with fresh generic (kappa, z)."""
    for _ in range(1000):
        kz = rng.uniform(-1.5, 1.5, 2) + 1j * rng.uniform(-0.2, 0.2, 2)
        q = p.with_(kappa=complex(kz[0]), z=complex(kz[1]))
        if is_well_separated(q, True):
            return q
    raise RuntimeError("no generic boundary parameters")


def max_over_draws(draws: int, one: Callable[[np.random.Generator], float]):
    def run(rng, _L):
        return max(one(rng) for _ in range(draws))
    return run


def rr(a: PartitionValue | complex, b: PartitionValue | complex) -> float:
    return relative_residual(a, b)


# -- check families ------------------------------------------------------------------

def six_vertex_checks(cfg: ValidationConfig) -> list[Check]:
    mode = cfg.mode if cfg.mode is Mode.RATIONAL else Mode.TRIGONOMETRIC
    d = cfg.draws
    out: list[Check] = []

    def draw(rng, L):
        return random_params(rng, L, six_vertex_ctx(mode, rng))

    # one draw feeds both sides
    def agree(lhs_fn, rhs_fn, L):
        def one(rng):
            p = draw(rng, L)
            return rr(lhs_fn(p), rhs_fn(p))
        return max_over_draws(d, one)

    def symsum(p):
        return cf.symmetrized_sum(p, threads=1)

    def antisym(p):
        return cf.antisym_sum(p, threads=1)

    def lagrange(p):
        return cf.lagrange_sum(p, threads=1)

    def count_run(rng, L):
        return float(max(abs(oracle.count_dw_configs(n) - c) for n, c in enumerate(DW_COUNTS, 1)))

    out.append(Check("6v.count_configs", "count_dw_configs", "asm_numbers", 5, 0.5, count_run))
    for L in range(1, 5):
        out.append(Check(f"6v.oracle.L{L}", "dwpf_enumerate", "dwpf_contract", L, 1e-10,
                         agree(oracle.dwpf_enumerate, oracle.dwpf_contract, L)))
    for L in range(2, 7):
        out.append(Check(f"6v.izergin.L{L}", "izergin_determinant", "dwpf_contract", L, 1e-8,
                         agree(cf.izergin_determinant, oracle.dwpf_contract, L)))
        out.append(Check(f"6v.symsum.L{L}", "symmetrized_sum", "izergin_determinant", L, 1e-8,
                         agree(symsum, cf.izergin_determinant, L)))
        out.append(Check(f"6v.antisym.L{L}", "antisym_sum", "izergin_determinant", L, 1e-8,
                         agree(antisym, cf.izergin_determinant, L)))
        out.append(Check(f"6v.lagrange.L{L}", "lagrange_sum", "izergin_determinant", L, 1e-8,
                         agree(lagrange, cf.izergin_determinant, L)))

    def functional(F, L):
        def one(rng):
            p, x0 = split_x0(draw(rng, L + 1))
            return fn.functional_residual(p, x0, F)
        return max_over_draws(d, one)

    for L in range(1, 7):
        out.append(Check(f"6v.functional.L{L}", "functional_residual", "0", L, 1e-9,
                         functional(cf.izergin_determinant, L)))

    def korepin(variant, L):
        def one(rng):
            p = draw(rng, L)
            lhs = oracle.dwpf_contract(fn.specialize(p, variant))
            rhs = fn.korepin_factor(p, variant) * cf.izergin_determinant(fn.reduced(p, variant)).value
            return rr(lhs, rhs)
        return max_over_draws(d, one)

    for variant in (fn.Korepin.X1_EQ_Y1, fn.Korepin.XL_EQ_Y1_MINUS_1, fn.Korepin.XL_EQ_YL):
        for L in (2, 3, 4):
            out.append(Check(f"6v.korepin[{variant.value}].L{L}", "dwpf_contract@special",
                             "factor*Z_{L-1}", L, 1e-9, korepin(variant, L)))

    for L in range(1, 7):
        out.append(Check(f"6v.recipe.L{L}", "recipe_build", "izergin_determinant", L, 1e-9,
                         agree(fn.recipe_build, cf.izergin_determinant, L)))

    def recipe_order(L):
        def one(rng):
            p = draw(rng, L)
            order = [int(v) for v in rng.permutation(L)]
            return rr(fn.recipe_build(p, order), fn.recipe_build(p))
        return max_over_draws(d, one)

    for L in (3, 5):
        out.append(Check(f"6v.recipe_order.L{L}", "recipe_build[perm]", "recipe_build", L, 1e-10,
                         recipe_order(L)))

    def special_zero(L):
        def one(rng):
            p = draw(rng, L)
            return max(fn.special_zero_check(p, k) for k in range(L))
        return max_over_draws(d, one)

    for L in (2, 3, 4):
        out.append(Check(f"6v.special_zero.L{L}", "symmetrized_sum@zero", "0", L, 1e-9,
                         special_zero(L)))

    def x_symmetry(L):
        def one(rng):
            p = draw(rng, L)
            return rr(oracle.dwpf_contract(p), oracle.dwpf_contract(p.with_x(p.x[::-1])))
        return max_over_draws(d, one)

    def duality(L):
        def one(rng):
            p = draw(rng, L)
            dual = ModelParams(tuple(v - 1 for v in p.y), p.x, p.ctx)
            return rr(oracle.dwpf_contract(p), oracle.dwpf_contract(dual))
        return max_over_draws(d, one)

    out.append(Check("6v.x_symmetry.L4", "dwpf_contract", "dwpf_contract[x reversed]", 4, 1e-10,
                     x_symmetry(4)))
    out.append(Check("6v.duality.L4", "dwpf_contract", "dwpf_contract[x <-> y-1]", 4, 1e-10,
                     duality(4)))
    return out


def reflecting_checks(cfg: ValidationConfig) -> list[Check]:
    d = cfg.draws
    out: list[Check] = []

    def draw(rng, L, ctx_fn=elliptic_ctx):
        return random_params(rng, L, ctx_fn(rng), dynamical=True, reflecting=True)

    def agree(lhs_fn, rhs_fn, L):
        def one(rng):
            p = draw(rng, L)
            return rr(lhs_fn(p), rhs_fn(p))
        return max_over_draws(d, one)

    def refl_sym(p):
        return cf.refl_symmetrized_sum(p, threads=1)

    def crossing(p):
        return cf.crossing_symmetrized_sum(p, threads=1)

    def crossing_sign(p):
        return cf.crossing_symmetrized_sum(p, form="sign", threads=1)

    for L in (1, 2, 3):
        out.append(Check(f"refl.contract.L{L}", "refl_contract", "tfk_determinant", L, 1e-8,
                         agree(oracle.refl_contract, cf.tfk_determinant, L)))
    for L in range(1, 5):
        out.append(Check(f"refl.symsum.L{L}", "refl_symmetrized_sum", "tfk_determinant", L, 1e-8,
                         agree(refl_sym, cf.tfk_determinant, L)))
        out.append(Check(f"refl.crossing.L{L}", "crossing_symmetrized_sum", "tfk_determinant", L,
                         1e-8, agree(crossing, cf.tfk_determinant, L)))
    for L in (2, 3, 4):
        out.append(Check(f"refl.crossing_sign.L{L}", "crossing_symmetrized_sum[sign]",
                         "crossing_symmetrized_sum", L, 1e-11, agree(crossing_sign, crossing, L)))

    def eigen(L):
        def one(rng):
            p, x0 = split_x0(draw(rng, L + 1))
            bottom, top = oracle.a_operator_eigenvalues(p, x0)
            ev = fn.eigenvalues_refl(p, x0)
            return max(rr(bottom, ev.up_a), rr(top, ev.down_a))
        return max_over_draws(d, one)

    for L in (1, 2, 3):
        out.append(Check(f"refl.eigenvalues.L{L}", "a_operator_eigenvalues", "eigenvalues_refl",
                         L, 1e-9, eigen(L)))

    def functional(L):
        def one(rng):
            p, x0 = split_x0(draw(rng, L + 1))
            return fn.functional_residual(p, x0, cf.tfk_determinant, fn.coeffs_refl)
        return max_over_draws(d, one)

    for L in range(1, 5):
        out.append(Check(f"refl.functional.L{L}", "functional_residual[refl]", "0", L, 1e-8,
                         functional(L)))

    def tfk_recurrence(L, sign):
        def one(rng):
            p = draw(rng, L)
            lhs = oracle.refl_contract(fn.specialize(p, fn.Korepin.REFL_PM, sign))
            red = fn.reduced(p, fn.Korepin.REFL_PM)
            rhs = fn.korepin_factor(p, fn.Korepin.REFL_PM, sign) * cf.tfk_determinant(red).value
            return rr(lhs, rhs)
        return max_over_draws(d, one)

    for L in (2, 3):
        for sign, tag in ((1, "+"), (-1, "-")):
            out.append(Check(f"refl.recurrence[{tag}].L{L}", "refl_contract@special",
                             "factor*Z_{L-1}", L, 1e-8, tfk_recurrence(L, sign)))

    def crossing_symmetry(L):
        def one(rng):
            p = draw(rng, L)
            i = int(rng.integers(L))
            x = list(p.x)
            x[i] = -x[i] - 1
            return rr(cf.zbar(p), cf.zbar(p.with_x(x)))
        return max_over_draws(d, one)

    for L in (1, 2, 3):
        out.append(Check(f"refl.zbar_crossing.L{L}", "zbar", "zbar[x_i -> -x_i-1]", L, 1e-9,
                         crossing_symmetry(L)))

    def mn_exchange(L):
        def one(rng):
            p = draw(rng, L)
            t1, t2 = cf.m_n_terms(p, list(p.x), L)
            xs = list(p.x)
            xs[-1] = -xs[-1] - 1
            s1, s2 = cf.m_n_terms(p, xs, L)
            return max(rr(t1, s2), rr(t2, s1))
        return max_over_draws(d, one)

    for L in (1, 2, 3):
        out.append(Check(f"refl.mn_exchange.L{L}", "m_n_terms", "m_n_terms[crossed]", L, 1e-10,
                         mn_exchange(L)))

    def boundary_independence(L):
        def run(rng, _L):
            p = draw(rng, L)
            worst = 0.0
            for _ in range(3):
                q = redraw_boundary(rng, p)
                worst = max(worst, rr(crossing(q), cf.tfk_determinant(q)))
            return worst
        return run

    out.append(Check("refl.boundary_draws.L3", "crossing_symmetrized_sum", "tfk_determinant", 3,
                     1e-8, boundary_independence(3)))

    def six_vertex_limit(L):
        def one(rng):
            p = random_params(rng, L, trig_ctx(rng), reflecting=True)
            return rr(cf.six_vertex_refl_formula(p, threads=1), cf.tfk_determinant(p))
        return max_over_draws(d, one)

    for L in range(1, 5):
        out.append(Check(f"refl.six_vertex.L{L}", "six_vertex_refl_formula",
                         "tfk_determinant[z dropped]", L, 1e-9, six_vertex_limit(L)))
    return out


def structural_checks(cfg: ValidationConfig) -> list[Check]:
    d = cfg.draws
    out: list[Check] = []

    def spectral(rng, n):
        return list(rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-0.2, 0.2, n))

    def ybe(ctx_fn, c_scale=1.0):
        def one(rng):
            return models.ybe_residual(ctx_fn(rng), *spectral(rng, 3), c_scale=c_scale)
        return max_over_draws(d, one)

    def dyn_ybe(shift_sign=models.DYNAMICAL_SHIFT_SIGN):
        def one(rng):
            xs = spectral(rng, 4)
            return models.dyn_ybe_residual(elliptic_ctx(rng), *xs[:3], xs[3],
                                           shift_sign=shift_sign)
        return max_over_draws(d, one)

    def reflection(kappa_shift=None):
        def one(rng):
            xs = spectral(rng, 4)
            kp = None if kappa_shift is None else xs[3] + kappa_shift
            return models.reflection_residual(elliptic_ctx(rng), xs[0], xs[1], xs[2], xs[3],
                                              kappa_prime=kp)
        return max_over_draws(d, one)

    def r_at_zero(rng, _L):
        ctx = trig_ctx(rng)
        swap = np.eye(4)[[0, 2, 1, 3]] * complex(np.sin(ctx.gamma))
        return float(np.max(np.abs(models.r_matrix(ctx, 0) - swap)))

    out.append(Check("struct.ybe.trig", "R12 R13 R23", "R23 R13 R12", 0, 1e-12, ybe(trig_ctx)))
    out.append(Check("struct.ybe.rational", "R12 R13 R23", "R23 R13 R12", 0, 1e-12,
                     ybe(lambda rng: BracketContext.rational())))
    out.append(Check("struct.dyn_ybe.elliptic", "dynamical YBE lhs", "dynamical YBE rhs", 0,
                     1e-12, dyn_ybe()))
    out.append(Check("struct.reflection.elliptic", "reflection lhs", "reflection rhs", 0, 1e-12,
                     reflection()))
    out.append(Check("struct.r_at_zero", "R(0)", "[1] P", 0, 1e-14, r_at_zero))
    return out


def negative_controls(cfg: ValidationConfig) -> list[Check]:
    """Identities broken on purpose; each must fail its tolerance."""
    d = cfg.draws
    out: list[Check] = []

    def draw(rng, L):
        return random_params(rng, L, trig_ctx(rng))

    def perturbed(p):
        return oracle.dwpf_contract(p, c_scale=PERTURB_C_SCALE)

    def functional(F, L):
        def one(rng):
            p, x0 = split_x0(draw(rng, L + 1))
            return fn.functional_residual(p, x0, F)
        return lambda rng, _L: min(one(rng) for _ in range(d))

    def asymmetric(p):
        v = cf.izergin_determinant(p)
        return PartitionValue(v.value * (2 + p.x[0]), "asymmetric", v.scale * abs(2 + p.x[0]))

    def special_zero_off(rng, _L):
        return min(fn.special_zero_check(draw(rng, 3), 0, offset=0.3) for _ in range(d))

    def min_struct(fun):
        return lambda rng, _L: min(fun(rng) for _ in range(d))

    def spectral(rng, n):
        return list(rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-0.2, 0.2, n))

    out.append(Check("neg.functional.perturbed_weights.L3", "functional_residual[c*1.1]", "0", 3,
                     1e-9, functional(perturbed, 3), expect_pass=False))
    out.append(Check("neg.functional.asymmetric.L3", "functional_residual[asymmetric F]", "0", 3,
                     1e-9, functional(asymmetric, 3), expect_pass=False))
    out.append(Check("neg.special_zero.offset.L3", "symmetrized_sum@off-zero", "0", 3, 1e-9,
                     special_zero_off, expect_pass=False))
    out.append(Check("neg.ybe.c_scale2", "R12 R13 R23 [c*2]", "R23 R13 R12 [c*2]", 0, 1e-12,
                     min_struct(lambda rng: models.ybe_residual(trig_ctx(rng), *spectral(rng, 3),
                                                                c_scale=2.0)),
                     expect_pass=False))
    out.append(Check("neg.dyn_ybe.flipped_shift", "dynamical YBE lhs [+1]", "dynamical YBE rhs",
                     0, 1e-12,
                     min_struct(lambda rng: models.dyn_ybe_residual(
                         elliptic_ctx(rng), *spectral(rng, 4), shift_sign=1)),
                     expect_pass=False))

    def reflection_mismatch(rng):
        xs = spectral(rng, 4)
        return models.reflection_residual(elliptic_ctx(rng), xs[0], xs[1], xs[2], xs[3],
                                          kappa_prime=xs[3] + 0.3)

    out.append(Check("neg.reflection.kappa_mismatch", "reflection lhs [kappa']", "reflection rhs",
                     0, 1e-12, min_struct(reflection_mismatch), expect_pass=False))

    if cfg.perturb:
        def perturbed_pair(lhs, rhs, L):
            def one(rng):
                p = draw(rng, L)
                return rr(lhs(p), rhs(p))
            return lambda rng, _L: min(one(rng) for _ in range(d))

        for L in (2, 3, 4):
            out.append(Check(f"neg.perturbed.oracle.L{L}", "dwpf_contract[c*1.1]",
                             "dwpf_enumerate", L, 1e-10,
                             perturbed_pair(perturbed, oracle.dwpf_enumerate, L),
                             expect_pass=False))
            out.append(Check(f"neg.perturbed.izergin.L{L}", "dwpf_contract[c*1.1]",
                             "izergin_determinant", L, 1e-8,
                             perturbed_pair(perturbed, cf.izergin_determinant, L),
                             expect_pass=False))
    return out


def build_checks(cfg: ValidationConfig) -> list[Check]:
    checks = (six_vertex_checks(cfg) + reflecting_checks(cfg) + structural_checks(cfg)
              + negative_controls(cfg))
    ids = [c.id for c in checks]
    if len(set(ids)) != len(ids):
        raise AssertionError("duplicate check ids")
    return checks


def run_check(check: Check, base_seed: int, tol: float | None = None) -> CheckResult:
    seed = check_seed(base_seed, check.id)
    rng = np.random.default_rng(seed)
    tol = check.tol if tol is None else tol
    t0 = time.perf_counter()
    residual = float(check.run(rng, check.L))
    wall = (time.perf_counter() - t0) * 1e3
    passed = bool(residual < tol)
    res = CheckResult(check.id, check.lhs, check.rhs, check.L, seed, residual, tol, passed,
                      check.expect_pass, wall)
    log.debug("%s residual=%.3e ok=%s", check.id, residual, res.ok)
    return res


def run_validation(cfg: ValidationConfig | None = None, threads: int = 1,
                   checks: list[Check] | None = None) -> ValidationReport:
    """Run every check, in parallel when ``threads > 1``, and join in order."""
    cfg = ValidationConfig() if cfg is None else cfg
    checks = build_checks(cfg) if checks is None else checks
    if threads <= 1:
        results = [run_check(c, cfg.seed, cfg.tol) for c in checks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: run_check(c, cfg.seed, cfg.tol), checks))
    return ValidationReport(tuple(results), cfg.seed)
