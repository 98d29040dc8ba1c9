"""Command-line front end: ``dwpf compute|validate|bench``.

Reports go to stdout as JSON (or a plain table with ``--table``); logs go to
stderr. Exit codes: 0 success, 1 failed validation, 2 bad config, 3 numeric
guard violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_forms as cf
from . import functional as fn
from . import oracle
from .errors import GuardViolation
from .numerics import BracketContext, Mode
from .params import ModelParams, PartitionValue, random_params
from .validation import DEFAULT_DRAWS, DEFAULT_SEED, ValidationConfig, run_validation

log = logging.getLogger("dwpf")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
SCHEMA = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Formula:
    fn: Callable[..., PartitionValue]
    reflecting: bool
    threaded: bool = False
    six_vertex_only: bool = False


FORMULAS = {
    "dwpf_enumerate": Formula(oracle.dwpf_enumerate, False, six_vertex_only=True),
    "dwpf_contract": Formula(oracle.dwpf_contract, False, six_vertex_only=True),
    "izergin_determinant": Formula(cf.izergin_determinant, False, six_vertex_only=True),
    "symmetrized_sum": Formula(cf.symmetrized_sum, False, threaded=True),
    "antisym_sum": Formula(cf.antisym_sum, False, threaded=True),
    "lagrange_sum": Formula(cf.lagrange_sum, False, threaded=True),
    "recipe_build": Formula(fn.recipe_build, False, six_vertex_only=True),
    "refl_contract": Formula(oracle.refl_contract, True),
    "tfk_determinant": Formula(cf.tfk_determinant, True),
    "refl_symmetrized_sum": Formula(cf.refl_symmetrized_sum, True, threaded=True),
    "crossing_symmetrized_sum": Formula(cf.crossing_symmetrized_sum, True, threaded=True),
    "z_ell": Formula(cf.z_ell, True, threaded=True),
    "six_vertex_refl_formula": Formula(cf.six_vertex_refl_formula, True, threaded=True,
                                       six_vertex_only=True),
}


@dataclass(frozen=True)
class JobConfig:
    params: ModelParams
    formulas: tuple[str, ...]
    seed: int | None = None


# -- config parsing -------------------------------------------------------------------

def _complex(v, what: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{what} must be a number or a [re, im] pair")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def make_context(raw: dict, mode: str | None) -> BracketContext:
    try:
        m = Mode.parse(mode or raw.get("mode", "trig"))
    except ValueError as exc:
        raise ConfigError(f"unknown mode {raw.get('mode')!r}") from exc
    gamma = _complex(raw.get("gamma", 1.0), "gamma")
    tau = _complex(raw.get("tau", [0.0, 1.0]), "tau")
    try:
        return BracketContext(m, gamma, tau)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_job(raw: dict, *, mode: str | None = None, seed: int | None = None) -> JobConfig:
    """Turn a config dict (plus CLI overrides) into parameters and formula names."""
    ctx = make_context(raw, mode)
    seed = seed if seed is not None else raw.get("seed")
    formulas = raw.get("formulas", raw.get("formula"))
    reflecting = raw.get("kappa") is not None
    if formulas is None:
        formulas = ["tfk_determinant"] if reflecting else ["izergin_determinant"]
    if isinstance(formulas, str):
        formulas = [formulas]
    unknown = [f for f in formulas if f not in FORMULAS]
    if unknown or not formulas:
        raise ConfigError(f"unknown formula(s): {unknown}; choose from {sorted(FORMULAS)}")

    x, y = raw.get("x", "random"), raw.get("y", "random")
    if "random" in (x, y) or raw.get("kappa") == "random" or raw.get("z") == "random":
        if seed is None:
            raise ConfigError("a seed is required for random parameters")
        L = raw.get("L")
        if not isinstance(L, int) or L < 1:
            raise ConfigError("random parameters need a positive integer L")
        rng = np.random.default_rng(int(seed))
        drawn = random_params(rng, L, ctx, dynamical=raw.get("z") is not None,
                              reflecting=reflecting)
    else:
        drawn = None

    def vec(v, name, fallback):
        if v == "random":
            return fallback
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{name} must be a non-empty list or \"random\"")
        return tuple(_complex(t, name) for t in v)

    xs = vec(x, "x", drawn.x if drawn else None)
    ys = vec(y, "y", drawn.y if drawn else None)
    if len(xs) != len(ys):
        raise ConfigError("x and y must have the same length")
    if "L" in raw and raw["L"] != len(xs):
        raise ConfigError("L does not match the length of x")

    def scalar(name, fallback):
        v = raw.get(name)
        if v is None:
            return None
        if v == "random":
            return fallback
        return _complex(v, name)

    z = scalar("z", drawn.z if drawn else None)
    kappa = scalar("kappa", drawn.kappa if drawn else None)
    p = ModelParams(xs, ys, ctx, z=z, kappa=kappa)
    for name in formulas:
        f = FORMULAS[name]
        if f.reflecting and kappa is None:
            raise ConfigError(f"{name} needs kappa")
        if f.six_vertex_only and ctx.mode is Mode.ELLIPTIC:
            raise ConfigError(f"{name} needs trig or rational mode")
    return JobConfig(p, tuple(formulas), seed)


def evaluate(name: str, p: ModelParams, threads: int) -> PartitionValue:
    f = FORMULAS[name]
    if f.threaded:
        return f.fn(p, threads=threads)
    return f.fn(p)


def cplx(v: complex) -> list[float]:
    v = complex(v)
    return [v.real, v.imag]


# -- subcommands ----------------------------------------------------------------------

def cmd_compute(raw: dict, args) -> tuple[dict, int]:
    job = parse_job(raw, mode=args.mode, seed=args.seed)
    p = job.params
    results = []
    for name in job.formulas:
        t0 = time.perf_counter()
        v = evaluate(name, p, args.threads)
        wall = (time.perf_counter() - t0) * 1e3
        log.info("%s = %r (%.2f ms)", name, v.value, wall)
        results.append({"formula": name, "value": cplx(v.value), "method": v.method,
                        "scale": v.scale, "terms": v.terms, "wall_time_ms": wall})
    out = {"schema": SCHEMA, "mode": p.ctx.mode.value, "L": p.L,
           "params": {"x": [cplx(v) for v in p.x], "y": [cplx(v) for v in p.y],
                      "z": None if p.z is None else cplx(p.z),
                      "kappa": None if p.kappa is None else cplx(p.kappa)},
           "results": results}
    return out, EXIT_OK


def validation_config(raw: dict, args) -> ValidationConfig:
    seed = args.seed if args.seed is not None else raw.get("seed", DEFAULT_SEED)
    tol = args.tol if args.tol is not None else raw.get("tol")
    try:
        mode = Mode.parse(args.mode or raw.get("mode", "trig"))
    except ValueError as exc:
        raise ConfigError(f"unknown mode {raw.get('mode')!r}") from exc
    draws = raw.get("draws", DEFAULT_DRAWS)
    if not isinstance(seed, int) or not isinstance(draws, int) or draws < 1:
        raise ConfigError("seed and draws must be integers, draws >= 1")
    if tol is not None and not (isinstance(tol, (int, float)) and tol > 0):
        raise ConfigError("tol must be a positive number")
    perturb = bool(args.perturb or raw.get("perturb", False))
    return ValidationConfig(seed, draws, mode, tol, perturb)


def cmd_validate(raw: dict, args) -> tuple[dict, int]:
    cfg = validation_config(raw, args)
    report = run_validation(cfg, threads=args.threads)
    for r in report.results:
        if not r.ok:
            log.warning("check %s: residual %.3e vs tol %.1e (expect_pass=%s)",
                        r.id, r.residual, r.tol, r.expect_pass)
    out = report.as_dict(timings=args.timings)
    return out, EXIT_OK if report.all_ok else EXIT_FAILED


BENCH_SIX_VERTEX = ("izergin_determinant", "symmetrized_sum", "antisym_sum", "lagrange_sum",
                    "recipe_build", "dwpf_contract", "dwpf_enumerate")
BENCH_REFLECTING = ("tfk_determinant", "refl_symmetrized_sum", "crossing_symmetrized_sum",
                    "refl_contract")
BENCH_LIMITS = {"dwpf_enumerate": oracle.ENUMERATE_MAX_L, "refl_contract": 3,
                "refl_symmetrized_sum": 6, "crossing_symmetrized_sum": 5}


def _time(name: str, p: ModelParams, threads: int, repeats: int) -> tuple[float, PartitionValue]:
    best, value = math.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = evaluate(name, p, threads)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3, value


def cmd_bench(raw: dict, args) -> tuple[dict, int]:
    seed = args.seed if args.seed is not None else raw.get("seed", DEFAULT_SEED)
    L_max = raw.get("L_max", 8)
    refl_L_max = raw.get("refl_L_max", 4)
    repeats = raw.get("repeats", 3)
    if not all(isinstance(v, int) and v >= 1 for v in (seed, L_max, refl_L_max, repeats)):
        raise ConfigError("seed, L_max, refl_L_max and repeats must be positive integers")
    if L_max > oracle.CONTRACT_MAX_L:
        raise ConfigError(f"L_max must be <= {oracle.CONTRACT_MAX_L}")
    rng = np.random.default_rng(seed)
    rows = []
    six_ctx = BracketContext.rational() if args.mode == "rational" else BracketContext.trig(0.7)
    for L in range(1, L_max + 1):
        p = random_params(rng, L, six_ctx)
        for name in BENCH_SIX_VERTEX:
            if L > BENCH_LIMITS.get(name, L_max):
                continue
            ms, v = _time(name, p, args.threads, repeats)
            rows.append({"family": "six_vertex", "method": name, "L": L, "wall_ms": ms,
                         "terms": v.terms})
    ell = BracketContext.elliptic(0.6, 0.9j) if args.mode != "rational" else BracketContext.rational()
    for L in range(1, refl_L_max + 1):
        p = random_params(rng, L, ell, dynamical=True, reflecting=True)
        for name in BENCH_REFLECTING:
            if L > BENCH_LIMITS.get(name, refl_L_max):
                continue
            ms, v = _time(name, p, args.threads, repeats)
            rows.append({"family": "reflecting", "method": name, "L": L, "wall_ms": ms,
                         "terms": v.terms})

    top = [r for r in rows if r["family"] == "six_vertex" and r["L"] == L_max]
    fastest = min(top, key=lambda r: r["wall_ms"])["method"]
    det = next(r for r in top if r["method"] == "izergin_determinant")
    ordering = {"L": L_max, "fastest": fastest,
                "determinant_fastest": fastest == "izergin_determinant",
                "determinant_ms": det["wall_ms"]}
    sym = next((r for r in top if r["method"] == "symmetrized_sum"), None)
    if sym is not None:
        ordering["symmetrized_sum_ms"] = sym["wall_ms"]
        ordering["symmetrized_sum_terms"] = sym["terms"]
        ordering["terms_equal_L_factorial"] = sym["terms"] == math.factorial(L_max)
    if not ordering["determinant_fastest"]:
        log.warning("at L=%d the fastest method was %s", L_max, fastest)
    return {"schema": SCHEMA, "seed": seed, "threads": args.threads, "rows": rows,
            "ordering": ordering}, EXIT_OK


# -- output ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, float) for t in v):
        return f"{v[0]:+.12g}{v[1]:+.12g}j"
    return str(v)


def render_table(command: str, out: dict) -> str:
    if command == "validate":
        cols = ["id", "L", "residual", "tol", "pass", "expect_pass", "ok"]
        rows = out["checks"]
        tail = f"\n{out['summary']}"
    elif command == "compute":
        cols = ["formula", "value", "scale", "terms", "wall_time_ms"]
        rows = out["results"]
        tail = ""
    else:
        cols = ["family", "method", "L", "wall_ms", "terms"]
        rows = out["rows"]
        tail = f"\n{out['ordering']}"
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c)
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + tail


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dwpf", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=("compute", "validate", "bench"))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, help="worker threads (default: $DWPF_THREADS or 1)")
    ap.add_argument("--tol", type=float, help="override every validation tolerance")
    ap.add_argument("--mode", choices=("trig", "elliptic", "rational"))
    fmt = ap.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="table", action="store_false", help="JSON report (default)")
    fmt.add_argument("--table", dest="table", action="store_true", help="plain-text table")
    ap.set_defaults(table=False)
    ap.add_argument("--perturb", action="store_true",
                    help="validate: add perturbed-weight controls that must fail")
    ap.add_argument("--timings", action="store_true",
                    help="validate: include wall times (report is then not byte-stable)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def setup_logging(verbose: int) -> None:
    # own handler so the report on stdout stays clean whatever the host configured
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.WARNING - 10 * min(verbose, 2))


COMMANDS = {"compute": cmd_compute, "validate": cmd_validate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    setup_logging(args.verbose)
    args.threads = cf.resolve_threads(args.threads)
    try:
        raw = load_config(args.config)
        out, code = COMMANDS[args.command](raw, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except GuardViolation as exc:
        log.error("guard violation: %s: %s", type(exc).__name__, exc)
        return EXIT_GUARD
    except ValueError as exc:  # SizeLimit, InvalidContext and friends
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    if args.table:
        print(render_table(args.command, out))
    else:
        print(json.dumps(out, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
