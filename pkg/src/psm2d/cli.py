"""Command-line front end.

Every subcommand reads an optional flat ``key = value`` config file; flags
override the file, which overrides the defaults below. The merged config is
logged to stderr and stored in every manifest. Solve commands print the
outcome summary as JSON on stdout.

Exit codes: 0 success, 1 solver did not converge (or a check failed), 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import logkernel
from .fields import (
    Field2D,
    Grid2D,
    ProblemParams,
    RadialGrid,
    SymmetryClass,
    l2_norm_sq,
    read_field,
    write_field,
)

log = logging.getLogger("psm2d")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_BAD_INPUT = 0, 1, 2

DEFAULTS: Dict[str, str] = {
    "problem": "P1",             # P1 (+|u|^{p-2}u), P2 (-|u|^{p-2}u) or PW (general W)
    "alpha": "5",
    "p": "6",
    "q": "1",
    "grid.n": "64",              # 2-D grid: n x n cells on [-L, L]^2
    "grid.L": "8",
    "radial.m": "512",           # radial grid cells
    "radial.R": "0",             # radial box radius; 0 sizes it from the seed
    "symmetry": "odd_even",      # class for solve-nonradial
    "k": "1",                    # dihedral order for solve-mp
    "W.C1": "0",                 # W(s) = C1 s^2 + C2 |s|^pW for solve-nonradial
    "W.C2": "0.25",
    "W.p": "4",
    "tolerances.grad": "1e-8",
    "budget.max_iter": "500",
    "budget.multistarts": "4",
    "seeds.rng": "0",
    "scan.p": "5,6,7,8",
    "scan.alpha": "6.5,7,8,10",
    "scan.q": "0.0001,1,50",
    "out.dir": "psm2d_out",
}


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        out[key] = value
    return out


def merged_config(args: argparse.Namespace) -> Dict[str, str]:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        cfg.update(parse_config(text, str(path)))
    for key, dest in _FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg[key] = str(val)
    if os.environ.get("PSM_SEED"):
        cfg["seeds.rng"] = os.environ["PSM_SEED"]
    log.info("effective config: %s", json.dumps(cfg, sort_keys=True))
    return cfg


_FLAG_KEYS = {"alpha": "alpha", "p": "p", "q": "q", "grid.n": "n", "grid.L": "L",
              "radial.m": "m", "radial.R": "R", "symmetry": "symmetry", "k": "k",
              "tolerances.grad": "tol", "budget.max_iter": "max_iter",
              "seeds.rng": "seed", "out.dir": "out", "problem": "problem",
              "scan.p": "scan_p", "scan.alpha": "scan_alpha", "scan.q": "scan_q",
              "budget.multistarts": "multistarts"}


def _num(cfg, key, kind=float):
    try:
        return kind(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {cfg[key]!r} as {kind.__name__}") from exc


def _list(cfg, key) -> List[float]:
    try:
        return [float(v) for v in cfg[key].split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers") from exc


def _solver_config(cfg):
    from .solver import SolverConfig

    return SolverConfig(tol_grad=_num(cfg, "tolerances.grad"), max_iter=_num(cfg, "budget.max_iter", int),
                        seed=_num(cfg, "seeds.rng", int))


def _emit(outcome, cfg, name: str) -> int:
    if outcome.manifest is not None:
        outcome.manifest.inputs["config"] = dict(cfg)
    paths = outcome.write(cfg["out.dir"], name)
    summary = outcome.summary()
    summary["files"] = {k: str(v) for k, v in paths.items()}
    print(json.dumps(summary, sort_keys=True, indent=2, default=float))
    return EXIT_OK if outcome.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve_radial(args) -> int:
    from .solver import minimize_I_radial

    cfg = merged_config(args)
    params = ProblemParams(_num(cfg, "alpha"), _num(cfg, "p"), _num(cfg, "q"), "plus")
    R = _num(cfg, "radial.R")
    grid = RadialGrid(R, _num(cfg, "radial.m", int)) if R > 0 else None
    out = minimize_I_radial(params, grid=grid, config=_solver_config(cfg), m=_num(cfg, "radial.m", int))
    return _emit(out, cfg, "radial")


def cmd_solve_nonradial(args) -> int:
    from .solver import minimize_on_H

    cfg = merged_config(args)
    W = (_num(cfg, "W.C1"), _num(cfg, "W.C2"), _num(cfg, "W.p"))
    params = ProblemParams(_num(cfg, "alpha"), W[2], 0.0, "general_W", W)
    grid = Grid2D(_num(cfg, "grid.L"), _num(cfg, "grid.n", int))
    seed = Field2D.from_function(grid, lambda x1, x2: x1 * np.exp(-(x1 * x1 + x2 * x2)))
    sym = SymmetryClass.parse(cfg["symmetry"])
    out = minimize_on_H(seed, params, _solver_config(cfg), sym)
    return _emit(out, cfg, "constrained")


def cmd_solve_mp(args) -> int:
    from .solver import mountain_pass

    cfg = merged_config(args)
    params = ProblemParams(_num(cfg, "alpha"), _num(cfg, "p"), _num(cfg, "q"), "minus")
    grid = Grid2D(_num(cfg, "grid.L"), _num(cfg, "grid.n", int))
    out = mountain_pass(params, _num(cfg, "k", int), grid=grid, config=_solver_config(cfg))
    return _emit(out, cfg, "mountain_pass")


def cmd_potential(args) -> int:
    cfg = merged_config(args)
    try:
        u = read_field(args.field)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{args.field}: {exc}") from exc
    phi = logkernel.newtonian_potential(u)
    path = write_field(Path(cfg["out.dir"]) / (Path(args.field).stem + ".phi.psm2"), phi)
    print(json.dumps({"field": str(args.field), "potential": str(path), "V0": logkernel.v0(u),
                      "l2_norm_sq": l2_norm_sq(u)}, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import inequalities as ineq
    from .library import field_library, radial_library

    cfg = merged_config(args)
    alpha, p = _num(cfg, "alpha"), _num(cfg, "p")
    suites = ["lemma", "strauss", "v1"] if args.suite == "all" else [args.suite]
    rows = []
    for suite in suites:
        if suite == "lemma":
            lp = ineq.LemmaParams(alpha, p, ineq.critical_alpha(p))
            C = ineq.lemma_constant(lp)
            checks = [ineq.verify_lemma(u, lp, C) for u in field_library(count=args.count)]
        elif suite == "strauss":
            grid = RadialGrid(_num(cfg, "grid.L"), 4 * _num(cfg, "grid.n", int))
            checks = [ineq.strauss_bound(u, alpha) for u in radial_library(grid, args.count)]
        else:
            C = ineq.embedding_constants(alpha).C_alpha
            checks = [ineq.verify_v1_bound(u, alpha, C) for u in field_library(count=args.count)]
        ok = sum(c.ok for c in checks)
        rows.append({"suite": suite, "satisfied": ok, "total": len(checks),
                     "max_ratio": max(c.ratio for c in checks)})
    print(f"{'suite':<10}{'satisfied':>12}{'max lhs/rhs':>14}")
    for r in rows:
        print(f"{r['suite']:<10}{r['satisfied']:>7}/{r['total']:<4}{r['max_ratio']:>14.4g}")
    return EXIT_OK if all(r["satisfied"] == r["total"] for r in rows) else EXIT_NOT_CONVERGED


def cmd_constants(args) -> int:
    from . import inequalities as ineq

    cfg = merged_config(args)
    alphas = _list(cfg, "scan.alpha") if args.alpha is None else [_num(cfg, "alpha")]
    ps = _list(cfg, "scan.p") if args.p is None else [_num(cfg, "p")]
    try:
        if args.alpha is not None and args.p is not None:
            rows = [ineq.threshold_constants(alphas[0], ps[0])]
        else:
            rows = ineq.threshold_table(alphas, ps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(ineq.constants_csv(rows))
    return EXIT_OK


def cmd_scan(args) -> int:
    from .phase import ScanSpec, run_scan

    cfg = merged_config(args)
    spec = ScanSpec(_list(cfg, "scan.p"), _list(cfg, "scan.alpha"), _list(cfg, "scan.q"),
                    problem=cfg["problem"], max_iter=_num(cfg, "budget.max_iter", int),
                    multistarts=_num(cfg, "budget.multistarts", int),
                    tol_grad=_num(cfg, "tolerances.grad"), seed=_num(cfg, "seeds.rng", int),
                    grid_n=_num(cfg, "grid.n", int), grid_L=_num(cfg, "grid.L"),
                    out_dir=cfg["out.dir"])
    man = run_scan(spec, jobs=args.jobs)
    cells = man.results["cells"]
    failed = [c for c in cells if c["classification"] in ("error", "not_converged")]
    print(json.dumps({"spec_hash": man.inputs["spec_hash"], "cells": len(cells),
                      "failed": len(failed), "ordering_ok": man.results["ordering_ok"],
                      "out_dir": spec.out_dir}, sort_keys=True, indent=2))
    return EXIT_OK if not failed else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# parser


def _common(sp: argparse.ArgumentParser, *flags: str):
    sp.add_argument("--config", help="flat key = value config file")
    sp.add_argument("--out", help="output directory (out.dir)")
    sp.add_argument("--seed", type=int, help="RNG seed (seeds.rng); PSM_SEED overrides")
    spec = {
        "alpha": dict(type=float, help="weight exponent alpha"),
        "p": dict(type=float, help="local exponent p"),
        "q": dict(type=float, help="coupling q"),
        "n": dict(type=int, help="2-D grid cells per side (grid.n)"),
        "L": dict(type=float, help="2-D half width (grid.L)"),
        "m": dict(type=int, help="radial grid cells (radial.m)"),
        "R": dict(type=float, help="radial box radius, 0 for automatic (radial.R)"),
        "symmetry": dict(help="none, odd_even, dihedral(k)"),
        "k": dict(type=int, choices=(1, 2, 3), help="dihedral order"),
        "tol": dict(type=float, help="gradient tolerance (tolerances.grad)"),
        "max_iter": dict(type=int, help="iteration budget (budget.max_iter)"),
    }
    for f in flags:
        sp.add_argument("--" + f.replace("_", "-"), dest=f, **spec[f])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psm2d", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    ap.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-radial", help="minimize I over radial profiles")
    _common(sp, "alpha", "p", "q", "m", "R", "tol", "max_iter")
    sp.set_defaults(func=cmd_solve_radial)

    sp = sub.add_parser("solve-nonradial", help="minimize G on {V0 = 1} in a symmetry class")
    _common(sp, "alpha", "n", "L", "symmetry", "tol", "max_iter")
    sp.set_defaults(func=cmd_solve_nonradial)

    sp = sub.add_parser("solve-mp", help="mountain-pass solution of J in dihedral(k)")
    _common(sp, "alpha", "p", "q", "n", "L", "k", "tol", "max_iter")
    sp.set_defaults(func=cmd_solve_mp)

    sp = sub.add_parser("potential", help="log potential of a field file")
    _common(sp)
    sp.add_argument("field", help="input .psm2 file")
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("verify", help="inequality suites over the random-field library")
    _common(sp, "alpha", "p", "n", "L")
    sp.add_argument("--suite", choices=("lemma", "strauss", "v1", "all"), default="all")
    sp.add_argument("--count", type=int, default=100, help="fields per suite")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("constants", help="nonexistence constants as CSV")
    _common(sp, "alpha", "p")
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("scan", help="(p, alpha, q) phase scan")
    _common(sp, "n", "L", "tol", "max_iter")
    sp.add_argument("--problem", choices=("P1", "P2", "PW"))
    sp.add_argument("--scan-p", dest="scan_p", help="comma-separated p values")
    sp.add_argument("--scan-alpha", dest="scan_alpha", help="comma-separated alpha values")
    sp.add_argument("--scan-q", dest="scan_q", help="comma-separated q values")
    sp.add_argument("--multistarts", type=int, help="random starts per P1 cell")
    sp.set_defaults(func=cmd_scan)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad input, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"psm2d: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"psm2d: invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
