"""Parameter scans over ``(p, alpha, q)`` and the phase-diagram outputs.

Each cell computes the nonexistence threshold ``qbar`` and the trial-family
threshold ``qtilde_est`` where they are defined, runs the solver of the chosen
problem and classifies the outcome. A scan directory holds::

    manifest.json            spec, spec hash, per-cell records, threshold table
    scan.csv                 p, alpha, q, qbar, qtilde_est, classification, level, residual
    fields/<cell>.psm2       best solution of every cell that produced one
    plots/phase.dat          whitespace tables for gnuplot
    plots/thresholds.dat
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .fields import Field2D, Grid2D, ProblemParams, RadialGrid, SymmetryClass, write_field
from .inequalities import critical_alpha, nonexistence_qbar
from .provenance import RunManifest, content_hash
from .solver import (
    NEGATIVE_MINIMIZER,
    TRIVIAL,
    SolverConfig,
    find_q_tilde,
    minimize_I_radial,
    minimize_on_H,
    mountain_pass,
    radial_multistart,
)

log = logging.getLogger(__name__)

__all__ = ["PROBLEMS", "ScanSpec", "CellResult", "solve_cell", "run_scan", "load_scan", "cell_id"]

PROBLEMS = ("P1", "P2", "PW")
CSV_COLUMNS = ("p", "alpha", "q", "qbar", "qtilde_est", "classification", "level", "residual")
_CLASS_CODES = {TRIVIAL: 0, NEGATIVE_MINIMIZER: 1, "mountain_pass_solution": 2,
                "constrained_minimizer": 3, "positive_level_critical_point": 4, "not_converged": 8, "error": 9}


@dataclass(frozen=True)
class ScanSpec:
    """A grid of cells and the budget spent on each.

    ``P1`` minimizes I over radial profiles (seeded minimization plus
    ``multistarts`` random starts), ``P2`` runs the mountain pass for J with
    ``k = 1`` and ``PW`` minimizes ``G`` with ``W = |s|^p/p`` on ``{V0 = 1}``
    (``q`` is then an output, and the ``q`` list is ignored beyond its first entry).
    """

    p_values: tuple
    alpha_values: tuple
    q_values: tuple
    problem: str = "P1"
    max_iter: int = 100
    multistarts: int = 4
    radial_m: int = 256
    radial_R: float = 8.0
    max_box_doublings: int = 4
    grid_n: int = 48
    grid_L: float = 8.0
    trial_family_size: int = 256
    tol_grad: float = 1e-8
    seed: int = 0
    out_dir: str = "scan_out"

    def __post_init__(self):
        for name in ("p_values", "alpha_values", "q_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, vals)
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if any(p <= 2 for p in self.p_values):
            raise ValueError("every p must exceed 2")
        if any(a <= 0 for a in self.alpha_values):
            raise ValueError("every alpha must be positive")
        if any(q < 0 for q in self.q_values):
            raise ValueError("q values must be nonnegative")
        if self.max_iter < 1 or self.multistarts < 0:
            raise ValueError("max_iter must be positive and multistarts nonnegative")

    def solver_inputs(self) -> dict:
        """Everything that influences results (the output directory does not)."""
        d = asdict(self)
        d.pop("out_dir")
        return d

    @property
    def spec_hash(self) -> str:
        return content_hash(self.solver_inputs())

    def cells(self) -> List[tuple]:
        qs = self.q_values[:1] if self.problem == "PW" else self.q_values
        return [(p, a, q) for p in self.p_values for a in self.alpha_values for q in qs]

    def config(self) -> SolverConfig:
        return SolverConfig(tol_grad=self.tol_grad, max_iter=self.max_iter, seed=self.seed)


def cell_id(p: float, alpha: float, q: float) -> str:
    return f"p{p:g}_a{alpha:g}_q{q:g}"


@dataclass
class CellResult:
    p: float
    alpha: float
    q: float
    qbar: Optional[float]
    qtilde_est: Optional[float]
    classification: str
    level: Optional[float]
    residual: Optional[float]
    runs: List[dict] = field(default_factory=list)
    error: Optional[str] = None

    def row(self) -> List[str]:
        def fmt(x):
            return "" if x is None else (x if isinstance(x, str) else repr(float(x)))
        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _thresholds(p: float, alpha: float, trial_family_size: int):
    """``(qbar, qtilde_est)``; each is None where its hypotheses fail."""
    if not (p > 4 and alpha > critical_alpha(p)):
        return None, None
    qt = find_q_tilde(ProblemParams(alpha, p), trial_family_size)
    return nonexistence_qbar(alpha, p), (qt if math.isfinite(qt) else None)


def solve_cell(spec: ScanSpec, p: float, alpha: float, q: float):
    """Solve one cell; returns the record and the best outcome (or None)."""
    qbar, qt = _thresholds(p, alpha, spec.trial_family_size) if spec.problem == "P1" else (None, None)
    config = spec.config()
    if spec.problem == "P1":
        params = ProblemParams(alpha, p, q, "plus")
        outs = [minimize_I_radial(params, config=config, trial_family_size=spec.trial_family_size,
                                  m=spec.radial_m, max_box_doublings=spec.max_box_doublings)]
        if spec.multistarts:
            outs += radial_multistart(params, spec.multistarts, spec.seed,
                                      RadialGrid(spec.radial_R, spec.radial_m), config)
        # the cell takes the class of its lowest-level run
        best = min(outs, key=lambda o: o.level)
        cls = best.classification if best.converged or best.level < 0 else "not_converged"
    elif spec.problem == "P2":
        params = ProblemParams(alpha, p, q, "minus")
        best = mountain_pass(params, 1, grid=Grid2D(spec.grid_L, spec.grid_n), config=config)
        outs = [best]
        cls = best.classification if best.converged else "not_converged"
    else:
        params = ProblemParams(alpha, p, 0.0, "general_W", (0.0, 1.0 / p, p))
        grid = Grid2D(spec.grid_L, spec.grid_n)
        seed = Field2D.from_function(grid, lambda x1, x2: x1 * np.exp(-(x1 * x1 + x2 * x2)))
        best = minimize_on_H(seed, params, config, SymmetryClass("odd_even"))
        outs = [best]
        cls = best.classification if best.converged else "not_converged"
    rec = CellResult(p, alpha, q, qbar, qt, cls, best.level, best.residual_grad,
                     runs=[o.summary() for o in outs])
    return rec, best


def _cell_task(args):
    spec, p, a, q = args
    try:
        rec, best = solve_cell(spec, p, a, q)
        return rec, best.solution, best.summary()
    except Exception as exc:  # a failing cell is recorded, never fatal
        log.exception("cell %s failed", cell_id(p, a, q))
        return CellResult(p, a, q, None, None, "error", None, None, error=repr(exc)), None, None


def _csv_text(records: Sequence[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def _plot_tables(records: Sequence[CellResult]) -> Dict[str, str]:
    phase = ["# p alpha q class_code level"]
    for r in records:
        lvl = "nan" if r.level is None else repr(float(r.level))
        phase.append(f"{r.p!r} {r.alpha!r} {r.q!r} {_CLASS_CODES.get(r.classification, 9)} {lvl}")
    seen, thr = set(), ["# p alpha qbar qtilde_est"]
    for r in records:
        if (r.p, r.alpha) in seen:
            continue
        seen.add((r.p, r.alpha))
        qb = "nan" if r.qbar is None else repr(r.qbar)
        qt = "nan" if r.qtilde_est is None else repr(r.qtilde_est)
        thr.append(f"{r.p!r} {r.alpha!r} {qb} {qt}")
    return {"phase.dat": "\n".join(phase) + "\n", "thresholds.dat": "\n".join(thr) + "\n"}


def load_scan(out_dir) -> RunManifest:
    return RunManifest.read(Path(out_dir) / "manifest.json")


def _completed(out: Path, spec: ScanSpec) -> Optional[RunManifest]:
    path = out / "manifest.json"
    if not path.exists() or not (out / "scan.csv").exists():
        return None
    try:
        man = RunManifest.read(path)
    except (ValueError, TypeError, json.JSONDecodeError):
        return None
    if man.inputs.get("spec_hash") != spec.spec_hash:
        return None
    return man


def run_scan(spec: ScanSpec, jobs: Optional[int] = None) -> RunManifest:
    """Run (or reload) the scan described by ``spec`` into ``spec.out_dir``.

    A directory already holding a manifest with the same spec hash is returned
    as is, without solving anything. Cells run in a pool of ``jobs`` worker
    processes (default: all cores; 1 runs in-process) and are merged in input
    order, so the outputs do not depend on scheduling.
    """
    out = Path(spec.out_dir)
    done = _completed(out, spec)
    if done is not None:
        log.info("scan %s already complete; nothing to do", spec.spec_hash[:12])
        return done
    start = time.perf_counter()
    tasks = [(spec, p, a, q) for p, a, q in spec.cells()]
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1 or len(tasks) == 1:
        results = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_cell_task, tasks))

    records = [r for r, _, _ in results]
    for (rec, sol, summary) in results:
        if sol is not None:
            write_field(out / "fields" / f"{cell_id(rec.p, rec.alpha, rec.q)}.psm2", sol, summary)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scan.csv").write_text(_csv_text(records))
    (out / "plots").mkdir(exist_ok=True)
    for name, text in _plot_tables(records).items():
        (out / "plots" / name).write_text(text)
    thresholds = [{"p": r.p, "alpha": r.alpha, "qbar": r.qbar, "qtilde_est": r.qtilde_est}
                  for r in records]
    man = RunManifest.timed("scan", {"spec": spec.solver_inputs(), "spec_hash": spec.spec_hash},
                            start, {"cells": [asdict(r) for r in records],
                                    "constants": thresholds,
                                    "ordering_ok": _ordering_ok(records)})
    man.write(out / "manifest.json")
    return man


def _ordering_ok(records: Sequence[CellResult]) -> bool:
    """``qtilde_est >= qbar`` wherever both are defined."""
    return all(r.qtilde_est >= r.qbar for r in records
               if r.qbar is not None and r.qtilde_est is not None)
