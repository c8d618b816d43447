"""Solver configuration and result records."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .. import energy
from ..fields import AnyField, Field2D, ProblemParams, l2_norm_sq, write_field, x_norm
from ..provenance import RunManifest, canonical_json

__all__ = [
    "TRIVIAL",
    "NEGATIVE_MINIMIZER",
    "POSITIVE_CRITICAL",
    "MOUNTAIN_PASS",
    "CONSTRAINED",
    "SolverConfig",
    "SolveOutcome",
    "MountainPassState",
    "diagnose",
]

TRIVIAL = "trivial_collapse"
NEGATIVE_MINIMIZER = "negative_level_minimizer"
POSITIVE_CRITICAL = "positive_level_critical_point"
MOUNTAIN_PASS = "mountain_pass_solution"
CONSTRAINED = "constrained_minimizer"

# relative Pohozaev tolerance max_r |P(u; r)| / ||u||^2: twice the defect of the
# reference mountain-pass solution at the default grid, from the grid study in
# scripts/calibrate_pohozaev.py (observed order ~1.4 in h)
DEFAULT_TOL_POHO = 6.4e-2


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets shared by the solvers.

    ``tol_grad`` bounds the dual norm of the (class-restricted) gradient at a
    returned solution; ``collapse_norm`` is the X norm below which an iterate
    counts as having collapsed to zero.
    """

    tol_grad: float = 1e-8
    max_iter: int = 5000
    newton_max_iter: int = 30
    collapse_norm: float = 1e-7
    tol_poho: float = DEFAULT_TOL_POHO
    path_points: int = 16
    path_step: float = 0.3
    seed: int = 0

    def replace(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class MountainPassState:
    path: List[Field2D]
    endpoint_t: float
    r_pow: float
    level_history: List[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {"path_points": len(self.path), "endpoint_t": self.endpoint_t,
                "r_pow": self.r_pow, "iterations": len(self.level_history),
                "final_path_max": self.level_history[-1] if self.level_history else None}


@dataclass
class SolveOutcome:
    classification: str
    solution: AnyField
    level: float
    multiplier_lambda: Optional[float]
    q_effective: float
    residual_grad: float
    residual_nehari: float
    residual_pohozaev: float
    iterations: int
    converged: bool = True
    flags: List[str] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    manifest: Optional[RunManifest] = None
    state: Optional[MountainPassState] = None

    def summary(self) -> dict:
        """Every scalar entry; the solution field itself is left out."""
        return {
            "classification": self.classification,
            "level": self.level,
            "multiplier_lambda": self.multiplier_lambda,
            "q_effective": self.q_effective,
            "residual_grad": self.residual_grad,
            "residual_nehari": self.residual_nehari,
            "residual_pohozaev": self.residual_pohozaev,
            "iterations": self.iterations,
            "converged": self.converged,
            "flags": list(self.flags),
            "diagnostics": self.diagnostics,
            "solution_symmetry": str(self.solution.symmetry),
            "solution_grid": self.solution.grid.to_json(),
        }

    def to_json(self) -> str:
        return canonical_json(self.summary())

    def write(self, out_dir, name: str = "solution") -> Dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"field": write_field(out / f"{name}.psm2", self.solution, self.summary())}
        paths["outcome"] = out / f"{name}.json"
        paths["outcome"].write_text(json.dumps(self.summary(), sort_keys=True, indent=2) + "\n")
        if self.manifest is not None:
            paths["manifest"] = self.manifest.write(out / f"{name}.manifest.json")
        return paths


def diagnose(u: AnyField, params: ProblemParams, grad_norm: float) -> Dict[str, float]:
    """Nehari, Pohozaev and PDE residuals at ``u``."""
    norm_sq = x_norm(u, params.alpha) ** 2
    g = energy.gradient(u, params)
    poho = {r: energy.pohozaev(u, params, r) for r in (0.0, 0.5 * params.alpha)}
    return {
        "x_norm": float(np.sqrt(norm_sq)),
        "l2_norm": float(np.sqrt(l2_norm_sq(u))),
        "nehari": energy.nehari(u, params),
        "pohozaev_r0": poho[0.0],
        "pohozaev_r_half_alpha": poho[0.5 * params.alpha],
        "pohozaev_rel": max(abs(v) for v in poho.values()) / max(norm_sq, 1e-300),
        "pde_residual_l2": float(np.sqrt(l2_norm_sq(g))),
        "residual_grad": grad_norm,
        "min": float(np.min(u.values)),
        "max": float(np.max(u.values)),
    }
