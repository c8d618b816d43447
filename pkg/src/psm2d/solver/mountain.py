"""Mountain-pass critical points of J inside dihedral symmetry classes.

A string of fields joins ``0`` to an endpoint ``e`` with ``J(e) < 0``. Every
interior node takes a clamped X-gradient step; the highest node climbs (its
gradient is reflected along the local path tangent), and the two halves of the
string are redistributed at equal X arc length around it. When the climbing
node is nearly critical, Newton's method finishes the job.
"""
from __future__ import annotations

import logging
import time
from typing import List, Optional

import numpy as np
from scipy import optimize

from .. import energy
from ..fields import Field2D, Grid2D, ProblemParams, SymmetryClass, x_norm
from ..inequalities import embedding_constants
from ..library import embedding_constant
from ..provenance import RunManifest
from .optimize import IterationResult, Objective, newton_polish
from .outcome import MOUNTAIN_PASS, MountainPassState, SolveOutcome, SolverConfig, diagnose
from .spaces import Space, make_space

log = logging.getLogger(__name__)

__all__ = ["DEFAULT_MP_GRID", "mp_floor", "mountain_pass_endpoint", "mountain_pass"]

DEFAULT_MP_GRID = Grid2D(8.0, 64)


def mp_floor(params: ProblemParams):
    """``(rho, floor)`` maximizing ``rho^2 (1/2 - q C_a/(4 pi) rho^2 - C/p rho^{p-2})``.

    ``C_a`` bounds ``V0`` by ``C_a/pi ||u||^4`` and ``C`` is the library
    estimate of the embedding constant of X into L^p, so J exceeds the floor
    on the sphere of radius ``rho``.
    """
    ca = embedding_constants(params.alpha).C_alpha
    c = embedding_constant(params.alpha, params.p)
    p, q = params.p, params.q

    def neg(rho):
        return -rho ** 2 * (0.5 - q * ca / (4 * np.pi) * rho ** 2 - c / p * rho ** (p - 2))

    res = optimize.minimize_scalar(neg, bounds=(1e-8, 10.0), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)


def _seed_profile(k: int):
    """``Re((x1 + i x2)^k) exp(-|x|^2/2)`` scaled to unit maximum."""
    r = np.sqrt(k)  # maximum of r^k exp(-r^2/2)
    peak = r ** k * np.exp(-0.5 * r * r)

    def f(x1, x2):
        return np.real((x1 + 1j * x2) ** k) * np.exp(-0.5 * (x1 * x1 + x2 * x2)) / peak

    return f


def mountain_pass_endpoint(params: ProblemParams, k: int, grid: Grid2D, rho: float = 0.0):
    """Endpoint ``t^r w(x/t)`` of the initial path and its ``(t, r)``.

    ``t`` is doubled from 1 until ``J < 0`` and ``||e|| > rho`` by the exact
    scaling law for J, with ``r = max(2, alpha/2)``.
    """
    r_pow = max(2.0, 0.5 * params.alpha)
    w = _seed_profile(k)
    base = Field2D.from_function(grid, w)
    t = 1.0
    for _ in range(60):
        e = float(energy.dilation_energy(base, params, t, r_pow))
        if e < 0 and t ** (r_pow + 1) * x_norm(base, params.alpha) > rho:
            break
        t *= 2.0
    else:
        raise RuntimeError("no dilation of the seed reaches J < 0")
    end = Field2D.from_function(grid, lambda x1, x2: t ** r_pow * w(x1 / t, x2 / t))
    return end, t, r_pow


class _String:
    def __init__(self, space: Space, obj: Objective, end: np.ndarray, points: int, step: float):
        self.space, self.obj, self.step = space, obj, step
        s = np.linspace(0.0, 1.0, points + 1)
        self.nodes = [si * end for si in s]

    def xn(self, v) -> float:
        return float(np.sqrt(max(self.space.x_inner(v, v), 0.0)))

    def _reparam(self, nodes: List[np.ndarray]) -> List[np.ndarray]:
        seg = [0.0] + [self.xn(nodes[j + 1] - nodes[j]) for j in range(len(nodes) - 1)]
        c = np.cumsum(seg)
        c /= c[-1]
        out = []
        for tt in np.linspace(0.0, 1.0, len(nodes)):
            j = min(int(np.searchsorted(c, tt, side="right")) - 1, len(nodes) - 2)
            lam = (tt - c[j]) / max(c[j + 1] - c[j], 1e-300)
            out.append((1 - lam) * nodes[j] + lam * nodes[j + 1])
        return out

    def sweep(self):
        """One step of every interior node; returns ``(climber index, level, residual)``."""
        V, sp, obj = self.nodes, self.space, self.obj
        K = len(V) - 1
        f = [obj.value(v) for v in V[1:-1]]
        i = int(np.argmax(f)) + 1
        grads = [obj.gradient(v) for v in V[1:-1]]
        res = sp.dual_norm(grads[i - 1])
        tau = V[i + 1] - V[i - 1]
        tau = tau / max(self.xn(tau), 1e-300)
        seg = np.mean([self.xn(V[j + 1] - V[j]) for j in range(K)])
        new = [V[0]]
        for j in range(1, K):
            d = sp.riesz(grads[j - 1])
            if j == i:
                d = d - 2.0 * sp.x_inner(d, tau) * tau
            s = min(self.step, 0.3 * seg / max(self.xn(d), 1e-300))
            new.append(sp.project(V[j] - s * d))
        new.append(V[-1])
        if 1 < i < K - 1:
            self.nodes = self._reparam(new[: i + 1]) + self._reparam(new[i:])[1:]
        else:
            self.nodes = self._reparam(new)
        return i, f[i - 1], res


def _edge_mass(u: Field2D) -> float:
    x1, x2 = u.grid.coords
    band = np.maximum(np.abs(x1), np.abs(x2)) > 0.9 * u.grid.L
    w = u.grid.weights * u.values ** 2
    return float(np.sum(w[band]) / max(np.sum(w), 1e-300))


def mountain_pass(params: ProblemParams, k: int = 1, path_points: Optional[int] = None,
                  grid: Grid2D = DEFAULT_MP_GRID, config: SolverConfig = SolverConfig(),
                  max_restarts: int = 3, **space_kw) -> SolveOutcome:
    """Mountain-pass solution of the coupled equation with ``-|u|^{p-2}u`` in ``dihedral(k)``.

    Returns ``mountain_pass_solution`` with the level of the converged climbing
    node. ``converged`` requires Newton to reach the gradient tolerance at a
    nonzero field with positive level.
    """
    start = time.perf_counter()
    params = params.replace(local_sign="minus")
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    flags: List[str] = []
    if 3 <= params.p < 4:
        log.warning("p = %g lies outside the range covered by the existence result", params.p)
        flags.append("outside_guarantee")
    symmetry = SymmetryClass("dihedral", k)
    space = make_space(grid, params.alpha, symmetry, **space_kw)
    obj = Objective(space, params)
    rho, floor = mp_floor(params)
    end, t_end, r_pow = mountain_pass_endpoint(params, k, grid, rho)
    end_values = space.project(end.values)
    points = path_points or config.path_points

    history: List[float] = []
    restarts, total, at_end = 0, 0, 0
    switch = 1e-3
    string = _String(space, obj, end_values, points, config.path_step)
    result = None
    while total < config.max_iter:
        i, level, res = string.sweep()
        total += 1
        history.append(level)
        at_end = at_end + 1 if i == len(string.nodes) - 2 else 0
        if at_end >= 50 and restarts < max_restarts:
            restarts, at_end = restarts + 1, 0
            points *= 2
            log.info("path collapsed onto the endpoint; restarting with %d nodes", points)
            string = _String(space, obj, end_values, points, config.path_step)
            continue
        if res <= switch * max(string.xn(string.nodes[i]), 1e-12):
            cand = string.nodes[i]
            tol = config.tol_grad * max(1.0, string.xn(cand))
            pol = newton_polish(obj, cand, tol, config.newton_max_iter)
            if pol.converged and pol.value > 0 and string.xn(pol.values) > rho * 1e-3:
                result = pol
                break
            switch *= 0.1
            log.info("Newton from the climbing node failed; tightening switch to %.1e", switch)
            if switch < 1e-9:
                break
    if result is None:
        flags.append("not_converged")
        vals = string.nodes[int(np.argmax([obj.value(v) for v in string.nodes]))]
        g = obj.gradient(vals)
        result = IterationResult(vals, obj.value(vals), space.dual_norm(g), 0, False)

    u = space.field(result.values)
    diag = diagnose(u, params, result.grad_norm)
    diag.update(mp_floor=floor, rho=rho, edge_mass_fraction=_edge_mass(u),
                nehari_rel=abs(diag["nehari"]) / max(diag["x_norm"] ** 2, 1e-300),
                restarts=restarts, path_iterations=total)
    if result.value < floor:
        flags.append("below_floor")
    if diag["edge_mass_fraction"] > 1e-8:
        flags.append("truncation")
    if diag["pohozaev_rel"] > config.tol_poho:
        flags.append("pohozaev_above_tolerance")
    converged = bool(result.converged and result.value > 0)
    state = MountainPassState([space.field(v) for v in string.nodes], t_end, r_pow, history)
    out = SolveOutcome(
        classification=MOUNTAIN_PASS, solution=u, level=float(result.value), multiplier_lambda=None,
        q_effective=params.q, residual_grad=float(result.grad_norm), residual_nehari=diag["nehari"],
        residual_pohozaev=max(abs(diag["pohozaev_r0"]), abs(diag["pohozaev_r_half_alpha"])),
        iterations=total + result.iterations, converged=converged, flags=flags,
        diagnostics=diag, state=state)
    inputs = {"params": params.to_json(), "k": k, "path_points": path_points or config.path_points,
              "grid": grid.to_json(), "config": config.to_json(), "space": space.describe()}
    out.manifest = RunManifest.timed("mountain_pass", inputs, start,
                                     dict(out.summary(), path=state.summary()))
    return out
