"""Radial minimization of I and the existence threshold search.

The trial family is ``c * g(x / t)`` with ``g = exp(-|x|^2/2)``. Every term of
I scales exactly along the family, so

    I(c g_t) = c^2/2 (G + t^2 M + t^{2+alpha} A) + c^p t^2 P/p
               - q/4 c^4 t^4 (V + log(t)/(2 pi) M^2)

with ``G, M, A, P, V`` the gradient, mass, moment, L^p and V0 quadratures of
``g`` itself. Members are the first N points of a 2-D Halton sequence in
``(log2 t, log2 c)``, so a larger family always contains a smaller one.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import optimize

from .. import logkernel
from ..fields import (
    ProblemParams,
    RadialField,
    RadialGrid,
    grad_sq_norm,
    l2_norm_sq,
    lp_power,
    weighted_moment,
    x_norm,
)
from ..inequalities import critical_alpha
from ..library import random_radial_field
from ..provenance import RunManifest
from .optimize import Objective, dense_newton_minimize, descend, newton_polish
from .outcome import NEGATIVE_MINIMIZER, POSITIVE_CRITICAL, TRIVIAL, SolveOutcome, SolverConfig, diagnose
from .spaces import RadialSpace

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_RADIAL_GRID",
    "TrialFamily",
    "trial_family",
    "gaussian_profile",
    "best_gaussian",
    "radial_grid_for",
    "find_q_tilde",
    "minimize_I_radial",
    "radial_multistart",
]

DEFAULT_RADIAL_GRID = RadialGrid(8.0, 512)
_T_RANGE = (-2.0, 3.0)   # log2 of the dilation
_C_RANGE = (-4.0, 4.0)   # log2 of the amplitude


def _halton(i: int, base: int) -> float:
    f, r = 1.0, 0.0
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


@dataclass(frozen=True)
class TrialFamily:
    t: np.ndarray
    c: np.ndarray
    grad: float
    mass: float
    moment: float
    lp: float
    v0: float
    alpha: float
    p: float

    def quadratic_and_local(self, sign: float = 1.0) -> np.ndarray:
        """``I`` without the coupling term, per member."""
        t, c, a = self.t, self.c, self.alpha
        quad = 0.5 * c ** 2 * (self.grad + t ** 2 * self.mass + t ** (2 + a) * self.moment)
        return quad + sign * c ** self.p * t ** 2 * self.lp / self.p

    def coulomb(self) -> np.ndarray:
        """``V0`` per member."""
        t, c = self.t, self.c
        return c ** 4 * t ** 4 * (self.v0 + np.log(t) / (2 * np.pi) * self.mass ** 2)

    def energies(self, q: float) -> np.ndarray:
        return self.quadratic_and_local() - 0.25 * q * self.coulomb()

    def thresholds(self) -> np.ndarray:
        """Per member, the coupling above which I is negative (inf if never)."""
        v = self.coulomb()
        with np.errstate(divide="ignore"):
            return np.where(v > 0, 4.0 * self.quadratic_and_local() / np.where(v > 0, v, 1.0), np.inf)

    def energy_at(self, c: float, t: float, q: float) -> float:
        """I of ``c g(x/t)`` for any ``(c, t)``, member or not."""
        a, p = self.alpha, self.p
        quad = 0.5 * c ** 2 * (self.grad + t ** 2 * self.mass + t ** (2 + a) * self.moment)
        coul = c ** 4 * t ** 4 * (self.v0 + np.log(t) / (2 * np.pi) * self.mass ** 2)
        return float(quad + c ** p * t ** 2 * self.lp / p - 0.25 * q * coul)

    def member(self, i: int, grid: RadialGrid) -> RadialField:
        return gaussian_profile(grid, self.c[i], self.t[i])


def gaussian_profile(grid: RadialGrid, c: float, t: float) -> RadialField:
    return RadialField.from_function(grid, lambda r: c * np.exp(-0.5 * (r / t) ** 2))


def best_gaussian(fam: TrialFamily, q: float):
    """``(c, t, I)`` minimizing I over all Gaussians ``c g(x/t)``.

    Starts from the best family member and refines in ``(log c, log t)`` with
    Nelder-Mead; the scaling laws make every evaluation a scalar formula.
    """
    e = fam.energies(q)
    i = int(np.argmin(e))
    if e[i] >= 0:
        return float(fam.c[i]), float(fam.t[i]), float(e[i])
    scale = max(abs(e[i]), 1.0)

    def f(z):
        return fam.energy_at(np.exp(z[0]), np.exp(z[1]), q) / scale

    z = np.log([fam.c[i], fam.t[i]])
    for _ in range(20):
        res = optimize.minimize(f, z, method="Nelder-Mead",
                                options=dict(xatol=1e-8, fatol=1e-12, maxiter=4000))
        moved = np.max(np.abs(res.x - z))
        z = res.x
        scale = max(abs(res.fun * scale), 1.0)
        if moved < 1e-6:
            break
    c, t = np.exp(z)
    return float(c), float(t), fam.energy_at(c, t, q)


def trial_family(alpha: float, p: float, size: int, grid: RadialGrid = RadialGrid(16.0, 2048)) -> TrialFamily:
    if size < 1:
        raise ValueError("trial family needs at least one member")
    idx = np.arange(1, size + 1)
    ht = np.array([_halton(i, 2) for i in idx])
    hc = np.array([_halton(i, 3) for i in idx])
    t = 2.0 ** (_T_RANGE[0] + (_T_RANGE[1] - _T_RANGE[0]) * ht)
    c = 2.0 ** (_C_RANGE[0] + (_C_RANGE[1] - _C_RANGE[0]) * hc)
    gauss = RadialField.from_function(grid, lambda r: np.exp(-0.5 * r * r))
    return TrialFamily(t, c, grad_sq_norm(gauss), l2_norm_sq(gauss), weighted_moment(gauss, alpha),
                       lp_power(gauss, p), logkernel.v0(gauss), float(alpha), float(p))


def find_q_tilde(params: ProblemParams, trial_family_size: int = 256, q0: float = 1e-6) -> float:
    """Smallest coupling on ``{2^j q0}`` at which a family member has ``I < 0``.

    The bracket is then bisected to 1% relative and its upper end returned, so
    the result is an upper bound for the true threshold. Returns ``inf`` when
    no ``q <= 2^64 q0`` works.
    """
    if params.p > 4 and not params.alpha > critical_alpha(params.p):
        log.warning("alpha = %g is below (2p-4)/(p-4); the threshold may not exist", params.alpha)
    fam = trial_family(params.alpha, params.p, trial_family_size)
    base = fam.quadratic_and_local()
    coul = fam.coulomb()

    def negative(q):
        return bool(np.any(base - 0.25 * q * coul < 0))

    j = next((j for j in range(65) if negative(q0 * 2.0 ** j)), None)
    if j is None:
        return float("inf")
    hi = q0 * 2.0 ** j
    lo = 0.0 if j == 0 else 0.5 * hi
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if negative(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def _finish(space, params, res, config, start, inputs, operation) -> SolveOutcome:
    u = space.field(res.values)
    norm = x_norm(u, params.alpha)
    diag = diagnose(u, params, res.grad_norm)
    diag["edge_mass_fraction"] = _edge_mass(u)
    tol = config.tol_grad * max(1.0, norm)
    if norm < config.collapse_norm:
        cls, converged = TRIVIAL, True
    elif res.value >= 0 and res.grad_norm <= tol:
        cls, converged = POSITIVE_CRITICAL, True
    elif res.value >= 0:
        cls, converged = TRIVIAL, False
    else:
        cls, converged = NEGATIVE_MINIMIZER, res.grad_norm <= tol
    flags = []
    if cls == NEGATIVE_MINIMIZER and diag["pohozaev_rel"] > config.tol_poho:
        flags.append("pohozaev_above_tolerance")
    if diag["edge_mass_fraction"] > 1e-8:
        flags.append("truncation")
    out = SolveOutcome(
        classification=cls, solution=u, level=float(res.value), multiplier_lambda=None,
        q_effective=params.q, residual_grad=float(res.grad_norm), residual_nehari=diag["nehari"],
        residual_pohozaev=max(abs(diag["pohozaev_r0"]), abs(diag["pohozaev_r_half_alpha"])),
        iterations=res.iterations, converged=bool(converged), flags=flags, diagnostics=diag)
    out.manifest = RunManifest.timed(operation, inputs, start, out.summary())
    return out


def _edge_mass(u: RadialField) -> float:
    """Share of the L2 mass in the outer 10% of the radial box."""
    w = u.grid.weights * u.values ** 2
    total = float(np.sum(w))
    return float(np.sum(w[u.grid.radius > 0.9 * u.grid.R]) / total) if total > 0 else 0.0


def _solve_from(space, params, seed_values, config):
    """Descent until collapse or until Newton can take over, then Newton."""
    obj = Objective(space, params)

    def xn(v):
        return np.sqrt(max(space.x_inner(v, v), 0.0))

    def stop(v, f, gn):
        n = xn(v)
        return n < config.collapse_norm or (f < 0 and gn <= 1e-4 * n)

    res = descend(obj, seed_values, tol=0.0, max_iter=config.max_iter, stop=stop)
    norm = xn(res.values)
    if norm < config.collapse_norm or res.value >= 0:
        return res
    tol = config.tol_grad * max(1.0, norm)
    pol = newton_polish(obj, res.values, tol, config.newton_max_iter)
    if pol.value < 0 and pol.grad_norm <= res.grad_norm:
        pol.iterations += res.iterations
        return pol
    log.info("Newton polish rejected (level %.3e); continuing descent", pol.value)
    return descend(obj, res.values, tol=tol, max_iter=config.max_iter)


def radial_grid_for(t: float, m: int = 512) -> RadialGrid:
    """Radial box of radius ``max(8, 8 t)`` for a Gaussian of width ``t``."""
    return RadialGrid(max(8.0, 8.0 * t), m)


def _regrid(u: RadialField, grid: RadialGrid) -> RadialField:
    vals = np.interp(grid.radius, u.grid.radius, u.values, right=0.0)
    return RadialField(grid, vals)


def minimize_I_radial(params: ProblemParams, q: Optional[float] = None,
                      grid: Optional[RadialGrid] = None,
                      config: SolverConfig = SolverConfig(),
                      trial_family_size: int = 256, m: int = 512,
                      max_box_doublings: int = 12) -> SolveOutcome:
    """Minimize I over radial profiles from the Gaussian with the lowest I.

    The seed ``c g(x/t)`` minimizes the scalar formula for I over ``(c, t)``.
    With no grid given, the box starts at radius ``8 t`` with ``m`` cells and
    is doubled (profile carried over) while the minimizer still reaches its
    outer tenth. Returns ``negative_level_minimizer`` for a negative level,
    ``trivial_collapse`` when the iteration falls back to zero and
    ``positive_level_critical_point`` for a nonzero critical point above zero;
    ``converged`` means the dual gradient norm is at most ``tol_grad * max(1, ||u||_X)``.
    """
    start = time.perf_counter()
    params = params.replace(local_sign="plus", q=params.q if q is None else float(q))
    fam = trial_family(params.alpha, params.p, trial_family_size)
    c, t, i_seed = best_gaussian(fam, params.q)
    adaptive = grid is None
    grid = grid or radial_grid_for(t, m)
    u = gaussian_profile(grid, c, t)
    inputs = {"params": params.to_json(), "grid": grid.to_json(), "config": config.to_json(),
              "trial_family_size": trial_family_size, "adaptive_box": adaptive,
              "seed": {"c": c, "t": t, "scalar_level": i_seed}}
    boxes = [grid.R]
    while True:
        space = RadialSpace(grid, params.alpha)
        res = _minimize_radial(space, params, u.values, config)
        u = space.field(res.values)
        if not adaptive or res.value >= 0 or _edge_mass(u) <= 1e-8 \
                or len(boxes) > max_box_doublings:
            break
        grid = RadialGrid(2.0 * grid.R, grid.m)
        boxes.append(grid.R)
        u = _regrid(u, grid)
    out = _finish(space, params, res, config, start, inputs, "minimize_I_radial")
    out.diagnostics["box_radii"] = boxes
    out.manifest.results = out.summary()
    return out


def _minimize_radial(space, params, seed_values, config):
    """Dense damped Newton on small grids, descent plus Newton otherwise."""
    if space.grid.m > 1024:
        return _solve_from(space, params, seed_values, config)
    obj = Objective(space, params)
    res = dense_newton_minimize(obj, seed_values, tol=config.tol_grad, max_iter=config.max_iter,
                                rel_tol=config.tol_grad, collapse=config.collapse_norm)
    return res


def radial_multistart(params: ProblemParams, starts: int = 20, seed: int = 0,
                      grid: RadialGrid = DEFAULT_RADIAL_GRID,
                      config: SolverConfig = SolverConfig()) -> List[SolveOutcome]:
    """Descents on I from seeded random radial profiles, one outcome per start."""
    params = params.replace(local_sign="plus")
    space = RadialSpace(grid, params.alpha)
    rng = np.random.default_rng(seed)
    outs = []
    for s in range(starts):
        start = time.perf_counter()
        u0 = random_radial_field(grid, rng)
        inputs = {"params": params.to_json(), "grid": grid.to_json(), "config": config.to_json(),
                  "rng_seed": seed, "start": s}
        res = _minimize_radial(space, params, u0.values, config)
        outs.append(_finish(space, params, res, config, start, inputs, "radial_multistart"))
    return outs
