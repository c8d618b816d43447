"""Minimization of G on the level set ``H = {V0 = 1}``.

At a constrained minimizer ``grad G = lambda grad V0`` with ``grad V0 = 4 phi u``,
so ``u`` solves the coupled equation with ``q = 4 lambda``. Steps are taken
along the X-metric tangent of ``H`` and pulled back onto it by rescaling the
amplitude (``V0`` is exactly quartic in the amplitude), or by a dilation when
``V0 <= 0`` and no amplitude can reach the level set.
"""
from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np
from scipy import optimize

from .. import energy, logkernel
from ..fields import Field2D, Grid2D, ProblemParams, SymmetryClass, l2_norm_sq, resample_dilate, x_norm
from ..provenance import RunManifest
from ..symmetry import symmetry_defect
from .outcome import CONSTRAINED, SolveOutcome, SolverConfig, diagnose
from .spaces import make_space

log = logging.getLogger(__name__)

__all__ = ["find_t0_on_H", "retract_to_H", "minimize_on_H"]


def find_t0_on_H(u: Field2D) -> float:
    """Dilation ``t`` with ``V0(u(x/t)) = 1``, from the exact scaling law.

    ``V0(u(./t)) = t^4 (V0(u) + log(t)/(2 pi) ||u||_2^4)``, which is increasing
    once positive, so the root is bracketed by doubling and then bisected.
    """
    v = logkernel.v0(u)
    m2 = l2_norm_sq(u) ** 2
    if m2 <= 0:
        raise ValueError("the zero field has no dilation onto H")

    def f(t):
        return t ** 4 * (v + np.log(t) / (2 * np.pi) * m2) - 1.0

    # below t_min the bracket is negative; start past it
    lo = float(np.exp(-2 * np.pi * v / m2)) if v <= 0 else 1e-6
    while f(lo) > 0:
        lo *= 0.5
    hi = max(2.0 * lo, 1.0)
    while f(hi) < 0:
        hi *= 2.0
    return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def retract_to_H(u: Field2D) -> Field2D:
    """Map ``u`` onto ``{V0 = 1}`` by amplitude if ``V0 > 0``, else by dilation."""
    v = logkernel.v0(u)
    if v <= 0:
        t = find_t0_on_H(u)
        u = resample_dilate(u, t, order=3)
        v = logkernel.v0(u)
        if v <= 0:
            raise ValueError("dilated field still has V0 <= 0; enlarge the grid")
    return u.with_values(u.values * v ** -0.25)


def minimize_on_H(seed: Field2D, params: ProblemParams, config: SolverConfig = SolverConfig(),
                  symmetry: SymmetryClass = SymmetryClass("odd_even"),
                  tol: Optional[float] = None) -> SolveOutcome:
    """Projected-gradient descent of G on ``{V0 = 1}`` inside a symmetry class.

    ``params`` must use ``local_sign="general_W"``; its ``q`` is ignored. The
    step direction is the X-metric tangent component of ``-grad G``; steps use
    Barzilai-Borwein lengths with Armijo backtracking on G. Stops when the
    dual norm of ``grad G - lambda grad V0`` is below ``tol`` (default
    ``1e-6 max(1, G)``) or after ``config.max_iter`` steps.
    """
    if params.local_sign != "general_W":
        raise ValueError("minimize_on_H needs params with local_sign='general_W'")
    start = time.perf_counter()
    W = energy.nonlinearity_for(params)
    W.audit()
    space = make_space(seed.grid, params.alpha, symmetry)
    u = retract_to_H(space.field(space.project(np.asarray(seed.values, dtype=float))))
    u = u.with_values(space.project(u.values))
    u = retract_to_H(u)

    def state(u):
        gG = energy.grad_G(u, params, W).values
        gV = 4.0 * logkernel.newtonian_potential(u).values * u.values
        rG, rV = space.riesz(gG), space.riesz(gV)
        lam = space.l2_inner(gG, rV) / space.l2_inner(gV, rV)
        r = gG - lam * gV
        d = rG - lam * rV
        return lam, r, d, float(np.sqrt(max(space.l2_inner(r, d), 0.0)))

    G = energy.eval_G(u, params, W)
    lam, r, d, tn = state(u)
    stop = tol if tol is not None else 1e-6 * max(1.0, G)
    step, it, history = 1.0, 0, [G]
    max_defect = symmetry_defect(u, symmetry)
    while tn > stop and it < config.max_iter:
        it += 1
        s = step
        for _ in range(60):
            trial = retract_to_H(u.with_values(space.project(u.values - s * d)))
            Gt = energy.eval_G(trial, params, W)
            if Gt <= G - 1e-4 * s * tn * tn:
                break
            s *= 0.5
        else:
            log.info("line search stalled at iteration %d (tangent norm %.3e)", it, tn)
            break
        trial = trial.with_values(space.project(trial.values))
        lam_t, r_t, d_t, tn_t = state(trial)
        dv, dr = trial.values - u.values, r_t - r
        curv = space.l2_inner(dv, dr)
        step = space.x_inner(dv, dv) / curv if curv > 0 else 2.0 * s
        step = float(np.clip(step, 1e-6, 1e4))
        u, G, lam, r, d, tn = trial, Gt, lam_t, r_t, d_t, tn_t
        history.append(G)
        if it % 100 == 0:
            max_defect = max(max_defect, symmetry_defect(u, symmetry))
    max_defect = max(max_defect, symmetry_defect(u, symmetry))

    q_eff = 4.0 * lam
    coupled = params.replace(q=q_eff)
    diag = diagnose(u, coupled, tn)
    diag.update(
        v0_defect=abs(logkernel.v0(u) - 1.0),
        symmetry_defect=max_defect,
        pohozaev_uncoupled=energy.pohozaev_uncoupled(u, params.alpha, W),
        equation_residual_l2=float(np.sqrt(space.l2_inner(r, r))),
        G=G,
    )
    converged = tn <= stop
    flags = []
    if not converged:
        flags.append("max_iter")
    if lam <= 0:
        flags.append("nonpositive_multiplier")
    if diag["pohozaev_uncoupled"] <= 0:
        flags.append("uncoupled_pohozaev_nonpositive")
    out = SolveOutcome(
        classification=CONSTRAINED, solution=u, level=float(G), multiplier_lambda=float(lam),
        q_effective=float(q_eff), residual_grad=float(tn), residual_nehari=diag["nehari"],
        residual_pohozaev=max(abs(diag["pohozaev_r0"]), abs(diag["pohozaev_r_half_alpha"])),
        iterations=it, converged=bool(converged), flags=flags, diagnostics=diag)
    inputs = {"params": params.to_json(), "grid": seed.grid.to_json(), "config": config.to_json(),
              "symmetry": str(symmetry), "tol": stop,
              "seed_hash": RunManifest("seed", {"values": np.asarray(seed.values)}).input_hash}
    out.manifest = RunManifest.timed("minimize_on_H", inputs, start, out.summary())
    return out
