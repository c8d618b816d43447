"""Preconditioned descent and Newton polishing inside a ``Space``."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .. import energy
from ..fields import ProblemParams
from .spaces import HarmonicSpace, Space

log = logging.getLogger(__name__)

__all__ = ["Objective", "IterationResult", "descend", "newton_polish", "dense_newton_minimize"]


class Objective:
    """Functional selected by ``params`` restricted to ``space``."""

    def __init__(self, space: Space, params: ProblemParams):
        self.space, self.params = space, params

    def value(self, v: np.ndarray) -> float:
        return energy.functional(self.space.field(v), self.params)

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(energy.gradient(self.space.field(v), self.params).values)

    def hessian(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        sp = self.space
        return np.asarray(energy.hessian_action(sp.field(v), sp.field(w), self.params).values)


@dataclass
class IterationResult:
    values: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)


def descend(obj: Objective, v0: np.ndarray, tol: float, max_iter: int = 5000,
            stop: Optional[Callable[[np.ndarray, float, float], bool]] = None) -> IterationResult:
    """Steepest descent in the X metric with Barzilai-Borwein steps and Armijo backtracking.

    ``stop(values, value, grad_norm)`` may end the iteration early.
    """
    sp = obj.space
    v = sp.project(np.array(v0, dtype=float))
    f = obj.value(v)
    g = obj.gradient(v)
    d = sp.riesz(g)
    gn2 = sp.l2_inner(g, d)
    step = 1.0
    history = [f]
    it = 0
    while it < max_iter:
        gn = np.sqrt(max(gn2, 0.0))
        if gn <= tol or (stop is not None and stop(v, f, gn)):
            break
        it += 1
        s = step
        for _ in range(60):
            trial = v - s * d
            ft = obj.value(trial)
            if ft <= f - 1e-4 * s * gn2:
                break
            s *= 0.5
        else:
            log.debug("line search stalled at iteration %d", it)
            break
        trial = sp.project(trial)
        gt = obj.gradient(trial)
        dv, dg = trial - v, gt - g
        curv = sp.l2_inner(dv, dg)
        step = sp.x_inner(dv, dv) / curv if curv > 0 else 2.0 * s
        step = float(np.clip(step, 1e-4, 1e4))
        v, f, g = trial, ft, gt
        d = sp.riesz(g)
        gn2 = sp.l2_inner(g, d)
        history.append(f)
    gn = float(np.sqrt(max(gn2, 0.0)))
    return IterationResult(v, f, gn, it, gn <= tol, history)


def _newton_step(obj: Objective, v: np.ndarray, g: np.ndarray, rtol: float) -> np.ndarray:
    sp = obj.space
    if isinstance(sp, HarmonicSpace):
        B = sp.basis
        cols = [sp.dual_coefficients(obj.hessian(v, sp.synthesize(e))) for e in np.eye(sp.dim)]
        H = np.array(cols).T
        H = 0.5 * (H + H.T)
        coef = np.linalg.lstsq(H, -sp.dual_coefficients(g), rcond=1e-13)[0]
        return (B @ coef).reshape(sp.grid.shape)
    shape, w = sp.grid.shape, sp.grid.weights

    def matvec(x):
        x = sp.project(x.reshape(shape))
        return sp.project(w * obj.hessian(v, x)).ravel()

    def precond(r):
        return sp.riesz(r.reshape(shape) / w).ravel()

    n = int(np.prod(shape))
    A = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    M = spla.LinearOperator((n, n), matvec=precond, dtype=float)
    b = -sp.project(w * g).ravel()
    x, _ = spla.minres(A, b, M=M, rtol=rtol, maxiter=400)
    return sp.project(x.reshape(shape))


def newton_polish(obj: Objective, v0: np.ndarray, tol: float, max_iter: int = 30) -> IterationResult:
    """Newton's method on ``grad = 0`` with backtracking on the dual gradient norm.

    Converges to whatever critical point is nearby; callers check the level.
    """
    sp = obj.space
    v = sp.project(np.array(v0, dtype=float))
    g = obj.gradient(v)
    gn = sp.dual_norm(g)
    history = [gn]
    it = 0
    while gn > tol and it < max_iter:
        it += 1
        delta = _newton_step(obj, v, g, rtol=min(1e-2, max(1e-10, 0.1 * gn)))
        s = 1.0
        for _ in range(30):
            trial = sp.project(v + s * delta)
            gt = obj.gradient(trial)
            gnt = sp.dual_norm(gt)
            if gnt < (1 - 1e-4 * s) * gn:
                break
            s *= 0.5
        else:
            log.debug("Newton line search failed at |g| = %.3e", gn)
            break
        v, g, gn = trial, gt, gnt
        history.append(gn)
    return IterationResult(v, obj.value(v), gn, it, gn <= tol, history)


def _dense_hessian(obj: Objective, v: np.ndarray) -> np.ndarray:
    """Hessian of the discrete functional in nodal coordinates (small spaces only)."""
    sp = obj.space
    w = sp.grid.weights.ravel()
    n = w.size
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        H[:, j] = w * obj.hessian(v, e.reshape(sp.grid.shape)).ravel()
    return 0.5 * (H + H.T)


def dense_newton_minimize(obj: Objective, v0: np.ndarray, tol: float, max_iter: int = 200,
                          rel_tol: float = 0.0, collapse: float = 0.0) -> IterationResult:
    """Levenberg-damped Newton minimization with an explicit Hessian.

    The damping adds ``mu * D`` with ``D = S + |diag H|``, which keeps steps
    sensible when local terms dwarf the stiffness. ``mu`` drops to zero near a
    minimizer, so the final iterations are plain Newton steps. Stops when the
    dual gradient norm is below ``max(tol, rel_tol * ||v||_X)`` or the iterate
    has X norm below ``collapse``.
    """
    sp = obj.space
    w = sp.grid.weights.ravel()
    S = sp.stiffness.toarray()
    v = np.array(v0, dtype=float).ravel()
    f = obj.value(v.reshape(sp.grid.shape))
    mu = 1e-3
    history = [f]
    it = 0
    while True:
        g = obj.gradient(v.reshape(sp.grid.shape))
        gn = sp.dual_norm(g)
        norm = np.sqrt(max(sp.x_inner(v, v), 0.0))
        target = max(tol, rel_tol * norm)
        if gn <= target or norm < collapse or it >= max_iter:
            break
        it += 1
        H = _dense_hessian(obj, v)
        D = S + np.diag(np.abs(np.diag(H)))
        b = -w * g.ravel()
        accepted = False
        for _ in range(60):
            try:
                c = sla.cho_factor(H + mu * D)
            except np.linalg.LinAlgError:
                mu = max(10.0 * mu, 1e-8)
                continue
            delta = sla.cho_solve(c, b)
            ft = obj.value((v + delta).reshape(sp.grid.shape))
            pred = 0.5 * float(b @ delta)
            if np.isfinite(ft) and ft <= f - 1e-4 * pred:
                accepted = True
                break
            mu = max(10.0 * mu, 1e-8)
        if not accepted:
            log.debug("damped Newton stalled at |g| = %.3e", gn)
            break
        v, f = v + delta, ft
        mu = mu / 10.0 if mu > 1e-12 else 0.0
        history.append(f)
    return IterationResult(v.reshape(sp.grid.shape), f, float(gn), it, gn <= target, history)
