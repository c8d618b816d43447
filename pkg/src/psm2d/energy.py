"""Functionals I, J, G, their L2-gradients and the scalar identities.

With ``A = -Delta_h + (1 + |x|^alpha)`` and ``phi = Phi_2 * u^2``:

    I(u) = 1/2 <Au, u> - q/4 V0(u) + 1/p ||u||_p^p      grad = Au - q phi u + |u|^{p-2} u
    J(u) = 1/2 <Au, u> - q/4 V0(u) - 1/p ||u||_p^p      grad = Au - q phi u - |u|^{p-2} u
    G(u) = 1/2 <Au, u> + int W(u)                        grad = Au + W'(u)

``functional`` / ``gradient`` pick I, J or ``G - q/4 V0`` from
``ProblemParams.local_sign``. Gradients are exact derivatives of the discrete
functionals, so Nehari-type identities hold to rounding.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from . import logkernel
from .fields import (
    AnyField,
    Field2D,
    ProblemParams,
    RadialField,
    grad_sq_norm,
    inner,
    l2_norm_sq,
    lp_power,
    star_norm_sq,
    weighted_moment,
)

__all__ = [
    "Nonlinearity",
    "PowerNonlinearity",
    "NonlinearityError",
    "EnergyReport",
    "nonlinearity_for",
    "eval_I",
    "eval_J",
    "eval_G",
    "functional",
    "grad_I",
    "grad_J",
    "grad_G",
    "gradient",
    "hessian_action",
    "nehari",
    "pohozaev",
    "pohozaev_uncoupled",
    "gagliardo_nirenberg_check",
    "energy_report",
    "riesz",
    "dual_norm",
    "dilation_energy",
]


class NonlinearityError(ValueError):
    """A nonlinearity failed the W1-W3 audit."""


class Nonlinearity:
    """Local nonlinearity ``W`` with declared growth ``W(s) <= C1 s^2 + C2 |s|^p``.

    Subclasses implement ``W``, ``dW`` and ``d2W`` (vectorized).
    """

    C1: float = 0.0
    C2: float = 0.0
    p: float = 4.0

    def W(self, s):
        raise NotImplementedError

    def dW(self, s):
        raise NotImplementedError

    def d2W(self, s):
        raise NotImplementedError

    def audit(self, lo: float = -10.0, hi: float = 10.0, samples: int = 2001) -> None:
        """Sample-check W(0) = 0, W >= 0, the growth bound and W' against W."""
        s = np.linspace(lo, hi, samples)
        w = self.W(s)
        if abs(float(self.W(np.array([0.0]))[0])) > 1e-14:
            raise NonlinearityError("W(0) must vanish")
        if np.any(w < -1e-14):
            raise NonlinearityError("W must be nonnegative")
        bound = self.C1 * s ** 2 + self.C2 * np.abs(s) ** self.p
        if np.any(w > bound * (1 + 1e-12) + 1e-14):
            raise NonlinearityError("W exceeds C1 s^2 + C2 |s|^p")
        eps = 1e-5
        fd = (self.W(s + eps) - self.W(s - eps)) / (2 * eps)
        dw = self.dW(s)
        scale = np.maximum(np.abs(dw), 1.0)
        if np.max(np.abs(fd - dw) / scale) > 1e-6:
            raise NonlinearityError("W' does not match finite differences of W")


class PowerNonlinearity(Nonlinearity):
    """``W(s) = C1 s^2 + C2 |s|^p``."""

    def __init__(self, C1: float, C2: float, p: float):
        if C1 < 0 or C2 < 0 or p <= 2:
            raise NonlinearityError("need C1, C2 >= 0 and p > 2")
        self.C1, self.C2, self.p = float(C1), float(C2), float(p)

    def W(self, s):
        s = np.asarray(s, dtype=float)
        return self.C1 * s * s + self.C2 * np.abs(s) ** self.p

    def dW(self, s):
        s = np.asarray(s, dtype=float)
        return 2 * self.C1 * s + self.C2 * self.p * np.abs(s) ** (self.p - 2) * s

    def d2W(self, s):
        s = np.asarray(s, dtype=float)
        return 2 * self.C1 + self.C2 * self.p * (self.p - 1) * np.abs(s) ** (self.p - 2)

    def __repr__(self):
        return f"PowerNonlinearity(C1={self.C1:g}, C2={self.C2:g}, p={self.p:g})"


def nonlinearity_for(params: ProblemParams) -> Optional[Nonlinearity]:
    if params.local_sign != "general_W":
        return None
    return PowerNonlinearity(*params.W_coeffs)


def _power(u: AnyField, p: float) -> np.ndarray:
    # |u|^{p-2} u; p > 2 so the factor is continuous and vanishes at 0
    return np.abs(u.values) ** (p - 2) * u.values


# ---------------------------------------------------------------------------
# values


def _quadratic(u: AnyField, alpha: float) -> float:
    return 0.5 * (grad_sq_norm(u) + star_norm_sq(u, alpha))


def eval_I(u: AnyField, params: ProblemParams) -> float:
    return (_quadratic(u, params.alpha) - 0.25 * params.q * logkernel.v0(u)
            + lp_power(u, params.p) / params.p)


def eval_J(u: AnyField, params: ProblemParams) -> float:
    return (_quadratic(u, params.alpha) - 0.25 * params.q * logkernel.v0(u)
            - lp_power(u, params.p) / params.p)


def eval_G(u: AnyField, params: ProblemParams, W: Optional[Nonlinearity] = None) -> float:
    """``G(u) = 1/2 ||u||^2 + int W(u)``; no coupling term."""
    W = W or nonlinearity_for(params)
    return _quadratic(u, params.alpha) + float(np.sum(u.grid.weights * W.W(u.values)))


def functional(u: AnyField, params: ProblemParams) -> float:
    """I, J or ``G - q/4 V0`` according to ``params.local_sign``."""
    if params.local_sign == "plus":
        return eval_I(u, params)
    if params.local_sign == "minus":
        return eval_J(u, params)
    return eval_G(u, params) - 0.25 * params.q * logkernel.v0(u)


# ---------------------------------------------------------------------------
# gradients


def _linear_part(u: AnyField, alpha: float) -> np.ndarray:
    g = u.grid
    return g.neg_laplacian(u.values) + (1.0 + g.potential_weight(alpha)) * u.values


def grad_I(u: AnyField, params: ProblemParams) -> AnyField:
    phi = logkernel.newtonian_potential(u)
    return u.with_values(_linear_part(u, params.alpha) - params.q * phi.values * u.values
                         + _power(u, params.p))


def grad_J(u: AnyField, params: ProblemParams) -> AnyField:
    phi = logkernel.newtonian_potential(u)
    return u.with_values(_linear_part(u, params.alpha) - params.q * phi.values * u.values
                         - _power(u, params.p))


def grad_G(u: AnyField, params: ProblemParams, W: Optional[Nonlinearity] = None) -> AnyField:
    W = W or nonlinearity_for(params)
    return u.with_values(_linear_part(u, params.alpha) + W.dW(u.values))


def gradient(u: AnyField, params: ProblemParams) -> AnyField:
    if params.local_sign == "plus":
        return grad_I(u, params)
    if params.local_sign == "minus":
        return grad_J(u, params)
    phi = logkernel.newtonian_potential(u)
    return u.with_values(grad_G(u, params).values - params.q * phi.values * u.values)


def hessian_action(u: AnyField, v: AnyField, params: ProblemParams) -> AnyField:
    """Second derivative of ``functional`` at ``u`` applied to ``v`` (L2 form)."""
    phi = logkernel.newtonian_potential(u)
    dphi = logkernel.potential_derivative(u, v)
    out = _linear_part(v, params.alpha) - params.q * (phi.values * v.values + dphi.values * u.values)
    if params.local_sign == "general_W":
        out = out + nonlinearity_for(params).d2W(u.values) * v.values
    else:
        out = out + params.sign * (params.p - 1) * np.abs(u.values) ** (params.p - 2) * v.values
    return u.with_values(out)


# ---------------------------------------------------------------------------
# Riesz map of the X inner product


@lru_cache(maxsize=16)
def _stiffness_lu(grid, alpha: float):
    return spla.splu(grid.stiffness(alpha))


def riesz(g: AnyField, alpha: float) -> AnyField:
    """Solve ``A d = g``: the X-gradient corresponding to an L2-gradient ``g``."""
    lu = _stiffness_lu(g.grid, float(alpha))
    rhs = (g.grid.weights * g.values).ravel()
    return g.with_values(lu.solve(rhs).reshape(g.grid.shape))


def dual_norm(g: AnyField, alpha: float) -> float:
    """``||g||_{X*}``, i.e. the X norm of the Riesz representative of ``g``."""
    d = riesz(g, alpha)
    return float(np.sqrt(max(inner(d, g), 0.0)))


# ---------------------------------------------------------------------------
# identities


def nehari(u: AnyField, params: ProblemParams) -> float:
    """``<grad, u>``: ``||u||^2 - q V0 + sign ||u||_p^p`` (or ``+ int W'(u) u``)."""
    base = grad_sq_norm(u) + star_norm_sq(u, params.alpha) - params.q * logkernel.v0(u)
    if params.local_sign == "general_W":
        W = nonlinearity_for(params)
        return base + float(np.sum(u.grid.weights * W.dW(u.values) * u.values))
    return base + params.sign * lp_power(u, params.p)


def pohozaev(u: AnyField, params: ProblemParams, r: float) -> float:
    """Derivative at ``t = 1`` of the functional along ``t^r u(x/t)``.

    For J this is ``r ||grad u||^2 + (r+1) ||u||_2^2 + (r+1+alpha/2) int |x|^alpha u^2
    - q/(8 pi) ||u||_2^4 - q (r+1) V0 - (pr+2)/p ||u||_p^p``; for I the last sign flips.
    """
    a = params.alpha
    l2 = l2_norm_sq(u)
    out = (r * grad_sq_norm(u) + (r + 1) * l2 + (r + 1 + 0.5 * a) * weighted_moment(u, a)
           - params.q / (8 * np.pi) * l2 * l2 - params.q * (r + 1) * logkernel.v0(u))
    if params.local_sign == "general_W":
        W = nonlinearity_for(params)
        out += 2 * (r + 1) * W.C1 * l2 + W.C2 * (W.p * r + 2) * lp_power(u, W.p)
    else:
        out += params.sign * (params.p * r + 2) / params.p * lp_power(u, params.p)
    return float(out)


def pohozaev_uncoupled(u: AnyField, alpha: float, W: Nonlinearity) -> float:
    """``||u||_2^2 + (2+alpha)/2 int |x|^alpha u^2 + 2 int W(u)``; positive unless u = 0."""
    return (l2_norm_sq(u) + 0.5 * (2 + alpha) * weighted_moment(u, alpha)
            + 2 * float(np.sum(u.grid.weights * W.W(u.values))))


def gagliardo_nirenberg_check(u: AnyField, p: float, constant: Optional[float] = None):
    """Return ``(||u||_p^p, C ||u||_2^2 ||grad u||_2^{p-2}, ok)``.

    ``constant`` defaults to the empirical constant of the random-field library.
    """
    if not p > 2:
        raise ValueError("p must exceed 2")
    if constant is None:
        from .library import gagliardo_nirenberg_constant

        constant = gagliardo_nirenberg_constant(p)
    lhs = lp_power(u, p)
    rhs = constant * l2_norm_sq(u) * grad_sq_norm(u) ** (0.5 * (p - 2))
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))


def dilation_energy(u: AnyField, params: ProblemParams, t, r_pow: float):
    """Functional value along ``t^r u(x/t)`` from the exact scaling laws.

    No resampling is involved, so arbitrarily large ``t`` can be probed.
    """
    t = np.asarray(t, dtype=float)
    a, r, q = params.alpha, r_pow, params.q
    gs, l2, mom = grad_sq_norm(u), l2_norm_sq(u), weighted_moment(u, a)
    v = logkernel.v0(u)
    val = (0.5 * t ** (2 * r) * gs + 0.5 * t ** (2 * r + 2) * l2 + 0.5 * t ** (2 * r + 2 + a) * mom
           - 0.25 * q * t ** (4 * r + 4) * (v + np.log(t) / (2 * np.pi) * l2 * l2))
    if params.local_sign == "general_W":
        W = nonlinearity_for(params)
        val = val + W.C1 * t ** (2 * r + 2) * l2 + W.C2 * t ** (W.p * r + 2) * lp_power(u, W.p)
    else:
        val = val + params.sign * t ** (params.p * r + 2) * lp_power(u, params.p) / params.p
    return val


# ---------------------------------------------------------------------------
# report


@dataclass
class EnergyReport:
    value_I: float
    value_J: float
    value_G: Optional[float]
    v0: float
    v1: float
    v2: float
    grad_sq: float
    star_sq: float
    lp_p: float
    nehari: float
    pohozaev: Dict[float, float] = field(default_factory=dict)
    grad_x_norm: float = 0.0

    def to_json(self) -> str:
        d = asdict(self)
        d["pohozaev"] = {str(k): v for k, v in self.pohozaev.items()}
        return json.dumps(d, sort_keys=True)


def energy_report(u: AnyField, params: ProblemParams, r_values: Iterable[float] = (0.0,)) -> EnergyReport:
    e = logkernel.coulomb_energies(u, check=isinstance(u, Field2D))
    W = nonlinearity_for(params)
    vg = eval_G(u, params, W) if W is not None else None
    return EnergyReport(
        value_I=eval_I(u, params),
        value_J=eval_J(u, params),
        value_G=vg,
        v0=e.v0,
        v1=e.v1,
        v2=e.v2,
        grad_sq=grad_sq_norm(u),
        star_sq=star_norm_sq(u, params.alpha),
        lp_p=lp_power(u, params.p),
        nehari=nehari(u, params),
        pohozaev={float(r): pohozaev(u, params, r) for r in r_values},
        grad_x_norm=dual_norm(gradient(u, params), params.alpha),
    )
