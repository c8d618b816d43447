"""Explicit constants and verifiers for the functional inequalities.

* ``lemma_constant`` / ``verify_lemma``: the weighted-log Young inequality
  ``(int log(2+|x|) u^2)^2 <= (2 eps/beta) ||u||_*^2 + C ||u||_p^{4(beta-1)/(beta-2)}``.
* ``nonexistence_qbar``: coupling below which the I-problem has only ``u = 0``.
* ``strauss_bound``: pointwise decay ``|u(r)| <= C~ ||u|| r^{-(alpha+2)/4}`` for radial ``u``.
* ``embedding_constants``: ``C_alpha`` of ``log(2+r) <= C_alpha (1+r^alpha)`` and
  empirical library constants.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass
from typing import Iterable, List, NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize

from .fields import (
    AnyField,
    RadialField,
    l2_norm_sq,
    lp_norm,
    star_norm_sq,
    x_norm,
)

log = logging.getLogger(__name__)

__all__ = [
    "LemmaParams",
    "ThresholdConstants",
    "EmbeddingConstants",
    "InequalityCheck",
    "critical_alpha",
    "lemma_constant",
    "verify_lemma",
    "threshold_constants",
    "nonexistence_qbar",
    "strauss_constant",
    "strauss_bound",
    "log_weight_constant",
    "embedding_constants",
    "verify_v1_bound",
    "constants_csv",
    "threshold_table",
]


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def _check(lhs: float, rhs: float) -> InequalityCheck:
    return InequalityCheck(float(lhs), float(rhs), bool(lhs <= rhs * (1 + 1e-12) + 1e-300))


@dataclass(frozen=True)
class LemmaParams:
    alpha: float
    p: float
    beta: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.p > 2 and self.beta > 2 and self.epsilon > 0):
            raise ValueError("need alpha > 0, p > 2, beta > 2, epsilon > 0")
        if not self.margin > 0:
            raise ValueError(
                f"inadmissible: alpha p / ((p-2)(beta-1)) = {self.margin + 2:g} must exceed 2")

    @property
    def decay(self) -> float:
        """``alpha p / ((p-2)(beta-1))``; the log integral converges iff this exceeds 2."""
        return self.alpha * self.p / ((self.p - 2) * (self.beta - 1))

    @property
    def margin(self) -> float:
        return self.decay - 2.0

    @property
    def lp_exponent(self) -> float:
        """Power of ``||u||_p`` on the right-hand side."""
        return 4 * (self.beta - 1) / (self.beta - 2)


def critical_alpha(p: float) -> float:
    """``(2p-4)/(p-4)``: the nonexistence threshold needs ``alpha`` above this."""
    if not p > 4:
        raise ValueError("defined for p > 4")
    return (2 * p - 4) / (p - 4)


def _weighted_log_integral(lp: LemmaParams) -> float:
    """``2 pi int_0^inf log^a(2+r) (1+r^alpha)^{-b} r dr`` split at ``r = 1``."""
    a = lp.beta * lp.p / ((lp.beta - 1) * (lp.p - 2))
    b = lp.p / ((lp.beta - 1) * (lp.p - 2))
    al = lp.alpha

    def head(r):
        return np.log(2 + r) ** a * (1 + r ** al) ** (-b) * r

    def tail(s):
        # r = 1/s; the integrand behaves like s^(alpha b - 3) log^a(1/s)
        if s == 0.0:
            return 0.0
        return np.log(2 + 1 / s) ** a * s ** (al * b - 3) * (1 + s ** al) ** (-b)

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=500)
    i1, e1 = integrate.quad(head, 0.0, 1.0, **opts)
    i2, e2 = integrate.quad(tail, 0.0, 1.0, **opts)
    total = i1 + i2
    if e1 + e2 > 1e-8 * total:
        log.warning("lemma integral error estimate %.2e exceeds 1e-8 relative", (e1 + e2) / total)
    return 2 * np.pi * total


def lemma_constant(lp: LemmaParams) -> float:
    """The constant ``C`` of the weighted-log inequality for ``lp``."""
    bt, eps, p = lp.beta, lp.epsilon, lp.p
    power = 2 * (bt - 1) * (p - 2) / ((bt - 2) * p)
    return (bt - 2) / (bt * eps ** (2 / (bt - 2))) * _weighted_log_integral(lp) ** power


def _log_moment(u: AnyField) -> float:
    return float(np.sum(u.grid.weights * np.log(2 + u.grid.radius) * u.values ** 2))


def verify_lemma(u: AnyField, lp: LemmaParams, constant: Optional[float] = None) -> InequalityCheck:
    """Both sides of the weighted-log inequality at ``u``."""
    C = lemma_constant(lp) if constant is None else constant
    lhs = _log_moment(u) ** 2
    rhs = (2 * lp.epsilon / lp.beta) * star_norm_sq(u, lp.alpha) + C * lp_norm(u, lp.p) ** lp.lp_exponent
    return _check(lhs, rhs)


@dataclass(frozen=True)
class ThresholdConstants:
    alpha: float
    p: float
    beta: float
    epsilon: float
    C: float
    C1: float
    C2: float
    qbar: float


def threshold_constants(alpha: float, p: float) -> ThresholdConstants:
    """Constants behind ``nonexistence_qbar`` (``beta = (2p-4)/(p-4)``, ``eps = 1``)."""
    if not p > 4:
        raise ValueError("the nonexistence threshold needs p > 4")
    if not alpha > critical_alpha(p):
        raise ValueError(f"the nonexistence threshold needs alpha > {critical_alpha(p):g}")
    beta = critical_alpha(p)
    C = lemma_constant(LemmaParams(alpha, p, beta, 1.0))
    C1 = 2.0 / (beta * np.pi * np.log(2.0))
    C2 = C / (np.pi * np.log(2.0))
    return ThresholdConstants(float(alpha), float(p), float(beta), 1.0, float(C), float(C1),
                              float(C2), float(min(1 / C1, 1 / C2)))


def nonexistence_qbar(alpha: float, p: float) -> float:
    return threshold_constants(alpha, p).qbar


def strauss_constant(alpha: float) -> float:
    k = 0.5 * (alpha + 2)
    return float(np.sqrt((k + 1) / np.sqrt(2 * np.pi) + 1 / (2 * np.pi)))


def strauss_bound(u: RadialField, alpha: float) -> InequalityCheck:
    """``max_{r>=1} r^{(alpha+2)/4} |u(r)|`` against ``C~ ||u||``."""
    r = u.grid.radius
    far = r >= 1.0
    lhs = float(np.max(r[far] ** (0.25 * (alpha + 2)) * np.abs(u.values[far]), initial=0.0))
    return _check(lhs, strauss_constant(alpha) * x_norm(u, alpha))


def log_weight_constant(alpha: float, power: int = 1) -> float:
    """``max_{r >= 0} log^power(2+r) / (1 + r^alpha)`` by golden-section search."""

    def f(r):
        r = abs(r)
        return -np.log(2 + r) ** power / (1 + r ** alpha)

    grid = np.concatenate(([0.0], np.logspace(-6, 6, 2401)))
    vals = np.array([f(r) for r in grid])
    i = int(np.argmin(vals))
    if i == 0:
        # the ratio decreases away from r = 0
        return float(-vals[0])
    res = optimize.minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                   method="golden", tol=1e-10)
    return float(max(-res.fun, -vals[i]))


@dataclass(frozen=True)
class EmbeddingConstants:
    alpha: float
    C_alpha: float
    C_alpha_prime: float
    C_GN_lib: float
    D_est: float
    C_alpha_computed: float
    clamped: bool


def embedding_constants(alpha: float, p: float = 4.0) -> EmbeddingConstants:
    """Weight constants and the library estimates of the GN and V2 constants.

    ``C_alpha`` is reported as ``max(computed, 1 + 1e-9)`` so that it is always
    larger than one; ``clamped`` records when that floor was applied.
    """
    from .library import gagliardo_nirenberg_constant, v2_constant

    raw = log_weight_constant(alpha, 1)
    floor = 1.0 + 1e-9
    clamped = raw < floor
    if clamped:
        log.info("C_alpha = %.6f for alpha = %g raised to %.9f", raw, alpha, floor)
    return EmbeddingConstants(
        alpha=alpha,
        C_alpha=max(raw, floor),
        C_alpha_prime=log_weight_constant(alpha, 2),
        C_GN_lib=gagliardo_nirenberg_constant(p),
        D_est=v2_constant(),
        C_alpha_computed=raw,
        clamped=clamped,
    )


def verify_v1_bound(u: AnyField, alpha: float, C_alpha: Optional[float] = None) -> InequalityCheck:
    """``V1(u) <= (C_alpha/pi) ||u||_2^2 ||u||_*^2``."""
    from . import logkernel

    C = log_weight_constant(alpha) if C_alpha is None else C_alpha
    return _check(logkernel.v1(u), C / np.pi * l2_norm_sq(u) * star_norm_sq(u, alpha))


def constants_csv(rows: Iterable[ThresholdConstants]) -> str:
    """CSV with columns alpha, p, beta, epsilon, C, C1, C2, qbar."""
    cols = ["alpha", "p", "beta", "epsilon", "C", "C1", "C2", "qbar"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        d = asdict(row)
        w.writerow([repr(float(d[c])) for c in cols])
    return buf.getvalue()


def threshold_table(alphas: Iterable[float], ps: Iterable[float]) -> List[ThresholdConstants]:
    """Constants on every admissible ``(alpha, p)`` pair; others are skipped."""
    out = []
    for p in ps:
        for a in alphas:
            if p > 4 and a > critical_alpha(p):
                out.append(threshold_constants(a, p))
    return out
