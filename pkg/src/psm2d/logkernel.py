"""Logarithmic Coulomb energy and the planar Newtonian potential.

The interaction energies are

    V0(u) = 1/(2 pi) iint log|x-y|          u^2(x) u^2(y)
    V1(u) = 1/(2 pi) iint log(2 + |x-y|)    u^2(x) u^2(y)
    V2(u) = 1/(2 pi) iint log(1 + 2/|x-y|)  u^2(x) u^2(y)

with ``V0 = V1 - V2``. On a ``Grid2D`` the kernels are replaced by their
exact averages over a source cell, so the diagonal singularity is integrated
rather than punctured. Pairing the averaged kernel with point values of the
density ``f = u^2`` overshoots each energy by ``h^2/24 <Delta(K*f), f>``
(for ``log`` this is ``h^2/24 int u^4``), and that term is subtracted. The
discrete potential is therefore

    phi_i = h^2 sum_j K(i - j) u_j^2 - h^2/24 u_i^2,     V0 = h^2 sum_i phi_i u_i^2,

which is fourth-order accurate for smooth u, and the L2-gradient of V0 is
``4 phi u`` exactly.

Two evaluators compute the same lattice sum: ``method="direct"`` (an explicit
O(N^2) loop, the reference) and ``method="fft"`` (zero-padded circular
convolution, used inside the solvers).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numba
import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .fields import AnyField, Field2D, Grid2D, RadialField, RadialGrid, inner, l2_norm_sq

__all__ = [
    "KernelTable",
    "CoulombEnergies",
    "LOG_CELL_MEAN",
    "kernel_table",
    "log_cell_average",
    "newtonian_potential",
    "radial_potential",
    "v0",
    "v1",
    "v2",
    "coulomb_energies",
    "v0_gradient_action",
    "potential_derivative",
]

# the bundled TBB is too old for numba; the workqueue layer is always available
numba.config.THREADING_LAYER = "workqueue"

TWO_PI = 2.0 * np.pi
_CONSISTENCY_RTOL = 1e-8


def _log_antiderivative(x, y):
    """F with d2F/dxdy = log(x^2 + y^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    safe_r2 = np.where(r2 > 0, r2, 1.0)
    safe_x = np.where(x != 0, x, 1.0)
    safe_y = np.where(y != 0, y, 1.0)
    t1 = np.where(r2 > 0, x * y * np.log(safe_r2), 0.0)
    t2 = np.where(x != 0, x * x * np.arctan(y / safe_x), 0.0)
    t3 = np.where(y != 0, y * y * np.arctan(x / safe_y), 0.0)
    return t1 - 3.0 * x * y + t2 + t3


def log_cell_average(a, b):
    """Exact mean of ``log|y|`` over the unit square centered at ``(a, b)``."""
    x0, x1 = np.asarray(a) - 0.5, np.asarray(a) + 0.5
    y0, y1 = np.asarray(b) - 0.5, np.asarray(b) + 0.5
    F = _log_antiderivative
    return 0.5 * (F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0))


def _polar_square_mean(radial_primitive, half: float) -> float:
    """Mean of a radial function over the square ``[-half, half]^2``.

    ``radial_primitive(R)`` must return ``int_0^R f(r) r dr``; the angular
    integral over one octant is done adaptively.
    """
    val, _ = integrate.quad(lambda th: radial_primitive(half / np.cos(th)), 0.0, np.pi / 4,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return 8.0 * val / (2.0 * half) ** 2


def _prim_log(R):
    return 0.5 * R * R * np.log(R) - 0.25 * R * R


def _prim_log_shift(a):
    # int_0^R r log(r + a) dr
    def g(s):
        return 0.5 * s * s * np.log(s) - 0.25 * s * s - a * (s * np.log(s) - s)

    return lambda R: g(R + a) - g(a)


# Mean of log|y| over the unit square centered at the origin.
LOG_CELL_MEAN = float(log_cell_average(0.0, 0.0))


@lru_cache(maxsize=None)
def _gauss(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * x, 0.5 * w  # nodes/weights on [-1/2, 1/2]


def _cell_mean_quadrature(fn, ox, oy, h, npts):
    """Tensor Gauss-Legendre mean of ``fn(|y|)`` over cells centered at ``(ox, oy) h``."""
    x, w = _gauss(npts)
    out = np.zeros(ox.shape)
    for xi, wi in zip(x, w):
        for yj, wj in zip(x, w):
            out += wi * wj * fn(np.hypot((ox + xi) * h, (oy + yj) * h))
    return out


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Cell-averaged kernels for all lattice offsets of a grid.

    ``k0``, ``k1``, ``k2`` have shape ``(2n-1, 2n-1)``; entry ``[a + n - 1,
    b + n - 1]`` is the mean over the cell at offset ``(a, b) h`` of
    ``log|y|``, ``log(2 + |y|)`` and ``log(1 + 2/|y|)`` respectively, already
    divided by ``2 pi``.
    """

    grid: Grid2D
    k0: np.ndarray
    k1: np.ndarray
    k2: np.ndarray

    def spectrum(self, which: str) -> np.ndarray:
        return _kernel_spectrum(self.grid, which)


@lru_cache(maxsize=8)
def kernel_table(grid: Grid2D) -> KernelTable:
    n, h = grid.n, grid.h
    off = np.arange(-(n - 1), n, dtype=float)
    ox, oy = np.meshgrid(off, off, indexing="ij")
    cheb = np.maximum(np.abs(ox), np.abs(oy))
    k0 = np.empty_like(ox)
    k1 = np.empty_like(ox)
    k2 = np.empty_like(ox)

    # exact closed form for log|y| near the diagonal (cancellation-safe there)
    near = (cheb <= 6) & (cheb > 0)
    k0[near] = np.log(h) + log_cell_average(ox[near], oy[near])

    f1 = lambda r: np.log(2.0 + r)
    f2 = lambda r: np.log1p(2.0 / r)
    f0 = np.log
    for mask, npts in (((cheb > 0) & (cheb <= 2), 16), ((cheb > 2) & (cheb <= 6), 10), (cheb > 6, 6)):
        k1[mask] = _cell_mean_quadrature(f1, ox[mask], oy[mask], h, npts)
        k2[mask] = _cell_mean_quadrature(f2, ox[mask], oy[mask], h, npts)
    far = cheb > 6
    k0[far] = _cell_mean_quadrature(f0, ox[far], oy[far], h, 6)

    c = n - 1
    half = 0.5 * h
    k0[c, c] = np.log(h) + LOG_CELL_MEAN
    k1[c, c] = _polar_square_mean(_prim_log_shift(2.0), half)
    p2 = _prim_log_shift(2.0)
    k2[c, c] = _polar_square_mean(lambda R: p2(R) - _prim_log(R), half)

    for arr in (k0, k1, k2):
        arr /= TWO_PI
        arr.flags.writeable = False
    return KernelTable(grid, k0, k1, k2)


@lru_cache(maxsize=24)
def _kernel_spectrum(grid: Grid2D, which: str) -> np.ndarray:
    tab = kernel_table(grid)
    k = {"log": tab.k0, "log2": tab.k1, "log1p": tab.k2}[which]
    n = grid.n
    circ = np.zeros((2 * n, 2 * n))
    # place offset (a, b) at index (a mod 2n, b mod 2n)
    circ[:n, :n] = k[n - 1:, n - 1:]
    circ[n + 1:, :n] = k[:n - 1, n - 1:]
    circ[:n, n + 1:] = k[n - 1:, :n - 1]
    circ[n + 1:, n + 1:] = k[:n - 1, :n - 1]
    spec = sfft.rfft2(circ)
    spec.flags.writeable = False
    return spec


def _convolve_fft(grid: Grid2D, density: np.ndarray, which: str) -> np.ndarray:
    n = grid.n
    spec = _kernel_spectrum(grid, which)
    out = sfft.irfft2(sfft.rfft2(density, s=(2 * n, 2 * n)) * spec, s=(2 * n, 2 * n))
    return grid.h ** 2 * out[:n, :n]


@numba.njit(parallel=True, cache=True)
def _convolve_direct_kernel(k, density, h2):
    n = density.shape[0]
    out = np.zeros((n, n))
    for i in numba.prange(n):
        for j in range(n):
            acc = 0.0
            for a in range(n):
                for b in range(n):
                    acc += k[i - a + n - 1, j - b + n - 1] * density[a, b]
            out[i, j] = acc * h2
    return out


def _convolve_direct(grid: Grid2D, density: np.ndarray, which: str) -> np.ndarray:
    tab = kernel_table(grid)
    k = {"log": tab.k0, "log2": tab.k1, "log1p": tab.k2}[which]
    return _convolve_direct_kernel(np.ascontiguousarray(k), np.ascontiguousarray(density), grid.h ** 2)


def _convolve(grid, density, which, method):
    if method == "fft":
        return _convolve_fft(grid, density, which)
    if method == "direct":
        return _convolve_direct(grid, density, which)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# radial potential


def radial_potential(u: RadialField) -> RadialField:
    """``phi(r) = int_0^inf log(max(r, s)) u^2(s) s ds`` in O(m).

    Uses prefix sums of ``s u^2`` and suffix sums of ``s log(s) u^2``; the
    diagonal cell contributes ``log(r_i) r_i u_i^2 dr``.
    """
    g = u.grid
    r = g.radius
    w = r * u.values ** 2 * g.dr
    inner_mass = np.cumsum(w)
    wl = w * np.log(r)
    outer = np.cumsum(wl[::-1])[::-1] - wl  # strictly beyond r_i
    return RadialField(g, np.log(r) * inner_mass + outer)


def radial_potential_at_origin(u: RadialField) -> float:
    """Limit of the radial potential as ``r -> 0``."""
    g = u.grid
    return float(np.sum(g.radius * np.log(g.radius) * u.values ** 2 * g.dr))


@lru_cache(maxsize=8)
def _radial_log2_table(grid: RadialGrid) -> np.ndarray:
    """Angular means ``(1/2pi) int log(2 + |r e1 - s e^{i theta}|) dtheta``."""
    r = grid.radius
    # graded composite Gauss-Legendre on [0, pi], refined toward theta = 0
    edges = np.concatenate(([0.0], np.pi * 2.0 ** -np.arange(24, -1, -1)))
    xg, wg = np.polynomial.legendre.leggauss(8)
    th, wt = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        th.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        wt.append(0.5 * (b - a) * wg)
    th = np.concatenate(th)
    wt = np.concatenate(wt) / np.pi  # mean over [0, pi] == mean over [0, 2pi]
    s2 = np.sin(0.5 * th) ** 2
    m = grid.m
    out = np.empty((m, m))
    for i in range(m):
        ri = r[i]
        d = np.sqrt((ri - r[:, None]) ** 2 + 4.0 * ri * r[:, None] * s2[None, :])
        out[i] = np.log(2.0 + d) @ wt
    out = 0.5 * (out + out.T)
    out.flags.writeable = False
    return out


def _radial_pair_sum(u: RadialField, kernel: np.ndarray) -> float:
    rho = u.grid.weights * u.values ** 2
    return float(rho @ kernel @ rho / TWO_PI)


# ---------------------------------------------------------------------------
# energies


def _local_correction(grid: Grid2D) -> float:
    return grid.h ** 2 / 24.0


def newtonian_potential(u: AnyField, method: str = "fft") -> AnyField:
    """``phi = Phi_2 * u^2`` on the grid of ``u``."""
    if isinstance(u, RadialField):
        return radial_potential(u)
    rho = u.values ** 2
    return Field2D(u.grid, _convolve(u.grid, rho, "log", method) - _local_correction(u.grid) * rho)


def _log2_overshoot(u: Field2D, rho: np.ndarray, psi: np.ndarray) -> float:
    # h^2/24 <K1 * rho, Delta_h rho>, the quadrature overshoot of the log(2+r) energy
    g = u.grid
    return -_local_correction(g) * float(np.sum(g.weights * psi * g.neg_laplacian(rho)))


def v0(u: AnyField, method: str = "fft") -> float:
    """Logarithmic energy ``V0(u)`` summed directly with the ``log|x-y|`` kernel."""
    if isinstance(u, RadialField):
        return inner(radial_potential(u), u.with_values(u.values ** 2))
    return inner(newtonian_potential(u, method), u.with_values(u.values ** 2))


def v1(u: AnyField, method: str = "fft") -> float:
    if isinstance(u, RadialField):
        return _radial_pair_sum(u, _radial_log2_table(u.grid))
    rho = u.values ** 2
    psi = _convolve(u.grid, rho, "log2", method)
    return float(np.sum(u.grid.weights * rho * psi)) - _log2_overshoot(u, rho, psi)


def v2(u: AnyField, method: str = "fft") -> float:
    if isinstance(u, RadialField):
        # the radial V2 kernel is the difference of the two angular means
        return v1(u) - v0(u)
    g = u.grid
    rho = u.values ** 2
    psi1 = _convolve(g, rho, "log2", method)
    psi2 = _convolve(g, rho, "log1p", method)
    # Delta log(1 + 2/r) = Delta log(2 + r) - 2 pi delta
    return (float(np.sum(g.weights * rho * psi2)) - _log2_overshoot(u, rho, psi1)
            + _local_correction(g) * float(np.sum(g.weights * rho * rho)))


class CoulombEnergies(NamedTuple):
    v0: float
    v1: float
    v2: float
    v0_split: float  # v1 - v2


def coulomb_energies(u: AnyField, method: str = "fft", check: bool = True) -> CoulombEnergies:
    """All three energies, asserting ``V0 == V1 - V2`` to 1e-8 relative."""
    e0, e1, e2 = v0(u, method), v1(u, method), v2(u, method)
    split = e1 - e2
    if check:
        scale = max(abs(e1), abs(e2), np.finfo(float).tiny)
        if abs(e0 - split) > _CONSISTENCY_RTOL * scale:
            raise AssertionError(f"V0 mismatch: direct {e0!r} vs V1 - V2 {split!r}")
    return CoulombEnergies(e0, e1, e2, split)


def v0_gradient_action(u: AnyField, method: str = "fft") -> AnyField:
    """L2-gradient of ``V0``: ``4 (Phi_2 * u^2) u``."""
    phi = newtonian_potential(u, method)
    return u.with_values(4.0 * phi.values * u.values)


def potential_derivative(u: AnyField, v: AnyField) -> AnyField:
    """Derivative of ``phi(u)`` in direction ``v``: ``Phi_2 * (2 u v)``, corrected as ``phi``."""
    if isinstance(u, RadialField):
        # radial_potential is linear in the density; reuse it via a signed density
        g = u.grid
        r = g.radius
        w = r * 2.0 * u.values * v.values * g.dr
        inner_mass = np.cumsum(w)
        wl = w * np.log(r)
        outer = np.cumsum(wl[::-1])[::-1] - wl
        return RadialField(g, np.log(r) * inner_mass + outer)
    rho = 2.0 * u.values * v.values
    return Field2D(u.grid, _convolve_fft(u.grid, rho, "log") - _local_correction(u.grid) * rho)


