"""Discrete search spaces with their X inner product and Riesz maps.

A space knows how to keep an array inside the admissible class (``project``),
how to turn an L2-gradient into the X-gradient inside the class (``riesz``),
and how to measure gradients in the dual norm. Three kinds are provided:

* ``LatticeSpace``: a 2-D grid constrained by an exactly representable class
  (none, odd_even, dihedral(1), dihedral(2)). The projector commutes with the
  stiffness matrix, so ``riesz = P S^{-1} W``.
* ``RadialSpace``: radial profiles.
* ``HarmonicSpace``: Galerkin span of ``cos(m theta) b_j(r)`` and
  ``sin(m theta) b_j(r)`` for ``m`` in ``k * (odd)``, used for dihedral classes
  whose rotations are not lattice maps.
"""
from __future__ import annotations

from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from ..fields import Field2D, Grid2D, RadialField, RadialGrid, SymmetryClass
from ..symmetry import project_values

__all__ = ["Space", "LatticeSpace", "RadialSpace", "HarmonicSpace", "make_space"]


class Space:
    grid = None
    alpha: float = 1.0
    symmetry: SymmetryClass = SymmetryClass()

    def field(self, values):
        raise NotImplementedError

    def project(self, values: np.ndarray) -> np.ndarray:
        return values

    def riesz(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def stiffness(self):
        return self.grid.stiffness(self.alpha)

    def x_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a.ravel() @ (self.stiffness @ b.ravel()))

    def l2_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.grid.weights * a * b))

    def dual_norm(self, g: np.ndarray) -> float:
        """``sup <g, v> / ||v||_X`` over ``v`` in the space."""
        return float(np.sqrt(max(self.l2_inner(g, self.riesz(g)), 0.0)))

    def describe(self) -> dict:
        return {"kind": type(self).__name__, "symmetry": str(self.symmetry),
                "grid": self.grid.to_json(), "alpha": self.alpha}


class _FactoredSpace(Space):
    @cached_property
    def _lu(self):
        return spla.splu(self.stiffness)

    def _solve(self, g: np.ndarray) -> np.ndarray:
        rhs = (self.grid.weights * g).ravel()
        return self._lu.solve(rhs).reshape(self.grid.shape)


class LatticeSpace(_FactoredSpace):
    def __init__(self, grid: Grid2D, alpha: float, symmetry: SymmetryClass = SymmetryClass()):
        if not symmetry.lattice_exact:
            raise ValueError(f"{symmetry} is not exact on the lattice; use HarmonicSpace")
        self.grid, self.alpha, self.symmetry = grid, float(alpha), symmetry

    def field(self, values) -> Field2D:
        return Field2D(self.grid, values, self.symmetry)

    def project(self, values):
        return project_values(values, self.grid, self.symmetry)

    def riesz(self, g):
        return self.project(self._solve(self.project(g)))


class RadialSpace(_FactoredSpace):
    symmetry = SymmetryClass("radial")

    def __init__(self, grid: RadialGrid, alpha: float):
        self.grid, self.alpha = grid, float(alpha)

    def field(self, values) -> RadialField:
        return RadialField(self.grid, values)

    def riesz(self, g):
        return self._solve(g)


class HarmonicSpace(Space):
    """Galerkin subspace of a dihedral class built from sampled angular harmonics.

    Radial factors are piecewise-linear hats with nodes ``r_j = j dr``,
    ``j = 1..n_radial``, on ``[0, radius]`` (zero at the origin and beyond
    ``radius``); angular orders are the first ``n_modes`` of ``k, 3k, 5k, ...``.
    """

    def __init__(self, grid: Grid2D, alpha: float, k: int, n_modes: int = 4,
                 n_radial: int = 40, radius: Optional[float] = None):
        self.grid, self.alpha, self.k = grid, float(alpha), int(k)
        self.symmetry = SymmetryClass("dihedral", self.k)
        self.radius = float(radius if radius is not None else 0.95 * grid.L)
        self.modes = tuple(self.k * (2 * i + 1) for i in range(n_modes))
        self.n_radial = int(n_radial)

    @cached_property
    def _raw_basis(self) -> np.ndarray:
        g = self.grid
        x1, x2 = g.coords
        r = g.radius.ravel()
        theta = np.arctan2(x2, x1).ravel()
        dr = self.radius / self.n_radial
        cols = []
        for m in self.modes:
            # skip hats too close to the origin to resolve m oscillations (4 cells per period)
            r_min = 2.0 * m * g.h / np.pi
            c, s = np.cos(m * theta), np.sin(m * theta)
            for j in range(1, self.n_radial + 1):
                if (j + 1) * dr < r_min:
                    continue
                hat = np.clip(1.0 - np.abs(r / dr - j), 0.0, None)
                cols.append(hat * c)
                cols.append(hat * s)
        return np.array(cols).T

    @cached_property
    def basis(self) -> np.ndarray:
        """X-orthonormal columns spanning the sampled harmonics (flattened fields)."""
        B = self._raw_basis
        G = B.T @ (self.stiffness @ B)
        lam, vec = np.linalg.eigh(0.5 * (G + G.T))
        keep = lam > 1e-10 * lam[-1]
        return B @ (vec[:, keep] / np.sqrt(lam[keep]))

    @cached_property
    def _mass(self):
        B = self.basis
        M = B.T @ (self.grid.weights.ravel()[:, None] * B)
        return sla.cho_factor(0.5 * (M + M.T))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def field(self, values) -> Field2D:
        return Field2D(self.grid, values, self.symmetry)

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """L2-orthogonal projection coefficients of ``values``."""
        rhs = self.basis.T @ (self.grid.weights * values).ravel()
        return sla.cho_solve(self._mass, rhs)

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        return (self.basis @ coef).reshape(self.grid.shape)

    def project(self, values):
        return self.synthesize(self.coefficients(values))

    def dual_coefficients(self, g: np.ndarray) -> np.ndarray:
        """``B^T W g``: the gradient in coefficient form."""
        return self.basis.T @ (self.grid.weights * g).ravel()

    def riesz(self, g):
        # the basis is X-orthonormal, so the Gram matrix is the identity
        return self.synthesize(self.dual_coefficients(g))

    def describe(self) -> dict:
        d = super().describe()
        d.update(modes=list(self.modes), n_radial=self.n_radial, radius=self.radius)
        return d


def make_space(grid, alpha: float, symmetry: SymmetryClass = SymmetryClass(), **kw) -> Space:
    if isinstance(grid, RadialGrid):
        return RadialSpace(grid, alpha)
    if symmetry.kind == "dihedral" and not symmetry.lattice_exact:
        return HarmonicSpace(grid, alpha, symmetry.k, **kw)
    if symmetry.kind == "radial":
        raise ValueError("use a RadialGrid for the radial class")
    return LatticeSpace(grid, alpha, symmetry)
