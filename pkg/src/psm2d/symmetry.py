"""Group actions and averaging projectors for the symmetry classes.

* ``radial``: functions of ``|x|`` only.
* ``odd_even``: odd in ``x1`` and even in ``x2``.
* ``dihedral(k)``: fixed by the signed rotation action ``u -> -u o R`` with
  ``R`` the rotation by ``pi/k``; equivalently only angular modes
  ``m in k * (odd integers)`` are present.

On the cell-centred square grid the reflections and the quarter turns are
lattice permutations, so ``odd_even``, ``dihedral(1)`` and ``dihedral(2)``
are projected exactly. Other rotations resample with cubic splines.
"""
from __future__ import annotations

from typing import Union

import numpy as np
from scipy import ndimage

from .fields import NO_SYMMETRY, Field2D, SymmetryClass, l2_norm_sq

__all__ = ["act", "project", "project_values", "symmetry_defect", "group_order"]

ClassLike = Union[SymmetryClass, str]


def _cls(c: ClassLike) -> SymmetryClass:
    return SymmetryClass.parse(c) if isinstance(c, str) else c


def group_order(c: ClassLike) -> int:
    c = _cls(c)
    if c.kind == "odd_even":
        return 4
    if c.kind == "dihedral":
        return 2 * c.k
    raise ValueError(f"{c} has no finite group action")


def _rotate(values: np.ndarray, grid, angle: float) -> np.ndarray:
    """``values(R_angle x)`` on the same grid."""
    quarter = angle / (0.5 * np.pi)
    q = int(round(quarter))
    if abs(quarter - q) < 1e-12:
        # u(R x) for R a quarter turn: np.rot90 rotates the array, not the argument
        return np.rot90(values, -q % 4)
    x1, x2 = grid.coords
    c, s = np.cos(angle), np.sin(angle)
    y1 = c * x1 - s * x2
    y2 = s * x1 + c * x2
    idx = np.stack([grid.index_of(y1), grid.index_of(y2)])
    return ndimage.map_coordinates(values, idx, order=3, mode="grid-constant", cval=0.0)


def act(u: Field2D, c: ClassLike, j: int) -> Field2D:
    """The ``j``-th element of the group of class ``c`` applied to ``u``.

    For ``dihedral(k)`` this is ``(-1)^j u(A^j x)``; for ``odd_even`` the four
    elements are identity, ``-u(-x1, x2)``, ``u(x1, -x2)``, ``-u(-x1, -x2)``.
    """
    c = _cls(c)
    v = u.values
    if c.kind == "odd_even":
        j %= 4
        out = [v, -v[::-1, :], v[:, ::-1], -v[::-1, ::-1]][j]
    elif c.kind == "dihedral":
        out = (-1) ** j * _rotate(v, u.grid, j * np.pi / c.k)
    else:
        raise ValueError(f"{c} has no finite group action")
    return u.with_values(out, NO_SYMMETRY)


def _radial_average(values: np.ndarray, grid) -> np.ndarray:
    r = grid.radius
    bins = np.floor(r / grid.h).astype(np.int64).ravel()
    count = np.bincount(bins)
    keep = count > 0
    mean_v = np.bincount(bins, weights=values.ravel())[keep] / count[keep]
    mean_r = np.bincount(bins, weights=r.ravel())[keep] / count[keep]
    return np.interp(r, mean_r, mean_v)


def project_values(values: np.ndarray, grid, c: ClassLike) -> np.ndarray:
    """Array form of ``project``."""
    c = _cls(c)
    if c.kind == "none":
        return np.array(values, dtype=float)
    if c.kind == "radial":
        return _radial_average(values, grid)
    if c.kind == "odd_even":
        return 0.25 * (values - values[::-1, :] + values[:, ::-1] - values[::-1, ::-1])
    k = c.k
    if k == 1:
        return 0.5 * (values - values[::-1, ::-1])
    if k == 2:
        return 0.25 * (values - np.rot90(values, 1) + np.rot90(values, 2) - np.rot90(values, 3))
    acc = np.zeros_like(values, dtype=float)
    for j in range(1, 2 * k + 1):
        acc += (-1) ** j * _rotate(values, grid, j * np.pi / k)
    return acc / (2 * k)


def project(u: Field2D, c: ClassLike) -> Field2D:
    """Average of ``u`` over the group of class ``c``; the result carries the tag."""
    c = _cls(c)
    return u.with_values(project_values(u.values, u.grid, c), c)


def symmetry_defect(u: Field2D, c: ClassLike) -> float:
    """``||u - P u||_2 / ||u||_2``; zero for members of the class."""
    c = _cls(c)
    if c.kind == "none":
        return 0.0
    norm = np.sqrt(l2_norm_sq(u))
    diff = u.values - project_values(u.values, u.grid, c)
    return float(np.sqrt(np.sum(u.grid.weights * diff ** 2)) / max(norm, np.finfo(float).eps))
