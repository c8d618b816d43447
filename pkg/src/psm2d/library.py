"""Seeded libraries of random smooth test fields and the empirical constants built on them."""
from __future__ import annotations

from functools import lru_cache
from typing import List

import numpy as np

from . import logkernel
from .fields import (
    Field2D,
    Grid2D,
    RadialField,
    RadialGrid,
    grad_sq_norm,
    l2_norm_sq,
    lp_norm,
    lp_power,
    x_norm,
)

LIBRARY_SEED = 20240601
LIBRARY_SIZE = 200
LIBRARY_GRID = Grid2D(8.0, 64)

__all__ = [
    "LIBRARY_SEED",
    "LIBRARY_SIZE",
    "LIBRARY_GRID",
    "random_field",
    "random_radial_field",
    "field_library",
    "radial_library",
    "gagliardo_nirenberg_constant",
    "embedding_constant",
    "v2_constant",
]


def _bump(kind: str, r2: np.ndarray, w: float) -> np.ndarray:
    if kind == "gauss":
        return np.exp(-0.5 * r2 / w ** 2)
    # sech profile; heavier tail than a Gaussian
    return 1.0 / np.cosh(np.sqrt(r2) / w)


def random_field(grid: Grid2D, rng: np.random.Generator) -> Field2D:
    """One random smooth field concentrated well inside the box.

    Four shapes are mixed: a single Gaussian, a single sech bump, a signed sum of
    2-5 Gaussians, and a Gaussian times a random quadratic polynomial.
    """
    x, y = grid.coords
    span = grid.L / 3.0
    shape = rng.integers(4)
    amp = float(rng.uniform(0.2, 3.0))
    if shape in (0, 1):
        cx, cy = rng.uniform(-span, span, size=2)
        w = float(rng.uniform(0.4, 1.5))
        v = _bump("gauss" if shape == 0 else "sech", (x - cx) ** 2 + (y - cy) ** 2, w)
    elif shape == 2:
        v = np.zeros(grid.shape)
        for _ in range(int(rng.integers(2, 6))):
            cx, cy = rng.uniform(-span, span, size=2)
            w = float(rng.uniform(0.4, 1.5))
            v += rng.normal() * _bump("gauss", (x - cx) ** 2 + (y - cy) ** 2, w)
    else:
        cx, cy = rng.uniform(-1.0, 1.0, size=2)
        w = float(rng.uniform(0.6, 1.5))
        c = rng.normal(size=6)
        xs, ys = (x - cx) / w, (y - cy) / w
        poly = c[0] + c[1] * xs + c[2] * ys + c[3] * xs * xs + c[4] * xs * ys + c[5] * ys * ys
        v = poly * _bump("gauss", (x - cx) ** 2 + (y - cy) ** 2, w)
    return Field2D(grid, amp * v)


def random_radial_field(grid: RadialGrid, rng: np.random.Generator) -> RadialField:
    """Random smooth radial profile: signed sum of 1-4 radial Gaussian shells."""
    r = grid.radius
    v = np.zeros_like(r)
    for _ in range(int(rng.integers(1, 5))):
        r0 = float(rng.uniform(0.0, min(3.0, grid.R / 3)))
        w = float(rng.uniform(0.3, 1.5))
        v += rng.normal() * np.exp(-0.5 * ((r - r0) / w) ** 2)
    return RadialField(grid, float(rng.uniform(0.2, 3.0)) * v)


def field_library(grid: Grid2D = LIBRARY_GRID, count: int = LIBRARY_SIZE,
                  seed: int = LIBRARY_SEED) -> List[Field2D]:
    rng = np.random.default_rng(seed)
    return [random_field(grid, rng) for _ in range(count)]


def radial_library(grid: RadialGrid, count: int, seed: int = LIBRARY_SEED) -> List[RadialField]:
    rng = np.random.default_rng(seed)
    return [random_radial_field(grid, rng) for _ in range(count)]


@lru_cache(maxsize=None)
def _library():
    return tuple(field_library())


@lru_cache(maxsize=None)
def gagliardo_nirenberg_constant(p: float) -> float:
    """Largest ``||u||_p^p / (||u||_2^2 ||grad u||_2^{p-2})`` over the library."""
    best = 0.0
    for u in _library():
        den = l2_norm_sq(u) * grad_sq_norm(u) ** (0.5 * (p - 2))
        best = max(best, lp_power(u, p) / den)
    return best


@lru_cache(maxsize=None)
def embedding_constant(alpha: float, p: float) -> float:
    """Largest ``||u||_p^p / ||u||^p`` over the library (X into L^p)."""
    return max(lp_power(u, p) / x_norm(u, alpha) ** p for u in _library())


@lru_cache(maxsize=None)
def v2_constant() -> float:
    """Largest ``V2(u) / ||u||_{8/3}^4`` over the library."""
    return max(logkernel.v2(u) / lp_norm(u, 8.0 / 3.0) ** 4 for u in _library())
