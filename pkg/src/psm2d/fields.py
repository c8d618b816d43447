"""Discrete stand-ins for functions in the weighted space X.

Two discretizations are provided:

* ``Grid2D`` / ``Field2D``: a cell-centered uniform grid on the box
  ``[-L, L]^2``. No cell center lies on an axis, so the odd-in-x1 class and
  the origin-symmetric classes are represented exactly.
* ``RadialGrid`` / ``RadialField``: cell-centered radial profiles
  ``r_i = (i + 1/2) R / m`` for functions ``u(x) = u(|x|)``.

Both grids expose the same small set of methods (quadrature weights, the
Dirichlet form, the 5-point / radial Laplacian and the stiffness matrix of
the X inner product), so norms and functionals are written once.

Boundary treatment is homogeneous Dirichlet: a ghost value 0 sits one cell
beyond the last center. The discrete Laplacian is exactly the L2-gradient of
half the Dirichlet form, so identities such as ``<grad E(u), u> = ...`` hold
to rounding.
"""
from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy import interpolate, ndimage

__all__ = [
    "Grid2D",
    "RadialGrid",
    "Field2D",
    "RadialField",
    "SymmetryClass",
    "ProblemParams",
    "TruncationWarning",
    "grad_sq_norm",
    "star_norm_sq",
    "weighted_moment",
    "l2_norm_sq",
    "lp_norm",
    "lp_power",
    "x_norm",
    "inner",
    "resample_dilate",
    "truncation_loss",
    "sample",
    "write_field",
    "read_field",
]


class TruncationWarning(UserWarning):
    """More than 1% of the L2 mass is lost when dilating inside a finite box."""


# ---------------------------------------------------------------------------
# symmetry tag (the projectors live in psm2d.symmetry)


@dataclass(frozen=True)
class SymmetryClass:
    """Symmetry class of a field.

    ``kind`` is one of ``"none"``, ``"radial"``, ``"odd_even"`` or
    ``"dihedral"``; ``k`` is only meaningful for ``"dihedral"``, whose
    generator is the signed rotation ``u -> -u(A x)`` with ``A`` the rotation
    by ``pi/k`` (a cyclic action of order ``2k``).
    """

    kind: str = "none"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "radial", "odd_even", "dihedral"):
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        if self.kind == "dihedral" and self.k < 1:
            raise ValueError("dihedral class needs k >= 1")
        if self.kind != "dihedral" and self.k != 0:
            object.__setattr__(self, "k", 0)

    @classmethod
    def parse(cls, text: str) -> "SymmetryClass":
        """Parse ``none``, ``radial``, ``odd_even``, ``dihedral3`` or ``dihedral(3)``."""
        text = text.strip().lower()
        if text.startswith("dihedral"):
            digits = "".join(ch for ch in text[len("dihedral"):] if ch.isdigit())
            return cls("dihedral", int(digits or 1))
        return cls(text)

    def __str__(self) -> str:
        return f"dihedral({self.k})" if self.kind == "dihedral" else self.kind

    @property
    def lattice_exact(self) -> bool:
        return self.kind in ("none", "odd_even") or (
            self.kind == "dihedral" and self.k in (1, 2)
        )


NO_SYMMETRY = SymmetryClass()


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid2D:
    """Cell-centered ``n x n`` grid on ``[-L, L]^2``.

    Array index ``[i, j]`` holds the value at
    ``(x1, x2) = (-L + (i + 1/2) h, -L + (j + 1/2) h)``.
    """

    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError("half width L must be positive")
        if self.n < 8 or self.n % 2:
            raise ValueError("n must be even and >= 8")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n, self.n)

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def coords(self) -> tuple:
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        x1.flags.writeable = False
        x2.flags.writeable = False
        return x1, x2

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2 = self.coords
        r = np.hypot(x1, x2)
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.shape, self.h * self.h)
        w.flags.writeable = False
        return w

    def potential_weight(self, alpha: float) -> np.ndarray:
        """``|x|^alpha`` at the cell centers."""
        return self.radius ** alpha

    def dirichlet(self, values: np.ndarray) -> float:
        """``sum_faces (u_a - u_b)^2``, which equals ``||grad u||_2^2`` on the grid."""
        u = np.pad(values, 1)
        dx = np.diff(u[:, 1:-1], axis=0)
        dy = np.diff(u[1:-1, :], axis=1)
        return float(np.sum(dx * dx) + np.sum(dy * dy))

    def neg_laplacian(self, values: np.ndarray) -> np.ndarray:
        """5-point ``-Delta_h u`` with zero ghost values."""
        u = np.pad(values, 1)
        lap = (
            4.0 * u[1:-1, 1:-1]
            - u[:-2, 1:-1]
            - u[2:, 1:-1]
            - u[1:-1, :-2]
            - u[1:-1, 2:]
        )
        return lap / (self.h * self.h)

    def stiffness(self, alpha: float) -> sp.csc_matrix:
        """Symmetric matrix ``S`` with ``v.S.u = <u, v>_X`` for flattened fields."""
        n = self.n
        d1 = sp.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n))
        eye = sp.identity(n)
        dx = sp.kron(d1, eye)
        dy = sp.kron(eye, d1)
        mass = sp.diags((self.h ** 2 * (1.0 + self.potential_weight(alpha))).ravel())
        return (dx.T @ dx + dy.T @ dy + mass).tocsc()

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """Fractional array index of physical coordinate ``x``."""
        return (np.asarray(x) + self.L) / self.h - 0.5

    def to_json(self) -> dict:
        return {"type": "Grid2D", "L": self.L, "n": self.n, "h": self.h}


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centered radial grid ``r_i = (i + 1/2) R / m`` on ``[0, R]``."""

    R: float
    m: int

    def __post_init__(self):
        if not (self.R > 0 and np.isfinite(self.R)):
            raise ValueError("radius R must be positive")
        if self.m < 16:
            raise ValueError("m must be >= 16")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "m", int(self.m))

    @property
    def dr(self) -> float:
        return self.R / self.m

    @property
    def shape(self) -> tuple:
        return (self.m,)

    @cached_property
    def radius(self) -> np.ndarray:
        r = (np.arange(self.m) + 0.5) * self.dr
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        w = 2.0 * np.pi * self.radius * self.dr
        w.flags.writeable = False
        return w

    @cached_property
    def _face_coeff(self) -> np.ndarray:
        # faces at r = (i+1) dr, i = 0..m-1; the last one separates u_{m-1}
        # from the zero ghost. The face at r = 0 has zero weight.
        return 2.0 * np.pi * (np.arange(1, self.m + 1) * self.dr) / self.dr

    def potential_weight(self, alpha: float) -> np.ndarray:
        return self.radius ** alpha

    def dirichlet(self, values: np.ndarray) -> float:
        d = np.diff(np.append(values, 0.0))
        return float(np.sum(self._face_coeff * d * d))

    def neg_laplacian(self, values: np.ndarray) -> np.ndarray:
        c = self._face_coeff
        flux = c * np.diff(np.append(values, 0.0))
        div = flux - np.concatenate(([0.0], flux[:-1]))
        return -div / self.weights

    def stiffness(self, alpha: float) -> sp.csc_matrix:
        m = self.m
        c = self._face_coeff
        main = c.copy()
        main[1:] += c[:-1]
        off = -c[:-1]
        mass = self.weights * (1.0 + self.potential_weight(alpha))
        return sp.diags([main + mass, off, off], [0, -1, 1], shape=(m, m)).tocsc()

    def to_json(self) -> dict:
        return {"type": "RadialGrid", "R": self.R, "m": self.m, "dr": self.dr}


AnyGrid = Union[Grid2D, RadialGrid]


# ---------------------------------------------------------------------------
# fields


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field2D:
    """Real values on a ``Grid2D``; immutable once constructed."""

    grid: Grid2D
    values: np.ndarray
    symmetry: SymmetryClass = NO_SYMMETRY

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    def with_values(self, values, symmetry: Optional[SymmetryClass] = None) -> "Field2D":
        return Field2D(self.grid, values, self.symmetry if symmetry is None else symmetry)

    def __mul__(self, c: float) -> "Field2D":
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "Field2D") -> "Field2D":
        _same_grid(self, other)
        return Field2D(self.grid, self.values + other.values)

    def __sub__(self, other: "Field2D") -> "Field2D":
        _same_grid(self, other)
        return Field2D(self.grid, self.values - other.values)

    def __neg__(self) -> "Field2D":
        return self.with_values(-self.values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field2D":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid2D, fn, symmetry: SymmetryClass = NO_SYMMETRY) -> "Field2D":
        x1, x2 = grid.coords
        return cls(grid, np.broadcast_to(fn(x1, x2), grid.shape), symmetry)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Profile of a radial function on a ``RadialGrid``."""

    grid: RadialGrid
    values: np.ndarray
    symmetry: SymmetryClass = SymmetryClass("radial")

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    def with_values(self, values, symmetry=None) -> "RadialField":
        return RadialField(self.grid, values)

    def __mul__(self, c: float) -> "RadialField":
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __add__(self, other):
        _same_grid(self, other)
        return RadialField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return RadialField(self.grid, self.values - other.values)

    def __neg__(self):
        return self.with_values(-self.values)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: RadialGrid, fn) -> "RadialField":
        return cls(grid, np.broadcast_to(fn(grid.radius), grid.shape))

    def embed(self, grid: Grid2D) -> Field2D:
        """Sample the profile on a 2-D grid by linear interpolation in ``r``."""
        vals = np.interp(grid.radius, self.grid.radius, self.values, right=0.0)
        return Field2D(grid, vals, SymmetryClass("radial"))


AnyField = Union[Field2D, RadialField]


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# ---------------------------------------------------------------------------
# problem parameters


@dataclass(frozen=True)
class ProblemParams:
    """Parameters selecting which problem is solved.

    ``local_sign`` is ``"plus"`` for the defocusing local term
    ``+|u|^{p-2}u`` (functional I), ``"minus"`` for ``-|u|^{p-2}u``
    (functional J) and ``"general_W"`` for a nonnegative ``W`` given by
    ``W_coeffs = (C1, C2, pW)`` meaning ``W(s) = C1 s^2 + C2 |s|^pW``.
    """

    alpha: float
    p: float
    q: float = 0.0
    local_sign: str = "plus"
    W_coeffs: Optional[tuple] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.p > 2:
            raise ValueError("p must exceed 2")
        if not self.q >= 0:
            raise ValueError("q must be nonnegative")
        if self.local_sign not in ("plus", "minus", "general_W"):
            raise ValueError(f"unknown local_sign {self.local_sign!r}")
        if self.local_sign == "general_W":
            if self.W_coeffs is None or len(self.W_coeffs) != 3:
                raise ValueError("general_W needs W_coeffs = (C1, C2, p)")
            c1, c2, pw = self.W_coeffs
            if c1 < 0 or c2 < 0 or pw <= 2:
                raise ValueError("W_coeffs need C1, C2 >= 0 and p > 2")
            object.__setattr__(self, "W_coeffs", tuple(float(c) for c in self.W_coeffs))

    @property
    def sign(self) -> float:
        """+1 for the I functional, -1 for J (0 when W replaces the power)."""
        return {"plus": 1.0, "minus": -1.0, "general_W": 0.0}[self.local_sign]

    def replace(self, **kw) -> "ProblemParams":
        d = dict(alpha=self.alpha, p=self.p, q=self.q,
                 local_sign=self.local_sign, W_coeffs=self.W_coeffs)
        d.update(kw)
        return ProblemParams(**d)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "p": self.p, "q": self.q,
                "local_sign": self.local_sign,
                "W_coeffs": list(self.W_coeffs) if self.W_coeffs else None}


# ---------------------------------------------------------------------------
# norms


def inner(u: AnyField, v: AnyField) -> float:
    """Discrete L2 inner product."""
    _same_grid(u, v)
    return float(np.sum(u.grid.weights * u.values * v.values))


def grad_sq_norm(u: AnyField) -> float:
    """``||grad u||_2^2`` from face differences with zero ghost values."""
    return u.grid.dirichlet(u.values)


def l2_norm_sq(u: AnyField) -> float:
    return float(np.sum(u.grid.weights * u.values ** 2))


def weighted_moment(u: AnyField, alpha: float) -> float:
    """``int |x|^alpha u^2``."""
    return float(np.sum(u.grid.weights * u.grid.potential_weight(alpha) * u.values ** 2))


def star_norm_sq(u: AnyField, alpha: float) -> float:
    """``||u||_*^2 = int (1 + |x|^alpha) u^2`` by the midpoint rule."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    g = u.grid
    return float(np.sum(g.weights * (1.0 + g.potential_weight(alpha)) * u.values ** 2))


def lp_power(u: AnyField, p: float) -> float:
    """``||u||_p^p``."""
    return float(np.sum(u.grid.weights * np.abs(u.values) ** p))


def lp_norm(u: AnyField, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return lp_power(u, p) ** (1.0 / p)


def x_norm(u: AnyField, alpha: float) -> float:
    """Full X norm, ``sqrt(grad_sq_norm + star_norm_sq)``."""
    return float(np.sqrt(grad_sq_norm(u) + star_norm_sq(u, alpha)))


# ---------------------------------------------------------------------------
# dilations


def truncation_loss(u: AnyField, t: float) -> float:
    """Fraction of ``||u||_2^2`` that ``u(x/t)`` pushes out of the box."""
    g = u.grid
    total = l2_norm_sq(u)
    if total == 0.0 or t <= 1.0:
        return 0.0
    if isinstance(g, Grid2D):
        x1, x2 = g.coords
        outside = (np.abs(x1) > g.L / t) | (np.abs(x2) > g.L / t)
    else:
        outside = g.radius > g.R / t
    return float(np.sum((g.weights * u.values ** 2)[outside]) / total)


def resample_dilate(u: AnyField, t: float, r_pow: float = 0.0, order: int = 1) -> AnyField:
    """Return ``t^r_pow * u(x / t)`` on the same grid.

    Values are bilinearly interpolated (linear in ``r`` for radial fields)
    with zero outside the source box; ``order=3`` switches to cubic splines.
    A ``TruncationWarning`` is emitted when more than 1% of the L2 mass falls
    outside the box.
    """
    if order not in (1, 3):
        raise ValueError("order must be 1 or 3")
    if not t > 0:
        raise ValueError("dilation factor must be positive")
    g = u.grid
    loss = truncation_loss(u, t)
    if loss > 0.01:
        warnings.warn(f"dilation by t={t:g} loses {100 * loss:.2f}% of the L2 mass",
                      TruncationWarning, stacklevel=2)
    scale = t ** r_pow
    if t == 1.0:
        return u.with_values(scale * u.values)
    if isinstance(g, Grid2D):
        x1, x2 = g.coords
        idx = np.stack([g.index_of(x1 / t), g.index_of(x2 / t)])
        vals = ndimage.map_coordinates(u.values, idx, order=order, mode="grid-constant", cval=0.0)
    elif order == 1:
        r = np.concatenate(([0.0], g.radius, [g.R + 0.5 * g.dr]))
        prof = np.concatenate(([u.values[0]], u.values, [0.0]))
        vals = np.interp(g.radius / t, r, prof, right=0.0)
    else:
        # even extension through the origin keeps the spline smooth at r = 0
        r = np.concatenate((-g.radius[::-1], g.radius, [g.R + 0.5 * g.dr]))
        prof = np.concatenate((u.values[::-1], u.values, [0.0]))
        s = g.radius / t
        vals = np.where(s <= r[-1], interpolate.CubicSpline(r, prof)(np.minimum(s, r[-1])), 0.0)
    return u.with_values(scale * vals)


def sample(u: Field2D, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of ``u`` at physical ``points`` of shape (..., 2)."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    idx = np.stack([u.grid.index_of(flat[:, 0]), u.grid.index_of(flat[:, 1])])
    out = ndimage.map_coordinates(u.values, idx, order=1, mode="grid-constant", cval=0.0)
    return out.reshape(pts.shape[:-1])


# ---------------------------------------------------------------------------
# field files: 32-byte header + little-endian float64 values + JSON sidecar

_MAGIC = b"PSM2"
_VERSION = 1
_HEADER = struct.Struct("<4sHIIdBB8x")  # 32 bytes
_TAGS = {"none": 0, "radial": 1, "odd_even": 2, "dihedral": 3}
_TAG_NAMES = {v: k for k, v in _TAGS.items()}
assert _HEADER.size == 32


def write_field(path, u: AnyField, manifest: Optional[dict] = None) -> Path:
    """Write ``u`` to ``path`` and a sidecar ``path + '.json'``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(u, Field2D):
        n, m, length = u.grid.n, 0, u.grid.L
    else:
        n, m, length = 0, u.grid.m, u.grid.R
    sym = u.symmetry
    header = _HEADER.pack(_MAGIC, _VERSION, n, m, length, _TAGS[sym.kind], sym.k)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C"))
    side = {"grid": u.grid.to_json(), "symmetry": str(sym)}
    if manifest:
        side.update(manifest)
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True, default=_json_default))
    return path


def read_field(path) -> AnyField:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, m, length, tag, k = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if tag not in _TAG_NAMES:
        raise ValueError(f"{path}: bad symmetry tag {tag}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    sym = SymmetryClass(_TAG_NAMES[tag], k)
    if n and m:
        raise ValueError(f"{path}: header has both n and m set")
    if n:
        grid = Grid2D(length, n)
        if data.size != n * n:
            raise ValueError(f"{path}: expected {n * n} values, found {data.size}")
        return Field2D(grid, data.reshape(n, n), sym)
    grid = RadialGrid(length, m)
    if data.size != m:
        raise ValueError(f"{path}: expected {m} values, found {data.size}")
    return RadialField(grid, data)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
