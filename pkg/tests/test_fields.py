import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psm2d.fields import (
    Field2D,
    Grid2D,
    ProblemParams,
    RadialField,
    RadialGrid,
    SymmetryClass,
    TruncationWarning,
    grad_sq_norm,
    inner,
    l2_norm_sq,
    lp_power,
    read_field,
    resample_dilate,
    star_norm_sq,
    weighted_moment,
    write_field,
    x_norm,
)

GRID = Grid2D(8.0, 96)
RGRID = RadialGrid(12.0, 1024)


def gauss2d(grid, s=1.0):
    return Field2D.from_function(grid, lambda x, y: np.exp(-(x * x + y * y) / (2 * s * s)))


def gauss_r(grid, s=1.0):
    return RadialField.from_function(grid, lambda r: np.exp(-r * r / (2 * s * s)))


# closed forms for g = exp(-|x|^2/2): ||g||_2^2 = pi, ||grad g||^2 = pi,
# int |x|^2 g^2 = pi, int g^p = 2 pi / p
@pytest.mark.parametrize("u", [gauss2d(GRID), gauss_r(RGRID)], ids=["2d", "radial"])
def test_gaussian_norms(u):
    assert l2_norm_sq(u) == pytest.approx(np.pi, rel=5e-5)
    assert grad_sq_norm(u) == pytest.approx(np.pi, rel=5e-3)
    assert weighted_moment(u, 2.0) == pytest.approx(np.pi, rel=1e-4)
    assert lp_power(u, 4.0) == pytest.approx(np.pi / 2, rel=5e-5)
    assert star_norm_sq(u, 2.0) == pytest.approx(2 * np.pi, rel=1e-4)
    assert x_norm(u, 2.0) ** 2 == pytest.approx(3 * np.pi, rel=5e-3)


def test_radial_embedding_matches_2d():
    u = gauss_r(RGRID).embed(GRID)
    assert np.max(np.abs(u.values - gauss2d(GRID).values)) < 1e-3


@given(st.floats(0.4, 2.5))
def test_resample_dilate_scaling(t):
    u = gauss2d(Grid2D(10.0, 96))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        ut = resample_dilate(u, t, order=3)
    # ||u(./t)||_2^2 = t^2 ||u||_2^2
    assert l2_norm_sq(ut) == pytest.approx(t * t * l2_norm_sq(u), rel=2e-3)


def test_resample_dilate_warns_on_truncation():
    u = gauss2d(Grid2D(4.0, 32))
    with pytest.warns(TruncationWarning):
        resample_dilate(u, 4.0)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["none", "odd_even", "dihedral(3)"]))
def test_field_file_roundtrip(tmp_path_factory, seed, sym):
    rng = np.random.default_rng(seed)
    grid = Grid2D(float(rng.uniform(1, 10)), 2 * int(rng.integers(8, 20)))
    u = Field2D(grid, rng.normal(size=grid.shape), SymmetryClass.parse(sym))
    path = write_field(tmp_path_factory.mktemp("f") / "u.psm2", u, {"note": "x"})
    back = read_field(path)
    assert back.grid == grid and back.symmetry == u.symmetry
    assert np.array_equal(back.values, u.values)


def test_radial_file_roundtrip(tmp_path):
    u = gauss_r(RadialGrid(5.0, 64))
    back = read_field(write_field(tmp_path / "r.psm2", u))
    assert isinstance(back, RadialField) and np.array_equal(back.values, u.values)


def test_read_field_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.psm2"
    bad.write_bytes(b"nope" + bytes(40))
    with pytest.raises(ValueError):
        read_field(bad)


@pytest.mark.parametrize("kw", [dict(alpha=0, p=3), dict(alpha=1, p=2), dict(alpha=1, p=3, q=-1),
                                dict(alpha=1, p=3, local_sign="sideways"),
                                dict(alpha=1, p=3, local_sign="general_W")])
def test_problem_params_validation(kw):
    with pytest.raises(ValueError):
        ProblemParams(**kw)


def test_inner_is_symmetric_bilinear(rng):
    a = Field2D(GRID, rng.normal(size=GRID.shape))
    b = Field2D(GRID, rng.normal(size=GRID.shape))
    assert inner(a, b) == pytest.approx(inner(b, a))
    assert inner(a + 2.0 * b, b) == pytest.approx(inner(a, b) + 2 * inner(b, b))


def test_symmetry_class_parse():
    assert SymmetryClass.parse("dihedral3") == SymmetryClass("dihedral", 3)
    assert str(SymmetryClass.parse("Dihedral(2)")) == "dihedral(2)"
    with pytest.raises(ValueError):
        SymmetryClass("hexagonal")
