import numpy as np
import pytest
from hypothesis import given, strategies as st

from psm2d import energy as E
from psm2d.fields import Field2D, Grid2D, ProblemParams, SymmetryClass
from psm2d.library import random_field
from psm2d.symmetry import act, group_order, project, project_values, symmetry_defect

GRID = Grid2D(6.0, 48)
LATTICE = [SymmetryClass("odd_even"), SymmetryClass("dihedral", 1), SymmetryClass("dihedral", 2)]
ALL = LATTICE + [SymmetryClass("dihedral", 3), SymmetryClass("radial")]


def field(seed):
    return random_field(GRID, np.random.default_rng(seed))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(LATTICE))
def test_lattice_projectors_are_exact(seed, c):
    u = field(seed)
    pu = project(u, c)
    assert np.max(np.abs(project_values(pu.values, GRID, c) - pu.values)) < 1e-13
    assert symmetry_defect(pu, c) < 1e-13
    for j in range(group_order(c)):
        assert np.max(np.abs(act(pu, c, j).values - pu.values)) < 1e-13


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(LATTICE))
def test_projector_is_l2_orthogonal(seed, c):
    u, v = field(seed), field(seed + 1)
    pu, pv = project(u, c), project(v, c)
    w = GRID.weights
    assert np.sum(w * pu.values * v.values) == pytest.approx(np.sum(w * u.values * pv.values), rel=1e-10, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(LATTICE))
def test_gradient_is_equivariant(seed, c):
    P = ProblemParams(2.0, 4.0, 1.0, "minus")
    u = project(field(seed), c)
    g = E.gradient(u, P)
    assert symmetry_defect(g, c) < 1e-10


def test_dihedral3_projector_is_nearly_idempotent(rng):
    c = SymmetryClass("dihedral", 3)
    u = Field2D.from_function(GRID, lambda x, y: np.real((x + 1j * y) ** 3) * np.exp(-(x * x + y * y) / 2))
    assert symmetry_defect(u, c) < 1e-2
    pu = project(random_field(GRID, rng), c)
    assert symmetry_defect(pu, c) < 1e-2


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dihedral_members_are_sign_changing(k):
    u = Field2D.from_function(GRID, lambda x, y: np.real((x + 1j * y) ** k) * np.exp(-(x * x + y * y) / 2))
    pu = project(u, SymmetryClass("dihedral", k))
    assert pu.values.min() < 0 < pu.values.max()


def test_dihedral_classes_kill_radial_fields():
    u = Field2D.from_function(GRID, lambda x, y: np.exp(-(x * x + y * y) / 2))
    for k in (1, 2):
        assert np.max(np.abs(project(u, SymmetryClass("dihedral", k)).values)) < 1e-14


def test_group_orders():
    assert group_order(SymmetryClass("odd_even")) == 4
    assert [group_order(SymmetryClass("dihedral", k)) for k in (1, 2, 3)] == [2, 4, 6]


def test_projection_tags_the_class(rng):
    c = SymmetryClass("odd_even")
    assert project(random_field(GRID, rng), c).symmetry == c
