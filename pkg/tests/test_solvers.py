import numpy as np
import pytest

from psm2d import energy, logkernel
from psm2d.fields import Field2D, Grid2D, ProblemParams, RadialGrid, SymmetryClass, x_norm
from psm2d.inequalities import nonexistence_qbar
from psm2d.library import random_field, random_radial_field
from psm2d.solver import (
    CONSTRAINED,
    MOUNTAIN_PASS,
    NEGATIVE_MINIMIZER,
    TRIVIAL,
    HarmonicSpace,
    LatticeSpace,
    SolverConfig,
    find_q_tilde,
    find_t0_on_H,
    make_space,
    minimize_I_radial,
    minimize_on_H,
    mountain_pass,
    mp_floor,
    radial_multistart,
    retract_to_H,
    trial_family,
)
from psm2d.solver.optimize import Objective, dense_newton_minimize, descend, newton_polish
from psm2d.solver.radial import best_gaussian, gaussian_profile

GRID = Grid2D(6.0, 48)


def test_lattice_riesz_is_symmetric_positive(rng):
    sp = LatticeSpace(GRID, 2.0, SymmetryClass("odd_even"))
    a = sp.project(random_field(GRID, rng).values)
    b = sp.project(random_field(GRID, rng).values)
    ra, rb = sp.riesz(a), sp.riesz(b)
    assert sp.l2_inner(a, rb) == pytest.approx(sp.l2_inner(b, ra), rel=1e-10)
    assert sp.l2_inner(a, ra) > 0
    # Riesz representative has X-inner product equal to the L2 pairing
    assert sp.x_inner(ra, b) == pytest.approx(sp.l2_inner(a, b), rel=1e-9)


def test_harmonic_basis_is_x_orthonormal():
    sp = HarmonicSpace(GRID, 2.0, 3, n_modes=2, n_radial=12)
    B = sp.basis
    G = B.T @ (sp.stiffness @ B)
    assert np.allclose(G, np.eye(sp.dim), atol=1e-8)
    v = sp.synthesize(np.arange(sp.dim, dtype=float))
    assert np.allclose(sp.project(v), v, atol=1e-9)


def test_make_space_dispatch():
    assert isinstance(make_space(GRID, 2.0, SymmetryClass("dihedral", 3)), HarmonicSpace)
    assert isinstance(make_space(GRID, 2.0, SymmetryClass("dihedral", 2)), LatticeSpace)
    with pytest.raises(ValueError):
        make_space(GRID, 2.0, SymmetryClass("radial"))


def test_descend_decreases_and_converges(rng):
    # with q = 0 and the plus sign the only critical point is zero
    P = ProblemParams(2.0, 4.0, 0.0, "plus")
    obj = Objective(LatticeSpace(GRID, 2.0), P)
    res = descend(obj, random_field(GRID, rng).values, tol=1e-8, max_iter=2000)
    assert res.converged
    assert np.all(np.diff(res.history) <= 1e-12)
    assert np.max(np.abs(res.values)) < 1e-6


def test_dense_newton_collapses_below_threshold(rng):
    grid = RadialGrid(8.0, 128)
    P = ProblemParams(5.0, 6.0, 0.0, "plus")
    obj = Objective(make_space(grid, 5.0), P)
    res = dense_newton_minimize(obj, random_radial_field(grid, rng).values, tol=1e-10, collapse=1e-8)
    assert x_norm(obj.space.field(res.values), 5.0) < 1e-6


def test_newton_polish_finds_mountain_pass_point():
    P = ProblemParams(2.0, 5.0, 1.0, "minus")
    out = mountain_pass(P, 1, grid=Grid2D(8.0, 48))
    sp = make_space(Grid2D(8.0, 48), 2.0, SymmetryClass("dihedral", 1))
    pol = newton_polish(Objective(sp, P), out.solution.values * (1 + 1e-3), 1e-8, 30)
    assert pol.converged
    assert pol.value == pytest.approx(out.level, rel=1e-6)


def test_trial_family_matches_profiles():
    fam = trial_family(3.0, 5.0, 8)
    grid = RadialGrid(40.0, 4096)
    P = ProblemParams(3.0, 5.0, 2.0, "plus")
    for i in (0, 3, 7):
        u = fam.member(i, grid)
        # member 7 has t ~ 0.31, so both sides carry quadrature error ~1e-4
        assert fam.energies(2.0)[i] == pytest.approx(energy.eval_I(u, P), rel=1e-3)
    assert fam.energy_at(0.7, 1.3, 2.0) == pytest.approx(
        energy.eval_I(gaussian_profile(grid, 0.7, 1.3), P), rel=1e-4)


def test_best_gaussian_beats_members():
    fam = trial_family(5.0, 6.0, 64)
    q = 2 * find_q_tilde(ProblemParams(5.0, 6.0), 64)
    c, t, e = best_gaussian(fam, q)
    assert e < 0
    assert e <= fam.energies(q).min()


def test_q_tilde_is_reproducible_and_above_qbar():
    P = ProblemParams(5.0, 6.0)
    a = find_q_tilde(P, 64)
    assert a == find_q_tilde(P, 64)
    assert a >= nonexistence_qbar(5.0, 6.0)
    # a bigger family can only lower the estimate
    assert find_q_tilde(P, 256) <= a


def test_radial_minimizer_trivial_below_threshold():
    qbar = nonexistence_qbar(5.0, 6.0)
    out = minimize_I_radial(ProblemParams(5.0, 6.0, 0.5 * qbar), m=256, max_box_doublings=2)
    assert out.classification == TRIVIAL
    assert out.diagnostics["x_norm"] < 1e-6


def test_radial_minimizer_negative_above_trial_threshold():
    P = ProblemParams(8.0, 8.0)
    out = minimize_I_radial(P.replace(q=2 * find_q_tilde(P)), m=256, max_box_doublings=4)
    assert out.classification == NEGATIVE_MINIMIZER
    assert out.level < 0
    assert out.converged
    assert out.manifest.results["level"] == out.level


def test_multistart_is_seeded():
    P = ProblemParams(5.0, 6.0, 1e-4)
    g = RadialGrid(8.0, 64)
    a = radial_multistart(P, 2, 7, g)
    b = radial_multistart(P, 2, 7, g)
    assert [o.level for o in a] == [o.level for o in b]


def test_retract_to_H():
    u = Field2D.from_function(GRID, lambda x, y: 0.3 * np.exp(-(x * x + y * y)))
    assert logkernel.v0(retract_to_H(u)) == pytest.approx(1.0, abs=1e-12)
    # a narrow bump has V0 < 0 and needs a dilation first
    narrow = Field2D.from_function(Grid2D(8.0, 96), lambda x, y: np.exp(-8 * (x * x + y * y)))
    assert logkernel.v0(narrow) < 0
    t = find_t0_on_H(narrow)
    assert t > 1
    assert logkernel.v0(retract_to_H(narrow)) == pytest.approx(1.0, abs=1e-12)


def test_constrained_minimizer_small():
    grid = Grid2D(6.0, 48)
    P = ProblemParams(2.0, 4.0, 0.0, "general_W", (0.0, 0.25, 4.0))
    seed = Field2D.from_function(grid, lambda x, y: x * np.exp(-(x * x + y * y)))
    out = minimize_on_H(seed, P, SolverConfig(max_iter=500))
    assert out.classification == CONSTRAINED
    assert out.converged
    assert out.diagnostics["v0_defect"] < 1e-8
    assert out.multiplier_lambda > 0
    assert out.q_effective == pytest.approx(4 * out.multiplier_lambda)
    with pytest.raises(ValueError):
        minimize_on_H(seed, P.replace(local_sign="plus"))


def test_mp_floor_positive_and_decreasing_in_q():
    r1, f1 = mp_floor(ProblemParams(2.0, 5.0, 1.0, "minus"))
    r2, f2 = mp_floor(ProblemParams(2.0, 5.0, 4.0, "minus"))
    assert f1 > 0 and r1 > 0
    assert f2 < f1


def test_mountain_pass_small():
    out = mountain_pass(ProblemParams(2.0, 5.0, 1.0, "minus"), 1, grid=Grid2D(8.0, 48))
    assert out.classification == MOUNTAIN_PASS
    assert out.converged
    assert out.level > out.diagnostics["mp_floor"]
    assert out.solution.values.min() < 0 < out.solution.values.max()
    assert out.state.summary()["path_points"] >= 2
    with pytest.raises(ValueError):
        mountain_pass(ProblemParams(2.0, 5.0, 1.0), 4)
