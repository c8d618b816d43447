import numpy as np
import pytest
from hypothesis import given, strategies as st

from psm2d import energy as E
from psm2d import logkernel as lk
from psm2d.fields import Field2D, Grid2D, ProblemParams, RadialGrid, inner
from psm2d.library import random_field, random_radial_field

GRID = Grid2D(6.0, 48)
RGRID = RadialGrid(10.0, 256)
PARAMS = {
    "I": ProblemParams(2.0, 4.5, 1.3, "plus"),
    "J": ProblemParams(2.0, 4.5, 1.3, "minus"),
    "G": ProblemParams(2.0, 3.5, 1.3, "general_W", (0.3, 0.5, 3.5)),
}


def central_difference(f, u, v, eps=1e-4):
    return (f(u + eps * v) - f(u - eps * v)) / (2 * eps)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(sorted(PARAMS)), st.booleans())
def test_gradient_matches_central_difference(seed, which, radial):
    rng = np.random.default_rng(seed)
    make, grid = (random_radial_field, RGRID) if radial else (random_field, GRID)
    u, v = make(grid, rng), make(grid, rng)
    P = PARAMS[which]
    fd = central_difference(lambda w: E.functional(w, P), u, v)
    an = inner(E.gradient(u, P), v)
    assert abs(fd - an) <= 1e-5 * max(abs(an), 1.0)


@pytest.mark.parametrize("which", sorted(PARAMS))
def test_hessian_matches_gradient_difference(which, rng):
    P = PARAMS[which]
    u, v = random_field(GRID, rng), random_field(GRID, rng)
    eps = 1e-5
    fd = (E.gradient(u + eps * v, P).values - E.gradient(u - eps * v, P).values) / (2 * eps)
    hv = E.hessian_action(u, v, P).values
    assert np.linalg.norm(fd - hv) <= 1e-6 * np.linalg.norm(hv)


def test_named_gradients_agree_with_dispatch(rng):
    u = random_field(GRID, rng)
    assert np.allclose(E.grad_I(u, PARAMS["I"]).values, E.gradient(u, PARAMS["I"]).values)
    assert np.allclose(E.grad_J(u, PARAMS["J"]).values, E.gradient(u, PARAMS["J"]).values)
    P = PARAMS["G"]
    coupled = E.grad_G(u, P).values - P.q * lk.newtonian_potential(u).values * u.values
    assert np.allclose(coupled, E.gradient(u, P).values)


@pytest.mark.parametrize("which", sorted(PARAMS))
def test_nehari_is_gradient_against_u(which, rng):
    P = PARAMS[which]
    u = random_field(GRID, rng)
    assert E.nehari(u, P) == pytest.approx(inner(E.gradient(u, P), u), rel=1e-10)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(sorted(PARAMS)), st.floats(0.0, 3.0))
def test_pohozaev_is_dilation_derivative(seed, which, r):
    P = PARAMS[which]
    u = random_field(GRID, np.random.default_rng(seed))
    t = 1e-5
    d = (E.dilation_energy(u, P, 1 + t, r) - E.dilation_energy(u, P, 1 - t, r)) / (2 * t)
    assert E.pohozaev(u, P, r) == pytest.approx(d, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("which", sorted(PARAMS))
def test_dilation_energy_at_one_is_functional(which, rng):
    u = random_field(GRID, rng)
    assert float(E.dilation_energy(u, PARAMS[which], 1.0, 1.3)) == pytest.approx(
        E.functional(u, PARAMS[which]), rel=1e-12)


def test_pohozaev_vanishes_for_exact_scaling_family():
    # along t^r u(x/t) the minimum over t of the scalar formula has zero derivative
    u = Field2D.from_function(Grid2D(8.0, 64), lambda x, y: np.exp(-(x * x + y * y) / 2))
    P = ProblemParams(2.0, 4.0, 0.0, "plus")
    ts = np.linspace(0.3, 3.0, 20001)
    e = E.dilation_energy(u, P, ts, 0.0)
    i = int(np.argmin(e))
    scaled = E.dilation_energy(u, P, ts[i] * (1 + 1e-6), 0.0) - E.dilation_energy(u, P, ts[i] * (1 - 1e-6), 0.0)
    assert abs(scaled) < 1e-6


def test_uncoupled_pohozaev_closed_form():
    u = Field2D.from_function(Grid2D(8.0, 128), lambda x, y: np.exp(-(x * x + y * y) / 2))
    # ||u||^2 + 2 int |x|^2 u^2 = pi + 2 pi
    assert E.pohozaev_uncoupled(u, 2.0, E.PowerNonlinearity(0, 0, 4)) == pytest.approx(3 * np.pi, rel=1e-4)


def test_gagliardo_nirenberg_gaussian():
    u = Field2D.from_function(Grid2D(8.0, 128), lambda x, y: np.exp(-(x * x + y * y) / 2))
    lhs, rhs, ok = E.gagliardo_nirenberg_check(u, 4.0, constant=1.0)
    # ||u||_4^4 = pi/2, ||u||_2^2 ||grad u||_2^2 = pi^2
    assert lhs == pytest.approx(np.pi / 2, rel=1e-5)
    assert rhs == pytest.approx(np.pi ** 2, rel=5e-3)
    assert ok


def test_nonlinearity_audit():
    E.PowerNonlinearity(0.2, 0.5, 3.0).audit()
    with pytest.raises(E.NonlinearityError):
        E.PowerNonlinearity(-1.0, 0.5, 3.0)

    class Negative(E.PowerNonlinearity):
        def W(self, s):
            return -super().W(s)

    with pytest.raises(E.NonlinearityError):
        Negative(0.1, 0.1, 3.0).audit()

    class WrongDerivative(E.PowerNonlinearity):
        def dW(self, s):
            return 2 * super().dW(s)

    with pytest.raises(E.NonlinearityError):
        WrongDerivative(0.1, 0.1, 3.0).audit()


def test_riesz_inverts_stiffness(rng):
    g = random_field(GRID, rng)
    d = E.riesz(g, 2.0)
    back = GRID.stiffness(2.0) @ d.values.ravel()
    assert np.allclose(back, (GRID.weights * g.values).ravel(), rtol=1e-9, atol=1e-12)
    assert E.dual_norm(g, 2.0) ** 2 == pytest.approx(inner(d, g), rel=1e-12)


def test_energy_report_json(rng):
    u = random_field(GRID, rng)
    rep = E.energy_report(u, PARAMS["I"], (0.0, 1.0))
    import json
    d = json.loads(rep.to_json())
    assert d["value_I"] == pytest.approx(E.eval_I(u, PARAMS["I"]))
