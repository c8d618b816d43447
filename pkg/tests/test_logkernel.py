import numpy as np
import pytest
from hypothesis import given, strategies as st

from psm2d import logkernel as lk
from psm2d.fields import Field2D, Grid2D, RadialField, RadialGrid, l2_norm_sq, sample
from psm2d.library import random_field, random_radial_field


def disk_field(grid, supersample=16):
    """Square root of the unit-disk coverage fraction of each cell."""
    x1, x2 = grid.coords
    off = (np.arange(supersample) + 0.5) / supersample - 0.5
    frac = np.zeros(grid.shape)
    for a in off:
        for b in off:
            frac += np.hypot(x1 + a * grid.h, x2 + b * grid.h) <= 1.0
    return Field2D(grid, np.sqrt(frac / supersample ** 2))


def gauss(grid, s=1.0):
    return Field2D.from_function(grid, lambda x, y: np.exp(-(x * x + y * y) / (2 * s * s)))


def test_log_cell_average_closed_form():
    # mean of log|x| over [-a, a]^2 is log a + log(2)/2 + pi/4 - 3/2
    val = lk.log_cell_average(0.0, 0.0)
    assert val == pytest.approx(np.log(0.5) + 0.5 * np.log(2) + np.pi / 4 - 1.5, abs=1e-12)
    x = (np.arange(400) + 0.5) / 400 - 0.5
    X, Y = np.meshgrid(x, x)
    assert val == pytest.approx(np.mean(np.log(np.hypot(X, Y))), abs=2e-4)


def test_disk_potential_2d_and_radial():
    grid = Grid2D(2.0, 96)
    phi = lk.newtonian_potential(disk_field(grid), method="direct")
    assert sample(phi, np.array([0.0, 0.0])) == pytest.approx(-0.25, abs=1e-3)
    assert sample(phi, np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-3)
    rg = RadialGrid(2.0, 512)
    ur = RadialField.from_function(rg, lambda r: (r <= 1).astype(float))
    assert lk.radial_potential_at_origin(ur) == pytest.approx(-0.25, abs=1e-3)
    assert np.interp(1.0, rg.radius, lk.radial_potential(ur).values) == pytest.approx(0.0, abs=1e-3)
    # outside the disk phi = (|D|/2pi) log r = log(r)/2
    assert np.interp(1.8, rg.radius, lk.radial_potential(ur).values) == pytest.approx(0.5 * np.log(1.8), abs=1e-3)


def test_fft_matches_direct(rng):
    grid = Grid2D(6.0, 48)
    u = random_field(grid, rng)
    a = lk.newtonian_potential(u, method="fft").values
    b = lk.newtonian_potential(u, method="direct").values
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_v0_fourth_order_for_gaussian():
    ref = lk.v0(gauss(Grid2D(8.0, 256)))
    errs = [abs(lk.v0(gauss(Grid2D(8.0, n))) - ref) for n in (32, 64)]
    assert errs[1] < errs[0] / 8


def test_v0_gaussian_closed_form():
    # u^2 = exp(-|x|^2) has mass pi and x - y ~ N(0, I), so V0 = pi/4 (log 2 - gamma)
    closed = np.pi / 4 * (np.log(2.0) - np.euler_gamma)
    assert lk.v0(gauss(Grid2D(8.0, 96))) == pytest.approx(closed, abs=5e-5)
    ur = RadialField.from_function(RadialGrid(12.0, 4096), lambda r: np.exp(-r * r / 2))
    assert lk.v0(ur) == pytest.approx(closed, abs=1e-5)


@given(st.integers(0, 2 ** 32 - 1))
def test_v0_equals_v1_minus_v2(seed):
    rng = np.random.default_rng(seed)
    u = random_field(Grid2D(6.0, 32), rng)
    e = lk.coulomb_energies(u)
    assert e.v0 == pytest.approx(e.v1 - e.v2, rel=1e-8, abs=1e-10)
    assert e.v1 > 0 and e.v2 > 0


@given(st.integers(0, 2 ** 32 - 1))
def test_radial_v0_equals_v1_minus_v2(seed):
    rng = np.random.default_rng(seed)
    u = random_radial_field(RadialGrid(10.0, 256), rng)
    assert lk.v0(u) == pytest.approx(lk.v1(u) - lk.v2(u), rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_rescaling_law(t):
    grid = Grid2D(8.0, 96)
    u = gauss(grid)
    ut = gauss(grid, t)
    m = l2_norm_sq(u)
    pred = t ** 4 * lk.v0(u) + t ** 4 * np.log(t) / (2 * np.pi) * m * m
    assert abs(lk.v0(ut) - pred) <= 1e-3 * max(1.0, abs(lk.v0(ut)))


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 3.0))
def test_v0_quartic_homogeneity(seed, c):
    u = random_field(Grid2D(6.0, 32), np.random.default_rng(seed))
    assert lk.v0(u * c) == pytest.approx(c ** 4 * lk.v0(u), rel=1e-10, abs=1e-12)


def test_gradient_identity(rng):
    for u in (random_field(Grid2D(6.0, 48), rng), random_radial_field(RadialGrid(8.0, 256), rng)):
        g = lk.v0_gradient_action(u)
        assert float(np.sum(u.grid.weights * g.values * u.values)) == pytest.approx(4 * lk.v0(u), rel=1e-10)


def test_potential_derivative_is_linearization(rng):
    for u, v in ((random_field(Grid2D(6.0, 32), rng), random_field(Grid2D(6.0, 32), rng)),
                 (random_radial_field(RadialGrid(8.0, 128), rng), random_radial_field(RadialGrid(8.0, 128), rng))):
        eps = 1e-5
        fd = (lk.newtonian_potential(u + eps * v).values - lk.newtonian_potential(u - eps * v).values) / (2 * eps)
        an = lk.potential_derivative(u, v).values
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))
