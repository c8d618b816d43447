import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from psm2d import inequalities as ineq
from psm2d.fields import Field2D, Grid2D, RadialField, RadialGrid
from psm2d.library import random_field, random_radial_field


def test_critical_alpha():
    assert ineq.critical_alpha(6.0) == pytest.approx(4.0)
    assert ineq.critical_alpha(8.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        ineq.critical_alpha(4.0)


def test_lemma_params_admissibility():
    lp = ineq.LemmaParams(6.0, 6.0, 4.0, 1.0)
    assert lp.decay == pytest.approx(3.0)
    assert lp.lp_exponent == pytest.approx(6.0)
    with pytest.raises(ValueError):
        ineq.LemmaParams(2.0, 6.0, 4.0, 1.0)  # decay 1 < 2


def test_weighted_log_integral_brute_force():
    lp = ineq.LemmaParams(6.0, 6.0, 4.0, 1.0)
    a = lp.beta * lp.p / ((lp.beta - 1) * (lp.p - 2))
    b = lp.p / ((lp.beta - 1) * (lp.p - 2))
    val, _ = integrate.quad(lambda r: np.log(2 + r) ** a * (1 + r ** 6) ** (-b) * r, 0, np.inf, limit=400)
    assert ineq._weighted_log_integral(lp) == pytest.approx(2 * np.pi * val, rel=1e-7)


def test_threshold_constants_closed_form():
    tc = ineq.threshold_constants(5.0, 6.0)
    beta = 4.0
    assert tc.beta == pytest.approx(beta)
    assert tc.C1 == pytest.approx(2 / (beta * np.pi * np.log(2)))
    assert tc.C1 == pytest.approx(0.22961, rel=1e-4)
    assert tc.qbar == pytest.approx(min(1 / tc.C1, 1 / tc.C2))
    with pytest.raises(ValueError):
        ineq.threshold_constants(4.0, 6.0)


@pytest.mark.parametrize("alpha", [5.0, 6.0, 8.0])
def test_qbar_decreases_with_smaller_margin(alpha):
    # the lemma integral grows as alpha approaches its critical value, so qbar shrinks
    assert ineq.nonexistence_qbar(alpha, 6.0) <= ineq.nonexistence_qbar(alpha + 2.0, 6.0) * (1 + 1e-12)


def test_strauss_constant_value():
    assert ineq.strauss_constant(2.0) == pytest.approx(np.sqrt(3 / np.sqrt(2 * np.pi) + 1 / (2 * np.pi)))
    assert ineq.strauss_constant(2.0) == pytest.approx(1.1645, abs=1e-4)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 3.0, 6.0]))
def test_strauss_bound_on_random_profiles(seed, alpha):
    u = random_radial_field(RadialGrid(20.0, 512), np.random.default_rng(seed))
    assert ineq.strauss_bound(u, alpha).ok


@given(st.integers(0, 2 ** 32 - 1))
def test_lemma_on_random_fields(seed):
    lp = ineq.LemmaParams(6.0, 6.0, 4.0, 1.0)
    u = random_field(Grid2D(6.0, 48), np.random.default_rng(seed))
    assert ineq.verify_lemma(u, lp).ok


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 2.0, 6.0]))
def test_v1_bound_on_random_fields(seed, alpha):
    u = random_field(Grid2D(6.0, 48), np.random.default_rng(seed))
    assert ineq.verify_v1_bound(u, alpha).ok


@pytest.mark.parametrize("alpha,power", [(1.0, 1), (2.0, 1), (6.0, 2), (0.5, 2)])
def test_log_weight_constant_brute_force(alpha, power):
    r = np.concatenate(([0.0], np.logspace(-8, 8, 400001)))
    brute = np.max(np.log(2 + r) ** power / (1 + r ** alpha))
    got = ineq.log_weight_constant(alpha, power)
    assert got >= brute * (1 - 1e-12)
    assert got == pytest.approx(brute, rel=1e-8)


def test_embedding_constants_clamp():
    ec = ineq.embedding_constants(6.0)
    assert ec.C_alpha > 1.0
    assert ec.clamped == (ec.C_alpha_computed < 1 + 1e-9)
    assert ec.C_alpha == max(ec.C_alpha_computed, 1 + 1e-9)


def test_constants_csv_roundtrip():
    rows = ineq.threshold_table([3.0, 5.0, 6.0], [6.0, 8.0])
    # (3, 6) is inadmissible since alpha must exceed 4
    assert {(r.alpha, r.p) for r in rows} == {(5.0, 6.0), (6.0, 6.0), (5.0, 8.0), (6.0, 8.0)}
    parsed = list(csv.DictReader(io.StringIO(ineq.constants_csv(rows))))
    assert list(parsed[0]) == ["alpha", "p", "beta", "epsilon", "C", "C1", "C2", "qbar"]
    for row, tc in zip(parsed, rows):
        assert float(row["qbar"]) == tc.qbar


def test_inequality_check_ratio():
    c = ineq.InequalityCheck(1.0, 4.0, True)
    assert c.ratio == 0.25
    assert ineq.InequalityCheck(1.0, 0.0, False).ratio == np.inf
