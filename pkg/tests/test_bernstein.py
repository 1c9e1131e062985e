import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_heat import bernstein as bz
from delayed_heat.bernstein import (DomainError, RelativisticStable, Stable, TabulatedLevyDensity,
                                    orey_lower_bound, parse_model, regular_variation_index,
                                    tail_consistency)


def test_phi_values(stable05, rel05):
    assert bz.phi(stable05, 4.0) == pytest.approx(2.0, rel=1e-15)
    assert bz.phi(rel05, 0.0) == 0.0
    assert bz.phi(rel05, 3.0) == pytest.approx(1.0, rel=1e-15)


def test_phi_rejects_negative(stable05):
    with pytest.raises(DomainError):
        bz.phi(stable05, -1.0)


def test_levy_tail_values(stable05, rel05):
    assert bz.levy_tail(stable05, 1.0) == pytest.approx(1 / math.gamma(0.5), rel=1e-14)
    assert bz.levy_tail(stable05, 4.0) == pytest.approx(0.2820947917738781, rel=1e-14)
    s = np.geomspace(0.01, 100, 60)
    tail = bz.levy_tail(rel05, s)
    assert np.all(np.diff(tail) < 0)
    assert tail[-1] < 1e-40
    with pytest.raises(DomainError):
        bz.levy_tail(stable05, 0.0)


def test_tail_integral_values(stable05, rel05):
    assert bz.tail_integral(stable05, 1.0) == pytest.approx(1 / math.gamma(1.5), rel=1e-14)
    assert bz.tail_integral(stable05, 4.0) == pytest.approx(2.2567583341910251, rel=1e-14)
    assert bz.tail_integral(rel05, 1e-12) < 1e-5


def test_psi_values(stable05, rel05):
    assert bz.psi(stable05, 0.0) == 0
    assert bz.psi(rel05, 0.0) == 0
    assert bz.psi(stable05, 1.0) == pytest.approx(math.sqrt(0.5) * (1 - 1j), rel=1e-14)


def test_relativistic_psi_scalar_and_array_agree(rel05):
    xi = np.array([1e-5, 0.3, 7.0])
    arr = rel05.psi(xi)
    assert arr.shape == xi.shape
    for x, v in zip(xi, arr):
        assert bz.psi(rel05, float(x)) == pytest.approx(v, rel=1e-14)


def test_relativistic_psi_small_argument(rel05):
    # Phi(z) ~ beta m^(beta-1) z for small z
    assert bz.psi(rel05, 1e-9) == pytest.approx(-0.5j * 1e-9, rel=1e-6)


@pytest.mark.parametrize("model", [Stable(0.3), Stable(0.7), RelativisticStable(0.5, 1.0),
                                   RelativisticStable(0.3, 2.0)], ids=str)
def test_tail_consistency(model):
    for lam in (0.1, 1.0, 10.0):
        direct, by_parts = tail_consistency(model, lam)
        assert by_parts == pytest.approx(direct, rel=1e-6)


def test_regular_variation_index():
    assert regular_variation_index(Stable(0.3)) == 0.3
    assert regular_variation_index(RelativisticStable(0.5, 1.0)) == 1.0


def test_tabulated_stable_samples_recover_index():
    b = 0.6
    s = np.geomspace(1e-4, 1e4, 200)
    model = TabulatedLevyDensity(s, b / math.gamma(1 - b) * s ** (-1 - b), -1 - b, -1 - b)
    assert regular_variation_index(model) == pytest.approx(b, abs=0.02)
    ob = orey_lower_bound(model)
    assert ob.verified
    assert ob.gamma == pytest.approx(2 - b, abs=0.02)
    assert "heuristic" in ob.note


def test_tabulated_phi_matches_stable():
    b = 0.6
    s = np.geomspace(1e-5, 1e5, 300)
    model = TabulatedLevyDensity(s, b / math.gamma(1 - b) * s ** (-1 - b), -1 - b, -1 - b)
    lam = np.array([0.01, 1.0, 100.0])
    np.testing.assert_allclose(model.phi(lam), lam**b, rtol=1e-4)


def test_finite_activity_fails_orey():
    s = np.geomspace(1e-3, 10, 50)
    model = TabulatedLevyDensity(s, np.exp(-s), 0.0, -3.0)
    assert not model.infinite_activity
    assert not orey_lower_bound(model).verified


def test_tabulated_input_validation():
    with pytest.raises(DomainError):
        TabulatedLevyDensity([1.0, 0.5], [1.0, 1.0], -1.5, -2.0)
    with pytest.raises(DomainError):
        TabulatedLevyDensity([0.5, 1.0], [1.0, 1.0], -2.5, -2.0)
    with pytest.raises(DomainError):
        TabulatedLevyDensity([0.5, 1.0], [1.0, 1.0], -1.5, -0.5)


def test_stable_orey_closed_form():
    ob = orey_lower_bound(Stable(0.4))
    assert ob.C == pytest.approx(math.cos(0.2 * math.pi))
    assert ob.gamma == pytest.approx(1.6)


def test_parse_model():
    assert isinstance(parse_model("stable:0.5"), Stable)
    m = parse_model("relativistic:0.3,2")
    assert (m.beta, m.m) == (0.3, 2.0)
    with pytest.raises(DomainError):
        parse_model("gamma:1")
    with pytest.raises(DomainError):
        parse_model("tabulated:whatever.csv")


betas = st.floats(0.05, 0.95)
lams = st.floats(1e-4, 1e4)


@settings(max_examples=60, deadline=None)
@given(b=betas, m=st.floats(0.1, 5.0), lam=lams, h=st.floats(1e-3, 10.0))
def test_relativistic_is_bernstein(b, m, lam, h):
    model = RelativisticStable(b, m)
    f0, f1, f2 = model.phi(np.array([lam, lam + h, lam + 2 * h]))
    assert 0 < f0 < f1
    # concave: second difference nonpositive
    assert f2 - 2 * f1 + f0 <= 1e-12 * f2


@settings(max_examples=60, deadline=None)
@given(b=betas, s=st.floats(1e-3, 1e3), r=st.floats(1.01, 10.0))
def test_stable_tail_decreasing_and_scaling(b, s, r):
    model = Stable(b)
    a, c = model.levy_tail(np.array([s, r * s]))
    assert c < a
    assert c / a == pytest.approx(r ** (-b), rel=1e-12)
