import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_heat.boundary import (Constant, ContractError, PiecewiseLinearMonotone, SaturatingAffine,
                                   first_hit_level, load_knots_csv, parse_boundary)


def test_eval_examples():
    assert Constant(1.0).eval(5.0) == 1.0
    b = SaturatingAffine(0.0, 1.0, 2.0)
    assert b.eval(3.0) == 2.0
    assert b.eval(1.0) == 1.0


def test_validate_examples():
    rep = Constant(1.0).validate(10.0)
    assert rep.A2a and rep.A2b and rep.A2c and rep.lipschitz == 0
    assert not SaturatingAffine(0.0, 1.0, math.inf).validate(10.0).A2c
    knots = PiecewiseLinearMonotone([0, 1, 2, 3], [0, 1, 1, 2])
    rep = knots.validate(5.0)
    assert not rep.A2b
    assert any("A2b" in m for m in rep.messages)


def test_decreasing_knots_flagged_not_raised():
    rep = PiecewiseLinearMonotone([0, 1, 2], [1, 0.5, 0.5]).validate(3.0)
    assert not rep.A2a


def test_inverse_examples():
    b = SaturatingAffine(0.0, 1.0, 2.0)
    assert b.inverse(0.5) == pytest.approx(0.5)
    assert b.inverse(2.0) is None
    assert Constant(1.0).inverse(0.0) is None


def test_first_hit_level_refuses_invalid():
    with pytest.raises(ContractError):
        first_hit_level(PiecewiseLinearMonotone([0, 1, 2, 3], [0, 1, 1, 2]), 0.5)


def test_piecewise_csv_roundtrip(tmp_path):
    p = tmp_path / "knots.csv"
    p.write_text("t,phi\n0,0.5\n1,1.0\n2,1.5\n")
    b = load_knots_csv(p)
    assert b.eval(0.5) == pytest.approx(0.75)
    assert b.eval(10.0) == pytest.approx(1.5)
    assert parse_boundary(f"piecewise:{p}").eval(1.5) == pytest.approx(1.25)


def test_parse_boundary():
    assert parse_boundary("constant:2").eval(3.0) == 2.0
    b = parse_boundary("affine:0.5,0.5,2")
    assert b.eval(10.0) == 2.0
    assert parse_boundary("affine:0,1").sup == math.inf
    with pytest.raises(ValueError):
        parse_boundary("circle:1")


@settings(max_examples=80, deadline=None)
@given(a=st.floats(-2, 2), slope=st.floats(0.01, 5), cap_gap=st.floats(0.1, 5),
       frac=st.floats(0.01, 0.99))
def test_affine_inverse_roundtrip(a, slope, cap_gap, frac):
    b = SaturatingAffine(a, slope, a + cap_gap)
    x = a + frac * cap_gap
    w = b.inverse(x)
    assert w is not None
    assert b.eval(w) == pytest.approx(x, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(incs=st.lists(st.floats(0, 2), min_size=2, max_size=8))
def test_nondecreasing_knots_eval_monotone(incs):
    v = np.concatenate(([0.0], np.cumsum(incs)))
    t = np.arange(v.size, dtype=float)
    b = PiecewiseLinearMonotone(t, v)
    grid = np.linspace(0, v.size + 2, 200)
    assert np.all(np.diff(b.eval(grid)) >= -1e-12)
    assert b.validate(float(v.size)).A2a
