import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_heat.bernstein import RelativisticStable, Stable, tail_integral
from delayed_heat.nonlocal_op import (GridError, TimeGridFunction, apply_nonlocal_derivative,
                                      extremal_sign_check, memory_weights, nonlocal_derivative_all)


def test_constant_has_zero_derivative(stable05):
    f = TimeGridFunction.from_callable(lambda t: 3.0 + 0 * t, 1.0, 50)
    assert np.all(nonlocal_derivative_all(stable05, f)[1:] == 0.0)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_linear_function_exact(beta):
    model = Stable(beta)
    f = TimeGridFunction.from_callable(lambda t: t, 2.0, 40)
    d = nonlocal_derivative_all(model, f)
    t = f.t_grid[1:]
    np.testing.assert_allclose(d[1:], t ** (1 - beta) / math.gamma(2 - beta), rtol=1e-12)


def test_square_converges(stable05):
    target = 2 / math.gamma(2.5)
    assert target == pytest.approx(1.5045055561272, rel=1e-12)
    errs = []
    for n in (100, 200, 400):
        f = TimeGridFunction.from_callable(lambda t: t * t, 1.0, n)
        errs.append(abs(apply_nonlocal_derivative(stable05, f, n) - target))
    assert errs[-1] < 2e-3
    assert errs[0] / errs[1] > 1.5 and errs[1] / errs[2] > 1.5


def test_pointwise_matches_convolution(rel05):
    f = TimeGridFunction.from_callable(np.sin, 3.0, 90)
    all_ = nonlocal_derivative_all(rel05, f)
    for k in (1, 17, 90):
        assert apply_nonlocal_derivative(rel05, f, k) == pytest.approx(all_[k], rel=1e-12)


def test_weights_sum_to_tail_integral(rel05):
    w = memory_weights(rel05, 0.01, 300)
    assert w.sum() == pytest.approx(tail_integral(rel05, 3.0), rel=1e-10)
    assert np.all(np.diff(w) < 0)


def test_grid_validation():
    with pytest.raises(GridError):
        TimeGridFunction(np.array([0.0, 0.1, 0.3]), np.zeros(3))
    with pytest.raises(GridError):
        TimeGridFunction(np.array([0.1, 0.2]), np.zeros(2))
    f = TimeGridFunction.from_callable(np.cos, 1.0, 10)
    with pytest.raises(IndexError):
        apply_nonlocal_derivative(Stable(0.5), f, 0)


def test_extremal_skip_at_origin(stable05):
    f = TimeGridFunction.from_callable(lambda t: -t, 1.0, 20)
    rep = extremal_sign_check(stable05, f)
    assert rep.skipped and rep.sign_ok


@settings(max_examples=60, deadline=None)
@given(coef=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       freq=st.lists(st.floats(0.5, 8), min_size=4, max_size=4),
       beta=st.floats(0.1, 0.9), rel=st.booleans())
def test_extremal_sign_property(coef, freq, beta, rel):
    model = RelativisticStable(beta, 1.0) if rel else Stable(beta)
    t = np.linspace(0, 1, 121)
    v = sum(c * np.sin(w * t + k) for k, (c, w) in enumerate(zip(coef, freq)))
    rep = extremal_sign_check(model, TimeGridFunction(t, v))
    assert rep.sign_ok
