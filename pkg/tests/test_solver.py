import math

import numpy as np
import pytest

from delayed_heat.bernstein import Stable
from delayed_heat.boundary import Constant, ContractError, SaturatingAffine
from delayed_heat.heatkernel import KernelEvaluator
from delayed_heat.mc import MCConfig, PathEnsemble, first_crossing
from delayed_heat.solver import (Bump, _y_nodes, data_continuity_check, dynkin_hunt_q, fd_solve,
                                 max_principle_check, solve_via_representation, swept_kink_source)


def test_bump_shapes():
    b = Bump(0.0, 1.0, 2.0, "triangle")
    assert b(0.5) == pytest.approx(1.0)
    assert b(1.5) == 0.0
    assert Bump(0.0, 1.0)(0.0) == pytest.approx(1.0)
    assert (b + Bump(-3.0, 0.5)).support == (-3.5, 1.0)
    with pytest.raises(ValueError):
        Bump(0.0, 0.0)


def test_fd_max_principle_and_zero_datum():
    model, bnd = Stable(0.5), SaturatingAffine(0.5, 0.5, 1.5)
    u = fd_solve(model, bnd, Bump(-0.5, 0.6), 1.0, 100, 0.02)
    rep = max_principle_check(u, bnd)
    assert rep.ok, rep.violations
    assert rep.interior_min >= -1e-12
    z = fd_solve(model, bnd, Bump(-0.5, 0.6, 0.0), 1.0, 40, 0.05)
    assert np.all(z.values == 0.0)


def test_fd_data_continuity():
    model, bnd = Stable(0.4), Constant(1.0)
    f1, f2 = Bump(-0.5, 0.5), Bump(-0.4, 0.5, 1.1, "triangle")
    u1 = fd_solve(model, bnd, f1, 0.5, 60, 0.02)
    u2 = fd_solve(model, bnd, f2, 0.5, 60, 0.02)
    rep = data_continuity_check(u1, u2, f1, f2)
    assert rep.ok and rep.sup_u > 0


def test_datum_touching_boundary_refused():
    with pytest.raises(ContractError):
        fd_solve(Stable(0.5), Constant(1.0), Bump(0.5, 0.5), 1.0, 10, 0.1)


def test_invalid_boundary_refused():
    from delayed_heat.boundary import PiecewiseLinearMonotone
    bnd = PiecewiseLinearMonotone([0, 1, 2, 3], [1.0, 2.0, 2.0, 3.0])
    with pytest.raises(ContractError):
        fd_solve(Stable(0.5), bnd, Bump(-0.5, 0.5), 3.0, 10, 0.1)


@pytest.fixture(scope="module")
def constant_setup():
    model, bnd, f = Stable(0.5), Constant(1.0), Bump(-0.5, 0.5)
    cfg = MCConfig(n_paths=6000, s_mesh=1e-3, horizon=0.5, seed=3)
    xs = np.linspace(-2.5, 0.95, 24)
    rep = solve_via_representation(KernelEvaluator(model), bnd, f, np.array([0.5]), xs, cfg, n_y=16)
    return model, bnd, f, xs, rep


def test_routes_agree_for_constant_boundary(constant_setup):
    model, bnd, f, xs, rep = constant_setup
    fd = fd_solve(model, bnd, f, 0.5, 400, 0.005)
    ufd = np.interp(xs, fd.x_grid, fd.values[-1])
    gap = np.abs(ufd - rep.values[0])
    assert np.all(gap < 4 * rep.se[0] + 5e-3)


def test_kernel_vanishes_beyond_boundary():
    model, bnd = Stable(0.5), Constant(1.0)
    cfg = MCConfig(n_paths=2000, s_mesh=1e-3, horizon=1.0, seed=9)
    res = PathEnsemble(model, cfg).run([1.0], [(bnd, 0.0)])
    law = first_crossing(res, bnd, 0.0)
    q, _, se = dynkin_hunt_q(KernelEvaluator(model), law, bnd, 1.0, 1.5, 0.0)
    assert abs(q) < 4 * se + 2e-3


def test_swept_kink_source_restores_route_agreement():
    model = Stable(0.3)
    bnd = SaturatingAffine(0.5, 0.5, 2.0)
    f = Bump(-0.5, 0.5, 1.0, "triangle")
    yn, yw = _y_nodes(f, 16)
    cfg = MCConfig(n_paths=6000, s_mesh=1e-3, horizon=1.0, seed=7)
    ens = PathEnsemble(model, cfg).run([1.0], [(bnd, float(y)) for y in yn])
    xs = np.linspace(-3.0, 1.9, 25)
    rep = solve_via_representation(KernelEvaluator(model), bnd, f, np.array([1.0]), xs, cfg,
                                   n_y=16, ensemble=ens)
    times = ens.T.T.ravel()
    weights = np.repeat(yw * f(yn) / ens.n, ens.n)
    src = swept_kink_source(model, bnd, times, weights, 1.0, n_bins=40)
    plain = fd_solve(model, bnd, f, 1.0, 200, 0.01)
    forced = fd_solve(model, bnd, f, 1.0, 200, 0.01, source=src)
    g_plain = np.abs(np.interp(xs, plain.x_grid, plain.values[-1]) - rep.values[0])
    g_forced = np.abs(np.interp(xs, forced.x_grid, forced.values[-1]) - rep.values[0])
    assert np.all(g_forced < 4 * rep.se[0] + 5e-3)
    assert g_forced.max() < 0.5 * g_plain.max()
