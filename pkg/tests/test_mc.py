import math

import numpy as np
import pytest

from delayed_heat.bernstein import RelativisticStable, Stable
from delayed_heat.boundary import Constant, SaturatingAffine
from delayed_heat.mc import (MCConfig, PathEnsemble, SimulationError, first_crossing, inverse_time,
                             inverse_time_mean, msd_estimate, reflection_estimate,
                             sample_subordinator_path, subordinator_laplace_estimate)
from delayed_heat.msd import potential


@pytest.fixture(scope="module")
def stable_run():
    cfg = MCConfig(n_paths=4000, s_mesh=2e-3, horizon=30.0, seed=11, n_grid=256)
    b = Constant(1.0)
    res = PathEnsemble(Stable(0.5), cfg).run([0.5, 1.0, 30.0], [(b, 0.0), (b, 1.5)])
    return res, b


@pytest.mark.parametrize("model,lam,ref", [
    (Stable(0.5), 1.0, math.exp(-1.0)),
    (RelativisticStable(0.5, 1.0), 1.0, math.exp(-(math.sqrt(2) - 1))),
    (Stable(0.3), 2.0, math.exp(-2.0**0.3)),
], ids=str)
def test_subordinator_laplace(model, lam, ref):
    cfg = MCConfig(n_paths=4000, s_mesh=0.01, horizon=1.0, seed=5)
    mean, se = subordinator_laplace_estimate(model, cfg, lam=lam, s=1.0)
    assert abs(mean - ref) < 4 * se + 1e-3


def test_mean_inverse_time(stable_run):
    res, _ = stable_run
    mean, se = inverse_time_mean(res, 1.0)
    ref = 1 / math.gamma(1.5)
    assert ref == pytest.approx(1.1283792, rel=1e-7)
    assert abs(mean - ref) < 4 * se + 3e-3


def test_crossing_laplace_transform(stable_run):
    # E exp(-T) = exp(-c sqrt(2 Phi(1))) for a constant level c = 1 and Phi(1) = 1
    res, b = stable_run
    law = first_crossing(res, b, 0.0)
    e = np.where(np.isfinite(law.samples), np.exp(-law.samples), 0.0)
    se = e.std(ddof=1) / math.sqrt(e.size)
    assert abs(e.mean() - math.exp(-math.sqrt(2))) < 4 * se + 5e-3


def test_start_on_or_above_boundary_gives_zero(stable_run):
    res, b = stable_run
    law = first_crossing(res, b, 1.5)
    assert np.all(law.samples == 0.0)


def test_free_msd_matches_potential(stable_run):
    res, _ = stable_run
    t, v, se = msd_estimate(res, None, 0.0, [1.0])
    assert abs(v[0] - float(potential(Stable(0.5), 1.0))) < 4 * se[0] + 5e-3


def test_reflection_principle(stable_run):
    res, _ = stable_run
    lhs, rhs, se = reflection_estimate(res, 0.5, 1.0)
    assert abs(lhs - rhs) < 4 * se + 5e-3


def test_crossing_times_respect_boundary():
    model = Stable(0.5)
    b = SaturatingAffine(0.5, 1.0, 2.0)
    cfg = MCConfig(n_paths=300, s_mesh=5e-3, horizon=2.0, seed=2)
    res = PathEnsemble(model, cfg).run([2.0], [(b, 0.0)])
    law = first_crossing(res, b, 0.0)
    fin = law.samples[np.isfinite(law.samples)]
    assert fin.size > 0 and np.all((fin >= 0) & (fin <= 2.0))
    # the killed paths that survive never reached the level at the final time
    alive = ~np.isfinite(res.T[:, 0])
    assert np.all(res.R[alive, 0] < float(b.eval(2.0)) + 1e-12)


def test_min_fraction_warning():
    b = Constant(5.0)
    cfg = MCConfig(n_paths=50, s_mesh=0.01, horizon=0.1, seed=1)
    res = PathEnsemble(Stable(0.5), cfg).run([0.1], [(b, 0.0)])
    with pytest.warns(UserWarning):
        law = first_crossing(res, b, 0.0, min_fraction=0.5)
    assert "warning" in law.metadata


def test_inverse_time_beyond_path():
    rng = np.random.Generator(np.random.Philox(3))
    p = sample_subordinator_path(Stable(0.5), 1.0, 0.01, rng)
    assert inverse_time(p, 0.5) <= p.s[-1]
    with pytest.raises(SimulationError):
        inverse_time(p, p.sigma[-1] * 2 + 1)


def test_workers_and_blocks_do_not_change_results():
    b = Constant(0.8)
    model = RelativisticStable(0.5, 1.0)
    base = dict(n_paths=96, s_mesh=0.01, horizon=1.0, seed=42)
    r1 = PathEnsemble(model, MCConfig(**base, workers=1, block_size=32)).run([0.5, 1.0], [(b, 0.0)])
    r2 = PathEnsemble(model, MCConfig(**base, workers=2, block_size=16)).run([0.5, 1.0], [(b, 0.0)])
    for name in ("L", "B", "R", "T"):
        np.testing.assert_array_equal(getattr(r1, name), getattr(r2, name))


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(n_paths=0)
    with pytest.raises(ValueError):
        MCConfig(s_mesh=-1.0)
    with pytest.raises(ValueError):
        MCConfig(seed=-1)
