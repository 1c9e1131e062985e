"""Monte Carlo simulation of delayed Brownian motion ``X(t) = y + B(L(t))``.

Every path owns two counter-based Philox streams derived from
``(seed, path_index)``: one drives the subordinator ``sigma``, the other the
Brownian motion. Paths are simulated in fixed-size blocks which are
reduced in index order, so any number of worker processes gives bit-identical
results.

On each path ``sigma`` is sampled exactly on the mesh ``s_j = j h`` and
interpolated linearly, ``L`` is the exact inverse of that interpolant, and
``B`` is sampled at ``L`` of the time nodes. Between two nodes ``B`` is a
Brownian bridge in operational time, whose maximum is sampled exactly, so
crossings of level boundaries between nodes are never missed. The crossing
time inside a bridge is drawn from its conditional law and mapped back
through ``sigma``.
"""
from __future__ import annotations

import concurrent.futures as cf
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bernstein import BernsteinModel, RelativisticStable, Stable, TabulatedLevyDensity
from .boundary import Boundary

__all__ = [
    "MCConfig",
    "SimulationError",
    "SubordinatorPath",
    "sample_subordinator_path",
    "inverse_time",
    "PathEnsemble",
    "EnsembleResult",
    "CrossingLaw",
    "first_crossing",
    "killed_density_histogram",
    "reflection_estimate",
    "msd_estimate",
    "inverse_time_mean",
    "subordinator_laplace_estimate",
]


class SimulationError(RuntimeError):
    """Sampler cannot proceed with the given parameters."""


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo parameters.

    Attributes
    ----------
    n_paths : int
    s_mesh : float
        Operational-time step of the subordinator mesh.
    horizon : float
        Largest physical time simulated.
    seed : int
    epsilon_smalljump : float, optional
        Jump cutoff for tabulated models (default: neglected variance below
        ``1e-6 * horizon``).
    n_grid : int
        Uniform crossing-detection intervals on ``[0, horizon]`` (each split once more).
    block_size : int
    workers : int
    """

    n_paths: int = 10_000
    s_mesh: float = 0.01
    horizon: float = 1.0
    seed: int = 0
    epsilon_smalljump: Optional[float] = None
    n_grid: int = 64
    block_size: int = 1024
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1 or self.block_size < 1 or self.workers < 1:
            raise ValueError("n_paths, block_size and workers must be positive")
        if not (self.s_mesh > 0 and self.horizon > 0):
            raise ValueError("s_mesh and horizon must be positive")
        if not 0 <= self.seed < 2**63:
            raise ValueError("seed must be a nonnegative 63-bit integer")


def _streams(seed: int, index: int):
    """Independent subordinator and Brownian generators for one path."""
    gs = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index, 0))))
    gb = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index, 1))))
    return gs, gb


# ---------------------------------------------------------------------------
# subordinator increments

def _positive_stable(beta: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` one-sided stable variates with ``E exp(-lam S) = exp(-lam**beta)`` (Kanter's method)."""
    u = math.pi * rng.random(n)
    e = rng.standard_exponential(n)
    a = ((np.sin(beta * u) / np.sin(u)) ** (1.0 / (1.0 - beta))
         * np.sin((1.0 - beta) * u) / np.sin(beta * u))
    return (a / e) ** ((1.0 - beta) / beta)


class _Sampler:
    """Draws ``k`` independent increments ``sigma(s + h) - sigma(s)``."""

    def __init__(self, model: BernsteinModel, h: float, horizon: float, epsilon: Optional[float]):
        self.model = model
        self.h = h
        if isinstance(model, Stable):
            self.kind = "stable"
            self.scale = h ** (1.0 / model.beta)
        elif isinstance(model, RelativisticStable):
            self.kind = "relativistic"
            mb = model.m ** model.beta
            # sub-steps keep the tilting acceptance at least exp(-1)
            self.sub = max(1, int(math.ceil(h * mb)))
            self.hs = h / self.sub
            self.scale = self.hs ** (1.0 / model.beta)
            self.accept = math.exp(-self.hs * mb)
            if self.accept < 1e-3:
                raise SimulationError("tilting acceptance below 1e-3; reduce s_mesh")
        elif isinstance(model, TabulatedLevyDensity):
            self.kind = "compound"
            if not model.infinite_activity:
                raise SimulationError("A1 fails: finite Levy mass")
            eps = epsilon if epsilon is not None else _default_epsilon(model, horizon)
            self.eps = eps
            self.drift = float(model.small_jump_moment(eps, 1))
            self.rate = float(model.levy_tail(eps))
            self._inv = _tail_inverse(model, eps)
        else:
            raise SimulationError(f"no sampler for model kind {model.kind!r}")

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        if self.kind == "stable":
            return self.scale * _positive_stable(self.model.beta, rng, k)
        if self.kind == "relativistic":
            need = k * self.sub
            out = np.empty(0)
            m = self.model.m
            while out.size < need:
                batch = int((need - out.size) / self.accept * 1.1) + 16
                cand = self.scale * _positive_stable(self.model.beta, rng, batch)
                keep = rng.random(batch) <= np.exp(-m * cand)
                out = np.concatenate((out, cand[keep]))
            return out[:need].reshape(k, self.sub).sum(axis=1)
        counts = rng.poisson(self.rate * self.h, k)
        total = int(counts.sum())
        jumps = self._inv(rng.random(total))
        sums = np.zeros(k)
        np.add.at(sums, np.repeat(np.arange(k), counts), jumps)
        return self.drift * self.h + sums


def _default_epsilon(model: BernsteinModel, horizon: float) -> float:
    # largest eps on a geometric ladder with int_0^eps s^2 nu(ds) < 1e-6 * horizon
    target = 1e-6 * horizon
    for eps in np.geomspace(1.0, 1e-12, 121):
        if float(model.small_jump_moment(eps, 2)) < target:
            return float(eps)
    raise SimulationError("could not find a small-jump cutoff")


def _tail_inverse(model: BernsteinModel, eps: float):
    """Map ``V ~ U(0,1)`` to a jump size with law ``nu`` restricted to ``[eps, inf)``."""
    grid = np.geomspace(eps, eps * 1e12, 1200)
    tail = model.levy_tail(grid)
    frac = tail / tail[0]
    keep = frac > 1e-15
    lg, lf = np.log(grid[keep])[::-1], np.log(frac[keep])[::-1]
    p_inf = getattr(model, "p_inf", -2.0)

    def inv(v):
        lv = np.log(np.maximum(v, 1e-300))
        out = np.interp(lv, lf, lg)
        # beyond the grid the tail is a power with exponent p_inf + 1
        below = lv < lf[0]
        out[below] = lg[0] + (lv[below] - lf[0]) / (p_inf + 1.0)
        return np.exp(out)

    return inv


@dataclass
class SubordinatorPath:
    """``sigma`` on the mesh ``s_j = j * s_mesh`` up to the first value beyond the horizon."""

    s_mesh: float
    sigma: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return self.s_mesh * np.arange(self.sigma.size)

    def value(self, s):
        return np.interp(s, self.s, self.sigma)


def sample_subordinator_path(model: BernsteinModel, horizon: float, s_mesh: float,
                             rng: np.random.Generator, epsilon: Optional[float] = None,
                             _sampler: Optional[_Sampler] = None) -> SubordinatorPath:
    """Sample ``sigma`` on a uniform mesh until it exceeds ``horizon``."""
    smp = _sampler or _Sampler(model, s_mesh, horizon, epsilon)
    mean_steps = _expected_steps(model, horizon, s_mesh)
    chunk = max(16, int(1.3 * mean_steps) + 16)
    parts = [np.zeros(1)]
    last = 0.0
    while last <= horizon:
        inc = smp.draw(rng, chunk)
        c = last + np.cumsum(inc)
        parts.append(c)
        last = float(c[-1])
        chunk = max(16, chunk // 2)
    sig = np.concatenate(parts)
    cut = int(np.searchsorted(sig, horizon, side="right")) + 1
    return SubordinatorPath(s_mesh, sig[:cut])


def _expected_steps(model: BernsteinModel, horizon: float, s_mesh: float) -> float:
    if isinstance(model, Stable):
        return horizon**model.beta / math.gamma(1.0 + model.beta) / s_mesh
    # renewal bound U(t) <= e / Phi(1/t)
    return math.e / float(model.phi(1.0 / horizon)) / s_mesh


def inverse_time(path: SubordinatorPath, t):
    """``L(t) = inf{s : sigma(s) > t}`` for the interpolated path."""
    t = np.asarray(t, dtype=float)
    if np.any(t > path.sigma[-1]):
        raise SimulationError("horizon exhausted: t beyond the simulated subordinator range")
    out = np.interp(t, path.sigma, path.s)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# blocks

@dataclass(frozen=True)
class _Request:
    t_out: tuple
    specs: tuple  # ((boundary, y), ...)


def _inverse_gaussian(mu, lam, z, u):
    """Michael-Schucany-Haas transform of pre-drawn ``z ~ N(0,1)``, ``u ~ U(0,1)``."""
    y = z * z
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r = mu * y / lam
        # stable form of mu + mu^2 y/(2 lam) - mu/(2 lam) sqrt(4 mu lam y + mu^2 y^2)
        x = mu * (1.0 + 0.5 * r - 0.5 * np.sqrt(r * (4.0 + r)))
        x = np.where(r > 1e6, mu / r, x)
        x = np.where(np.isinf(mu), lam / np.maximum(y, 1e-300), x)
        out = np.where(u <= mu / (mu + x), x, mu * mu / x)
        out = np.where(np.isinf(mu), x, out)
    return out


def _simulate_block(model: BernsteinModel, cfg: MCConfig, block: int, req: _Request):
    lo = block * cfg.block_size
    hi = min(cfg.n_paths, lo + cfg.block_size)
    nb = hi - lo
    t_out = np.asarray(req.t_out, dtype=float)
    grid = np.linspace(0.0, cfg.horizon, 2 * cfg.n_grid + 1)
    nodes = np.unique(np.concatenate((grid, t_out)))
    out_idx = np.searchsorted(nodes, t_out)
    n_nodes = nodes.size
    n_specs = len(req.specs)
    smp = _Sampler(model, cfg.s_mesh, cfg.horizon, cfg.epsilon_smalljump)

    L = np.empty((nb, n_nodes))
    Z = np.empty((nb, n_nodes - 1))
    U = np.empty((nb, n_nodes - 1))
    ZI = np.empty((nb, max(n_specs, 1)))
    UI = np.empty((nb, max(n_specs, 1)))
    paths = []
    for i in range(nb):
        gs, gb = _streams(cfg.seed, lo + i)
        p = sample_subordinator_path(model, cfg.horizon, cfg.s_mesh, gs, _sampler=smp)
        paths.append(p)
        L[i] = np.interp(nodes, p.sigma, p.s)
        Z[i] = gb.standard_normal(n_nodes - 1)
        U[i] = gb.random(n_nodes - 1)
        if n_specs:
            ZI[i, :n_specs] = gb.standard_normal(n_specs)
            UI[i, :n_specs] = gb.random(n_specs)

    dL = np.diff(L, axis=1)
    B = np.zeros((nb, n_nodes))
    B[:, 1:] = np.cumsum(np.sqrt(dL) * Z, axis=1)
    a, b = B[:, :-1], B[:, 1:]
    # exact maximum of each Brownian bridge
    M = 0.5 * (a + b + np.sqrt((b - a) ** 2 - 2.0 * dL * np.log(U)))
    R = np.zeros((nb, n_nodes))
    R[:, 1:] = np.maximum.accumulate(M, axis=1)

    T = np.full((nb, n_specs), np.inf)
    for k, (bnd, y) in enumerate(req.specs):
        phi_nodes = np.asarray(bnd.eval(nodes), dtype=float)
        if y >= phi_nodes[0]:
            T[:, k] = 0.0
            continue
        level = phi_nodes[1:] - y
        hit = M >= level[None, :]
        any_hit = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        rows = np.nonzero(any_hit)[0]
        if rows.size == 0:
            continue
        j = first[rows]
        h = dL[rows, j]
        d = level[j] - a[rows, j]
        e = np.abs(level[j] - b[rows, j])
        with np.errstate(divide="ignore"):
            mu = np.where(e > 0, d * h / np.where(e > 0, e, 1.0), np.inf)
        v = _inverse_gaussian(mu, d * d, ZI[rows, k], UI[rows, k])
        ustar = np.where(np.isinf(v), h, v * h / (h + v))
        ustar = np.clip(ustar, 0.0, h)
        s_hit = L[rows, j] + ustar
        for r, sh in zip(rows, s_hit):
            T[r, k] = float(paths[r].value(sh))
        T[rows, k] = np.clip(T[rows, k], nodes[j], nodes[j + 1])
    return {
        "L": L[:, out_idx],
        "B": B[:, out_idx],
        "R": R[:, out_idx],
        "T": T,
    }


@dataclass
class EnsembleResult:
    """Per-path summaries of a simulated ensemble.

    Attributes
    ----------
    t_out : ndarray
        Output times.
    L : ndarray, shape (n, len(t_out))
        Inverse subordinator at the output times.
    B : ndarray
        ``B(L(t))``, the displacement from the start point.
    R : ndarray
        Running maximum ``sup_{u <= L(t)} B(u)``.
    T : ndarray, shape (n, len(specs))
        Crossing times per requested ``(boundary, y)``, ``inf`` if not crossed by the horizon.
    specs : list
    config : MCConfig
    """

    t_out: np.ndarray
    L: np.ndarray
    B: np.ndarray
    R: np.ndarray
    T: np.ndarray
    specs: list
    config: MCConfig
    model_desc: str

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def column(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.t_out - t)))
        if abs(self.t_out[j] - t) > 1e-12 * max(1.0, t):
            raise KeyError(f"t={t} is not an output time of this ensemble")
        return j

    def spec_index(self, boundary: Boundary, y: float) -> int:
        for k, (b, yy) in enumerate(self.specs):
            if b.ident() == boundary.ident() and yy == y:
                return k
        raise KeyError(f"no crossing data for boundary {boundary.ident()} and y={y}")


class PathEnsemble:
    """A reproducible ensemble of delayed Brownian paths.

    Paths are not stored; :meth:`run` simulates them block by block and keeps
    per-path summaries at the requested output times.
    """

    def __init__(self, model: BernsteinModel, config: MCConfig):
        self.model = model
        self.config = config

    def run(self, t_out: Sequence[float], specs: Sequence = ()) -> EnsembleResult:
        cfg = self.config
        t_out = np.asarray(sorted(set(float(t) for t in t_out)), dtype=float)
        if np.any(t_out < 0) or np.any(t_out > cfg.horizon):
            raise ValueError("output times must lie in [0, horizon]")
        specs = [(b, float(y)) for b, y in specs]
        req = _Request(tuple(t_out.tolist()), tuple(specs))
        n_blocks = -(-cfg.n_paths // cfg.block_size)
        if cfg.workers == 1:
            parts = [_simulate_block(self.model, cfg, k, req) for k in range(n_blocks)]
        else:
            with cf.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                parts = list(pool.map(_simulate_block, [self.model] * n_blocks, [cfg] * n_blocks,
                                      range(n_blocks), [req] * n_blocks))
        cat = {k: np.concatenate([p[k] for p in parts], axis=0) for k in parts[0]}
        return EnsembleResult(t_out, cat["L"], cat["B"], cat["R"], cat["T"], specs, cfg,
                              self.model.describe())


# ---------------------------------------------------------------------------
# estimators

@dataclass
class CrossingLaw:
    """Empirical law of the first crossing time.

    Attributes
    ----------
    samples : ndarray
        Sorted crossing times, ``inf`` for paths not crossed within the horizon.
    y : float
    boundary_id : str
    horizon : float
    metadata : dict
    """

    samples: np.ndarray
    y: float
    boundary_id: str
    horizon: float
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.size

    def cdf(self, t):
        return np.searchsorted(self.samples, t, side="right") / self.n

    def crossed(self, t: float) -> np.ndarray:
        """Finite crossing samples ``<= t``."""
        return self.samples[: np.searchsorted(self.samples, t, side="right")]

    def max_tie_fraction(self) -> float:
        fin = self.samples[np.isfinite(self.samples)]
        if fin.size == 0:
            return 0.0
        _, counts = np.unique(fin, return_counts=True)
        return float(counts.max()) / self.n


def first_crossing(result: EnsembleResult, boundary: Boundary, y: float,
                   min_fraction: float = 0.0) -> CrossingLaw:
    """Crossing law of ``X = y + B(L)`` into ``[phi(t), inf)`` from simulated paths."""
    k = result.spec_index(boundary, y)
    samples = np.sort(result.T[:, k])
    law = CrossingLaw(samples, y, boundary.ident(), result.config.horizon)
    frac = float(np.mean(np.isfinite(samples)))
    law.metadata["crossed_fraction"] = frac
    if frac < min_fraction:
        law.metadata["warning"] = (f"only {frac:.3g} of paths crossed by the horizon "
                                   f"(requested at least {min_fraction})")
        warnings.warn(law.metadata["warning"])
    return law


def killed_density_histogram(result: EnsembleResult, boundary: Boundary, y: float, t: float,
                             edges) -> tuple:
    """Bin masses of the killed process at time ``t``.

    Returns ``(edges, mass, survival)`` where ``mass[i]`` is the fraction of
    paths alive at ``t`` with ``X(t)`` in bin ``i`` and ``survival`` the
    fraction with ``T > t``.
    """
    j = result.column(t)
    k = result.spec_index(boundary, y)
    alive = result.T[:, k] > t
    x = y + result.B[:, j]
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(x[alive], bins=edges)
    return edges, counts / result.n, float(np.mean(alive))


def reflection_estimate(result: EnsembleResult, c: float, t: float):
    """``(lhs, rhs, se)`` for ``P(sup X > c)`` against ``2 P(X(t) > c)`` from ``y = 0``."""
    j = result.column(t)
    up = (result.R[:, j] > c).astype(float)
    tail = (result.B[:, j] > c).astype(float)
    diff = up - 2.0 * tail
    se = float(np.std(diff, ddof=1) / math.sqrt(result.n))
    return float(up.mean()), float(2.0 * tail.mean()), se


def msd_estimate(result: EnsembleResult, boundary: Optional[Boundary], y: float, t_grid=None):
    """Mean square displacement of the killed process, ``E[(X(t) - y)**2; T > t]``.

    Returns ``(t, msd, se)``; with ``boundary=None`` the free process is used.
    """
    t_grid = result.t_out if t_grid is None else np.asarray(t_grid, dtype=float)
    cols = [result.column(t) for t in t_grid]
    vals, ses = [], []
    for t, j in zip(t_grid, cols):
        sq = result.B[:, j] ** 2
        if boundary is not None:
            k = result.spec_index(boundary, y)
            sq = np.where(result.T[:, k] > t, sq, 0.0)
        vals.append(float(sq.mean()))
        ses.append(float(sq.std(ddof=1) / math.sqrt(result.n)))
    return np.asarray(t_grid), np.array(vals), np.array(ses)


def inverse_time_mean(result: EnsembleResult, t: float):
    """``(mean, se)`` of ``L(t)``."""
    v = result.L[:, result.column(t)]
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(result.n))


def subordinator_laplace_estimate(model: BernsteinModel, config: MCConfig, lam: float = 1.0,
                                  s: float = 1.0):
    """``(mean, se)`` of ``exp(-lam sigma(s))`` using the per-path subordinator streams."""
    smp = _Sampler(model, s, config.horizon, config.epsilon_smalljump)
    vals = np.empty(config.n_paths)
    for i in range(config.n_paths):
        gs, _ = _streams(config.seed, i)
        vals[i] = smp.draw(gs, 1)[0]
    e = np.exp(-lam * vals)
    return float(e.mean()), float(e.std(ddof=1) / math.sqrt(e.size))
