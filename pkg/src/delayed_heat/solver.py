"""Killed densities and the Dirichlet problem ``D_t u = 0.5 u_xx`` below a moving boundary.

Two independent routes produce the solution ``u(t, x)``:

* :func:`fd_solve`, an implicit finite-difference scheme whose time
  derivative uses the product-integration memory weights of
  :mod:`delayed_heat.nonlocal_op`;
* :func:`solve_via_representation`, the integral of the killed density
  ``q(t, x; y) = p_Phi(t, x; y) - E[p_Phi(t - T, x; phi(T)); T <= t]`` against
  the initial datum, with the crossing law ``T`` from Monte Carlo.

The expectation over ``T`` is taken by spreading each crossing sample onto a
grid in ``tau = t - T`` with linear weights, so the kernel is evaluated only
on that grid.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .bernstein import BernsteinModel, Stable
from .boundary import Boundary, ContractError
from .heatkernel import KernelEvaluator, p_phi, p_phi_cdf
from .mc import CrossingLaw, EnsembleResult, MCConfig, PathEnsemble, first_crossing
from .nonlocal_op import memory_weights

__all__ = [
    "Bump",
    "SolutionField",
    "SolverError",
    "default_x_min",
    "fd_solve",
    "swept_kink_source",
    "dynkin_hunt_q",
    "dynkin_hunt_bin_masses",
    "solve_via_representation",
    "MaxPrincipleReport",
    "max_principle_check",
    "ContinuityReport",
    "data_continuity_check",
    "y_continuity_smoke",
]


class SolverError(RuntimeError):
    """Invalid solver input or a failed linear solve."""


@dataclass(frozen=True)
class Bump:
    """Compactly supported initial datum ``height * shape((x - center) / width)`` on ``|x - center| < width``.

    ``shape`` is ``"cosine"`` (``(1 + cos(pi r)) / 2``) or ``"triangle"`` (``1 - |r|``).
    """

    center: float
    width: float
    height: float = 1.0
    shape: str = "cosine"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bump width must be positive")
        if self.shape not in ("cosine", "triangle"):
            raise ValueError("shape must be 'cosine' or 'triangle'")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.clip(np.abs(x - self.center) / self.width, 0.0, 1.0)
        if self.shape == "cosine":
            v = 0.5 * (1.0 + np.cos(math.pi * r))
        else:
            v = 1.0 - r
        return self.height * np.where(np.abs(x - self.center) < self.width, v, 0.0)

    @property
    def support(self):
        return (self.center - self.width, self.center + self.width)

    def ident(self) -> str:
        return f"bump({self.shape},c={self.center},w={self.width},h={self.height})"

    def __add__(self, other):
        return SumDatum((self, other))

    def scaled(self, c: float) -> "Bump":
        return Bump(self.center, self.width, self.height * c, self.shape)


@dataclass(frozen=True)
class SumDatum:
    """Sum of compactly supported data."""

    parts: tuple

    def __call__(self, x):
        return sum(p(x) for p in self.parts)

    @property
    def support(self):
        return (min(p.support[0] for p in self.parts), max(p.support[1] for p in self.parts))

    def ident(self) -> str:
        return "+".join(p.ident() for p in self.parts)

    def scaled(self, c):
        return SumDatum(tuple(p.scaled(c) for p in self.parts))


@dataclass
class SolutionField:
    """Solution values ``u[i, j]`` at ``(t_grid[i], x_grid[j])``.

    Attributes
    ----------
    t_grid, x_grid : ndarray
    values : ndarray
    boundary_id, datum_id, route : str
    se : ndarray, optional
        Monte Carlo standard error per entry (representation route).
    meta : dict
    """

    t_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray
    boundary_id: str
    datum_id: str
    route: str
    se: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def to_csv(self, path, extra: Optional[dict] = None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "u"] + (["se"] if self.se is not None else []))
            for i, t in enumerate(self.t_grid):
                for j, x in enumerate(self.x_grid):
                    row = [repr(float(t)), repr(float(x)), repr(float(self.values[i, j]))]
                    if self.se is not None:
                        row.append(repr(float(self.se[i, j])))
                    w.writerow(row)
        meta = {"boundary": self.boundary_id, "datum": self.datum_id, "route": self.route,
                "t_grid": self.t_grid.tolist(), "x_grid": self.x_grid.tolist(), **self.meta}
        if extra:
            meta.update(extra)
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)


def default_x_min(model: BernsteinModel, boundary: Boundary, horizon: float) -> float:
    """``phi(0) - 12 sqrt(2 U(T))``: twelve free-case standard deviations below the boundary."""
    from .msd import potential

    U = float(potential(model, horizon))
    return float(boundary.eval(0.0)) - 12.0 * math.sqrt(2.0 * U)


def _check_datum(f, boundary: Boundary):
    lo, hi = f.support
    if hi >= float(boundary.eval(0.0)):
        raise ContractError(f"initial datum support reaches {hi} >= phi(0) = {float(boundary.eval(0.0))}")


def fd_solve(model: BernsteinModel, boundary: Boundary, f, T: float, n_t: int, dx: float,
             x_min: Optional[float] = None, x_max: Optional[float] = None,
             source=None) -> SolutionField:
    """Implicit scheme for ``D_t u = 0.5 u_xx + source`` with ``u = 0`` on ``x >= phi(t)`` and at ``x_min``.

    ``source(t, x)`` is an optional forcing (vectorised in ``x``); the default is none.

    At step ``k`` the unknown ``u_k`` solves
    ``(w_0/dt) u_k - 0.5 Delta_h u_k = (1/dt) sum_j c_j u_j`` where the history
    coefficients ``c_j`` are differences of the (decreasing) memory weights
    and hence nonnegative; with the M-matrix on the left this gives a discrete
    maximum principle.
    """
    rep = boundary.validate(T)
    if not (rep.A2a and rep.A2b):
        raise ContractError("boundary fails validation: " + "; ".join(rep.messages))
    _check_datum(f, boundary)
    if x_min is None:
        x_min = default_x_min(model, boundary, T)
    if x_max is None:
        top = float(np.max(boundary.eval(np.linspace(0.0, T, 257))))
        x_max = top + 2.0 * dx
    n_x = int(math.ceil((x_max - x_min) / dx)) + 1
    x = x_min + dx * np.arange(n_x)
    dt = T / n_t
    t = dt * np.arange(n_t + 1)
    w = memory_weights(model, dt, n_t)
    if np.any(np.diff(w) > 1e-15 * w[0]):
        raise SolverError("memory weights are not decreasing; the scheme loses its maximum principle")
    u = np.zeros((n_t + 1, n_x))
    phi0 = float(boundary.eval(0.0))
    u[0] = np.where(x < phi0, f(x), 0.0)
    u[0, 0] = 0.0
    du = np.zeros((n_t, n_x))  # du[j] = u[j+1] - u[j]
    lam = 0.5 / (dx * dx)
    for k in range(1, n_t + 1):
        phik = float(boundary.eval(t[k]))
        # active unknowns 1..m-1 (x_0 pinned, x_j >= phi pinned)
        m = int(np.searchsorted(x, phik, side="left"))
        hist = (w[0] / dt) * u[k - 1]
        if k >= 2:
            hist = hist - (w[1:k][::-1] @ du[: k - 1]) / dt
        if source is not None:
            hist = hist + np.asarray(source(t[k], x), dtype=float)
        n_a = m - 1
        if n_a > 0:
            diag = np.full(n_a, w[0] / dt + 2.0 * lam)
            off = np.full(n_a, -lam)
            ab = np.vstack((off, diag, off))
            ab[0, 0] = 0.0
            ab[2, -1] = 0.0
            try:
                u[k, 1:m] = linalg.solve_banded((1, 1), ab, hist[1:m])
            except linalg.LinAlgError as exc:
                raise SolverError(f"tridiagonal solve failed at step {k}") from exc
        du[k - 1] = u[k] - u[k - 1]
    return SolutionField(t, x, u, boundary.ident(), getattr(f, "ident", lambda: "f")(), "fd",
                         meta={"dt": dt, "dx": dx, "x_min": x_min})


def swept_kink_source(model: BernsteinModel, boundary: Boundary, times, weights, horizon: float,
                      n_bins: int = 40):
    """Forcing ``-nubar(t - w0) rho(w0) / phi'(w0)`` with ``w0 = phi^{-1}(x)`` on ``phi(0) < x < phi(t)``.

    ``rho`` is the density of the weighted crossing times (histogram with
    ``n_bins`` bins on ``[0, horizon]``). The killed delayed Brownian density
    obeys ``D_t u = 0.5 u_xx`` plus this term on the region swept by a rising
    boundary: the kernel ``p_Phi(t - T, x; phi(T))`` keeps a slope jump of
    ``-2 nubar`` on its diagonal, which ``u_xx`` sees but ``D_t`` does not.
    Passing it to :func:`fd_solve` reproduces the representation route.
    """
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    ok = np.isfinite(times)
    edges = np.linspace(0.0, horizon, n_bins + 1)
    hist, _ = np.histogram(times[ok], edges, weights=weights[ok])
    rho = hist / np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    phi0 = float(boundary.eval(0.0))
    h = 1e-6 * max(horizon, 1.0)

    def source(t, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        sel = (x > phi0) & (x < float(boundary.eval(t)))
        for i in np.nonzero(sel)[0]:
            w0 = boundary.inverse(float(x[i]))
            if w0 is None or w0 >= t:
                continue
            slope = (float(boundary.eval(w0 + h)) - float(boundary.eval(max(w0 - h, 0.0)))) / (w0 + h - max(w0 - h, 0.0))
            if slope > 0:
                out[i] = -float(model.levy_tail(t - w0)) * float(np.interp(w0, mids, rho)) / slope
        return out

    return source


# ---------------------------------------------------------------------------
# representation route

def _tau_grid(t: float, n: int = 160, tau_min: float = 1e-7) -> np.ndarray:
    g = np.concatenate(([0.0], np.geomspace(tau_min, t, n), np.linspace(0.0, t, n)))
    return np.unique(g)


def _spread(tau_samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Linear-interpolation weights of samples onto ``grid`` (summed, not normalised)."""
    tau = np.clip(tau_samples, grid[0], grid[-1])
    j = np.clip(np.searchsorted(grid, tau, side="right") - 1, 0, grid.size - 2)
    frac = (tau - grid[j]) / (grid[j + 1] - grid[j])
    W = np.bincount(j, weights=1.0 - frac, minlength=grid.size)
    W += np.bincount(j + 1, weights=frac, minlength=grid.size)
    return W


def _kernel_on_tau(ev: KernelEvaluator, boundary: Boundary, t: float, grid: np.ndarray, x,
                   kind: str = "p") -> np.ndarray:
    """``p_Phi(tau, x; phi(t - tau))`` (or its CDF) for each ``tau`` in ``grid`` (row) and ``x`` (column)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((grid.size, x.size))
    for g, tau in enumerate(grid):
        start = float(boundary.eval(t - tau))
        if tau <= 0.0:
            d = x - start
            if kind == "p":
                out[g] = 0.0
            else:
                out[g] = np.where(d > 0, 1.0, np.where(d == 0, 0.5, 0.0))
            continue
        if kind == "p":
            out[g] = p_phi(ev, tau, x, start)
        else:
            out[g] = p_phi_cdf(ev, tau, x, start)
    return out


def _check_law(law: CrossingLaw, boundary: Boundary, y: float):
    if law.boundary_id != boundary.ident() or law.y != y:
        raise ContractError(f"crossing law is for ({law.boundary_id}, y={law.y}), "
                            f"not ({boundary.ident()}, y={y})")


def dynkin_hunt_q(ev: KernelEvaluator, law: CrossingLaw, boundary: Boundary, t: float, x, y: float):
    """Killed density ``q(t, x; y)`` from the free kernel and an empirical crossing law.

    Returns ``(q, clamped, se)``: the value clamped at 0, the largest clamped
    magnitude and the Monte Carlo standard error.
    """
    _check_law(law, boundary, y)
    if y >= float(boundary.eval(0.0)):
        raise ContractError("start point must lie below phi(0)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grid = _tau_grid(t)
    K = _kernel_on_tau(ev, boundary, t, grid, x)
    hits = law.crossed(t)
    W = _spread(t - hits, grid) / law.n
    second = W @ K
    # per-path values for the standard error
    per = _per_path(hits, t, grid, K, law.n)
    se = np.sqrt(np.maximum(per - second**2, 0.0) / max(law.n - 1, 1))
    raw = p_phi(ev, t, x, y) - second
    q = np.maximum(raw, 0.0)
    clamped = float(np.max(np.maximum(-raw, 0.0)))
    if q.size == 1:
        return float(q[0]), clamped, float(se[0])
    return q, clamped, se


def _per_path(hits, t, grid, K, n):
    """Second moment of the per-path kernel contribution (0 for uncrossed paths)."""
    if hits.size == 0:
        return np.zeros(K.shape[1])
    tau = np.clip(t - hits, grid[0], grid[-1])
    j = np.clip(np.searchsorted(grid, tau, side="right") - 1, 0, grid.size - 2)
    frac = ((tau - grid[j]) / (grid[j + 1] - grid[j]))[:, None]
    vals = (1.0 - frac) * K[j] + frac * K[j + 1]
    return (vals**2).sum(axis=0) / n


def dynkin_hunt_bin_masses(ev: KernelEvaluator, law: CrossingLaw, boundary: Boundary, t: float,
                           edges, y: float, tau_points: int = 160):
    """Bin masses ``int_bin q(t, x; y) dx`` from kernel CDFs.

    Returns ``(mass, quad_err)``; the quadrature error compares two
    ``tau`` resolutions.
    """
    _check_law(law, boundary, y)
    edges = np.asarray(edges, dtype=float)
    free = np.diff(p_phi_cdf(ev, t, edges, y))
    hits = law.crossed(t)
    out = []
    for n_tau in (tau_points // 2, tau_points):
        grid = _tau_grid(t, n_tau)
        K = np.diff(_kernel_on_tau(ev, boundary, t, grid, edges, kind="cdf"), axis=1)
        W = _spread(t - hits, grid) / law.n
        out.append(free - W @ K)
    return out[1], np.abs(out[1] - out[0])


def _y_nodes(f, n: int):
    lo, hi = f.support
    xg, wg = np.polynomial.legendre.leggauss(n)
    y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
    return y, 0.5 * (hi - lo) * wg


def solve_via_representation(ev: KernelEvaluator, boundary: Boundary, f, t_grid, x_grid,
                             config: MCConfig, n_y: int = 24, ensemble: Optional[EnsembleResult] = None,
                             se_paths: int = 4000) -> SolutionField:
    """``u(t, x) = int q(t, x; y) f(y) dy`` with Gauss-Legendre nodes in ``y``.

    One Monte Carlo ensemble serves all ``y`` nodes: the same Brownian paths
    are shifted to each start point (spatial homogeneity), and crossing times
    are recorded per start point. ``q`` is clamped at 0 per node before the
    ``y`` integral; the clamped magnitude is reported in ``meta``.
    """
    _check_datum(f, boundary)
    t_grid = np.asarray(t_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    y_nodes, y_w = _y_nodes(f, n_y)
    fy = f(y_nodes)
    specs = [(boundary, float(y)) for y in y_nodes]
    if ensemble is None:
        ensemble = PathEnsemble(ev.model, config).run(t_grid[t_grid > 0], specs)
    laws = [first_crossing(ensemble, boundary, float(y)) for y in y_nodes]
    n = ensemble.n
    u = np.zeros((t_grid.size, x_grid.size))
    se = np.zeros_like(u)
    clamped = 0.0
    sub = min(se_paths, n)
    for i, t in enumerate(t_grid):
        if t <= 0:
            u[i] = np.where(x_grid < float(boundary.eval(0.0)), f(x_grid), 0.0)
            continue
        grid = _tau_grid(t)
        K = _kernel_on_tau(ev, boundary, t, grid, x_grid)
        contrib = np.zeros((sub, x_grid.size))
        for k, y in enumerate(y_nodes):
            if fy[k] == 0.0:
                continue
            hits = laws[k].crossed(t)
            W = _spread(t - hits, grid) / n
            raw = p_phi(ev, t, x_grid, y) - W @ K
            clamped = max(clamped, float(np.max(np.maximum(-raw, 0.0))))
            u[i] += y_w[k] * fy[k] * np.maximum(raw, 0.0)
            # per-path contributions on the leading paths for the standard error
            Tk = ensemble.T[:sub, ensemble.spec_index(boundary, float(y))]
            m = Tk <= t
            if np.any(m):
                tau = np.clip(t - Tk[m], grid[0], grid[-1])
                j = np.clip(np.searchsorted(grid, tau, side="right") - 1, 0, grid.size - 2)
                fr = ((tau - grid[j]) / (grid[j + 1] - grid[j]))[:, None]
                contrib[m] += y_w[k] * fy[k] * ((1.0 - fr) * K[j] + fr * K[j + 1])
        se[i] = contrib.std(axis=0, ddof=1) / math.sqrt(n)
    return SolutionField(t_grid, x_grid, u, boundary.ident(), getattr(f, "ident", lambda: "f")(),
                         "representation", se=se,
                         meta={"n_paths": n, "n_y": n_y, "max_clamped": clamped, "seed": config.seed})


# ---------------------------------------------------------------------------
# property checks

@dataclass
class MaxPrincipleReport:
    """Interior extremes against the parabolic-boundary extremes.

    Attributes
    ----------
    interior_max, interior_min : float
    boundary_max, boundary_min : float
        Over the initial row and the Dirichlet zeros.
    tol : float
    ok : bool
    violations : list of (t, x, value)
    """

    interior_max: float
    interior_min: float
    boundary_max: float
    boundary_min: float
    tol: float
    ok: bool
    violations: list


def max_principle_check(field: SolutionField, boundary: Boundary, rel_tol: float = 1e-6,
                        abs_tol: float = 0.0) -> MaxPrincipleReport:
    """Check ``min_parabolic - tol <= u <= max_parabolic + tol`` on the interior nodes."""
    u = field.values
    T, X = np.meshgrid(field.t_grid, field.x_grid, indexing="ij")
    interior = (T > 0) & (X < boundary.eval(T)) & (X > field.x_grid[0])
    init = u[0][field.x_grid < float(boundary.eval(0.0))]
    # Dirichlet zeros are part of the parabolic boundary
    bmax = max(float(init.max()) if init.size else 0.0, 0.0)
    bmin = min(float(init.min()) if init.size else 0.0, 0.0)
    scale = max(abs(bmax), abs(bmin), 1e-300)
    tol = rel_tol * scale + abs_tol
    vals = u[interior]
    imax = float(vals.max()) if vals.size else 0.0
    imin = float(vals.min()) if vals.size else 0.0
    bad = interior & ((u > bmax + tol) | (u < bmin - tol))
    viol = [(float(T[i, j]), float(X[i, j]), float(u[i, j])) for i, j in zip(*np.nonzero(bad))][:20]
    return MaxPrincipleReport(imax, imin, bmax, bmin, tol, not np.any(bad), viol)


@dataclass
class ContinuityReport:
    sup_u: float
    sup_f: float
    tol: float
    ok: bool


def data_continuity_check(field1: SolutionField, field2: SolutionField, f1, f2,
                          tol: float = 1e-6) -> ContinuityReport:
    """``sup |u1 - u2| <= sup_{x < phi(0)} |f1 - f2| + tol`` on matching grids."""
    if field1.values.shape != field2.values.shape or field1.boundary_id != field2.boundary_id:
        raise ContractError("fields must share grids and boundary")
    x = field1.x_grid
    sup_f = float(np.max(np.abs(f1(x) - f2(x))))
    sup_u = float(np.max(np.abs(field1.values - field2.values)))
    return ContinuityReport(sup_u, sup_f, tol, sup_u <= sup_f + tol)


def y_continuity_smoke(ev: KernelEvaluator, result: EnsembleResult, boundary: Boundary, t: float,
                       x: float, y_grid) -> dict:
    """Largest jump of ``q(t, x; .)`` across adjacent ``y`` nodes against the noise level."""
    qs, ses = [], []
    for y in y_grid:
        law = first_crossing(result, boundary, float(y))
        q, _, se = dynkin_hunt_q(ev, law, boundary, t, x, float(y))
        qs.append(q)
        ses.append(se)
    qs, ses = np.array(qs), np.array(ses)
    jumps = np.abs(np.diff(qs))
    noise = np.sqrt(ses[1:] ** 2 + ses[:-1] ** 2)
    return {"q": qs.tolist(), "max_jump": float(jumps.max()) if jumps.size else 0.0,
            "noise": float(noise.max()) if noise.size else 0.0,
            "flagged": bool(np.any(jumps > 4.0 * noise + 1e-12))}
