"""The delayed Brownian kernel ``p_Phi(t, x; y) = int_0^inf p(s, x; y) f_L(s; t) ds``.

All operational-time integrals are taken in ``u = sqrt(s)``, which turns the
``s**-1/2`` endpoint of the Gaussian into a smooth integrand:

    p_Phi     = sqrt(2/pi) int_0^inf exp(-d**2 / (2 u**2)) f(u**2; t) du
    d_x p_Phi = -2 d / sqrt(2 pi) int_0^inf u**-2 exp(-d**2 / (2 u**2)) f(u**2; t) du
    d_xx      = 2 / sqrt(2 pi) int_0^inf u**-2 (d**2 / u**2 - 1) exp(...) f(u**2; t) du

with ``d = x - y``. The integrals use composite Gauss-Legendre on fixed
geometric panels in ``u``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .bernstein import BernsteinModel, RelativisticStable, Stable
from .densities import (DensityError, DensityTable, relativistic_tilted_derivatives, build_table, chernoff_s_max,
                        relativistic_tilted, stable_series)
from .nonlocal_op import memory_weights

__all__ = [
    "DomainError",
    "DiagonalError",
    "KernelEvaluator",
    "bm_density",
    "p_phi",
    "p_phi_cdf",
    "p_phi_dx",
    "p_phi_dxx",
    "p_phi_dt",
    "diagonal_dx_limit",
    "tail_bound",
    "laplace_oracle_pphi",
    "bessel_quadrature_identity",
    "governing_equation_residual",
]

_SQ2PI = math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the domain of the kernel."""


class DiagonalError(DomainError):
    """Derivative requested on the diagonal ``x = y`` where it does not exist."""


def bm_density(s, x, y):
    """Gaussian transition density ``exp(-(x-y)**2 / (2 s)) / sqrt(2 pi s)``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("Brownian density needs s > 0")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    out = np.exp(-d * d / (2.0 * s)) / np.sqrt(2.0 * math.pi * s)
    return float(out) if out.ndim == 0 else out


def _stable_s_max(beta: float, t: float) -> float:
    # f < exp(-45) beyond this operational time
    z = (45.0 * beta / (1.0 - beta)) ** (1.0 - beta) / beta
    return z * t**beta


@dataclass
class KernelEvaluator:
    """Quadrature engine for ``p_Phi`` and its derivatives.

    Parameters
    ----------
    model : BernsteinModel
    table : DensityTable, optional
        Source of ``f_L``. Stable models default to the exact series and
        relativistic ones to the tilted-stable quadrature; other models need
        a table (see :meth:`from_model`).
    panels : int
        Geometric panels in ``u`` between ``u_lo`` and the upper cut.
    nodes : int
        Gauss-Legendre nodes per panel.
    u_lo : float
        Lower end of the geometric panels (``[0, u_lo]`` is one extra panel).
    """

    model: BernsteinModel
    table: Optional[DensityTable] = None
    panels: int = 48
    nodes: int = 16
    u_lo: float = 1e-4
    _memo: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.table is None and not isinstance(self.model, (Stable, RelativisticStable)):
            raise DensityError("tabulated models need a DensityTable; use KernelEvaluator.from_model")
        self._xg, self._wg = np.polynomial.legendre.leggauss(self.nodes)

    @classmethod
    def from_model(cls, model: BernsteinModel, t_max: float, s_max: float, n_s: int = 121,
                   n_t: int = 200, derivatives: bool = True, **kw) -> "KernelEvaluator":
        """Build the density table on a grid uniform in ``sqrt(s)`` and in ``t``."""
        if isinstance(model, (Stable, RelativisticStable)):
            return cls(model, None, **kw)
        s_grid = np.linspace(0.0, math.sqrt(s_max), n_s) ** 2
        t_grid = np.linspace(t_max / n_t, t_max, n_t)
        table = build_table(model, s_grid, t_grid, derivatives=derivatives)
        return cls(model, table, **kw)

    # -- density access ----------------------------------------------------
    def s_max(self, t: float) -> float:
        if self.table is not None:
            return float(self.table.s_grid[-1])
        if isinstance(self.model, RelativisticStable):
            return chernoff_s_max(self.model, t, tol=1e-20)
        return _stable_s_max(self.model.beta, t)

    def t_range(self):
        if self.table is None:
            return (0.0, math.inf)
        return (float(self.table.t_grid[0]), float(self.table.t_grid[-1]))

    def density(self, s, t: float, which: str = "f"):
        """``f_L`` (``which="f"``), ``d f_L/ds`` (``"ds"``) or ``d f_L/dt`` (``"dt"``) at ``s``."""
        lo, hi = self.t_range()
        if not (lo - 1e-12 <= t <= hi + 1e-12) or t <= 0:
            raise DomainError(f"t={t} outside the table range [{lo}, {hi}]")
        if self.table is not None:
            return self.table.value(s, t, which)
        if isinstance(self.model, RelativisticStable):
            if which == "f":
                return relativistic_tilted(self.model.beta, self.model.m, s, t)
            d_s, d_t = relativistic_tilted_derivatives(self.model, s, t)
            return d_s if which == "ds" else d_t
        return stable_series(self.model.beta, s, t, which)

    def _u_nodes(self, t: float, d_min: float = math.inf):
        u_max = math.sqrt(self.s_max(t))
        # near the diagonal the integrand peaks at u ~ d
        lo = min(self.u_lo, u_max / 10, 0.05 * d_min if d_min > 0 else math.inf)
        n = self.panels + max(0, int(math.ceil(math.log2(self.u_lo / lo) / 2.0)))
        edges = np.concatenate(([0.0], np.geomspace(lo, u_max, n + 1)))
        a, b = edges[:-1, None], edges[1:, None]
        u = (0.5 * (a + b) + 0.5 * (b - a) * self._xg).ravel()
        w = (0.5 * (b - a) * self._wg).ravel()
        return u, w

    def _integrate(self, kind: str, t: float, d, which: str = "f"):
        d = np.atleast_1d(np.abs(np.asarray(d, dtype=float)))
        out = np.empty(d.shape)
        missing = []
        with self._lock:
            for i, dv in enumerate(d):
                v = self._memo.get((kind, which, float(t), float(dv)))
                if v is None:
                    missing.append(i)
                else:
                    out[i] = v
        if missing:
            u, w = self._u_nodes(t, float(d[missing].min()))
            f = np.asarray(self.density(u * u, t, which), dtype=float)
            dm = d[missing][:, None]
            g = np.exp(-dm * dm / (2.0 * u * u))
            if kind == "p":
                vals = math.sqrt(2.0 / math.pi) * (g * f) @ w
            elif kind == "dx":
                vals = -2.0 * d[missing] / _SQ2PI * ((g / (u * u)) * f) @ w
            elif kind == "sf":
                # P(X(t) - y > d) for d >= 0
                vals = ((special.ndtr(-dm / u) * f * 2.0 * u) @ w)
            elif kind == "dxx":
                vals = 2.0 / _SQ2PI * ((g / (u * u)) * (dm * dm / (u * u) - 1.0) * f) @ w
            else:
                raise ValueError(kind)
            out[missing] = vals
            with self._lock:
                for i, v in zip(missing, vals):
                    self._memo[(kind, which, float(t), float(d[i]))] = float(v)
        return out

    def clear(self):
        with self._lock:
            self._memo.clear()


def _scalar(a):
    return float(a[0]) if a.size == 1 else a


def p_phi(ev: KernelEvaluator, t: float, x, y=0.0):
    """Delayed-BM transition density (vectorised in ``x``)."""
    d = np.asarray(x, dtype=float) - y
    return _scalar(ev._integrate("p", t, d))


def p_phi_cdf(ev: KernelEvaluator, t: float, x, y=0.0):
    """``P_y(X(t) <= x)``, computed from the upper tail on each side for accuracy."""
    d = np.atleast_1d(np.asarray(x, dtype=float) - y)
    sf = ev._integrate("sf", t, d)
    return _scalar(np.where(d < 0, sf, 1.0 - sf))


def _check_off_diagonal(d, what):
    if np.any(np.abs(d) == 0.0):
        raise DiagonalError(f"{what} does not exist on the diagonal x = y; use diagonal_dx_limit")


def p_phi_dx(ev: KernelEvaluator, t: float, x, y=0.0):
    """``d p_Phi / d x``, odd in ``x - y``."""
    d = np.atleast_1d(np.asarray(x, dtype=float) - y)
    _check_off_diagonal(d, "d/dx")
    return _scalar(np.sign(d) * ev._integrate("dx", t, d))


def p_phi_dxx(ev: KernelEvaluator, t: float, x, y=0.0):
    """``d^2 p_Phi / d x^2``."""
    d = np.atleast_1d(np.asarray(x, dtype=float) - y)
    _check_off_diagonal(d, "d2/dx2")
    return _scalar(ev._integrate("dxx", t, d))


def p_phi_dt(ev: KernelEvaluator, t: float, x, y=0.0):
    """``d p_Phi / d t`` from the time derivative of ``f_L``."""
    d = np.atleast_1d(np.asarray(x, dtype=float) - y)
    _check_off_diagonal(d, "d/dt")
    return _scalar(ev._integrate("p", t, d, which="dt"))


def diagonal_dx_limit(ev: KernelEvaluator, t: float, side: int) -> float:
    """One-sided limit of ``d p_Phi / d x`` at ``x -> y``: ``-side * nubar(t)``.

    Near ``d = 0`` the integrand concentrates at ``s ~ d**2`` where
    ``f_L(s; t) -> nubar(t)``, and ``int u**-2 exp(-d**2/(2u**2)) du = sqrt(pi/2)/d``.
    """
    if side not in (-1, 1):
        raise ValueError("side must be +1 or -1")
    return -side * float(ev.model.levy_tail(t))


def tail_bound(x, y=0.0):
    """Uniform-in-``t`` bound ``1 / (sqrt(2 pi e) |x - y|)``."""
    d = np.abs(np.asarray(x, dtype=float) - y)
    return 1.0 / (math.sqrt(2.0 * math.pi * math.e) * d)


def laplace_oracle_pphi(ev: KernelEvaluator, lam: float, x: float, y: float = 0.0,
                        t_max: Optional[float] = None):
    """``(numeric, analytic)`` Laplace transforms in ``t`` of ``p_Phi(., x; y)``.

    ``analytic = (Phi(lam)/lam) exp(-|x-y| sqrt(2 Phi)) / sqrt(2 Phi)``.
    """
    d = abs(x - y)
    if d == 0:
        raise DiagonalError("the Laplace oracle needs x != y")
    if t_max is None:
        t_max = math.log(1e10) / lam
    lo, hi = ev.t_range()
    if t_max > hi:
        raise DensityError(f"t_max={t_max:g} exceeds the table range {hi:g}; extend the table")

    def integrand(t):
        if t <= lo:
            return 0.0
        return math.exp(-lam * t) * float(p_phi(ev, t, d))

    numeric, _ = integrate.quad(integrand, 0.0, t_max, limit=200, epsabs=1e-12, epsrel=1e-9,
                                points=[min(1.0, t_max / 2)])
    ph = float(ev.model.phi(lam))
    r = math.sqrt(2.0 * ph)
    analytic = ph / lam * math.exp(-d * r) / r
    return numeric, analytic


def bessel_quadrature_identity(z: float, d: float):
    """``(numeric, analytic)`` for ``int_0^inf s**-1/2 exp(-d**2/(2s) - z s) ds = sqrt(pi/z) exp(-d sqrt(2z))``.

    The numeric side uses the same ``u = sqrt(s)`` substitution and
    geometric Gauss-Legendre panels as :class:`KernelEvaluator`.
    """
    if not (z > 0 and d > 0):
        raise DomainError("need z > 0 and d > 0")
    u_peak = (d * d / (2.0 * z)) ** 0.25
    u_max = max(u_peak, 1.0) * 10.0 + math.sqrt(60.0 / z)
    xg, wg = np.polynomial.legendre.leggauss(24)
    edges = np.concatenate(([0.0], np.geomspace(1e-3 * u_peak, u_max, 80)))
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    vals = 2.0 * np.exp(-d * d / (2.0 * u * u) - z * u * u)
    numeric = math.fsum(vals * w)
    analytic = math.sqrt(math.pi / z) * math.exp(-d * math.sqrt(2.0 * z))
    return numeric, analytic


@dataclass
class ResidualReport:
    """Residuals of the non-local heat equation on a ``(t, d)`` grid.

    Attributes
    ----------
    t : ndarray
    d : ndarray
    residual : ndarray, shape ``(len(t), len(d))``
    scale : float
        ``max |0.5 d_xx p_Phi|`` over the grid.
    dt : float
        Time step of the non-local derivative.
    """

    t: np.ndarray
    d: np.ndarray
    residual: np.ndarray
    scale: float
    dt: float

    @property
    def relative(self) -> float:
        return float(np.max(np.abs(self.residual)) / self.scale)


def governing_equation_residual(ev: KernelEvaluator, t_eval, d_values, dt: float,
                                y: float = 0.0) -> ResidualReport:
    """Residual ``D_t p_Phi - 0.5 d_xx p_Phi`` at times ``t_eval`` (multiples of ``dt``).

    ``D_t`` is the non-local derivative applied to ``p_Phi`` sampled on
    ``t_j = j dt`` from ``t = 0`` (where ``p_Phi = 0`` off the diagonal).
    """
    d = np.asarray(d_values, dtype=float)
    _check_off_diagonal(d, "the residual")
    t_eval = np.asarray(t_eval, dtype=float)
    k_eval = np.rint(t_eval / dt).astype(int)
    if np.any(np.abs(k_eval * dt - t_eval) > 1e-9 * np.maximum(t_eval, 1.0)) or np.any(k_eval < 1):
        raise ValueError("evaluation times must be positive multiples of dt")
    n = int(k_eval.max())
    grid = dt * np.arange(n + 1)
    samples = np.zeros((n + 1, d.size))
    lo, _ = ev.t_range()
    for j in range(1, n + 1):
        if grid[j] >= lo:
            samples[j] = ev._integrate("p", grid[j], d)
    w = memory_weights(ev.model, dt, n)
    slopes = np.diff(samples, axis=0) / dt
    res = np.empty((k_eval.size, d.size))
    dxx = np.empty_like(res)
    for i, k in enumerate(k_eval):
        D = w[:k][::-1] @ slopes[:k]
        dxx[i] = ev._integrate("dxx", grid[k], d)
        res[i] = D - 0.5 * dxx[i]
    scale = float(np.max(np.abs(0.5 * dxx)))
    return ResidualReport(t_eval, d, res, scale, dt)
