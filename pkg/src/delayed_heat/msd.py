"""Potential measure of the subordinator and mean-square-displacement asymptotics.

``U(t) = E L(t)`` solves the renewal identity ``int_0^t nubar(t - w) dU(w) = 1``,
i.e. the non-local derivative of ``U`` is identically 1. :func:`potential_table`
marches that identity with the product-integration weights;
:func:`potential_density` evaluates ``u = int_0^inf g(t; s) ds`` by quadrature
of the subordinator density as an independent route.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate

from .bernstein import BernsteinModel, Stable
from .boundary import Boundary
from .densities import subordinator_density, subordinator_panels
from .mc import CrossingLaw
from .nonlocal_op import memory_weights

__all__ = [
    "PotentialTable",
    "potential_table",
    "potential_density",
    "potential",
    "potential_laplace_check",
    "msd_formula",
    "asymptotic_bounds",
    "ScalingReport",
    "scaling_verdict",
    "write_msd_csv",
]


@dataclass(frozen=True)
class PotentialTable:
    """``U`` and its density on a uniform grid from 0.

    Attributes
    ----------
    t_grid : ndarray
    u_phi : ndarray
        Potential density at the grid midpoints (slopes of ``U``), length ``n``.
    U : ndarray
        Potential measure ``U(t)``, nondecreasing with ``U(0) = 0``.
    """

    t_grid: np.ndarray
    u_phi: np.ndarray
    U: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_grid[-1] * (1 + 1e-12)):
            raise ValueError(f"t beyond the potential table range {self.t_grid[-1]}")
        return np.interp(t, self.t_grid, self.U)


def potential_table(model: BernsteinModel, t_max: float, n: int = 20000) -> PotentialTable:
    """Solve ``sum_{j<k} (U_{j+1} - U_j)/dt w_{k-1-j} = 1`` step by step."""
    dt = t_max / n
    w = memory_weights(model, dt, n)
    slopes = np.empty(n)
    for k in range(n):
        hist = float(w[1 : k + 1][::-1] @ slopes[:k]) if k else 0.0
        slopes[k] = (1.0 - hist) / w[0]
    U = np.concatenate(([0.0], np.cumsum(slopes) * dt))
    return PotentialTable(dt * np.arange(n + 1), slopes, U)


@lru_cache(maxsize=16)
def _cached_table(model: BernsteinModel, t_max: float) -> PotentialTable:
    return potential_table(model, t_max)


def potential(model: BernsteinModel, t):
    """``U(t)``; closed form ``t**beta / Gamma(1 + beta)`` for the stable kind."""
    t = np.asarray(t, dtype=float)
    if isinstance(model, Stable):
        out = np.where(t > 0, np.maximum(t, 0.0) ** model.beta, 0.0) / math.gamma(1.0 + model.beta)
    else:
        t_max = 2.0 ** math.ceil(math.log2(max(float(np.max(t)), 1e-3)))
        out = _cached_table(model, t_max)(t)
    return float(out) if np.ndim(out) == 0 else out


def potential_density(model: BernsteinModel, t: float, closed_form: bool = True) -> float:
    """``u(t) = int_0^inf g(t; s) ds``.

    The stable kind has the closed form ``t**(beta-1) / Gamma(beta)``; pass
    ``closed_form=False`` to force the quadrature of the Fourier-inverted
    subordinator density.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if closed_form and isinstance(model, Stable):
        return t ** (model.beta - 1.0) / math.gamma(model.beta)

    def g(s):
        return subordinator_density(model, t, s, eps=1e-10)

    # for small s the inversion is too costly; there g(t; s) = s nu(t) + O(s**2)
    scale = 1.0 / float(model.phi(1.0 / t))
    s0 = scale * 1e-3
    while subordinator_panels(model, t, s0, eps=1e-10) > 100_000:
        s0 *= 1.5
    head = 0.5 * s0 * s0 * float(model.levy_density(t))
    pts = np.unique(np.concatenate(([s0], scale * np.array([0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0]))))
    pts = pts[pts >= s0]
    total = head
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(g, a, b, limit=100, epsabs=1e-12, epsrel=1e-9)
        total += val
    return max(total, 0.0)


def potential_laplace_check(model: BernsteinModel, lam: float, t_max: Optional[float] = None):
    """``(numeric, analytic)`` for ``int e^{-lam t} u(t) dt = 1/Phi(lam)``, numeric from the table."""
    if t_max is None:
        t_max = math.log(1e12) / lam
    tab = potential_table(model, t_max, n=40000)
    # integrate by parts against dU: int e^{-lam t} dU(t)
    e = np.exp(-lam * tab.t_grid)
    numeric = float(np.sum(0.5 * (e[1:] + e[:-1]) * np.diff(tab.U)))
    return numeric, 1.0 / float(model.phi(lam))


def msd_formula(model: BernsteinModel, boundary: Boundary, law: CrossingLaw, t):
    """``U(t) - E[(phi(T)**2 + U(t - T)); T <= t]`` from an empirical crossing law started at 0."""
    if law.y != 0.0 or law.boundary_id != boundary.ident():
        raise ValueError("crossing law must be for this boundary and start point 0")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.size)
    for i, tv in enumerate(t_arr):
        w = law.crossed(tv)
        term = (np.asarray(boundary.eval(w), dtype=float) ** 2 + potential(model, tv - w)).sum() / law.n
        out[i] = potential(model, tv) - term
    return float(out[0]) if np.ndim(t) == 0 else out


def asymptotic_bounds(gamma: float):
    """``(gamma / (1 + gamma) / Gamma(1 + gamma), 1 / Gamma(1 + gamma))``."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    up = 1.0 / math.gamma(1.0 + gamma)
    return gamma / (1.0 + gamma) * up, up


@dataclass
class ScalingReport:
    """Band containment of ``Phi(1/t) MSD(t)`` and the log-log slope.

    Attributes
    ----------
    t, msd, se, scaled : ndarray
    lower, upper : float
        Band after slack.
    in_band : bool
    slope, slope_se : float
        Log-log regression slope of ``MSD`` on the largest decade.
    slope_ok : bool
        ``|slope - gamma| <= slope_tol``.
    verdict : str
        ``"pass"``, ``"fail"`` or ``"inconclusive"``.
    """

    t: np.ndarray
    msd: np.ndarray
    se: np.ndarray
    scaled: np.ndarray
    lower: float
    upper: float
    in_band: bool
    slope: float
    slope_se: float
    slope_ok: bool
    verdict: str
    notes: list = field(default_factory=list)


def _fit_slope(t, v, se):
    lt, lv = np.log(t), np.log(v)
    A = np.vstack((np.ones_like(lt), lt)).T
    coef, res, *_ = np.linalg.lstsq(A, lv, rcond=None)
    # slope uncertainty from the MC errors (delta method)
    sig = se / v
    cov = np.linalg.inv(A.T @ A) @ (A.T * sig**2) @ A @ np.linalg.inv(A.T @ A)
    return float(coef[1]), float(math.sqrt(max(cov[1, 1], 0.0)))


def scaling_verdict(model: BernsteinModel, t, msd, se, gamma: Optional[float] = None,
                    slack: float = 0.1, slope_tol: float = 0.05) -> ScalingReport:
    """Check ``Phi(1/t) MSD(t)`` against the asymptotic band over the largest decade of ``t``.

    The band is widened by ``slack`` plus three relative standard errors; the
    verdict also requires the log-log slope within ``slope_tol`` of ``gamma``.
    """
    t, msd, se = (np.asarray(a, dtype=float) for a in (t, msd, se))
    notes = []
    if gamma is None:
        gamma = float(model.gamma0)
    lo, hi = asymptotic_bounds(gamma)
    sel = t >= t.max() / 10.0
    if t.max() / t.min() < 10.0 - 1e-9 or sel.sum() < 3:
        return ScalingReport(t, msd, se, msd * model.phi(1.0 / t), lo, hi, False, float("nan"),
                             float("nan"), False, "inconclusive", ["need a decade of t with >= 3 points"])
    scaled = msd * np.asarray(model.phi(1.0 / t), dtype=float)
    rel = se[sel] / np.maximum(msd[sel], 1e-300)
    mc = 3.0 * float(rel.max())
    lower, upper = lo * (1.0 - slack - mc), hi * (1.0 + slack + mc)
    inside = bool(np.all((scaled[sel] >= lower) & (scaled[sel] <= upper)))
    slope, slope_se = _fit_slope(t[sel], msd[sel], se[sel])
    slope_ok = abs(slope - gamma) <= slope_tol
    notes.append(f"slack {slack} plus 3 relative MC standard errors ({mc:.3g})")
    return ScalingReport(t, msd, se, scaled, lower, upper, inside, slope, slope_se, slope_ok,
                         "pass" if inside and slope_ok else "fail", notes)


def write_msd_csv(path, report: ScalingReport):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "msd", "se", "phi_scaled", "lower", "upper"])
        for row in zip(report.t, report.msd, report.se, report.scaled):
            w.writerow([repr(float(v)) for v in row] + [report.lower, report.upper])
