"""Densities of the subordinator and of its inverse.

Two independent routes are provided.

Fourier route
    ``g(u; s)``, the density of ``sigma(s)``, is obtained by inverting its
    characteristic function ``exp(-s Psi)``. The inverse density is then the
    product-integration convolution ``f_L(s; t) = int_0^t nubar(tau) g(t - tau; s) dtau``
    with exact panel masses of ``nubar``. For whole columns in ``t`` the
    inversion runs as a damped FFT (the spectrum is evaluated on the line
    ``Re z = c``, which kills the periodic images); a single-point Gauss-Legendre
    inversion is also available.

Series routes
    For the stable kind, ``f(s; t) = t**-beta M(s t**-beta)`` with the entire
    function ``M(z) = sum_k (-z)**k / (k! Gamma(1 - beta - beta k))``. The series
    cancels badly for large ``z``, so it is evaluated in double-double
    arithmetic with precomputed high-precision coefficients, or in mpmath for
    single points. For the relativistic kind the series in ``s`` with
    incomplete-gamma coefficients is summed in mpmath.
"""
from __future__ import annotations

import csv
import json
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import mpmath as mp
import numpy as np
from scipy import integrate, signal, special
from scipy.interpolate import CubicSpline

from .bernstein import (BernsteinModel, OreyBound, RelativisticStable, Stable,
                        TabulatedLevyDensity, orey_lower_bound, panel_tail_masses)

__all__ = [
    "DensityError",
    "TableQualityError",
    "SeriesResult",
    "subordinator_density",
    "subordinator_panels",
    "stable_unit_density",
    "inverse_density_stable",
    "stable_series",
    "relativistic_inverse_density",
    "relativistic_series",
    "relativistic_tilted",
    "relativistic_tilted_derivatives",
    "FourierColumn",
    "fourier_column",
    "inverse_density",
    "inverse_density_dt",
    "inverse_density_ds",
    "dt_envelope",
    "laplace_oracle_fL",
    "chernoff_s_max",
    "a4_check",
    "DensityTable",
    "TableReport",
    "build_table",
]

# the damped FFT refuses grids larger than this many points
MAX_FFT = 2**23
# log of the damping factor over one period of the FFT grid
DAMPING = 30.0


class DensityError(RuntimeError):
    """A density route cannot serve the request (unverified model, window, grid size)."""


class FFTCapError(DensityError):
    """The Fourier grid needed at this ``s`` exceeds the size cap."""


class TableQualityError(DensityError):
    """A density table has negative values beyond the clamping threshold."""


@dataclass(frozen=True)
class SeriesResult:
    """A truncated series value with its error estimate.

    Attributes
    ----------
    value : float
    error : float
        Magnitude of the last retained term plus a rounding bound.
    terms : int
        Number of terms summed.
    """

    value: float
    error: float
    terms: int


# ---------------------------------------------------------------------------
# model checks shared by the Fourier routines

def _require_orey(model: BernsteinModel) -> OreyBound:
    if not model.infinite_activity:
        raise DensityError("A1 fails: finite Levy mass, the inverse subordinator has atoms")
    ob = orey_lower_bound(model)
    if not ob.verified:
        raise DensityError(f"A3 unverified, refusing Fourier inversion ({ob.note})")
    return ob


# ---------------------------------------------------------------------------
# subordinator density, single point

def subordinator_panels(model: BernsteinModel, t: float, s: float, eps: float = 1e-12) -> int:
    """Number of Gauss-Legendre panels :func:`subordinator_density` would use."""
    xi_max = _require_orey(model).cutoff(s, eps)
    width = min(math.pi / (4.0 * t), xi_max / 64.0)
    return int(math.ceil(xi_max / width))


def subordinator_density(model: BernsteinModel, t: float, s: float, eps: float = 1e-12,
                         nodes: int = 16, max_panels: int = 200_000) -> float:
    """Density of ``sigma(s)`` at ``t`` by truncated Fourier inversion.

    ``g(t; s) = (1/pi) int_0^Xi Re[exp(-i xi t - s Psi(xi))] dxi`` where ``Xi``
    makes the Orey envelope ``exp(-s C Xi**alpha)`` smaller than ``eps`` (times a
    safety factor 2). Panels are at most ``pi / (4 t)`` wide and geometrically
    refined towards ``xi = 0`` where ``Psi`` is not smooth.
    """
    if not s > 0:
        raise DensityError("operational time s must be positive")
    ob = _require_orey(model)
    if t <= 0:
        return 0.0
    xi_max = ob.cutoff(s, eps)
    width = min(math.pi / (4.0 * t), xi_max / 64.0)
    n = int(math.ceil(xi_max / width))
    if n > max_panels:
        raise DensityError(f"inversion at s={s:g}, t={t:g} needs {n} panels (cap {max_panels}); "
                           "s is too small for the Fourier route")
    edges = np.linspace(0.0, xi_max, n + 1)
    first = edges[1]
    geo = first * 2.0 ** -np.arange(40, 0, -1)
    edges = np.concatenate(([0.0], geo, edges[1:]))
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    xi = (0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]).ravel()
    w = (0.5 * (b - a) * wg[None, :]).ravel()
    vals = np.real(np.exp(-1j * xi * t - s * model.psi(xi)))
    g = math.fsum(w * vals) / math.pi
    return max(g, 0.0)


# ---------------------------------------------------------------------------
# stable series

class SeriesDivergence(DensityError):
    """Terms of a truncated series were still growing at the truncation point."""

    def __init__(self, msg, smallest_index):
        super().__init__(msg)
        self.smallest_index = smallest_index


def stable_unit_density(beta: float, x: float, terms: Optional[int] = None) -> SeriesResult:
    """Density of the unit stable variable (``E exp(-lam S) = exp(-lam**beta)``) at ``x``.

    Sums ``(1/pi) sum_j (-1)**(j+1) Gamma(1+j beta)/j! sin(pi beta j) x**(-1-beta j)``
    with compensated summation. With ``terms=None`` summation stops once terms
    fall below ``1e-17`` of the partial sum.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not x > 0:
        raise ValueError("x must be positive")
    kmax = terms if terms is not None else 4000
    j = np.arange(1, kmax + 1, dtype=float)
    logmag = special.gammaln(1.0 + j * beta) - special.gammaln(j + 1.0) - (1.0 + beta * j) * math.log(x)
    sign = np.where(j % 2 == 1, 1.0, -1.0) * np.sin(math.pi * beta * j)
    vals = sign * np.exp(logmag) / math.pi
    if terms is None:
        mags = np.abs(np.exp(logmag))
        peak = int(np.argmax(mags))
        rel = mags / max(mags[peak], 1e-300)
        tail = np.nonzero((np.arange(kmax) > peak) & (rel < 1e-18))[0]
        if tail.size == 0:
            raise SeriesDivergence("stable series did not converge within 4000 terms", int(np.argmin(mags)))
        used = int(tail[0]) + 1
    else:
        used = kmax
        mags = np.exp(logmag)
        if used >= 2 and mags[used - 1] > mags[used - 2]:
            raise SeriesDivergence(
                f"terms still growing at truncation ({used} terms); smallest term at index {int(np.argmin(mags[:used])) + 1}",
                int(np.argmin(mags[:used])) + 1)
    total = math.fsum(vals[:used])
    err = abs(vals[used - 1]) + 1e-16 * float(np.max(np.abs(vals[:used])))
    return SeriesResult(total, err, used)


def _stable_unit_density_dx(beta: float, x: float) -> float:
    j = np.arange(1, 4001, dtype=float)
    logmag = (special.gammaln(1.0 + j * beta) - special.gammaln(j + 1.0)
              + np.log1p(beta * j) - (2.0 + beta * j) * math.log(x))
    mags = np.exp(logmag)
    peak = int(np.argmax(mags))
    cut = np.nonzero((np.arange(j.size) > peak) & (mags < 1e-18 * mags[peak]))[0]
    used = int(cut[0]) + 1 if cut.size else j.size
    sign = np.where(j % 2 == 1, 1.0, -1.0) * np.sin(math.pi * beta * j)
    return -math.fsum((sign * mags)[:used]) / math.pi


# coefficients of the three Wright-type series, all in z = s t**-beta:
#   "f":  M(z)              = sum (-z)^k / (k! Gamma(1 - beta - beta k))
#   "ds": M'(z)             = -sum (-z)^k / (k! Gamma(1 - 2 beta - beta k))
#   "dt": M(z) + z M'(z)    = sum (k+1) (-z)^k / (k! Gamma(1 - beta - beta k))

def _coef_mp(beta, kind, k):
    b = mp.mpf(beta)
    if kind == "f":
        c = mp.rgamma(1 - b - b * k)
    elif kind == "ds":
        c = -mp.rgamma(1 - 2 * b - b * k)
    else:
        c = (k + 1) * mp.rgamma(1 - b - b * k)
    return c * (-1) ** k / mp.factorial(k)


@lru_cache(maxsize=256)
def _wright_bucket(beta: float, kind: str, Z: float):
    """High-precision coefficients ``a_k = c_k Z**k`` split into double-double."""
    with mp.workdps(60):
        coefs = []
        peak = mp.mpf(0)
        k = 0
        while True:
            a = _coef_mp(beta, kind, k) * mp.mpf(Z) ** k
            coefs.append(a)
            mag = abs(a)
            if mag > peak:
                peak = mag
            if k > 8 and mag < mp.mpf("1e-26") and abs(coefs[-2]) < mp.mpf("1e-26"):
                break
            k += 1
            if k > 3000:
                # slow decay for beta near 1: leave this bucket to the integral route
                return None
        if peak > mp.mpf("1e290"):
            return None
        hi = np.array([float(c) for c in coefs])
        lo = np.array([float(c - mp.mpf(h)) for c, h in zip(coefs, hi)])
        return hi, lo, float(peak)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _dd_mul_add(rh, rl, w, ch, cl):
    """``(rh + rl) * w + (ch + cl)`` in double-double arithmetic."""
    p = rh * w
    ah, al = _split(rh)
    bh, bl = _split(w)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    e = e + rl * w
    s, e2 = _two_sum(p, ch)
    e2 = e2 + e + cl
    h = s + e2
    return h, e2 - (h - s)


def _log_wright_estimate(beta, z):
    # leading saddle-point exponent of M(z) for large z
    return -((1.0 - beta) / beta) * (beta * z) ** (1.0 / (1.0 - beta))


@lru_cache(maxsize=32)
def _kanter_nodes(beta: float, n: int = 24, panels: int = 40):
    xg, wg = np.polynomial.legendre.leggauss(n)
    e = np.linspace(0.0, math.pi, panels + 1)
    phi = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * np.diff(e)[:, None] * xg).ravel()
    w = (0.5 * np.diff(e)[:, None] * wg).ravel()
    A = ((np.sin(beta * phi) / np.sin(phi)) ** (1.0 / (1.0 - beta))
         * np.sin((1.0 - beta) * phi) / np.sin(beta * phi))
    return A, w


def _kanter(beta: float, x):
    """Unit stable density and its derivative from Kanter's integral representation.

    ``g(x) = q/pi x**-p int_0^pi A(phi) exp(-x**-q A(phi)) dphi`` with
    ``p = 1/(1-beta)``, ``q = beta/(1-beta)``. The integrand is positive, so
    the result keeps full relative accuracy where the series cancels.
    """
    x = np.asarray(x, dtype=float)
    p = 1.0 / (1.0 - beta)
    q = beta / (1.0 - beta)
    A, w = _kanter_nodes(beta)
    y = x[..., None] ** (-q)
    E = np.exp(-y * A)
    I1 = (E * A) @ w
    I2 = (E * A * A) @ w
    g = q / math.pi * x ** (-p) * I1
    gp = q / math.pi * (-p * x ** (-p - 1.0) * I1 + q * x ** (-p - q - 1.0) * I2)
    return g, gp


def _wright_from_kanter(beta: float, kind: str, z):
    # M(z) = f(z; 1) = (1/beta) z**(-1-1/beta) g(z**(-1/beta))
    x = z ** (-1.0 / beta)
    g, gp = _kanter(beta, x)
    M = z ** (-1.0 - 1.0 / beta) * g / beta
    if kind == "f":
        return M
    dM = ((-1.0 - 1.0 / beta) * z ** (-2.0 - 1.0 / beta) * g
          - z ** (-1.0 - 1.0 / beta) * gp * x / (beta * z)) / beta
    if kind == "ds":
        return dM
    return M + z * dM


def _wright_eval(beta: float, kind: str, z):
    """Vectorised Wright-type series at ``z >= 0``.

    The double-double power series is used while its rounding error (about
    ``peak * 2**-104``) stays below ``1e-14`` of the estimated value; larger
    ``z`` go to the Kanter integral.
    """
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    if z.size == 0:
        return out
    logest = _log_wright_estimate(beta, np.maximum(z, 1e-300))
    live = logest > -700.0
    if not np.any(live):
        return out
    zl = z[live]
    le = logest[live]
    res = np.zeros(zl.shape)
    use_int = np.zeros(zl.shape, dtype=bool)
    # bucket by Z = 2**(j/2) >= z, minimum bucket 1
    j = np.ceil(2.0 * np.log2(np.maximum(zl, 1.0))).astype(int)
    for jj in np.unique(j):
        Z = 2.0 ** (jj / 2.0)
        idx = np.nonzero(j == jj)[0]
        bucket = _wright_bucket(beta, kind, Z) if Z <= 64.0 else None
        if bucket is None:
            use_int[idx] = True
            continue
        hi, lo, peak = bucket
        lost = peak * 1e-31 > 1e-14 * np.exp(le[idx])
        use_int[idx[lost]] = True
        idx = idx[~lost]
        if idx.size == 0:
            continue
        w = zl[idx] / Z
        rh = np.full(w.shape, hi[-1])
        rl = np.full(w.shape, lo[-1])
        for k in range(hi.size - 2, -1, -1):
            rh, rl = _dd_mul_add(rh, rl, w, hi[k], lo[k])
        res[idx] = rh + rl
    if np.any(use_int):
        res[use_int] = _wright_from_kanter(beta, kind, zl[use_int])
    out[live] = res
    return out


def _wright_mp(beta: float, kind: str, z: float, rel: float = 1e-14):
    """Single-point mpmath evaluation with precision escalation."""
    zz = mp.mpf(z)
    dps = 30
    prev = None
    for _ in range(8):
        with mp.workdps(dps):
            total = mp.mpf(0)
            peak = mp.mpf(0)
            k = 0
            small = 0
            while True:
                term = _coef_mp(beta, kind, k) * zz**k
                total += term
                peak = max(peak, abs(term))
                if abs(term) < mp.mpf(10) ** (-dps) * max(abs(total), mp.mpf(10) ** -300):
                    small += 1
                    if small >= 3:
                        break
                else:
                    small = 0
                k += 1
                if k > 50000:
                    raise DensityError("Wright series failed to converge")
            lost = float(mp.log10(peak / max(abs(total), mp.mpf(10) ** -400))) if peak > 0 else 0.0
        if prev is not None and abs(total - prev) <= rel * abs(total):
            return total
        prev = total
        dps = int(30 + 1.5 * max(lost, 0.0)) + 10
    return prev


def stable_series(beta: float, s, t, kind: str = "f"):
    """Vectorised stable inverse density (or derivative) from the power series in ``s``.

    ``kind`` is ``"f"`` for ``f``, ``"ds"`` for ``d f / d s`` and ``"dt"`` for
    ``d f / d t``. Accuracy is absolute (about 1e-16 times the scale of ``f``).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    s, t = np.broadcast_arrays(s, t)
    z = s * t ** -beta
    p = _wright_eval(beta, kind, z)
    if kind == "f":
        return t ** -beta * p
    if kind == "ds":
        return t ** (-2.0 * beta) * p
    if kind == "dt":
        return -beta * t ** (-beta - 1.0) * p
    raise ValueError(f"unknown kind {kind!r}")


def inverse_density_stable(beta: float, s: float, t: float, crossover: float = 1.0,
                           kind: str = "f") -> float:
    """Stable inverse density ``f(s; t)`` (or a partial derivative) at one point.

    Where ``x = t s**(-1/beta) >= crossover`` the scaling relation with the
    unit stable density is used; otherwise the power series in ``s``, summed
    in double-double or, when relative accuracy would be lost, replaced by
    Kanter's integral.
    """
    if not (s >= 0 and t > 0):
        raise ValueError("need s >= 0 and t > 0")
    if s > 0:
        x = t * s ** (-1.0 / beta)
        if x >= crossover:
            g = stable_unit_density(beta, x).value
            if kind == "f":
                return max((t / beta) * s ** (-1.0 - 1.0 / beta) * g, 0.0)
            gp = _stable_unit_density_dx(beta, x)
            if kind == "ds":
                return (t / beta) * ((-1.0 - 1.0 / beta) * s ** (-2.0 - 1.0 / beta) * g
                                     - s ** (-1.0 - 1.0 / beta) * gp * x / (beta * s))
            if kind == "dt":
                return (1.0 / beta) * s ** (-1.0 - 1.0 / beta) * (g + x * gp)
            raise ValueError(f"unknown kind {kind!r}")
    z = s * t ** -beta
    val = float(_wright_eval(beta, kind, np.array([z]))[0])
    scale = {"f": t ** -beta, "ds": t ** (-2.0 * beta), "dt": -beta * t ** (-beta - 1.0)}[kind]
    out = scale * val
    return max(out, 0.0) if kind == "f" else out


# ---------------------------------------------------------------------------
# relativistic series

def _rel_coefficients(beta, m, t, K, dps, dt: bool = False):
    """``C_k(t)`` (or ``d C_k / dt``) for ``k = 0..K-1`` at working precision ``dps``."""
    with mp.workdps(dps):
        b, mm, tt = mp.mpf(beta), mp.mpf(m), mp.mpf(t)
        x = mm * tt
        out = []
        for k in range(K):
            a1 = b * (k + 1)
            a0 = b * k
            if dt:
                # d/dt Gamma(-a, m t) = -m (m t)^(-a-1) e^(-m t)
                d1 = -mm * x ** (-a1 - 1) * mp.e ** (-x)
                d0 = -mm * x ** (-a0 - 1) * mp.e ** (-x)
                c = (mp.gamma(1 + a1) * d1 * mp.sin(a1 * mp.pi)
                     - (mp.gamma(1 + a0) * d0 * mp.sin(a0 * mp.pi) if k > 0 else 0))
            else:
                c = (mp.gamma(1 + a1) * mp.gammainc(-a1, x) * mp.sin(a1 * mp.pi)
                     - (mp.gamma(1 + a0) * mp.gammainc(-a0, x) * mp.sin(a0 * mp.pi) if k > 0 else 0))
            out.append(c)
        return out


def relativistic_series(beta: float, m: float, s, t: float, kind: str = "f",
                        max_window: float = 30.0):
    """Relativistic inverse density from its series in ``s``, for a vector of ``s`` at one ``t``.

    Returns ``(values, errors, terms)``. The sum carries an ``exp(m**beta s)``
    prefactor and cancels heavily, so it is evaluated in mpmath with a
    working precision sized from the largest term.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    mb = m**beta
    if np.any(s * mb > max_window):
        raise DensityError(
            f"s m^beta = {float(np.max(s) * mb):.3g} exceeds the series window {max_window}; "
            "use the Fourier route instead")
    smax = float(np.max(s)) if s.size else 0.0
    # the k-th term is roughly (s m^beta)^k / k! times Gamma(beta k) growth
    K = 40 + int(6.0 * smax * mb + 4.0 * (smax * mb) ** (1.0 / max(1e-9, 1.0 - beta)) ** 0.5)
    K = min(K, 2000)
    dps = int(30 + 2.0 * (smax * mb) / math.log(10.0) + 10)
    coefs = _rel_coefficients(beta, m, t, K, dps)
    if kind == "dt":
        dcoefs = _rel_coefficients(beta, m, t, K, dps, dt=True)
    vals = np.empty(s.size)
    errs = np.empty(s.size)
    with mp.workdps(dps):
        mbm = mp.mpf(m) ** mp.mpf(beta)
        for i, sv in enumerate(s):
            ss = mp.mpf(sv)
            total = mp.mpf(0)
            last = mp.mpf(0)
            dtotal = mp.mpf(0)
            for k in range(K):
                w = (-1) ** k * mbm ** (k + 1) / mp.factorial(k)
                if kind == "f":
                    term = w * ss**k * coefs[k]
                elif kind == "ds":
                    term = w * ss**k * coefs[k]
                    dtotal += (w * k * ss ** (k - 1) * coefs[k]) if k > 0 else 0
                else:
                    term = w * ss**k * dcoefs[k]
                total += term
                last = term
            pref = mp.e ** (mbm * ss) / mp.pi
            if kind == "ds":
                v = pref * (mbm * total + dtotal)
            else:
                v = pref * total
            vals[i] = float(v)
            errs[i] = float(abs(pref * last))
    return vals, errs, K


def _stable_series_large_x(beta: float, x, terms: int = 120):
    # (1/pi) sum_j (-1)**(j+1) Gamma(1 + j beta)/j! sin(pi beta j) x**(-1 - beta j)
    j = np.arange(1, terms + 1, dtype=float)
    coef = (np.where(j % 2 == 1, 1.0, -1.0) * np.sin(math.pi * beta * j)
            * np.exp(special.gammaln(1.0 + j * beta) - special.gammaln(j + 1.0)))
    lx = np.log(np.asarray(x, dtype=float))
    return (coef * np.exp(-(1.0 + beta * j) * lx[:, None])).sum(axis=1) / math.pi


@lru_cache(maxsize=8)
def _log_stable_spline(beta: float):
    """Cubic spline of ``log g(x)`` in ``log x`` for the unit stable density, plus its domain."""
    lx = np.linspace(math.log(1e-4), math.log(1e16), 3001)
    x = np.exp(lx)
    g, _ = _kanter(beta, x)
    # Kanter's integrand piles up near pi for large x; the series in x**-beta converges fast there
    big = x >= 2.0
    g[big] = _stable_series_large_x(beta, x[big])
    keep = g > 1e-290
    lo = int(np.argmax(keep))
    spl = CubicSpline(lx[lo:], np.log(g[lo:]))
    return spl, float(lx[lo]), float(lx[-1])


def _stable_unit_density_fast(beta: float, x):
    """Unit stable density from the log spline; three-term tail series beyond ``1e16``."""
    spl, lo, hi = _log_stable_spline(beta)
    x = np.asarray(x, dtype=float)
    lx = np.log(np.maximum(x, 1e-300))
    out = np.zeros(x.shape)
    mid = (lx >= lo) & (lx <= hi)
    out[mid] = np.exp(spl(lx[mid]))
    big = lx > hi
    if np.any(big):
        xb = x[big]
        tail = np.zeros(xb.shape)
        for j in (1, 2, 3):
            tail += ((-1) ** (j + 1) * math.gamma(1.0 + j * beta) / math.factorial(j)
                     * math.sin(math.pi * beta * j) * xb ** (-1.0 - beta * j))
        out[big] = tail / math.pi
    return out


def relativistic_tilted(beta: float, m: float, s, t: float, nodes: int = 8, panels: int = 24):
    """Relativistic inverse density from the exponentially tilted stable law.

    The relativistic subordinator density is
    ``g(w; s) = exp(s m**beta - m w) s**(-1/beta) g_beta(w s**(-1/beta))`` and
    ``f_L(s, t) = int_0^t nubar(t - w) g(w; s) dw``. All terms are positive,
    so there is no cancellation at any ``(s, t)``. The ``w`` integral is split
    at ``t/2``: the lower half uses nodes scaled by ``s**(1/beta)`` (where the
    subordinator density lives), the upper half is graded towards the
    ``(t - w)**(-beta)`` singularity of the tail.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if not t > 0:
        raise DensityError("t must be positive")
    model = RelativisticStable(beta, m)
    mb = m**beta
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    out = np.zeros(s.shape)
    pos = s > 0
    sp = s[pos]
    scale = sp ** (1.0 / beta)

    def g_rel(w, s_col, sc_col):
        return np.exp(s_col * mb - m * w) / sc_col * _stable_unit_density_fast(beta, w / sc_col)

    # upper half: v = t - w on geometric panels from 1e-14 t to t/2
    ev = np.concatenate(([0.0], np.geomspace(1e-14 * t, 0.5 * t, panels + 1)))
    a, b = ev[:-1, None], ev[1:, None]
    v = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
    wv = (0.5 * (b - a) * wg).ravel()
    nb_v = model.levy_tail(v)
    upper = (g_rel(t - v[None, :], sp[:, None], scale[:, None]) * (nb_v * wv)[None, :]).sum(axis=1)
    # lower half: w = scale * x with x geometric from the density's lower cut to t / (2 scale)
    _, llo, _ = _log_stable_spline(beta)
    x_lo = math.exp(llo)
    x_hi = 0.5 * t / scale
    lower = np.zeros(sp.shape)
    ok = x_hi > x_lo
    if np.any(ok):
        n_p = 2 * panels
        r = np.linspace(0.0, 1.0, n_p + 1)
        lx_lo = math.log(x_lo)
        lx_hi = np.log(x_hi[ok])
        e = np.exp(lx_lo + (lx_hi[:, None] - lx_lo) * r[None, :])  # (k, n_p + 1)
        a, b = e[:, :-1, None], e[:, 1:, None]
        x = (0.5 * (a + b) + 0.5 * (b - a) * xg).reshape(e.shape[0], -1)
        wx = (0.5 * (b - a) * wg).reshape(e.shape[0], -1)
        sc = scale[ok][:, None]
        w = sc * x
        vals = np.exp(sp[ok][:, None] * mb - m * w) * _stable_unit_density_fast(beta, x)
        # the tail is smooth on [t/2, t]; a spline through 401 exact values replaces
        # hundreds of thousands of incomplete-gamma calls
        tau = np.linspace(0.5 * t, t, 401)
        nb = CubicSpline(tau, model.levy_tail(tau))
        lower[ok] = (vals * nb(np.clip(t - w, 0.5 * t, t)) * wx).sum(axis=1)
    out[pos] = upper + lower
    out[~pos] = model.levy_tail(t)
    return out


def relativistic_tilted_derivatives(model: RelativisticStable, s, t: float):
    """``(d/ds, d/dt)`` of the tilted-route density by central differences."""
    s = np.asarray(s, dtype=float)
    b, m = model.beta, model.m
    hs = 1e-4 * max(float(np.max(s)), 1e-3)
    lo = np.maximum(s - hs, 0.0)
    hi = s + hs
    d_s = (relativistic_tilted(b, m, hi, t) - relativistic_tilted(b, m, lo, t)) / (hi - lo)
    ht = 1e-4 * t
    d_t = (relativistic_tilted(b, m, s, t + ht) - relativistic_tilted(b, m, s, t - ht)) / (2.0 * ht)
    return d_s, d_t


def relativistic_inverse_density(beta: float, m: float, s: float, t: float,
                                 terms: Optional[int] = None, kind: str = "f") -> SeriesResult:
    """Relativistic inverse density at one point from the incomplete-gamma series."""
    vals, errs, K = relativistic_series(beta, m, np.array([s]), t, kind=kind)
    v = float(vals[0])
    if kind == "f":
        v = max(v, 0.0)
    return SeriesResult(v, float(errs[0]), K)


# ---------------------------------------------------------------------------
# Fourier route: whole columns in t at fixed s

def _line_spline(model: TabulatedLevyDensity, c: float, lo: float):
    """Log-magnitude and phase splines of ``Phi(c - i xi)`` in ``log xi``, cached on the model."""
    cache = model.__dict__.setdefault("_line_splines", {})
    key = (c, lo)
    if key not in cache:
        nodes = np.geomspace(lo, 1e10, int(30 * math.log10(1e10 / lo)) + 2)
        exact = model.phi_complex(c - 1j * nodes)
        lx = np.log(nodes)
        lm = np.log(np.abs(exact))
        ph = np.unwrap(np.angle(exact))
        k_hi = float((lm[-1] - lm[-2]) / (lx[-1] - lx[-2]))
        cache[key] = (CubicSpline(lx, lm), CubicSpline(lx, ph), float(lx[-1]), k_hi)
    return cache[key]


def _phi_on_line(model: BernsteinModel, z: np.ndarray) -> np.ndarray:
    if isinstance(model, TabulatedLevyDensity) and z.size > 256:
        # splines through exact evaluations, power-law growth beyond 1e10
        c = float(z[0].real)
        xi = -z.imag
        pos = xi > 0
        lo = float(xi[pos].min())
        mag, ph, hi, k_hi = _line_spline(model, c, lo)
        lx = np.log(xi[pos])
        inner = np.minimum(lx, hi)
        out = np.empty(z.shape, dtype=complex)
        out[pos] = np.exp(mag(inner) + k_hi * (lx - inner) + 1j * ph(inner))
        out[~pos] = model.phi_complex(z[~pos])
        return out
    return model.phi_complex(z)


@dataclass(frozen=True)
class FourierColumn:
    """Inverse density and derivatives on the uniform grid ``t_j = j dt``.

    Attributes
    ----------
    s : float
    dt : float
    t : ndarray
    f, df_ds, df_dt : ndarray or None
    g : ndarray
        Subordinator density ``g(t_j; s)`` on the same grid.
    n_fft : int
    xi_max : float
    """

    s: float
    dt: float
    t: np.ndarray
    f: np.ndarray
    g: np.ndarray
    df_ds: Optional[np.ndarray]
    df_dt: Optional[np.ndarray]
    n_fft: int
    xi_max: float

    @cached_property
    def _splines(self) -> dict:
        return {}

    def at(self, t, which: str = "f"):
        arr = {"f": self.f, "ds": self.df_ds, "dt": self.df_dt, "g": self.g}[which]
        if arr is None:
            raise DensityError(f"column was built without {which!r}")
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t[-1] + 1e-12):
            raise DensityError(f"t beyond column range {self.t[-1]}")
        # cubic between nodes: linear interpolation dominates the error when dt is coarse
        if which not in self._splines:
            self._splines[which] = CubicSpline(self.t, arr)
        return self._splines[which](np.clip(t, 0.0, self.t[-1]))


def _convolution_kernel(model: BernsteinModel, dt: float, n: int) -> np.ndarray:
    A, B = panel_tail_masses(model, dt, n)
    w = A - B
    w[1:] += B[:-1]
    return w


def fourier_column(model: BernsteinModel, s: float, t_max: float, derivatives: bool = True,
                   eps: float = 1e-12, max_fft: int = MAX_FFT) -> FourierColumn:
    """Inverse density on ``[0, t_max]`` at operational time ``s`` by damped FFT.

    The period is ``2 t_max``; the grid step is ``pi / Xi`` (rounded down to a
    power-of-two grid) where ``Xi`` is the Orey truncation frequency with
    safety factor 2.
    """
    if not s > 0:
        raise DensityError("operational time s must be positive")
    if not t_max > 0:
        raise DensityError("t_max must be positive")
    ob = _require_orey(model)
    xi_max = ob.cutoff(s, eps)
    period = 2.0 * t_max
    need = period * xi_max / math.pi
    n_fft = 1 << max(16, int(math.ceil(math.log2(need))))
    if n_fft > max_fft:
        raise FFTCapError(
            f"Fourier grid of {n_fft} points exceeds the cap {max_fft} at s={s:g}, t_max={t_max:g}; "
            "use a series route or a larger s")
    du = period / n_fft
    c = DAMPING / period
    k = np.arange(n_fft // 2 + 1, dtype=float)
    xi = 2.0 * math.pi * k / period
    phi = _phi_on_line(model, c - 1j * xi)
    E = np.exp(-s * phi)
    n_t = int(math.floor(t_max / du + 1e-9)) + 1
    u = du * np.arange(n_t)
    damp = np.exp(c * u)
    h = np.fft.irfft(np.conj(E), n=n_fft)[:n_t] / du
    g = damp * h
    g[0] = 0.0
    w = _convolution_kernel(model, du, n_t)
    f = signal.fftconvolve(w, g)[:n_t]
    f[0] = 0.0
    df_ds = df_dt = None
    if derivatives:
        hs = np.fft.irfft(np.conj(-phi * E), n=n_fft)[:n_t] / du
        gs = damp * hs
        gs[0] = 0.0
        hp = np.fft.irfft(np.conj(-1j * xi * E), n=n_fft)[:n_t] / du
        gt = damp * (c * h + hp)
        gt[0] = 0.0
        df_ds = signal.fftconvolve(w, gs)[:n_t]
        df_dt = signal.fftconvolve(w, gt)[:n_t]
        df_ds[0] = df_dt[0] = 0.0
    return FourierColumn(s=float(s), dt=du, t=u, f=f, g=g, df_ds=df_ds, df_dt=df_dt,
                         n_fft=n_fft, xi_max=xi_max)


class _ColumnCache:
    """Small thread-safe LRU of Fourier columns keyed by (model, s, t_max)."""

    def __init__(self, size: int = 6):
        self.size = size
        self._d: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, model, s, t_need, derivatives):
        t_key = 2.0 ** math.ceil(math.log2(max(t_need, 1e-300)))
        key = (id(model), model.describe(), float(s), t_key, derivatives)
        with self._lock:
            col = self._d.get(key)
            if col is None and not derivatives:
                col = self._d.get(key[:-1] + (True,))
            if col is not None:
                self._d.move_to_end(key if key in self._d else key[:-1] + (True,))
                return col
        col = fourier_column(model, s, t_key, derivatives=derivatives)
        with self._lock:
            self._d[key] = col
            while len(self._d) > self.size:
                self._d.popitem(last=False)
        return col


_CACHE = _ColumnCache()


def _fourier_values(model, s, t, which):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DensityError("t must be nonnegative")
    t_need = float(np.max(t_arr)) if t_arr.size else 1.0
    col = _CACHE.get(model, s, max(t_need, 1e-12), derivatives=(which != "f"))
    out = col.at(t_arr, which)
    return float(out) if np.ndim(out) == 0 else out


def inverse_density(model: BernsteinModel, s: float, t) -> float:
    """Inverse-subordinator density ``f_L(s; t)`` by the Fourier route (``t`` may be an array)."""
    out = _fourier_values(model, s, t, "f")
    return np.maximum(out, 0.0) if np.ndim(out) else max(out, 0.0)


def inverse_density_dt(model: BernsteinModel, s: float, t):
    """``d f_L / d t`` by the Fourier route."""
    return _fourier_values(model, s, t, "dt")


def inverse_density_ds(model: BernsteinModel, s: float, t):
    """``d f_L / d s`` by the Fourier route."""
    return _fourier_values(model, s, t, "ds")


def dt_envelope(model: BernsteinModel, s: float, t: float) -> float:
    """Upper bound ``(1/pi) I(t) int_0^inf xi exp(-s Re Psi(xi)) dxi`` for ``|d f_L / d t|``."""
    if isinstance(model, Stable):
        C = math.cos(math.pi * model.beta / 2.0)
        b = model.beta
        integral = math.gamma(2.0 / b) / (b * (s * C) ** (2.0 / b))
    else:
        def integrand(v):
            xi = math.exp(v)
            return xi * xi * math.exp(-s * float(np.real(model.psi(xi))))

        ob = _require_orey(model)
        hi = math.log(ob.cutoff(s, 1e-16))
        integral, _ = integrate.quad(integrand, -40.0, hi, limit=400, epsrel=1e-8)
    return float(model.tail_integral(t)) * integral / math.pi


def a4_check(model: BernsteinModel, a: float, b: float, delta: float = 0.1,
             n_s: int = 40, n_t: int = 16) -> dict:
    """Numeric check of a bounded majorant ``|d f_L/ds| <= h`` on ``(0, delta) x [a, b]``.

    A bounded ``h`` makes ``h(s)/sqrt(s)`` integrable near 0. Catalog kinds are
    evaluated on a grid; tabulated models report ``"unknown"``.
    """
    if not 0 < a <= b:
        raise ValueError("need 0 < a <= b")
    if not isinstance(model, (Stable, RelativisticStable)):
        return {"status": "unknown", "reason": "no series representation for this kind"}
    s = np.geomspace(1e-8 * delta, delta, n_s)
    t = np.linspace(a, b, n_t)
    sup = 0.0
    for tv in t:
        if isinstance(model, Stable):
            d = stable_series(model.beta, s, tv, "ds")
        else:
            d, _ = relativistic_tilted_derivatives(model, s, tv)
        sup = max(sup, float(np.max(np.abs(d))))
    ok = math.isfinite(sup)
    return {"status": "verified" if ok else "failed", "sup_abs_ds": sup,
            "majorant_integral": 2.0 * sup * math.sqrt(delta) if ok else math.inf}


def chernoff_s_max(model: BernsteinModel, t: float, tol: float = 1e-14) -> float:
    """Smallest ``s`` on a lambda ladder with ``P(L(t) > s) <= exp(lam t - s Phi(lam)) <= tol``."""
    lam = np.geomspace(1e-3, 1e6, 400) / t
    return float(np.min((lam * t - math.log(tol)) / np.asarray(model.phi(lam), dtype=float)))


def laplace_oracle_fL(model: BernsteinModel, s: float, lam: float, t_max: Optional[float] = None):
    """``(numeric, analytic)`` Laplace transforms in ``t`` of ``f_L(s; .)`` at ``lam``.

    The numeric value integrates a Fourier-route column with Simpson's rule;
    the analytic value is ``Phi(lam) exp(-s Phi(lam)) / lam``.
    """
    if t_max is None:
        t_max = math.log(1e10) / lam
    if math.exp(-lam * t_max) >= 1e-10 * 1.0001:
        raise DensityError(f"t_max={t_max:g} too short: need exp(-lam t_max) < 1e-10")
    col = _CACHE.get(model, s, t_max, derivatives=False)
    if col.dt * lam > 1e-2:
        raise DensityError(f"column step {col.dt:g} too coarse for lam={lam:g}; refine the grid")
    sel = col.t <= col.t[-1]
    numeric = float(integrate.simpson(np.exp(-lam * col.t[sel]) * col.f[sel], x=col.t[sel]))
    ph = float(model.phi(lam))
    analytic = ph * math.exp(-s * ph) / lam
    return numeric, analytic


# ---------------------------------------------------------------------------
# tables

@dataclass
class TableReport:
    """Invariant checks of a density table.

    Attributes
    ----------
    nonnegative : bool
    min_value : float
    mass : ndarray
        Trapezoidal mass per column.
    mass_ok : ndarray of bool
        Mass in ``[0.99, 1.001]`` (only asserted where the range captures the mass).
    mass_captured : ndarray of bool
    edge_ratio : ndarray
        First-row value over ``nubar(t)``.
    edge_ok : ndarray of bool
    """

    nonnegative: bool
    min_value: float
    mass: np.ndarray
    mass_ok: np.ndarray
    mass_captured: np.ndarray
    edge_ratio: np.ndarray
    edge_ok: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(self.nonnegative and np.all(self.mass_ok | ~self.mass_captured) and np.all(self.edge_ok))

    def failures(self) -> list:
        out = []
        if not self.nonnegative:
            out.append(f"negative values down to {self.min_value:.3g}")
        bad = np.nonzero(~self.mass_ok & self.mass_captured)[0]
        if bad.size:
            out.append(f"mass outside [0.99, 1.001] at columns {bad.tolist()}")
        bad = np.nonzero(~self.edge_ok)[0]
        if bad.size:
            out.append(f"small-s value differs from the Levy tail by > 2% at columns {bad.tolist()}")
        return out


@dataclass
class DensityTable:
    """Tabulated ``f_L(s; t)`` with optional derivative matrices.

    ``values[i, j]`` is the density at ``(s_grid[i], t_grid[j])``. Values are
    interpolated with a cubic spline in ``sqrt(s)`` and linearly in ``t``.
    """

    s_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    provenance: str
    model_params: dict
    ds_values: Optional[np.ndarray] = None
    dt_values: Optional[np.ndarray] = None
    _splines: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.s_grid.size, self.t_grid.size):
            raise ValueError("values must have shape (len(s_grid), len(t_grid))")
        lowest = float(self.values.min()) if self.values.size else 0.0
        if lowest < -1e-10:
            raise TableQualityError(f"table value {lowest:.3g} below the clamping threshold -1e-10")
        self.values = np.maximum(self.values, 0.0)

    def _spline(self, which, j):
        key = (which, j)
        sp = self._splines.get(key)
        if sp is None:
            arr = {"f": self.values, "ds": self.ds_values, "dt": self.dt_values}[which]
            if arr is None:
                raise DensityError(f"table has no {which!r} matrix")
            sp = CubicSpline(np.sqrt(self.s_grid), arr[:, j])
            self._splines[key] = sp
        return sp

    def value(self, s, t, which: str = "f"):
        s = np.asarray(s, dtype=float)
        if t < self.t_grid[0] - 1e-12 or t > self.t_grid[-1] + 1e-12:
            raise DensityError(f"t={t} outside table range [{self.t_grid[0]}, {self.t_grid[-1]}]")
        j = int(np.searchsorted(self.t_grid, t))
        j = min(max(j, 0), self.t_grid.size - 1)
        u = np.sqrt(np.clip(s, self.s_grid[0], self.s_grid[-1]))
        outside = (s > self.s_grid[-1])
        if abs(self.t_grid[j] - t) <= 1e-12 * max(1.0, t):
            out = self._spline(which, j)(u)
        else:
            j0 = max(j - 1, 0)
            w = (t - self.t_grid[j0]) / (self.t_grid[j] - self.t_grid[j0])
            out = (1 - w) * self._spline(which, j0)(u) + w * self._spline(which, j)(u)
        out = np.where(outside, 0.0, out)
        if which == "f":
            out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def check_invariants(self, model: BernsteinModel) -> TableReport:
        vals = self.values
        mass = integrate.trapezoid(vals, self.s_grid, axis=0)
        # mass is captured when the last row is negligible
        captured = vals[-1, :] * self.s_grid[-1] < 1e-8
        mass_ok = (mass >= 0.99) & (mass <= 1.001)
        nb = model.levy_tail(self.t_grid)
        edge = vals[0, :] / nb
        edge_ok = np.abs(edge - 1.0) <= 0.02
        nonneg = bool(vals.min() >= -1e-10)
        return TableReport(nonneg, float(vals.min()), mass, mass_ok, captured, edge, edge_ok)

    # -- io --------------------------------------------------------------------
    def to_csv(self, path, sidecar: Optional[dict] = None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "f", "df_ds", "df_dt"])
            for j, t in enumerate(self.t_grid):
                for i, s in enumerate(self.s_grid):
                    ds = "" if self.ds_values is None else repr(float(self.ds_values[i, j]))
                    dt = "" if self.dt_values is None else repr(float(self.dt_values[i, j]))
                    w.writerow([repr(float(s)), repr(float(t)), repr(float(self.values[i, j])), ds, dt])
        meta = {"provenance": self.provenance, "model": self.model_params,
                "s_grid": self.s_grid.tolist(), "t_grid": self.t_grid.tolist()}
        if sidecar:
            meta.update(sidecar)
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, path) -> "DensityTable":
        with open(str(path) + ".json") as fh:
            meta = json.load(fh)
        s_grid = np.array(meta["s_grid"])
        t_grid = np.array(meta["t_grid"])
        vals = np.zeros((s_grid.size, t_grid.size))
        ds = np.zeros_like(vals)
        dt = np.zeros_like(vals)
        has_ds = has_dt = True
        si = {v: i for i, v in enumerate(s_grid.tolist())}
        ti = {v: j for j, v in enumerate(t_grid.tolist())}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                i, j = si[float(row["s"])], ti[float(row["t"])]
                vals[i, j] = float(row["f"])
                if row["df_ds"] == "":
                    has_ds = False
                else:
                    ds[i, j] = float(row["df_ds"])
                if row["df_dt"] == "":
                    has_dt = False
                else:
                    dt[i, j] = float(row["df_dt"])
        return cls(s_grid, t_grid, vals, meta["provenance"], meta["model"],
                   ds if has_ds else None, dt if has_dt else None)


def _fill_small_s(model, s_grid, t_grid, vals, ds, dt, missing) -> str:
    """Fill rows the FFT cannot reach by cubic interpolation in ``s``.

    ``f`` and ``d f/dt`` are anchored at their exact ``s = 0`` limits
    (``nubar(t)`` and ``-nu(t)``); ``d f/ds`` is extrapolated from the
    computed rows. ``f`` is smooth in ``s``, so the gap below the first
    reachable row is bridged with an error of the order of its third
    derivative times the gap cubed.
    """
    missing = np.asarray(missing)
    have = np.setdiff1d(np.nonzero(s_grid > 0)[0], missing)
    if have.size < 4:
        raise DensityError("too few s rows within the Fourier grid cap to fill the small-s gap; "
                           "raise the smallest nonzero s or the grid cap")
    if missing.max() > have.min():
        raise DensityError("Fourier grid cap hit above the first computed row")
    near = have[:8]
    s0 = np.concatenate(([0.0], s_grid[near]))
    vals[missing] = CubicSpline(s0, np.vstack((model.levy_tail(t_grid), vals[near])))(s_grid[missing])
    if ds is not None:
        dt[missing] = CubicSpline(s0, np.vstack((-model.levy_density(t_grid), dt[near])))(s_grid[missing])
        ds_fill = CubicSpline(s_grid[near], ds[near], extrapolate=True)
        ds[missing] = ds_fill(s_grid[missing])
        if s_grid[0] == 0.0:
            ds[0] = ds_fill(0.0)
    return f"FourierConvolution (s <= {s_grid[missing].max():.3g} interpolated)"


def _auto_route(model: BernsteinModel, s_max: float) -> str:
    if isinstance(model, Stable):
        return "StableSeries"
    if isinstance(model, RelativisticStable):
        return "RelativisticTilted"
    return "FourierConvolution"


def build_table(model: BernsteinModel, s_grid, t_grid, route: str = "auto",
                derivatives: bool = False) -> DensityTable:
    """Tabulate ``f_L`` (and optionally both partial derivatives) on a rectangular grid.

    ``route`` is one of ``"auto"``, ``"StableSeries"``, ``"RelativisticSeries"``,
    ``"RelativisticTilted"`` or ``"FourierConvolution"``. The Fourier route needs ``s > 0``; a zero in
    ``s_grid`` is filled with the exact limit ``nubar(t)`` (and the derivative
    limits are extrapolated linearly from the next two rows).
    """
    s_grid = np.asarray(s_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(s_grid) <= 0) or s_grid[0] < 0:
        raise ValueError("s_grid must be nonnegative and increasing")
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] <= 0:
        raise ValueError("t_grid must be positive and increasing")
    if route == "auto":
        route = _auto_route(model, float(s_grid[-1]))
    ns, nt = s_grid.size, t_grid.size
    vals = np.zeros((ns, nt))
    ds = np.zeros((ns, nt)) if derivatives else None
    dt = np.zeros((ns, nt)) if derivatives else None
    S, T = np.meshgrid(s_grid, t_grid, indexing="ij")
    if route == "StableSeries":
        if not isinstance(model, Stable):
            raise DensityError("StableSeries route needs a stable model")
        vals = stable_series(model.beta, S, T, "f")
        if derivatives:
            ds = stable_series(model.beta, S, T, "ds")
            dt = stable_series(model.beta, S, T, "dt")
    elif route == "RelativisticSeries":
        if not isinstance(model, RelativisticStable):
            raise DensityError("RelativisticSeries route needs a relativistic model")
        for j, t in enumerate(t_grid):
            vals[:, j] = relativistic_series(model.beta, model.m, s_grid, t, "f")[0]
            if derivatives:
                ds[:, j] = relativistic_series(model.beta, model.m, s_grid, t, "ds")[0]
                dt[:, j] = relativistic_series(model.beta, model.m, s_grid, t, "dt")[0]
    elif route == "RelativisticTilted":
        if not isinstance(model, RelativisticStable):
            raise DensityError("RelativisticTilted route needs a relativistic model")
        for j, t in enumerate(t_grid):
            vals[:, j] = relativistic_tilted(model.beta, model.m, s_grid, t)
            if derivatives:
                ds[:, j], dt[:, j] = relativistic_tilted_derivatives(model, s_grid, t)
    elif route == "FourierConvolution":
        t_max = float(t_grid[-1])
        missing = []
        for i, s in enumerate(s_grid):
            if s == 0.0:
                continue
            try:
                col = fourier_column(model, s, t_max, derivatives=derivatives)
            except FFTCapError:
                missing.append(i)
                continue
            vals[i] = col.at(t_grid, "f")
            if derivatives:
                ds[i] = col.at(t_grid, "ds")
                dt[i] = col.at(t_grid, "dt")
        if s_grid[0] == 0.0:
            vals[0] = model.levy_tail(t_grid)
            if derivatives:
                dt[0] = -model.levy_density(t_grid)
        if missing:
            route = _fill_small_s(model, s_grid, t_grid, vals, ds, dt, missing)
        elif derivatives and s_grid[0] == 0.0 and ns >= 3:
            h1, h2 = s_grid[1], s_grid[2]
            ds[0] = ds[1] + (ds[1] - ds[2]) * h1 / (h2 - h1)
    else:
        raise ValueError(f"unknown route {route!r}")
    vals = np.where((vals < 0) & (vals >= -1e-10), 0.0, vals)
    return DensityTable(s_grid, t_grid, vals, route, {"kind": model.kind, **model.params()}, ds, dt)
