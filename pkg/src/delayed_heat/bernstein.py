"""Bernstein functions, Levy tails and complex exponents.

A Bernstein function without drift or killing is determined by its Levy
density ``nu``::

    Phi(lam) = int_0^inf (1 - exp(-lam s)) nu(s) ds

Three model kinds are available:

* :class:`Stable` with ``Phi(lam) = lam**beta``;
* :class:`RelativisticStable` with ``Phi(lam) = (lam + m)**beta - m**beta``;
* :class:`TabulatedLevyDensity`, a log-log piecewise linear ``nu`` with
  power-law extrapolation at both ends.

Every model exposes the same numerical surface (``phi``, ``phi_complex``,
``levy_tail``, ``tail_integral``, ``tail_moment`` ...) so that the density,
kernel and Monte Carlo modules never branch on the kind except where an
exact sampler or series exists.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

__all__ = [
    "BernsteinModel",
    "Stable",
    "RelativisticStable",
    "TabulatedLevyDensity",
    "OreyBound",
    "DomainError",
    "phi",
    "levy_tail",
    "tail_integral",
    "psi",
    "orey_lower_bound",
    "regular_variation_index",
    "upper_gamma",
    "panel_tail_masses",
    "load_levy_csv",
    "parse_model",
]

# default quadrature tolerances for all numeric integrals in this module
RTOL = 1e-8
ATOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a Bernstein-function operation."""


def upper_gamma(a: float, x):
    """Non-regularised upper incomplete gamma ``Gamma(a, x)`` for any real a.

    scipy only covers ``a > 0``; for ``a <= 0`` the recurrence
    ``Gamma(a, x) = (Gamma(a + 1, x) - x**a exp(-x)) / a`` is applied
    until the first argument is positive. ``a`` must not be a non-positive
    integer.
    """
    x = np.asarray(x, dtype=float)
    if a > 0:
        return special.gammaincc(a, x) * special.gamma(a)
    if float(a).is_integer():
        raise DomainError("upper_gamma: non-positive integer order not supported")
    shifts = int(math.floor(-a)) + 1
    val = special.gammaincc(a + shifts, x) * special.gamma(a + shifts)
    for k in range(shifts - 1, -1, -1):
        ak = a + k
        val = (val - x**ak * np.exp(-x)) / ak
    return val


def _log1p_complex(w):
    # numpy's complex log1p loses relative accuracy for |w| << 1
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.log(1.0 + w)
    small = np.abs(w) < 1e-3
    if np.any(small):
        ws = w[small]
        out[small] = ws * (1 - ws * (1 / 2 - ws * (1 / 3 - ws * (1 / 4 - ws / 5))))
    return out


def _expm1_complex(w):
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.exp(w) - 1.0
    small = np.abs(w) < 1e-3
    if np.any(small):
        ws = w[small]
        out[small] = ws * (1 + ws * (1 / 2 + ws * (1 / 6 + ws * (1 / 24 + ws / 120))))
    return out


@dataclass(frozen=True)
class OreyBound:
    """Constants of a lower envelope ``Re Psi(xi) >= C xi**(2 - gamma)``.

    Attributes
    ----------
    C : float
        Envelope constant, the minimum of ``Re Psi / xi**alpha`` on the window.
    gamma : float
        Orey index in (1, 2); the envelope exponent is ``alpha = 2 - gamma``.
    M : float
        The envelope is asserted for ``xi > M``.
    verified : bool
        False when the fit did not produce an admissible exponent. Density
        routines refuse to run on unverified models.
    note : str
        Human-readable description of how the constants were obtained.
    """

    C: float
    gamma: float
    M: float
    verified: bool = True
    note: str = ""

    @property
    def alpha(self) -> float:
        return 2.0 - self.gamma

    def cutoff(self, s: float, eps: float = 1e-12, safety: float = 2.0) -> float:
        """Frequency beyond which ``exp(-s C xi**alpha) < eps``, times ``safety``."""
        if not self.verified:
            raise DomainError("A3 unverified: no Fourier truncation available")
        xi = (math.log(1.0 / eps) / (s * self.C)) ** (1.0 / self.alpha)
        return safety * max(xi, self.M)


class BernsteinModel:
    """Common interface of all Bernstein-function models.

    Subclasses provide the Levy density and closed forms where they exist;
    everything else is derived here.
    """

    kind: str = "abstract"

    # -- properties the subclasses fill in -------------------------------------
    @property
    def gamma0(self) -> float:
        """Regular-variation index of ``Phi`` at ``0+``."""
        raise NotImplementedError

    @property
    def orey_gamma(self) -> Optional[float]:
        """Orey index where it is known analytically, else None."""
        return None

    @property
    def infinite_activity(self) -> bool:
        """Whether ``nu(0, inf) = inf`` (assumption A1)."""
        return True

    def params(self) -> dict:
        raise NotImplementedError

    # -- primitives --------------------------------------------------------------
    def phi(self, lam):
        raise NotImplementedError

    def phi_complex(self, z):
        """Analytic continuation of ``Phi`` to ``Re z >= 0``."""
        raise NotImplementedError

    def levy_density(self, s):
        raise NotImplementedError

    def levy_tail(self, s):
        raise NotImplementedError

    def small_jump_moment(self, x, order: int):
        """``int_0^x s**order nu(s) ds`` for order 1 or 2."""
        raise NotImplementedError

    # -- derived quantities ----------------------------------------------------
    def tail_integral(self, t):
        """``I(t) = int_0^t nubar``, via ``I = M1(t) + t nubar(t)``."""
        t = np.asarray(t, dtype=float)
        tt = np.where(t > 0, t, 1.0)
        out = self.small_jump_moment(tt, 1) + tt * self.levy_tail(tt)
        return np.where(t > 0, out, 0.0)

    def tail_moment(self, t):
        """``J(t) = int_0^t tau nubar(tau) dtau = (M2(t) + t**2 nubar(t)) / 2``."""
        t = np.asarray(t, dtype=float)
        tt = np.where(t > 0, t, 1.0)
        out = 0.5 * (self.small_jump_moment(tt, 2) + tt * tt * self.levy_tail(tt))
        return np.where(t > 0, out, 0.0)

    def psi(self, xi):
        """Complex exponent ``Psi(xi) = Phi(-i xi)``."""
        xi = np.asarray(xi, dtype=float)
        return self.phi_complex(-1j * xi)

    def potential_laplace(self, lam):
        """Laplace transform of the potential density, ``1 / Phi(lam)``."""
        return 1.0 / self.phi(lam)

    def describe(self) -> str:
        p = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.kind}({p})"


@dataclass(frozen=True)
class Stable(BernsteinModel):
    """One-sided stable subordinator, ``Phi(lam) = lam**beta``."""

    beta: float
    kind: str = field(default="stable", init=False)

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"stable index must lie in (0, 1), got {self.beta}")

    @property
    def gamma0(self) -> float:
        return self.beta

    @property
    def orey_gamma(self) -> float:
        return 2.0 - self.beta

    def params(self):
        return {"beta": self.beta}

    def phi(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam**self.beta

    def phi_complex(self, z):
        z = np.asarray(z, dtype=complex)
        return np.where(z == 0, 0.0, z**self.beta)

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        return self.beta * s ** (-self.beta - 1.0) / special.gamma(1.0 - self.beta)

    def levy_tail(self, s):
        s = np.asarray(s, dtype=float)
        return s ** (-self.beta) / special.gamma(1.0 - self.beta)

    def small_jump_moment(self, x, order: int):
        x = np.asarray(x, dtype=float)
        b = self.beta
        return b * x ** (order - b) / ((order - b) * special.gamma(1.0 - b))

    def tail_integral(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, np.abs(t) ** (1.0 - self.beta), 0.0) / special.gamma(2.0 - self.beta)

    def tail_moment(self, t):
        t = np.asarray(t, dtype=float)
        b = self.beta
        return np.where(t > 0, np.abs(t) ** (2.0 - b), 0.0) / ((2.0 - b) * special.gamma(1.0 - b))


@dataclass(frozen=True)
class RelativisticStable(BernsteinModel):
    """Exponentially tempered stable subordinator.

    ``Phi(lam) = (lam + m)**beta - m**beta`` with Levy density
    ``beta s**(-beta-1) exp(-m s) / Gamma(1-beta)``.
    """

    beta: float
    m: float
    kind: str = field(default="relativistic", init=False)

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"stable index must lie in (0, 1), got {self.beta}")
        if not self.m > 0:
            raise DomainError(f"tempering mass must be positive, got {self.m}")

    @property
    def gamma0(self) -> float:
        # Phi'(0+) = beta m**(beta-1) is finite and positive
        return 1.0

    @property
    def orey_gamma(self) -> float:
        return 2.0 - self.beta

    def params(self):
        return {"beta": self.beta, "m": self.m}

    def phi(self, lam):
        lam = np.asarray(lam, dtype=float)
        mb = self.m**self.beta
        return mb * np.expm1(self.beta * np.log1p(lam / self.m))

    def phi_complex(self, z):
        z = np.asarray(z, dtype=complex)
        mb = self.m**self.beta
        out = mb * _expm1_complex(self.beta * _log1p_complex(z / self.m))
        return out.reshape(z.shape)

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        b = self.beta
        return b * s ** (-b - 1.0) * np.exp(-self.m * s) / special.gamma(1.0 - b)

    def levy_tail(self, s):
        s = np.asarray(s, dtype=float)
        b = self.beta
        return b * self.m**b * upper_gamma(-b, self.m * s) / special.gamma(1.0 - b)

    def small_jump_moment(self, x, order: int):
        x = np.asarray(x, dtype=float)
        b, m = self.beta, self.m
        if order == 1:
            return b * m ** (b - 1.0) * special.gammainc(1.0 - b, m * x)
        if order == 2:
            return b * (1.0 - b) * m ** (b - 2.0) * special.gammainc(2.0 - b, m * x)
        raise ValueError("order must be 1 or 2")


def _power_integral(c, p, a, b):
    """``int_a^b c s**p ds`` elementwise, with the logarithmic case."""
    q = p + 1.0
    if abs(q) < 1e-12:
        return c * np.log(b / a)
    return c * (b**q - a**q) / q


class TabulatedLevyDensity(BernsteinModel):
    """Levy density given on a grid, log-log linear between knots.

    Below the first knot ``nu(s) = nu_0 (s/s_0)**p0`` and above the last
    knot ``nu(s) = nu_K (s/s_K)**p_inf``. ``p0`` in (-2, -1) gives
    infinite activity with ``int (s ^ 1) nu(ds) < inf``; ``p_inf < -1`` makes
    the tail integrable.

    Parameters
    ----------
    s, nu : sequences of positive floats
        Knots (strictly increasing) and density values.
    p0, p_inf : float
        Extrapolation exponents at ``0`` and ``inf``.
    orey_window : (float, float)
        Frequency window used to fit the Orey envelope.
    """

    kind = "tabulated"

    def __init__(self, s: Sequence[float], nu: Sequence[float], p0: float, p_inf: float,
                 orey_window=(10.0, 1e4), source: str = ""):
        s = np.asarray(s, dtype=float)
        nu = np.asarray(nu, dtype=float)
        if s.ndim != 1 or s.size < 2 or s.shape != nu.shape:
            raise DomainError("tabulated Levy density needs matching 1-d arrays of length >= 2")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise DomainError("knots must be positive and strictly increasing")
        if np.any(nu <= 0):
            raise DomainError("Levy density values must be positive")
        if not p0 > -2.0:
            raise DomainError(f"exponent at 0 must exceed -2 for int s^2 nu < inf, got {p0}")
        if not p_inf < -1.0:
            raise DomainError(f"exponent at infinity must be below -1, got {p_inf}")
        self.s = s
        self.nu = nu
        self.p0 = float(p0)
        self.p_inf = float(p_inf)
        self.orey_window = tuple(orey_window)
        self.source = source
        # per-segment exponents; segment i spans [s_i, s_{i+1}]
        self._p = np.diff(np.log(nu)) / np.diff(np.log(s))
        self._orey: Optional[OreyBound] = None
        self._rv: Optional[float] = None

    def __repr__(self):
        return f"TabulatedLevyDensity(n={self.s.size}, p0={self.p0}, p_inf={self.p_inf})"

    def params(self):
        return {"knots": int(self.s.size), "p0": self.p0, "p_inf": self.p_inf,
                "source": self.source}

    @property
    def infinite_activity(self) -> bool:
        return self.p0 <= -1.0

    @property
    def gamma0(self) -> float:
        if self._rv is None:
            self._rv = _fit_regular_variation(self)
        return self._rv

    @property
    def orey_gamma(self) -> Optional[float]:
        return None

    # segments as (lo, hi, coefficient c, exponent p) with nu = c s**p
    def _segments(self):
        s, nu, p = self.s, self.nu, self._p
        segs = [(0.0, s[0], nu[0] / s[0] ** self.p0, self.p0)]
        for i in range(s.size - 1):
            segs.append((s[i], s[i + 1], nu[i] / s[i] ** p[i], p[i]))
        segs.append((s[-1], np.inf, nu[-1] / s[-1] ** self.p_inf, self.p_inf))
        return segs

    def levy_density(self, s):
        s = np.asarray(s, dtype=float)
        ls = np.log(np.where(s > 0, s, 1.0))
        out = np.exp(np.interp(ls, np.log(self.s), np.log(self.nu)))
        lo = s < self.s[0]
        hi = s > self.s[-1]
        out = np.where(lo, self.nu[0] * (np.where(lo, s, 1.0) / self.s[0]) ** self.p0, out)
        out = np.where(hi, self.nu[-1] * (np.where(hi, s, 1.0) / self.s[-1]) ** self.p_inf, out)
        return out

    def _integral(self, x, k: int, upper: bool):
        """``int s**k nu`` over (x, inf) if upper else (0, x), scalar x."""
        total = 0.0
        for lo, hi, c, p in self._segments():
            if upper:
                a, b = max(lo, x), hi
            else:
                a, b = lo, min(hi, x)
            if b <= a:
                continue
            q = p + k + 1.0
            if np.isinf(b):
                total += -c * a**q / q
            elif a == 0.0:
                total += c * b**q / q
            else:
                total += float(_power_integral(c, p + k, a, b))
        return total

    def _knot_tails(self):
        if getattr(self, "_tail_cache", None) is None:
            self._tail_cache = np.array([self._integral(v, 0, True) for v in self.s])
        return self._tail_cache

    def levy_tail(self, s):
        s = np.asarray(s, dtype=float)
        if s.size <= 8:
            return np.vectorize(lambda v: self._integral(v, 0, True), otypes=[float])(s)
        # tail at the next knot plus the partial segment up to it
        knots, tails = self.s, self._knot_tails()
        x = np.where(s > 0, s, knots[0])
        i = np.clip(np.searchsorted(knots, x, side="right"), 0, knots.size)
        inner = np.clip(i, 1, knots.size - 1)
        p = np.where(i == 0, self.p0, self._p[inner - 1])
        a_knot = np.where(i == 0, knots[0], knots[inner - 1])
        nu_a = np.where(i == 0, self.nu[0], self.nu[inner - 1])
        upper = np.where(i == 0, knots[0], knots[inner])
        t_up = np.where(i == 0, tails[0], tails[inner])
        q = p + 1.0
        safe_q = np.where(np.abs(q) < 1e-12, 1.0, q)
        c = nu_a / a_knot**p
        part = np.where(np.abs(q) < 1e-12, c * np.log(upper / x), c * (upper**safe_q - x**safe_q) / safe_q)
        out = t_up + part
        big = i >= knots.size
        q_inf = self.p_inf + 1.0
        out = np.where(big, -self.nu[-1] / knots[-1] ** self.p_inf * np.where(big, x, 1.0) ** q_inf / q_inf, out)
        return np.where(s > 0, out, np.inf)

    def small_jump_moment(self, x, order: int):
        x = np.asarray(x, dtype=float)
        return np.vectorize(lambda v: self._integral(v, order, False), otypes=[float])(x)

    def phi(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.real(self.phi_complex(lam.astype(complex)))

    def phi_complex(self, z):
        z = np.asarray(z, dtype=complex)
        return np.vectorize(self._phi_scalar, otypes=[complex])(z)

    # vectors longer than this go through the cached spline of Psi
    PSI_DIRECT_MAX = 256

    def psi(self, xi):
        """``Psi(xi)``; long vectors use a log-spline of the direct quadrature (relative error ~1e-9)."""
        xi = np.asarray(xi, dtype=float)
        if xi.size <= self.PSI_DIRECT_MAX:
            return self.phi_complex(-1j * xi)
        mag, arg, lo, hi, k_lo, k_hi = self._psi_spline()
        a = np.abs(xi)
        la = np.log(np.maximum(a, 1e-300))
        inner = np.clip(la, lo, hi)
        lm = mag(inner) + np.where(la < lo, k_lo * (la - lo), 0.0) + np.where(la > hi, k_hi * (la - hi), 0.0)
        out = np.exp(lm - 1j * np.sign(xi) * arg(inner))
        return np.where(a == 0, 0.0j, out)

    def _psi_spline(self):
        if getattr(self, "_psi_cache", None) is None:
            x = np.geomspace(1e-8, 1e8, 481)
            v = np.array([self._phi_scalar(-1j * xv) for xv in x])
            lx = np.log(x)
            lm = np.log(np.abs(v))
            # Psi(xi) for xi > 0 has negative imaginary part; store -arg
            ph = -np.angle(v)
            mag = CubicSpline(lx, lm)
            arg = CubicSpline(lx, ph)
            k_lo = float((lm[1] - lm[0]) / (lx[1] - lx[0]))
            k_hi = float((lm[-1] - lm[-2]) / (lx[-1] - lx[-2]))
            self._psi_cache = (mag, arg, float(lx[0]), float(lx[-1]), k_lo, k_hi)
        return self._psi_cache

    def _phi_scalar(self, z: complex) -> complex:
        # Split (0, inf) at 1/|z| and 40/|z|: power series in z on the
        # left, Gauss-Legendre panels in the middle, and integration by
        # parts (asymptotic in 1/(z s)) on the far oscillatory tail.
        r = abs(z)
        if r == 0.0:
            return 0.0j
        s_lo, s_hi = 1.0 / r, 40.0 / r
        total = 0.0j
        # series: 1 - e^{-zs} = -sum_{k>=1} (-z s)^k / k!
        term_fact = 1.0
        for k in range(1, 40):
            term_fact /= k
            mom = self._integral(s_lo, k, False)
            contrib = -((-z) ** k) * term_fact * mom
            total += contrib
            if abs(contrib) < 1e-17 * max(abs(total), 1e-300) and k > 3:
                break
        # panels on [s_lo, s_hi], broken at the knots
        knots = self.s[(self.s > s_lo) & (self.s < s_hi)]
        edges = np.concatenate(([s_lo], knots, [s_hi]))
        width = np.pi / (2.0 * r)
        xg, wg = np.polynomial.legendre.leggauss(16)
        for a, b in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((b - a) / width)))
            e = np.linspace(a, b, n + 1)
            mid = 0.5 * (e[1:] + e[:-1])[:, None]
            half = 0.5 * (e[1:] - e[:-1])[:, None]
            nodes = (mid + half * xg[None, :]).ravel()
            weights = (half * wg[None, :]).ravel()
            total += np.sum(weights * (1.0 - np.exp(-z * nodes)) * self.levy_density(nodes))
        # tail: nubar(s_hi) - int_{s_hi}^inf e^{-zs} nu(s) ds
        total += self._integral(s_hi, 0, True)
        osc = 0.0j
        for lo, hi, c, p in self._segments():
            a, b = max(lo, s_hi), hi
            if b <= a:
                continue
            osc += _osc_power(z, c, p, a, b)
        return total - osc

    def orey(self) -> OreyBound:
        if self._orey is None:
            self._orey = _fit_orey(self, *self.orey_window)
        return self._orey


def _osc_power(z, c, p, a, b, terms: int = 8) -> complex:
    """``int_a^b e^{-z s} c s**p ds`` by repeated integration by parts.

    Accurate when ``|z| a >> 1``; the ratio of successive terms is about
    ``p / (z s)``.
    """

    def antideriv(s):
        if np.isinf(s):
            return 0.0j
        acc = 0.0j
        coef = c
        for k in range(terms):
            acc += coef * s ** (p - k) / z ** (k + 1)
            coef *= p - k
        return -np.exp(-z * s) * acc

    return antideriv(b) - antideriv(a)


def _fit_regular_variation(model: BernsteinModel, lam_lo=1e-4, lam_hi=1e-2, n=25) -> float:
    lam = np.geomspace(lam_lo, lam_hi, n)
    slope = np.polyfit(np.log(lam), np.log(model.phi(lam)), 1)[0]
    return float(slope)


def _fit_orey(model: BernsteinModel, xi_lo: float, xi_hi: float, n: int = 60,
              alpha: Optional[float] = None) -> OreyBound:
    xi = np.geomspace(xi_lo, xi_hi, n)
    re = np.real(model.psi(xi))
    if np.any(re <= 0) or not np.all(np.isfinite(re)):
        return OreyBound(C=float("nan"), gamma=float("nan"), M=xi_lo, verified=False,
                         note="A3 unverified: Re Psi not positive on the window")
    fitted = float(np.polyfit(np.log(xi), np.log(re), 1)[0])
    a = fitted if alpha is None else alpha
    if not 0.0 < a < 1.0:
        return OreyBound(C=float("nan"), gamma=2.0 - fitted, M=xi_lo, verified=False,
                         note=f"A3 unverified: fitted exponent {fitted:.4f} outside (0, 1)")
    C = float(np.min(re / xi**a))
    src = "analytic exponent" if alpha is not None else "least-squares exponent (heuristic)"
    return OreyBound(C=C, gamma=2.0 - a, M=xi_lo, verified=C > 0,
                     note=f"{src}; fitted slope {fitted:.4f} on [{xi_lo:g}, {xi_hi:g}]")


# -- module-level operations -------------------------------------------------------

def phi(model: BernsteinModel, lam):
    """Evaluate ``Phi(lam)`` for ``lam >= 0``."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0) or np.any(np.isnan(lam_arr)):
        raise DomainError("phi is defined for lam >= 0")
    out = model.phi(lam_arr)
    return float(out) if np.ndim(out) == 0 else out


def levy_tail(model: BernsteinModel, s):
    """Evaluate the Levy tail ``nubar(s) = nu(s, inf)`` for ``s > 0``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0) or np.any(np.isnan(s_arr)):
        raise DomainError("levy_tail is defined for s > 0")
    out = model.levy_tail(s_arr)
    return float(out) if np.ndim(out) == 0 else out


def tail_integral(model: BernsteinModel, t):
    """Evaluate ``I(t) = int_0^t nubar(tau) dtau`` for ``t > 0``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise DomainError("tail_integral is defined for t >= 0")
    out = model.tail_integral(t_arr)
    return float(out) if np.ndim(out) == 0 else out


def psi(model: BernsteinModel, xi):
    """Evaluate the complex exponent ``Psi(xi) = Phi(-i xi)``."""
    out = model.psi(xi)
    return complex(out) if np.ndim(out) == 0 else out


def orey_lower_bound(model: BernsteinModel, xi_max: float = 1e4, xi_min: float = 10.0) -> OreyBound:
    """Constants ``(C, gamma, M)`` with ``Re Psi(xi) >= C xi**(2-gamma)`` on ``(M, xi_max]``.

    Catalog models use their analytic exponent and only fit the constant;
    tabulated models fit both, and the result is flagged as a heuristic.
    """
    if not model.infinite_activity:
        return OreyBound(C=float("nan"), gamma=float("nan"), M=xi_min, verified=False,
                         note="A1 fails: finite Levy mass, no Orey envelope")
    if isinstance(model, TabulatedLevyDensity):
        if (xi_min, xi_max) == model.orey_window:
            return model.orey()
        return _fit_orey(model, xi_min, xi_max)
    alpha = 2.0 - model.orey_gamma
    if isinstance(model, Stable):
        # Re Psi = cos(pi beta / 2) xi**beta exactly
        return OreyBound(C=math.cos(math.pi * model.beta / 2.0), gamma=model.orey_gamma,
                         M=0.0, note="closed form")
    return _fit_orey(model, xi_min, xi_max, alpha=alpha)


def regular_variation_index(model: BernsteinModel) -> float:
    """Index ``gamma`` with ``Phi(lam) ~ lam**gamma`` (slowly varying factor) at ``0+``."""
    return float(model.gamma0)


def panel_tail_masses(model: BernsteinModel, delta: float, n: int):
    """Exact panel integrals of ``nubar`` on ``[j delta, (j+1) delta]``.

    Returns ``(A, B)`` where ``A_j = int nubar`` and
    ``B_j = int (tau - j delta) nubar(tau) dtau / delta`` over panel ``j``.
    Early panels use the closed-form primitives ``I`` and ``J``; later
    panels (where differencing primitives would cancel) use 6-point
    Gauss-Legendre, which is accurate there because ``nubar`` is smooth
    away from the origin.
    """
    j = np.arange(n, dtype=float)
    A = np.empty(n)
    B = np.empty(n)
    n_exact = min(n, 32)
    e = delta * np.arange(n_exact + 1, dtype=float)
    I = model.tail_integral(e)
    J = model.tail_moment(e)
    A[:n_exact] = np.diff(I)
    B[:n_exact] = (np.diff(J) - e[:-1] * np.diff(I)) / delta
    if n > n_exact:
        xg, wg = np.polynomial.legendre.leggauss(6)
        jj = j[n_exact:, None]
        nodes = delta * (jj + 0.5 * (xg[None, :] + 1.0))
        vals = model.levy_tail(nodes.ravel()).reshape(nodes.shape)
        w = 0.5 * delta * wg[None, :]
        A[n_exact:] = np.sum(w * vals, axis=1)
        B[n_exact:] = np.sum(w * vals * 0.5 * (xg[None, :] + 1.0), axis=1)
    return A, B


def load_levy_csv(path, p0: float, p_inf: float, **kw) -> TabulatedLevyDensity:
    """Load a tabulated Levy density from a CSV file with header ``s,nu``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["s", "nu"]:
            raise DomainError(f"{path}: expected header 's,nu'")
        rows = [(float(r["s"]), float(r["nu"])) for r in reader]
    arr = np.array(rows)
    return TabulatedLevyDensity(arr[:, 0], arr[:, 1], p0, p_inf, source=str(path), **kw)


def parse_model(text: str, p0: Optional[float] = None, p_inf: Optional[float] = None) -> BernsteinModel:
    """Build a model from ``stable:0.5``, ``relativistic:0.5,1`` or ``tabulated:path.csv``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "stable":
        return Stable(float(arg))
    if kind in ("relativistic", "relativisticstable"):
        b, m = (float(v) for v in arg.split(","))
        return RelativisticStable(b, m)
    if kind == "tabulated":
        if p0 is None or p_inf is None:
            raise DomainError("tabulated model needs extrapolation exponents p0 and p_inf")
        return load_levy_csv(arg, p0, p_inf)
    raise DomainError(f"unknown model kind {kind!r}")


def tail_consistency(model: BernsteinModel, lam: float) -> tuple[float, float]:
    """``(Phi(lam), lam int_0^inf exp(-lam s) nubar(s) ds)`` for comparison.

    The second value is an independent quadrature of the integrated-by-parts
    representation; the substitution ``s = exp(u)`` removes the endpoint
    singularity.
    """
    def integrand(u):
        s = math.exp(u)
        return math.exp(-lam * s) * float(model.levy_tail(s)) * s

    hi = math.log(60.0 / lam)
    val, _ = integrate.quad(integrand, -60.0, hi, epsabs=ATOL, epsrel=1e-11, limit=400)
    return float(model.phi(lam)), lam * val
