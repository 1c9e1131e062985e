"""Discrete non-local time derivative with a Levy-tail memory kernel.

For a function sampled on a uniform grid and reconstructed piecewise
linearly, the derivative

    D f(t) = d/dt int_0^t nubar(t - s) (f(s) - f(0)) ds
           = int_0^t nubar(t - s) f'(s) ds

is evaluated exactly for that reconstruction:

    D f(t_k) = sum_{j<k} (f_{j+1} - f_j) / dt * w_{k-1-j},
    w_m = int_{m dt}^{(m+1) dt} nubar(tau) dtau.

The weights are exact panel masses of ``nubar`` (closed forms for the
catalog kinds), which keeps first-order accuracy at the singular panel
next to ``tau = 0``. Evaluating every ``k`` costs O(N^2).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bernstein import BernsteinModel, panel_tail_masses

__all__ = [
    "TimeGridFunction",
    "GridError",
    "memory_weights",
    "apply_nonlocal_derivative",
    "nonlocal_derivative_all",
    "ExtremalReport",
    "extremal_sign_check",
]


class GridError(ValueError):
    """The sampling grid is not uniform or not anchored at zero."""


@dataclass(frozen=True)
class TimeGridFunction:
    """Samples of a function on ``t_j = j dt``.

    Attributes
    ----------
    t_grid : ndarray
        Uniform grid starting at 0.
    values : ndarray
        Function values on the grid.
    """

    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.size < 2 or v.shape != t.shape:
            raise GridError("need matching 1-d grids with at least two points")
        if t[0] != 0.0:
            raise GridError("time grid must start at 0")
        d = np.diff(t)
        if np.any(d <= 0):
            raise GridError("time grid must be strictly increasing")
        if np.max(np.abs(d - d[0])) > 1e-12 * max(abs(t[-1]), d[0]):
            raise GridError("time grid must be uniform")

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def value_at_0(self) -> float:
        return float(self.values[0])

    @classmethod
    def from_callable(cls, f, T: float, n: int) -> "TimeGridFunction":
        t = np.linspace(0.0, T, n + 1)
        return cls(t, np.asarray(f(t), dtype=float))


def memory_weights(model: BernsteinModel, dt: float, n: int) -> np.ndarray:
    """Weights ``w_m = int_{m dt}^{(m+1) dt} nubar`` for ``m = 0..n-1``."""
    A, _ = panel_tail_masses(model, dt, n)
    return A


def apply_nonlocal_derivative(model: BernsteinModel, f: TimeGridFunction, k: int,
                              weights: Optional[np.ndarray] = None) -> float:
    """Non-local derivative of the piecewise linear interpolant at ``t_k``, ``k >= 1``."""
    n = f.t_grid.size - 1
    if not 1 <= k <= n:
        raise IndexError(f"grid index must satisfy 1 <= k <= {n}, got {k}")
    if weights is None:
        weights = memory_weights(model, f.dt, k)
    slopes = np.diff(f.values[: k + 1]) / f.dt
    # slope on panel j meets weight w_{k-1-j}
    return float(np.dot(slopes, weights[:k][::-1]))


def nonlocal_derivative_all(model: BernsteinModel, f: TimeGridFunction) -> np.ndarray:
    """Derivative at every ``t_k``, ``k = 1..N`` (index 0 of the result is NaN).

    Uses a full discrete convolution, so the cost is O(N^2) like the
    pointwise definition, but in one vectorised call.
    """
    n = f.t_grid.size - 1
    w = memory_weights(model, f.dt, n)
    slopes = np.diff(f.values) / f.dt
    out = np.empty(n + 1)
    out[0] = np.nan
    out[1:] = np.convolve(slopes, w)[:n]
    return out


@dataclass(frozen=True)
class ExtremalReport:
    """Result of :func:`extremal_sign_check`.

    Attributes
    ----------
    argmax : int
        Index of the first maximiser.
    value : float
        Non-local derivative at the maximiser (NaN when skipped).
    sign_ok : bool
        Whether ``value >= -tol``.
    skipped : bool
        True when the maximum sits at ``t = 0`` where the property says nothing.
    tol : float
        Tolerance used, ``1e-8`` times the scale of ``f``.
    """

    argmax: int
    value: float
    sign_ok: bool
    skipped: bool
    tol: float


def extremal_sign_check(model: BernsteinModel, f: TimeGridFunction, rel_tol: float = 1e-8) -> ExtremalReport:
    """Check that the derivative is nonnegative at the first global maximiser."""
    k = int(np.argmax(f.values))
    scale = max(float(np.max(np.abs(f.values))), 1e-300)
    tol = rel_tol * scale
    if k == 0:
        return ExtremalReport(0, float("nan"), True, True, tol)
    val = apply_nonlocal_derivative(model, f, k)
    return ExtremalReport(k, val, val >= -tol, False, tol)
