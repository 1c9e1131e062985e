"""Moving boundaries ``phi(t)`` and structural validation of their assumptions.

Boundaries are described by parameters or knots rather than callables so
that monotonicity, flat-after-plateau, boundedness and the Lipschitz
constant can be read off exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Boundary",
    "Constant",
    "PiecewiseLinearMonotone",
    "SaturatingAffine",
    "ValidationReport",
    "ContractError",
    "eval_boundary",
    "validate",
    "first_hit_level",
    "load_knots_csv",
    "parse_boundary",
]


class ContractError(RuntimeError):
    """Raised when an operation is called on a boundary violating its precondition."""


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`.

    Attributes
    ----------
    A2a, A2b, A2c, A2d : bool
        Nondecreasing; constant after the first plateau; bounded; Lipschitz
        on the horizon.
    lipschitz : float
        Lipschitz constant over the horizon (``inf`` if none exists).
    messages : tuple of str
        One entry per failed flag naming the offending knot or parameter.
    """

    A2a: bool
    A2b: bool
    A2c: bool
    A2d: bool
    lipschitz: float
    messages: tuple = ()

    @property
    def ok(self) -> bool:
        return self.A2a and self.A2b and self.A2c and self.A2d

    def as_dict(self) -> dict:
        return {"A2a": self.A2a, "A2b": self.A2b, "A2c": self.A2c, "A2d": self.A2d,
                "lipschitz": self.lipschitz, "messages": list(self.messages)}


class Boundary:
    kind = "abstract"

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        raise NotImplementedError

    def validate(self, horizon: float) -> ValidationReport:
        raise NotImplementedError

    def inverse(self, x: float) -> Optional[float]:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    @property
    def is_level(self) -> bool:
        """True when the boundary is constant in time."""
        return False

    def params(self) -> dict:
        raise NotImplementedError

    def ident(self) -> str:
        p = ",".join(f"{k}={v}" for k, v in sorted(self.params().items()))
        return f"{self.kind}({p})"


@dataclass(frozen=True)
class Constant(Boundary):
    """Level boundary ``phi(t) = c``."""

    c: float
    kind: str = field(default="constant", init=False)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.c))
        return float(out) if out.ndim == 0 else out

    def validate(self, horizon: float) -> ValidationReport:
        return ValidationReport(True, True, True, True, 0.0)

    def inverse(self, x: float) -> Optional[float]:
        # the strictly increasing part is empty
        return None

    @property
    def sup(self) -> float:
        return float(self.c)

    @property
    def is_level(self) -> bool:
        return True

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class SaturatingAffine(Boundary):
    """``phi(t) = min(a + b t, cap)``; ``cap = inf`` gives an unbounded line."""

    a: float
    b: float
    cap: float = math.inf
    kind: str = field(default="affine", init=False)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.minimum(self.a + self.b * t, self.cap)
        return float(out) if out.ndim == 0 else out

    def validate(self, horizon: float) -> ValidationReport:
        msgs = []
        a2a = self.b >= 0
        if not a2a:
            msgs.append(f"A2a: negative slope b={self.b}")
        # strictly increasing up to the cap, flat afterwards
        a2b = a2a
        a2c = math.isfinite(self.cap) or self.b == 0
        if not a2c:
            msgs.append("A2c: no cap, sup phi = inf")
        lip = 0.0 if self.is_level else float(abs(self.b))
        return ValidationReport(a2a, a2b, a2c, True, lip, tuple(msgs))

    def inverse(self, x: float) -> Optional[float]:
        if self.b <= 0 or x < self.a or x >= self.cap:
            return None
        return (x - self.a) / self.b

    @property
    def sup(self) -> float:
        return float(self.cap) if self.b > 0 else float(min(self.a, self.cap))

    @property
    def is_level(self) -> bool:
        return self.b == 0 or self.cap <= self.a

    def params(self):
        return {"a": self.a, "b": self.b, "cap": self.cap}


class PiecewiseLinearMonotone(Boundary):
    """Continuous piecewise linear boundary through ``(t_i, phi_i)``.

    Parameters
    ----------
    t, values : sequences
        Knot times (strictly increasing, starting at 0) and values.
    terminal : {"constant", "slope"}
        Continuation after the last knot: flat, or extended by the last slope.
    """

    kind = "piecewise"

    def __init__(self, t, values, terminal: str = "constant"):
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("knots must be matching 1-d arrays")
        if t[0] != 0.0:
            raise ValueError("the first knot must sit at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knot times must be strictly increasing")
        if terminal not in ("constant", "slope"):
            raise ValueError("terminal must be 'constant' or 'slope'")
        self.t = t
        self.values = v
        self.terminal = terminal

    def __repr__(self):
        return f"PiecewiseLinearMonotone(knots={self.t.size}, terminal={self.terminal!r})"

    def _last_slope(self) -> float:
        if self.t.size < 2:
            return 0.0
        return float((self.values[-1] - self.values[-2]) / (self.t[-1] - self.t[-2]))

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.t, self.values)
        if self.terminal == "slope":
            out = np.where(t > self.t[-1], self.values[-1] + self._last_slope() * (t - self.t[-1]), out)
        return float(out) if out.ndim == 0 else out

    def _slopes(self):
        return np.diff(self.values) / np.diff(self.t)

    def validate(self, horizon: float) -> ValidationReport:
        msgs = []
        slopes = self._slopes()
        bad = np.nonzero(slopes < 0)[0]
        a2a = bad.size == 0
        if not a2a:
            i = int(bad[0])
            msgs.append(f"A2a: decreasing between knots {i} (t={self.t[i]}) and {i + 1} (t={self.t[i + 1]})")
        # once flat, always flat
        a2b = True
        flat = np.nonzero(slopes == 0)[0]
        if flat.size:
            first = int(flat[0])
            later = slopes[first + 1:]
            rising = np.nonzero(later != 0)[0]
            if rising.size or (self.terminal == "slope" and self._last_slope() != 0):
                a2b = False
                j = first + 1 + (int(rising[0]) if rising.size else later.size)
                msgs.append(f"A2b: flat from knot {first} (t={self.t[first]}) then changes at knot {j}")
        a2c = self.terminal == "constant" or self._last_slope() <= 0
        if not a2c:
            msgs.append("A2c: extended by a positive last slope, sup phi = inf")
        in_range = self.t[:-1] < horizon
        lip_knots = np.abs(slopes[in_range]) if slopes.size else np.array([])
        lip = float(lip_knots.max()) if lip_knots.size else 0.0
        if self.terminal == "slope" and horizon > self.t[-1]:
            lip = max(lip, abs(self._last_slope()))
        return ValidationReport(a2a, a2b, a2c, True, lip, tuple(msgs))

    def inverse(self, x: float) -> Optional[float]:
        rep = self.validate(float(self.t[-1]) + 1.0)
        if not (rep.A2a and rep.A2b):
            raise ContractError("first_hit_level needs a nondecreasing boundary that stays flat after a plateau")
        slopes = self._slopes()
        flat = np.nonzero(slopes == 0)[0]
        end = int(flat[0]) if flat.size else self.t.size - 1
        top = self.values[end]
        if self.terminal == "slope" and not flat.size and self._last_slope() > 0:
            if x >= self.values[-1]:
                return float(self.t[-1] + (x - self.values[-1]) / self._last_slope())
            top = math.inf
        if x < self.values[0] or x >= top:
            return None
        return float(np.interp(x, self.values[: end + 1], self.t[: end + 1]))

    @property
    def sup(self) -> float:
        if self.terminal == "slope" and self._last_slope() > 0:
            return math.inf
        return float(self.values.max())

    @property
    def is_level(self) -> bool:
        return bool(np.all(self.values == self.values[0])) and (
            self.terminal == "constant" or self._last_slope() == 0)

    def params(self):
        return {"knots": list(zip(self.t.tolist(), self.values.tolist())), "terminal": self.terminal}


def eval_boundary(b: Boundary, t):
    """Evaluate ``phi(t)`` for ``t >= 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("boundary is defined for t >= 0")
    return b.eval(t)


def validate(b: Boundary, horizon: float) -> ValidationReport:
    """Structural check of monotonicity, plateau, boundedness and Lipschitz flags."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    return b.validate(horizon)


def first_hit_level(b: Boundary, x: float) -> Optional[float]:
    """The unique ``w0`` with ``phi(w0) = x`` on the strictly increasing part, or None."""
    if not isinstance(b, PiecewiseLinearMonotone):
        rep = b.validate(1.0)
        if not (rep.A2a and rep.A2b):
            raise ContractError("first_hit_level needs a validated boundary")
    return b.inverse(x)


def load_knots_csv(path, terminal: str = "constant") -> PiecewiseLinearMonotone:
    """Read knots from a CSV file with header ``t,phi``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "phi"]:
            raise ValueError(f"{path}: expected header 't,phi'")
        rows = [(float(r["t"]), float(r["phi"])) for r in reader]
    arr = np.array(rows)
    return PiecewiseLinearMonotone(arr[:, 0], arr[:, 1], terminal=terminal)


def parse_boundary(text: str) -> Boundary:
    """Build a boundary from ``constant:1``, ``affine:a,b,cap`` or ``piecewise:path.csv``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "constant":
        return Constant(float(arg))
    if kind == "affine":
        parts = [float(v) for v in arg.split(",")]
        if len(parts) == 2:
            parts.append(math.inf)
        return SaturatingAffine(*parts)
    if kind == "piecewise":
        path, _, term = arg.partition(";")
        return load_knots_csv(path, terminal=term or "constant")
    raise ValueError(f"unknown boundary kind {kind!r}")
