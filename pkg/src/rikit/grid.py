"""Grids on (0, 1] and the piecewise-constant function carrier.

A :class:`Grid` stores the right endpoints ``x_1 < ... < x_N = 1`` of its
cells; the left endpoint 0 is implicit, so cell ``i`` is ``[x_{i-1}, x_i)``
with ``x_{-1} = 0``.  Every function the toolkit manipulates is a
:class:`StepFunction` on such a grid.

Two sets of representative points are used:

``left``
    Left endpoints, with 0 for the first cell.  Step functions are
    right-continuous, so ``f(left[i])`` is the value on cell ``i`` and a
    monotone argument map evaluated here keeps ``f*(0+)`` reachable.
``points``
    Left endpoints except for the first cell, which uses ``x_1 / 2``.  This
    is where continuous weights and sampled profiles are evaluated, since
    many of them (``ell**a``, ``t**-g``) are singular at 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InvalidArgument

SCHEMES = ("geometric-toward-0", "geometric-toward-both-ends", "uniform", "custom")
MONOTONE_FLAGS = ("unknown", "nonincreasing")


def _geometric_breakpoints(size: int, min_cell: float) -> np.ndarray:
    # widths min_cell * r**k, k = 0..size-1, summing to 1
    target = -np.log(min_cell)

    def excess(q):
        with np.errstate(over="ignore"):
            return np.log(np.expm1(size * q)) - np.log(np.expm1(q)) - target

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    lo = 1e-15
    if excess(lo) >= 0:
        return np.arange(1, size + 1, dtype=float) / size
    q = brentq(excess, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    k = np.arange(1, size + 1, dtype=float)
    bp = min_cell * np.expm1(k * q) / np.expm1(q)
    bp[0] = min_cell
    bp[-1] = 1.0
    return bp


@dataclass(frozen=True, eq=False)
class Grid:
    breakpoints: np.ndarray
    scheme: str = "custom"
    min_cell: float | None = None
    _key: str = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 1:
            raise InvalidArgument("breakpoints must be a nonempty 1-d sequence")
        if bp[-1] != 1.0:
            raise InvalidArgument("last breakpoint must be 1")
        if bp[0] <= 0.0 or np.any(np.diff(bp) <= 0.0):
            raise InvalidArgument("breakpoints must be strictly increasing in (0, 1]")
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown grid scheme {self.scheme!r}")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "_key", hashlib.sha1(bp.tobytes()).hexdigest())

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, Grid) and other._key == self._key

    def __repr__(self):
        return f"Grid(size={self.size}, scheme={self.scheme!r}, min_cell={self.min_cell!r})"

    @property
    def key(self) -> str:
        return self._key

    @property
    def size(self) -> int:
        return self.breakpoints.size

    @property
    def edges(self) -> np.ndarray:
        """All cell edges including the implicit 0."""
        return np.concatenate(([0.0], self.breakpoints))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def left(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def points(self) -> np.ndarray:
        pts = self.edges[:-1].copy()
        pts[0] = 0.5 * self.breakpoints[0]
        return pts

    def locate(self, x) -> np.ndarray:
        """Index of the half-open cell containing each ``x`` in [0, 1]."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return np.minimum(idx, self.size - 1)

    def refine(self) -> "Grid":
        """The grid of the same scheme with twice as many cells."""
        if self.scheme == "custom":
            mids = 0.5 * (self.edges[:-1] + self.edges[1:])
            return Grid(np.sort(np.concatenate((mids, self.breakpoints))), "custom")
        return make_grid(2 * self.size, self.scheme, self.min_cell)

    def to_json(self) -> dict:
        if self.scheme == "custom":
            return {"scheme": "custom", "breakpoints": self.breakpoints.tolist()}
        return {"size": self.size, "scheme": self.scheme, "min_cell": self.min_cell}

    @classmethod
    def from_json(cls, obj: dict) -> "Grid":
        if obj.get("scheme", "geometric-toward-0") == "custom":
            return cls(np.asarray(obj["breakpoints"], dtype=float), "custom")
        return make_grid(int(obj["size"]), obj.get("scheme", "geometric-toward-0"),
                         float(obj.get("min_cell", 1e-10)))


def make_grid(size: int, scheme: str = "geometric-toward-0", min_cell: float = 1e-10) -> Grid:
    """Build a grid of ``size`` cells.

    ``geometric-toward-0`` has a constant ratio of consecutive cell widths and
    its first cell is ``(0, min_cell)``.  ``geometric-toward-both-ends`` glues
    two such progressions at 1/2 so both endpoints get cells of width
    ``min_cell``.  ``uniform`` ignores ``min_cell`` apart from validation.
    """
    if int(size) != size or size < 8:
        raise InvalidArgument(f"grid size must be an integer >= 8, got {size!r}")
    size = int(size)
    if not (0.0 < min_cell < 1.0 / size):
        raise InvalidArgument(f"min_cell must lie in (0, 1/size), got {min_cell!r}")
    if scheme == "uniform":
        bp = np.arange(1, size + 1, dtype=float) / size
    elif scheme == "geometric-toward-0":
        bp = _geometric_breakpoints(size, min_cell)
    elif scheme == "geometric-toward-both-ends":
        n_left = (size + 1) // 2
        n_right = size - n_left
        lo = 0.5 * _geometric_breakpoints(n_left, 2.0 * min_cell)
        y = np.concatenate(([0.0], _geometric_breakpoints(n_right, 2.0 * min_cell)))
        hi = (1.0 - 0.5 * y[:-1])[::-1]
        lo[-1] = 0.5
        bp = np.concatenate((lo, hi))
    else:
        raise InvalidArgument(f"unknown grid scheme {scheme!r}")
    return Grid(bp, scheme, float(min_cell))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float = 0.0


@dataclass(frozen=True, eq=False)
class StepFunction:
    grid: Grid
    values: np.ndarray
    monotone: str = "unknown"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise InvalidArgument(f"expected {self.grid.size} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("step function values must be finite")
        if self.monotone not in MONOTONE_FLAGS:
            raise InvalidArgument(f"unknown monotone flag {self.monotone!r}")
        if self.monotone == "nonincreasing" and np.any(np.diff(vals) > 0):
            raise InvalidArgument("values flagged nonincreasing are not nonincreasing")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        return self.values[self.grid.locate(x)]

    def __repr__(self):
        return f"StepFunction({self.grid!r}, monotone={self.monotone!r})"

    @property
    def is_nonincreasing(self) -> bool:
        return self.monotone == "nonincreasing" or bool(np.all(np.diff(self.values) <= 0))

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable, monotone: str = "unknown") -> "StepFunction":
        """Sample ``fn`` at ``grid.points``."""
        vals = np.asarray(fn(grid.points), dtype=float)
        vals = np.broadcast_to(vals, (grid.size,)).copy()
        if monotone == "nonincreasing" and np.any(np.diff(vals) > 0):
            monotone = "unknown"
        return cls(grid, vals, monotone)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "StepFunction":
        return cls(grid, np.full(grid.size, float(c)), "nonincreasing")

    @classmethod
    def indicator(cls, grid: Grid, a: float) -> "StepFunction":
        """chi_(0,a) sampled at left endpoints."""
        return cls(grid, (grid.left < a).astype(float), "nonincreasing")

    def with_values(self, values, monotone: str = "unknown") -> "StepFunction":
        return StepFunction(self.grid, values, monotone)

    def abs(self) -> "StepFunction":
        return StepFunction(self.grid, np.abs(self.values))

    def scale(self, c: float) -> "StepFunction":
        mono = self.monotone if c >= 0 else "unknown"
        return StepFunction(self.grid, c * self.values, mono)

    def antiderivative(self, x) -> np.ndarray:
        """``int_0^x f`` for each x in [0, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise DomainError("integration limits must lie in [0, 1]")
        cum = np.concatenate(([0.0], np.cumsum(self.values * self.grid.widths)))
        idx = self.grid.locate(x)
        return cum[idx] + self.values[idx] * (x - self.grid.left[idx])

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "values": self.values.tolist(),
                "monotone": self.monotone}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        return cls(Grid.from_json(obj["grid"]), np.asarray(obj["values"], dtype=float),
                   obj.get("monotone", "unknown"))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def integrate(f: StepFunction, a: float = 0.0, b: float = 1.0) -> QuadratureResult:
    """Exact integral of a step function over [a, b]."""
    if a > b:
        raise InvalidArgument(f"integration limits out of order: a={a} > b={b}")
    fa, fb = f.antiderivative(np.array([a, b]))
    return QuadratureResult(float(fb - fa), 0.0)


def compose_with_monotone(f: StepFunction, phi: Callable, grid: Grid | None = None) -> StepFunction:
    """Step function ``t -> f(phi(t))`` sampled at the left endpoints of ``grid``.

    ``phi`` must map [0, 1] monotonically into [0, 1]; at the first cell the
    left endpoint is 0, and ``phi(0)`` falls back to ``phi(points[0])`` when
    ``phi`` is not defined there.
    """
    grid = f.grid if grid is None else grid
    with np.errstate(all="ignore"):
        args = np.asarray(phi(grid.left), dtype=float).copy()
    if not np.isfinite(args[0]):
        args[0] = float(np.asarray(phi(grid.points[:1]), dtype=float)[0])
    if np.any(~np.isfinite(args)) or np.any((args < 0.0) | (args > 1.0)):
        raise DomainError("phi evaluates outside [0, 1]")
    vals = f(args)
    mono = "nonincreasing" if f.is_nonincreasing and np.all(np.diff(args) >= 0) else "unknown"
    return StepFunction(grid, vals, mono)


def kahan_cumsum(x: np.ndarray) -> np.ndarray:
    """Compensated running sum."""
    out = np.empty(len(x))
    s = 0.0
    c = 0.0
    for i, v in enumerate(np.asarray(x, dtype=float).tolist()):
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


_EXACT_SHIFT = 1100  # 2**-1074 is the smallest subnormal


def exact_cumsum(x) -> np.ndarray:
    """Correctly rounded running sums of nonnegative floats.

    Each partial sum is accumulated exactly in integer arithmetic and
    rounded once, so it agrees bit-for-bit with ``math.fsum`` of the same
    terms in any order.
    """
    scale = 1 << _EXACT_SHIFT
    acc = 0
    out = np.empty(len(x))
    for i, v in enumerate(np.asarray(x, dtype=float).tolist()):
        n, d = v.as_integer_ratio()
        acc += n * (scale // d)
        out[i] = acc / scale
    return out


def union_grid(*grids: Grid) -> Grid:
    if all(g == grids[0] for g in grids[1:]):
        return grids[0]
    bp = np.unique(np.concatenate([g.breakpoints for g in grids]))
    return Grid(bp, "custom")


def resample(f: StepFunction, grid: Grid) -> StepFunction:
    """Restrict ``f`` to a refinement ``grid`` of its own grid (exact)."""
    if grid == f.grid:
        return f
    return StepFunction(grid, f(grid.left), f.monotone)
