"""The operators U, T, S and the gaussibility checker.

On a grid, every operator output takes its function argument at the left
endpoint of a cell and its weights at the cell representative ``points``.
For ``U`` this makes ``||U f||_{L^{inf,b2}} = ||f||_inf`` hold exactly, and it
makes ``(U f)*`` the same step function that discretizes the gaussibility
right-hand side, so the ``U`` constant is 1 up to rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .grid import Grid, StepFunction
from .karamata import SV, Pow, in_class_Bp, simplify, weight_integral
from .kfunc import cumulative_power, default_t_grid
from .rearrange import rearrangement
from .sigma import SigmaMap


def _star(f: StepFunction) -> StepFunction:
    return f if f.monotone == "nonincreasing" and np.all(f.values >= 0) else rearrangement(f)


@lru_cache(maxsize=64)
def _u_nodes(m: SigmaMap, grid: Grid):
    return m.phi(grid.left), m.b2(grid.points)


@lru_cache(maxsize=64)
def _t_nodes(m: SigmaMap, grid: Grid):
    return m.psi(grid.left), m.b1(m.psi(grid.points)) ** m.p


def op_U(f: StepFunction, m: SigmaMap, grid: Grid | None = None) -> StepFunction:
    """``t -> f*(sigma^{-1}(t^{1/p})^p) / b2(t)``."""
    grid = f.grid if grid is None else grid
    fs = _star(f)
    arg, b2 = _u_nodes(m, grid)
    vals = fs(arg) / b2
    mono = "nonincreasing" if m.b2.monotonicity() in ("nondecreasing", "constant") else "unknown"
    if mono == "nonincreasing" and np.any(np.diff(vals) > 0):
        mono = "unknown"
    return StepFunction(grid, vals, mono)


def t_profile(f: StepFunction, m: SigmaMap, grid: Grid | None = None) -> np.ndarray:
    """``f*(psi(s)) / b1(psi(s))^p`` at the cells of ``grid``, before the suffix sup."""
    grid = f.grid if grid is None else grid
    fs = _star(f)
    arg, den = _t_nodes(m, grid)
    return fs(arg) / den


def op_T(f: StepFunction, m: SigmaMap, grid: Grid | None = None) -> StepFunction:
    """``t -> sup_{t <= s < 1} f*(sigma(s^{1/p})^p) / b1(sigma(s^{1/p})^p)^p``."""
    grid = f.grid if grid is None else grid
    h = t_profile(f, m, grid)
    vals = np.maximum.accumulate(h[::-1])[::-1]
    return StepFunction(grid, vals, "nonincreasing")


def op_T_naive(f: StepFunction, m: SigmaMap, grid: Grid | None = None) -> np.ndarray:
    """Quadratic double loop over the same profile; reference for :func:`op_T`."""
    grid = f.grid if grid is None else grid
    h = t_profile(f, m, grid)
    n = h.size
    return np.array([max(h[j] for j in range(k, n)) for k in range(n)])


@lru_cache(maxsize=64)
def _s_cells(b1: SV, p: float, grid: Grid):
    w = simplify(Pow(b1, -p))
    edges = grid.edges
    full = np.zeros(grid.size)
    full[1:] = weight_integral(w, edges[1:-1], edges[2:], -1.0)
    first = weight_integral(w, [grid.points[0]], [edges[1]], -1.0)[0]
    full.setflags(write=False)
    return full, first


def op_S(f: StepFunction, b1: SV, p: float) -> StepFunction:
    """``t -> (int_t^1 |f(s)|^p / (s b1(s)^p) ds)^{1/p}`` at the representatives."""
    grid = f.grid
    full, first = _s_cells(b1, float(p), grid)
    fp = np.abs(f.values) ** p
    contrib = fp * full
    tail = np.concatenate((np.cumsum(contrib[::-1])[::-1][1:], [0.0]))
    inner = tail.copy()
    inner[0] += fp[0] * first
    inner[1:] += contrib[1:]
    vals = np.maximum(inner, 0.0) ** (1.0 / p)
    vals = np.minimum.accumulate(vals)
    return StepFunction(grid, vals, "nonincreasing")


def s_power_at(f: StepFunction, b1: SV, p: float, t) -> np.ndarray:
    """``int_t^1 |f(s)|^p / (s b1(s)^p) ds`` for any ``t`` in (0, 1]."""
    t = np.asarray(t, dtype=float)
    grid = f.grid
    full, _ = _s_cells(b1, float(p), grid)
    fp = np.abs(f.values) ** p
    contrib = fp * full
    after = np.concatenate((np.cumsum(contrib[::-1])[::-1][1:], [0.0]))
    k = grid.locate(t)
    w = simplify(Pow(b1, -p))
    part = weight_integral(w, t.ravel(), grid.edges[k + 1].ravel(), -1.0).reshape(t.shape)
    return after[k] + fp[k] * part


# handles ---------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorHandle:
    label: str
    fn: Callable = field(repr=False, compare=False)

    def __call__(self, f: StepFunction) -> StepFunction:
        return self.fn(f)

    def scaled(self, c: float) -> "OperatorHandle":
        return OperatorHandle(f"{c:g}*{self.label}", lambda f: self.fn(f).scale(c))

    def then_rearrange(self) -> "OperatorHandle":
        return OperatorHandle(f"({self.label})*", lambda f: rearrangement(self.fn(f)))


def U_handle(m: SigmaMap) -> OperatorHandle:
    return OperatorHandle("U", lambda f: op_U(f, m))


def T_handle(m: SigmaMap) -> OperatorHandle:
    return OperatorHandle("T", lambda f: op_T(f, m))


def S_star_handle(b1: SV, p: float) -> OperatorHandle:
    """``f -> S(f*)``."""
    return OperatorHandle("S*", lambda f: op_S(_star(f), b1, p))


def handle_from_spec(spec, m: SigmaMap) -> OperatorHandle:
    """``"U"``, ``"S"``, ``"T"`` or a dict/JSON file ``{"op": ..., "scale": c}``."""
    if isinstance(spec, str) and spec not in ("U", "S", "T"):
        with open(spec) as fh:
            spec = json.load(fh)
    if isinstance(spec, str):
        spec = {"op": spec}
    name = spec.get("op")
    base = {"U": lambda: U_handle(m), "T": lambda: T_handle(m),
            "S": lambda: S_star_handle(m.b1, m.p)}.get(name)
    if base is None:
        raise InvalidArgument(f"unknown operator {name!r}")
    h = base()
    scale = float(spec.get("scale", 1.0))
    return h if scale == 1.0 else h.scaled(scale)


# gaussibility ------------------------------------------------------------------


@dataclass
class ConstantReport:
    name: str
    constant: float
    argmax_function_label: str | None
    argmax_t: float | None
    resolutions: list = field(default_factory=list)
    stable: bool | None = None
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "name": self.name,
            "constant": self.constant,
            "argmax_function_label": self.argmax_function_label,
            "argmax_t": self.argmax_t,
            "resolutions": list(self.resolutions),
            "stable": self.stable,
            "notes": list(self.notes),
        }


def relative_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if not (np.isfinite(a) and np.isfinite(b)):
        return float("inf")
    return abs(b - a) / max(abs(a), abs(b))


def with_stability(name: str, runs, tol: float = 0.05) -> ConstantReport:
    """Merge single-resolution results ``[(N, (const, label, t)), ...]``."""
    (n0, (c0, lab, t0)) = runs[-1]
    res = [{"N": int(n), "constant": float(c)} for n, (c, _, _) in runs]
    stable = all(relative_change(runs[i][1][0], runs[i + 1][1][0]) <= tol
                 for i in range(len(runs) - 1)) and bool(np.isfinite(c0))
    return ConstantReport(name, float(c0), lab, t0, res, stable if len(runs) > 1 else None)


@lru_cache(maxsize=64)
def _bp_verdict(b1: SV, b2: SV, p: float):
    return in_class_Bp(b1, b2, p)


def require_bp(m: SigmaMap):
    rep = _bp_verdict(m.b1, m.b2, m.p)
    if not rep.verdict:
        why = "inconclusive" if rep.inconclusive else "false"
        raise PreconditionViolation(f"B_p membership is {why} for this pair", "(b1,b2) in B_p")
    return rep


def _labelled(dictionary):
    for i, item in enumerate(dictionary):
        if isinstance(item, tuple):
            yield item
        else:
            yield f"f{i}", item


def gaussibility_sweep(op: OperatorHandle, m: SigmaMap, dictionary, t=None):
    """``(constant, label, t)`` maximizing LHS/RHS over one dictionary."""
    t = default_t_grid() if t is None else np.asarray(t, dtype=float)
    best = (0.0, None, None)
    for label, f in _labelled(dictionary):
        lhs = cumulative_power(rearrangement(op(f)), m.b1, m.p, t)
        rhs = cumulative_power(op_U(f, m), m.b1, m.p, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(lhs <= 0, 0.0, lhs / rhs)
        k = int(np.argmax(r))
        if r[k] > best[0] or best[1] is None:
            best = (float(r[k]), label, float(t[k]))
    return best


def gaussibility_check(op: OperatorHandle, m: SigmaMap, dictionary, refined_dictionary=None,
                       t=None, tol: float = 0.05) -> ConstantReport:
    """Best constant ``c`` in ``int_0^t [(op f)* b1]^p <= c int_0^t [f*(phi) b1 / b2]^p``.

    The right-hand side integrand is ``U f`` sampled on the grid of ``f``.
    When ``refined_dictionary`` (the same functions on a finer grid) is
    given, the constant is recomputed there and flagged unstable if it
    moves by more than ``tol``.
    """
    require_bp(m)
    dictionary = list(dictionary)
    runs = [(_size(dictionary), gaussibility_sweep(op, m, dictionary, t))]
    if refined_dictionary is not None:
        refined_dictionary = list(refined_dictionary)
        runs.append((_size(refined_dictionary), gaussibility_sweep(op, m, refined_dictionary, t)))
    return with_stability(f"gaussibility[{op.label}]", runs, tol)


def _size(dictionary):
    for _, f in _labelled(dictionary):
        return f.grid.size
    raise InvalidArgument("empty dictionary")


def t_recursion_constant(f: StepFunction, m: SigmaMap, grid: Grid | None = None) -> float:
    """``sup_t T f(t) / (h(t) + T f(phi(t)))`` with ``h`` the profile behind T."""
    grid = f.grid if grid is None else grid
    h = t_profile(f, m, grid)
    T = op_T(f, m, grid)
    rhs = h + T(m.phi(grid.left))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(T.values <= 0, 0.0, T.values / rhs)
    return float(np.max(r))
