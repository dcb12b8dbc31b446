"""Rearrangement-invariant (quasi-)norms on step functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, UnsupportedAssociate, UnsupportedSpace
from .grid import StepFunction, union_grid
from .karamata import SV, ONE, Pow, simplify, sv_from_json, weight_integral
from .rearrange import rearrangement

BANACH_FLAGS = ("banach", "quasi", "unknown")


def _pjson(p):
    return "inf" if math.isinf(p) else p


def _pparse(p):
    return math.inf if p in ("inf", "Infinity", None) else float(p)


class SpaceSpec:
    """Base class of space descriptors."""

    @property
    def banach(self) -> str:
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Lebesgue(SpaceSpec):
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidArgument(f"Lebesgue exponent must be in (0, inf], got {self.p}")

    @property
    def banach(self) -> str:
        return "banach" if self.p >= 1 else "quasi"

    def to_json(self):
        return {"lebesgue": _pjson(self.p)}


@dataclass(frozen=True)
class OrliczKaramata(SpaceSpec):
    """``||b f*||_{L^p}``."""

    p: float
    b: SV = ONE

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidArgument("Orlicz-Karamata exponent must be positive")
        if math.isinf(self.p):
            if self.b.monotonicity() not in ("nondecreasing", "constant"):
                raise InvalidArgument("L^{inf,b} needs a bounded b")

    @property
    def banach(self) -> str:
        m = self.b.monotonicity()
        if self.p < 1:
            return "quasi"
        if m in ("nonincreasing", "constant"):
            return "banach"
        if m in ("nondecreasing", "neither"):
            return "quasi"
        return "unknown"

    def to_json(self):
        return {"karamata": {"p": _pjson(self.p), "b": self.b.to_json()}}


@dataclass(frozen=True)
class PowerSpace(SpaceSpec):
    """``X^{r}`` with ``||f|| = || |f|**r ||_X ** (1/r)``; ``r = 1/p`` in the usual notation."""

    base: SpaceSpec
    exponent: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise InvalidArgument("power exponent must be positive")

    @property
    def banach(self) -> str:
        reduced = reduce_space(self)
        if reduced is not self:
            return reduced.banach
        return "unknown"

    def to_json(self):
        return {"power": {"base": self.base.to_json(), "exponent": self.exponent}}


@dataclass(frozen=True)
class Associate(SpaceSpec):
    base: SpaceSpec

    def __post_init__(self):
        if self.base.banach != "banach":
            raise InvalidArgument("associate spaces need a Banach base norm")

    @property
    def banach(self) -> str:
        return "banach"

    def to_json(self):
        return {"associate": self.base.to_json()}


def space_from_json(obj) -> SpaceSpec:
    if "lebesgue" in obj:
        return Lebesgue(_pparse(obj["lebesgue"]))
    if "karamata" in obj:
        k = obj["karamata"]
        return OrliczKaramata(_pparse(k["p"]), sv_from_json(k["b"]) if "b" in k else ONE)
    if "power" in obj:
        k = obj["power"]
        return PowerSpace(space_from_json(k["base"]), float(k["exponent"]))
    if "associate" in obj:
        return Associate(space_from_json(obj["associate"]))
    raise InvalidArgument(f"cannot parse space {obj!r}")


def reduce_space(space: SpaceSpec) -> SpaceSpec:
    """Rewrite powers of Lebesgue and Orlicz-Karamata spaces in closed form.

    ``|| |f|**r ||_{L^{q,b}} ** (1/r) = (int b**q f***(q r)) ** (1/(q r))``,
    which is the ``L^{q r, b**(1/r)}`` functional.  With ``r = 1/p`` this
    sends ``L^q`` to ``L^{q/p}``.
    """
    if isinstance(space, PowerSpace):
        base = reduce_space(space.base)
        r = space.exponent
        if isinstance(base, Lebesgue):
            return Lebesgue(base.p * r)
        if isinstance(base, OrliczKaramata):
            return OrliczKaramata(base.p * r, simplify(Pow(base.b, 1.0 / r)))
    return space


def closed_form_associate(space: SpaceSpec) -> SpaceSpec | None:
    base = reduce_space(space)
    if isinstance(base, Lebesgue) and base.p >= 1:
        q = base.p
        return Lebesgue(math.inf if q == 1 else (1.0 if math.isinf(q) else q / (q - 1.0)))
    return None


def p_convex(space: SpaceSpec, p: float) -> tuple[bool, str]:
    """Structural certificate that ``space`` is ``p``-convex."""
    space = reduce_space(space)
    if isinstance(space, Lebesgue):
        ok = space.p >= p
        return ok, f"L^{space.p} is {'' if ok else 'not '}{p}-convex"
    if isinstance(space, OrliczKaramata):
        q = space.p
        if q > p:
            return True, "L^{q,b} with q > p"
        if q == p and space.b.monotonicity() in ("nonincreasing", "constant"):
            return True, "L^{p,b} with b nonincreasing"
        return False, "cannot certify p-convexity of this Orlicz-Karamata space"
    return False, f"no p-convexity classification for {type(space).__name__}"


# evaluation -----------------------------------------------------------------


def _weighted_lp(fs: StepFunction, b: SV | None, q: float) -> float:
    g = fs.grid
    v = fs.values
    if math.isinf(q):
        if b is None:
            return float(v.max(initial=0.0))
        return float(np.max(v * b(g.points), initial=0.0))
    if b is None:
        w = g.widths
    else:
        w = weight_integral(simplify(Pow(b, q)), g.edges[:-1], g.edges[1:], 0.0)
    nz = v > 0
    if not np.any(nz):
        return 0.0
    top = v[nz].max()
    s = float(np.sum((v[nz] / top) ** q * w[nz]))
    return float(top * s ** (1.0 / q))


def norm(space: SpaceSpec, f: StepFunction, exact: bool = True, dictionary=None) -> float:
    """Evaluate the (quasi-)norm of ``f`` in ``space``."""
    reduced = reduce_space(space)
    if isinstance(reduced, Lebesgue):
        return _weighted_lp(rearrangement(f), None, reduced.p)
    if isinstance(reduced, OrliczKaramata):
        return _weighted_lp(rearrangement(f), reduced.b, reduced.p)
    if isinstance(reduced, PowerSpace):
        r = reduced.exponent
        inner = f.with_values(np.abs(f.values) ** r)
        return norm(reduced.base, inner, exact, dictionary) ** (1.0 / r)
    if isinstance(reduced, Associate):
        dual = closed_form_associate(reduced.base)
        if dual is not None:
            return norm(dual, f)
        if exact:
            raise UnsupportedAssociate(f"no closed-form associate for {reduced.base.to_json()}")
        if dictionary is None:
            dictionary = standard_dual_dictionary(f.grid)
        return associate_norm_estimate(reduced.base, f, dictionary)
    raise UnsupportedSpace(f"cannot evaluate {type(space).__name__}")


def pairing(f: StepFunction, g: StepFunction) -> float:
    """``int_0^1 f g`` for step functions on possibly different grids."""
    grid = union_grid(f.grid, g.grid)
    left = grid.left
    return float(np.sum(f(left) * g(left) * grid.widths))


def associate_norm_estimate(base: SpaceSpec, f: StepFunction, dictionary) -> float:
    """Lower bound ``sup_g int f* g* / ||g||_base`` over ``dictionary``."""
    if not dictionary:
        raise InvalidArgument("associate_norm_estimate needs a nonempty dictionary")
    if base.banach != "banach":
        raise InvalidArgument("associate norms need a Banach base")
    fs = rearrangement(f)
    best = 0.0
    for g in dictionary:
        gs = rearrangement(g)
        ng = norm(base, gs)
        if ng > 0:
            best = max(best, pairing(fs, gs) / ng)
    return best


def standard_dual_dictionary(grid, levels: int = 128):
    """Indicators of ``(0, a)`` with ``a`` snapped to breakpoints, powers and ell shapes."""
    bp = grid.breakpoints
    targets = np.geomspace(bp[0], 1.0, levels)
    idx = np.unique(np.minimum(np.searchsorted(bp, targets), bp.size - 1))
    out = [StepFunction(grid, (grid.left < bp[i]).astype(float), "nonincreasing") for i in idx]
    pts = grid.points
    for gamma in (0.1, 0.25, 0.45, 0.75, 0.9):
        out.append(StepFunction(grid, pts ** -gamma, "nonincreasing"))
    for delta in (-1.0, -0.5, 0.5, 1.0):
        out.append(StepFunction(grid, (1.0 - np.log(pts)) ** delta))
    return out


@dataclass(frozen=True)
class HolderReport:
    lhs: float
    rhs: float
    holds: bool


def holder_check(f: StepFunction, g: StepFunction, base: SpaceSpec, tol: float = 1e-10) -> HolderReport:
    dual = closed_form_associate(base)
    if dual is None or base.banach != "banach":
        raise InvalidArgument("holder_check needs a Banach base with a closed-form associate")
    lhs = pairing(f.abs(), g.abs())
    rhs = norm(base, f) * norm(dual, g)
    return HolderReport(lhs, rhs, bool(lhs <= rhs * (1.0 + tol) + 1e-300))
