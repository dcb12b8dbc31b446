"""Slowly varying weights built from ell(t) = 1 - log t, and the class B_p.

Expressions are small immutable trees::

    ell(0.5) * ell(-0.25) ** 2 + 3 * ONE

Products and real powers of atoms collapse to a single monomial
``c * ell**gamma``; only positive linear combinations break that shape.
Monomials have closed-form integrals against powers of ``s`` (upper
incomplete gamma functions), which is what keeps the sigma tables and the
B_p tail condition free of quadrature error near 0.

Deep asymptotics are evaluated in the variable ``L = -log t`` through
:meth:`SV.log_at`, so ``t`` far below the double-precision range (``L`` up
to 1e200) is reachable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as spi
from scipy import special

from .errors import DomainError, InvalidArgument
from .grid import Grid

MONOTONICITY = ("nonincreasing", "nondecreasing", "constant", "neither", "unknown")

# Gauss-Legendre rule used on every cell away from 0, in the variable log s
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_PANEL = 0.5


def ell(t):
    """``1 - log t``."""
    return 1.0 - np.log(t)


class SV:
    """Base class of slowly varying expressions."""

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return LinComb(((float(other), self),))
        return Prod((self, other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return LinComb(((1.0 / float(other), self),))
        return Prod((self, Pow(other, -1.0)))

    def __pow__(self, r):
        return Pow(self, float(r))

    def __add__(self, other):
        return LinComb(((1.0, self), (1.0, other)))

    # evaluation -------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self._eval(t)

    def _eval(self, t):
        raise NotImplementedError

    def log_at(self, L):
        """``log b(exp(-L))`` for ``L >= 0``."""
        raise NotImplementedError

    # structure ----------------------------------------------------------

    def monomial(self):
        """``(coef, gamma)`` if the expression equals ``coef * ell**gamma``."""
        return None

    @property
    def closed_form(self) -> bool:
        return self.monomial() is not None

    def _mono_class(self):
        raise NotImplementedError

    def monotonicity(self) -> str:
        """Monotonicity on (0, 1): one of :data:`MONOTONICITY`.

        Symbolic whenever the expression is a monomial or combines parts of
        a single class; otherwise dense sampling can only prove ``neither``
        and reports ``unknown`` when it finds no counterexample.
        """
        cls = self._mono_class()
        if cls != "unknown":
            return cls
        return _sampled_monotonicity(self)

    def strictly_decreasing(self):
        """True/False when decidable symbolically, else None."""
        m = self.monomial()
        if m is not None:
            return m[1] > 0
        return None

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class One(SV):
    def _eval(self, t):
        return np.ones_like(t)

    def log_at(self, L):
        return np.zeros_like(np.asarray(L, dtype=float))

    def monomial(self):
        return (1.0, 0.0)

    def _mono_class(self):
        return "constant"

    def to_json(self):
        return {"one": True}


@dataclass(frozen=True)
class Atom(SV):
    alpha: float

    def _eval(self, t):
        return ell(t) ** self.alpha

    def log_at(self, L):
        return self.alpha * np.log1p(np.asarray(L, dtype=float))

    def monomial(self):
        return (1.0, float(self.alpha))

    def _mono_class(self):
        return _class_of_gamma(self.alpha)

    def to_json(self):
        return {"atom": {"alpha": self.alpha}}


@dataclass(frozen=True)
class Prod(SV):
    factors: tuple

    def _eval(self, t):
        out = np.ones_like(t)
        for f in self.factors:
            out = out * f._eval(t)
        return out

    def log_at(self, L):
        return sum(f.log_at(L) for f in self.factors)

    def monomial(self):
        coef, gamma = 1.0, 0.0
        for f in self.factors:
            m = f.monomial()
            if m is None:
                return None
            coef *= m[0]
            gamma += m[1]
        return (coef, gamma)

    def _mono_class(self):
        m = self.monomial()
        if m is not None:
            return _class_of_gamma(m[1])
        return _combine_classes([f._mono_class() for f in self.factors])

    def strictly_decreasing(self):
        m = self.monomial()
        if m is not None:
            return m[1] > 0
        classes = [f._mono_class() for f in self.factors]
        if all(c in ("nonincreasing", "constant") for c in classes):
            if any(f.strictly_decreasing() for f in self.factors):
                return True
        return None

    def to_json(self):
        return {"prod": [f.to_json() for f in self.factors]}


@dataclass(frozen=True)
class Pow(SV):
    base: SV
    r: float

    def _eval(self, t):
        return self.base._eval(t) ** self.r

    def log_at(self, L):
        return self.r * self.base.log_at(L)

    def monomial(self):
        m = self.base.monomial()
        if m is None:
            return None
        return (m[0] ** self.r, m[1] * self.r)

    def _mono_class(self):
        m = self.monomial()
        if m is not None:
            return _class_of_gamma(m[1])
        c = self.base._mono_class()
        if self.r == 0:
            return "constant"
        if self.r < 0:
            return {"nonincreasing": "nondecreasing", "nondecreasing": "nonincreasing"}.get(c, c)
        return c

    def strictly_decreasing(self):
        m = self.monomial()
        if m is not None:
            return m[1] > 0
        if self.r > 0:
            return self.base.strictly_decreasing()
        return None

    def to_json(self):
        return {"pow": {"base": self.base.to_json(), "r": self.r}}


@dataclass(frozen=True)
class LinComb(SV):
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise InvalidArgument("empty linear combination")
        for coef, _ in self.terms:
            if not coef > 0:
                raise InvalidArgument("linear combinations need positive coefficients")

    def _eval(self, t):
        out = np.zeros_like(t)
        for coef, node in self.terms:
            out = out + coef * node._eval(t)
        return out

    def log_at(self, L):
        L = np.asarray(L, dtype=float)
        parts = np.array([np.log(c) + node.log_at(L) * np.ones_like(L) for c, node in self.terms])
        return special.logsumexp(parts, axis=0)

    def monomial(self):
        gamma = None
        coef = 0.0
        for c, node in self.terms:
            m = node.monomial()
            if m is None or (gamma is not None and m[1] != gamma):
                return None
            gamma = m[1]
            coef += c * m[0]
        return (coef, gamma)

    def _mono_class(self):
        m = self.monomial()
        if m is not None:
            return _class_of_gamma(m[1])
        return _combine_classes([node._mono_class() for _, node in self.terms])

    def strictly_decreasing(self):
        m = self.monomial()
        if m is not None:
            return m[1] > 0
        classes = [node._mono_class() for _, node in self.terms]
        if all(c in ("nonincreasing", "constant") for c in classes):
            if any(node.strictly_decreasing() for _, node in self.terms):
                return True
        return None

    def to_json(self):
        return {"lincomb": [[c, node.to_json()] for c, node in self.terms]}


ONE = One()


def ell_pow(alpha: float) -> SV:
    return ONE if alpha == 0 else Atom(float(alpha))


def simplify(b: SV) -> SV:
    """Collapse to ``coef * ell**gamma`` when possible."""
    m = b.monomial()
    if m is None:
        return b
    coef, gamma = m
    atom = ell_pow(gamma)
    return atom if coef == 1.0 else LinComb(((coef, atom),))


def sv_from_json(obj) -> SV:
    if "atom" in obj:
        return ell_pow(float(obj["atom"]["alpha"]))
    if "one" in obj:
        return ONE
    if "prod" in obj:
        return Prod(tuple(sv_from_json(x) for x in obj["prod"]))
    if "pow" in obj:
        inner = obj["pow"]
        return Pow(sv_from_json(inner["base"]), float(inner["r"]))
    if "lincomb" in obj:
        return LinComb(tuple((float(c), sv_from_json(n)) for c, n in obj["lincomb"]))
    raise InvalidArgument(f"cannot parse slowly varying expression {obj!r}")


def _class_of_gamma(gamma):
    # ell is decreasing in t, so ell**g is nonincreasing iff g >= 0
    if gamma > 0:
        return "nonincreasing"
    if gamma < 0:
        return "nondecreasing"
    return "constant"


def _combine_classes(classes):
    kinds = set(classes) - {"constant"}
    if not kinds:
        return "constant"
    if len(kinds) == 1 and kinds <= {"nonincreasing", "nondecreasing"}:
        return kinds.pop()
    return "unknown"


def _sampled_monotonicity(b: SV) -> str:
    L = np.concatenate((np.linspace(0.0, 50.0, 4001), np.logspace(np.log10(50.0), 12, 2000)[1:]))
    vals = b.log_at(L)
    d = np.diff(vals)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    # L increases as t decreases
    up_in_t = np.any(d < -tol)
    down_in_t = np.any(d > tol)
    if up_in_t and down_in_t:
        return "neither"
    return "unknown"


def eval_sv(b: SV, t):
    """Evaluate ``b`` on (0, 1)."""
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0.0) | (t >= 1.0)):
        raise DomainError("slowly varying functions are evaluated on (0, 1)")
    return b(t)


# ---------------------------------------------------------------------------
# quadrature of s**power * b(s)


def upper_gamma(a: float, z):
    """Upper incomplete gamma ``Gamma(a, z)`` for real ``a`` and ``z > 0``."""
    z = np.asarray(z, dtype=float)
    if a > 0:
        return special.gamma(a) * special.gammaincc(a, z)
    n = int(math.floor(-a)) + 1
    a0 = a + n
    if a0 == 1.0 and float(a).is_integer():
        # a is a nonpositive integer: start the recurrence from E1
        a0 = 0.0
        n -= 1
    g = special.exp1(z) if a0 == 0.0 else special.gamma(a0) * special.gammaincc(a0, z)
    ak = a0
    for _ in range(n):
        ak -= 1.0
        g = (g - z ** ak * np.exp(-z)) / ak
    return g


def _from_zero(b: SV, x, power: float):
    # int_0^x s**power b(s) ds
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        return out
    m = b.monomial() if b is not None else (1.0, 0.0)
    k1 = power + 1.0
    if m is not None:
        coef, gamma = m
        lx = ell(x[pos])
        if k1 > 0:
            out[pos] = coef * np.exp(k1) * k1 ** (-(gamma + 1.0)) * upper_gamma(gamma + 1.0, k1 * lx)
        elif k1 == 0 and gamma < -1:
            out[pos] = coef * lx ** (gamma + 1.0) / (-gamma - 1.0)
        else:
            out[pos] = np.inf
        return out
    vals = []
    for xi in x[pos]:
        L0 = -math.log(xi)
        val, _ = spi.quad(lambda L: math.exp(-k1 * L + float(b.log_at(L))), L0, np.inf,
                          epsabs=0.0, epsrel=1e-13, limit=200)
        vals.append(val)
    out[pos] = vals
    return out


def _gauss_log(b: SV, lo, hi, power: float):
    # int_lo^hi s**power b(s) ds with 0 < lo <= hi, Gauss-Legendre in log s
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    du = np.log1p((hi - lo) / lo)
    npan = np.maximum(1, np.ceil(du / _GL_PANEL).astype(int))
    if np.all(npan == 1):
        starts = lo
        h = du
        owner = None
    else:
        owner = np.repeat(np.arange(lo.size), npan)
        j = np.arange(owner.size) - np.repeat(np.cumsum(npan) - npan, npan)
        h = (du / npan)[owner]
        starts = lo[owner] * np.exp(j * h)
    s = starts[:, None] * np.exp(0.5 * h[:, None] * (_GL_X[None, :] + 1.0))
    f = s ** (power + 1.0)
    if b is not None:
        f = f * b._eval(s)
    panel = 0.5 * h * (f @ _GL_W)
    if owner is None:
        return panel
    return np.bincount(owner, weights=panel, minlength=lo.size)


def weight_integral(b: SV | None, lo, hi, power: float = 0.0):
    """``int_lo^hi s**power b(s) ds`` elementwise, ``0 <= lo <= hi <= 1``.

    ``b = None`` stands for the constant 1.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    out = np.zeros(lo.shape)
    if np.any(lo > hi) or np.any(lo < 0) or np.any(hi > 1):
        raise DomainError("weight_integral needs 0 <= lo <= hi <= 1")
    zero = (lo == 0.0) & (hi > 0.0)
    inner = (lo > 0.0) & (hi > lo)
    if np.any(zero):
        out[zero] = _from_zero(b, hi[zero], power)
    if np.any(inner):
        out[inner] = _gauss_log(b, lo[inner], hi[inner], power)
    return out


@lru_cache(maxsize=512)
def cell_integrals(b: SV | None, grid: Grid, power: float = 0.0) -> np.ndarray:
    """``int`` of ``s**power b(s)`` over every cell of ``grid``."""
    out = weight_integral(b, grid.edges[:-1], grid.edges[1:], power)
    out.setflags(write=False)
    return out


def weight_at_points(b: SV | None, grid: Grid) -> np.ndarray:
    if b is None:
        return np.ones(grid.size)
    return b(grid.points)


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class RatioRange:
    lo: float
    hi: float
    argmin: float = float("nan")
    argmax: float = float("nan")

    @property
    def bounded(self) -> bool:
        return bool(np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo > 0)

    @property
    def band(self) -> float:
        """Smallest ``c`` with the range inside ``[1/c, c]``."""
        return max(self.hi, 1.0 / self.lo) if self.lo > 0 else float("inf")

    def to_json(self):
        return {"min": self.lo, "max": self.hi, "argmin": self.argmin, "argmax": self.argmax}


def ratio_range(ratios, at) -> RatioRange:
    ratios = np.asarray(ratios, dtype=float)
    at = np.asarray(at, dtype=float)
    i, j = int(np.argmin(ratios)), int(np.argmax(ratios))
    return RatioRange(float(ratios[i]), float(ratios[j]), float(at[i]), float(at[j]))


def sv_integral_property_check(b: SV, alpha: float, grid: Grid) -> RatioRange:
    """Range of ``int_0^t s**(alpha-1) b(s) ds / (t**alpha b(t))`` over the breakpoints."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    cells = cell_integrals(b, grid, alpha - 1.0)
    t = grid.breakpoints
    ratios = np.cumsum(cells) / (t ** alpha * b(t))
    return ratio_range(ratios, t)


def analytic_bp(alpha: float, beta: float, p: float) -> bool:
    """Membership of ``(ell**alpha, ell**-beta)`` in B_p for the ell-power family."""
    if alpha < 0 or beta < 0:
        return False
    return bool((alpha + beta >= 1.0 / p and beta > 0) or (alpha > 1.0 / p and beta == 0))


@dataclass
class BpReport:
    p: float
    condition_a: bool
    condition_b: bool
    monotonicity: dict
    condition_c: dict
    condition_d: dict
    verdict: bool
    inconclusive: list = field(default_factory=list)
    analytic_verdict: bool | None = None

    def to_json(self):
        return {
            "p": self.p,
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "monotonicity": self.monotonicity,
            "condition_c": self.condition_c,
            "condition_d": self.condition_d,
            "verdict": self.verdict,
            "inconclusive": list(self.inconclusive),
            "analytic_verdict": self.analytic_verdict,
        }


C_BAND = 10.0
NEAR_ZERO = (1e-8, 1e-2)
D_GROWTH_TOL = 1.25
C_DEPTH = 11


def _band_on(b1: SV, b2: SV, p: float, L_lo: float, L_hi: float, npts: int):
    L = np.linspace(L_lo, L_hi, npts)
    log_arg = -L + p * (b1.log_at(L) - b2.log_at(L))
    inside = log_arg < 0
    if not np.all(inside):
        return None
    logr = b1.log_at(L) - b1.log_at(-log_arg)
    return (float(np.exp(logr.min())), float(np.exp(logr.max())))


def _in_band(band):
    return band is not None and 1.0 / C_BAND <= band[0] and band[1] <= C_BAND


def _condition_c(b1: SV, b2: SV, p: float, npts: int = 200):
    # windows [1e-8, 1e-2] in t, then pushed toward 0 by factors of 10 in L
    L_lo, L_hi = -math.log(NEAR_ZERO[1]), -math.log(NEAR_ZERO[0])
    bands = [_band_on(b1, b2, p, L_lo * 10.0 ** k, L_hi * 10.0 ** k, npts) for k in range(C_DEPTH)]
    first = next((k for k, band in enumerate(bands) if _in_band(band)), None)
    out = {"passed": False, "band": None, "window_L": None, "window_shifts": first,
           "deeper_windows_ok": False, "stable": False}
    if first is None:
        return out
    band = bands[first]
    refined = _band_on(b1, b2, p, L_lo * 10.0 ** first, L_hi * 10.0 ** first, 2 * npts)
    width = math.log(band[1] / band[0])
    stable = _in_band(refined) and math.log(refined[1] / refined[0]) <= 1.05 * width + 1e-12
    deeper = all(_in_band(b) and math.log(b[1] / b[0]) <= 1.05 * width + 1e-12
                 for b in bands[first + 1:])
    out.update(passed=bool(stable and deeper), band=list(band), band_refined=list(refined),
               window_L=[L_lo * 10.0 ** first, L_hi * 10.0 ** first],
               deeper_windows_ok=bool(deeper), stable=bool(stable))
    return out


def _tail_log(b1: SV, p: float, L):
    # log of int_t^1 ds / (s b1(s)**p), t = exp(-L)
    L = np.asarray(L, dtype=float)
    m = b1.monomial()
    if m is not None:
        coef, gamma = m
        a = gamma * p
        lg = np.log1p(L)
        if a == 1.0:
            core = np.log(lg)
        elif a < 1.0:
            core = np.log(np.expm1((1.0 - a) * lg)) - np.log(1.0 - a)
        else:
            core = np.log(-np.expm1(-(a - 1.0) * lg)) - np.log(a - 1.0)
        return core - p * np.log(coef)
    # cumulative quadrature between consecutive sorted nodes
    flat = np.atleast_1d(L)
    order = np.argsort(flat)
    nodes = np.concatenate(([0.0], flat[order]))
    f = lambda x: math.exp(-p * float(b1.log_at(x)))
    pieces = np.empty(flat.size)
    for i, (a_, b_) in enumerate(zip(nodes[:-1], nodes[1:])):
        v, _ = spi.quad(f, a_, b_, epsabs=0.0, epsrel=1e-12, limit=200) if b_ > a_ else (0.0, 0.0)
        pieces[i] = v
    total = np.empty(flat.size)
    total[order] = np.cumsum(pieces)
    with np.errstate(divide="ignore"):
        return np.log(total)


def _condition_d(b1: SV, b2: SV, p: float):
    L_grid = np.linspace(0.0, -math.log(1e-10), 400)[1:]
    deep = 10.0 ** np.arange(1, 201, 1.0)
    L = np.concatenate((L_grid, deep))
    logD = p * b2.log_at(L) + _tail_log(b1, p, L)
    # D at the two deepest probes, L = 1e100 and 1e200
    growth = float(np.exp(logD[-1] - logD[L_grid.size + 99]))
    sup = float(np.exp(np.max(logD)))
    finite = bool(np.isfinite(sup) and growth < D_GROWTH_TOL)
    return {"sup_estimate": sup, "growth_ratio": growth, "finite": finite}


def in_class_Bp(b1: SV, b2: SV, p: float) -> BpReport:
    """Numeric membership test for ``(b1, b2)`` in B_p.

    (a) holds structurally for this algebra.  (b) uses the symbolic
    monotonicity classifier; ``unknown`` makes the verdict inconclusive
    rather than true.  (c) bounds ``b1(t) / b1(t b1**p b2**-p)`` within
    ``[1/10, 10]`` near 0 at two sampling densities.  (d) estimates the
    supremum of ``b2**p int_t^1 ds/(s b1**p)`` and calls it finite when the
    value stops growing between ``L = 1e100`` and ``L = 1e200``.
    """
    if not p > 0:
        raise InvalidArgument("p must be positive")
    inconclusive = []
    m1, m2 = b1.monotonicity(), b2.monotonicity()
    cond_b = m1 in ("nonincreasing", "constant") and m2 in ("nondecreasing", "constant")
    if "unknown" in (m1, m2):
        inconclusive.append("b")

    cond_c = _condition_c(b1, b2, p)
    if cond_c["window_shifts"] is None:
        inconclusive.append("c")

    cond_d = _condition_d(b1, b2, p)
    verdict = bool(cond_b and cond_c["passed"] and cond_d["finite"] and not inconclusive)

    analytic = None
    mm1, mm2 = b1.monomial(), b2.monomial()
    if mm1 is not None and mm2 is not None:
        analytic = analytic_bp(mm1[1], -mm2[1], p)
    return BpReport(p, True, bool(cond_b), {"b1": m1, "b2": m2}, cond_c, cond_d, verdict,
                    inconclusive, analytic)
