"""The change of variables sigma defined by ``t**p = W(sigma(t)**p) / C``.

Here ``W(u) = int_0^u (b1/b2)**p`` and ``C = W(1)``.  Two maps carry all
the work, and both are evaluated to round-off rather than read off a table:

``phi(x) = sigma^{-1}(x**(1/p))**p = W(x) / C``
    a direct integral (closed form in the first cell, Gauss-Legendre in
    the others, a tail sum near 1);
``psi(s) = sigma(s**(1/p))**p = W^{-1}(C s)``
    Newton iterations started from the table and safeguarded by its cell
    bracket.

The tabulated part is the public :meth:`SigmaMap.sigma`, which inverts the
piecewise-linear interpolant of ``W`` between table nodes; its deviation
from the defining identity is the recorded residual.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NonIntegrableWeight, PreconditionViolation, ResolutionTooCoarse
from .grid import Grid, kahan_cumsum, make_grid
from .karamata import (SV, Pow, Prod, RatioRange, in_class_Bp, ratio_range, simplify,
                       cell_integrals, weight_integral)

DEFAULT_RESOLUTION = 2 ** 14
DEFAULT_MIN_CELL = 1e-10


def weight_of(b1: SV, b2: SV, p: float) -> SV:
    """``(b1 / b2)**p`` as a simplified expression."""
    return simplify(Pow(Prod((b1, Pow(b2, -1.0))), float(p)))


@dataclass(frozen=True, eq=False)
class SigmaMap:
    p: float
    b1: SV
    b2: SV
    weight: SV
    C: float
    grid: Grid
    W: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    identity: bool = False
    residual: float = 0.0

    # exact maps ---------------------------------------------------------

    def phi(self, x):
        """``W(x) / C`` for ``x`` in [0, 1]; nondecreasing, ``phi >= id``."""
        x = np.asarray(x, dtype=float)
        if self.identity:
            return x.copy()
        flat = np.clip(x.ravel(), 0.0, 1.0)
        edges = self.grid.edges
        k = np.minimum(np.searchsorted(edges, flat, side="right") - 1, self.grid.size - 1)
        out = np.empty_like(flat)
        low = flat <= 0.5
        if np.any(low):
            kk = k[low]
            out[low] = (self.W[kk] + weight_integral(self.weight, edges[kk], flat[low])) / self.C
        high = ~low
        if np.any(high):
            kk = k[high]
            rest = self.tail[kk + 1] + weight_integral(self.weight, flat[high], edges[kk + 1])
            out[high] = 1.0 - rest / self.C
        return out.reshape(x.shape)

    def psi(self, s):
        """``W^{-1}(C s)`` for ``s`` in [0, 1]; the inverse of :meth:`phi`."""
        s = np.asarray(s, dtype=float)
        if self.identity:
            return s.copy()
        flat = np.clip(s.ravel(), 0.0, 1.0)
        out = np.empty_like(flat)
        low = flat <= 0.5
        if np.any(low):
            out[low] = self._solve(self.C * flat[low], from_left=True)
        if np.any(~low):
            out[~low] = self._solve(self.C * (1.0 - flat[~low]), from_left=False)
        return out.reshape(s.shape)

    def _solve(self, y, from_left: bool):
        edges = self.grid.edges
        n = self.grid.size
        if from_left:
            k = np.clip(np.searchsorted(self.W, y, side="right") - 1, 0, n - 1)
            lo_v, hi_v = self.W[k], self.W[k + 1]
        else:
            # tail is decreasing: tail[k] >= y > tail[k+1]
            k = np.clip(np.searchsorted(-self.tail, -y, side="left") - 1, 0, n - 1)
            lo_v, hi_v = self.C - self.tail[k], self.C - self.tail[k + 1]
            y = self.C - y
        lo, hi = edges[k].copy(), edges[k + 1].copy()
        frac = np.where(hi_v > lo_v, (y - lo_v) / np.where(hi_v > lo_v, hi_v - lo_v, 1.0), 0.0)
        u = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        done = (y <= lo_v) | (y >= hi_v)
        u = np.where(y <= lo_v, lo, np.where(y >= hi_v, hi, u))
        active = ~done
        for _ in range(60):
            if not np.any(active):
                break
            ua = u[active]
            ka = k[active]
            if from_left:
                F = self.W[ka] + weight_integral(self.weight, edges[ka], ua) - y[active]
            else:
                # C - (tail[k+1] + int_u^{x_{k+1}} w) - target
                F = (self.C - self.tail[ka + 1]
                     - weight_integral(self.weight, ua, edges[ka + 1])) - y[active]
            # keep the bracket so that Newton can never leave the cell
            lo_a, hi_a = lo[active], hi[active]
            lo_a = np.where(F < 0, ua, lo_a)
            hi_a = np.where(F > 0, ua, hi_a)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = F / self.weight(np.maximum(ua, 1e-300))
            cand = ua - step
            bad = ~np.isfinite(cand) | (cand <= lo_a) | (cand >= hi_a)
            cand = np.where(bad, 0.5 * (lo_a + hi_a), cand)
            conv = (np.abs(cand - ua) <= 4e-16 * np.maximum(ua, 1e-300)) | (F == 0)
            lo[active], hi[active] = lo_a, hi_a
            u[active] = np.where(F == 0, ua, cand)
            idx = np.flatnonzero(active)
            active[idx[conv]] = False
        return u

    # public sigma -------------------------------------------------------

    def sigma(self, t, exact: bool = False):
        """``sigma(t)``; by default from the table, monotone piecewise-linear in ``W``."""
        t = np.asarray(t, dtype=float)
        tp = np.clip(t, 0.0, 1.0) ** self.p
        if exact or self.identity:
            return self.psi(tp) ** (1.0 / self.p)
        y = self.C * tp
        edges = self.grid.edges
        k = np.clip(np.searchsorted(self.W, y, side="right") - 1, 0, self.grid.size - 1)
        dW = self.W[k + 1] - self.W[k]
        frac = np.clip((y - self.W[k]) / np.where(dW > 0, dW, 1.0), 0.0, 1.0)
        u = edges[k] + frac * (edges[k + 1] - edges[k])
        u = np.where(tp >= 1.0, 1.0, u)
        return u ** (1.0 / self.p)

    def sigma_inv(self, s):
        """``sigma^{-1}(s)``, evaluated exactly."""
        s = np.asarray(s, dtype=float)
        return self.phi(np.clip(s, 0.0, 1.0) ** self.p) ** (1.0 / self.p)

    # tables ---------------------------------------------------------------

    @property
    def table_t(self) -> np.ndarray:
        """Nodes ``t_k`` with ``sigma(t_k)**p`` on the table grid."""
        return np.clip(self.W / self.C, 0.0, 1.0) ** (1.0 / self.p)

    @property
    def table_sigma(self) -> np.ndarray:
        return self.grid.edges ** (1.0 / self.p)

    def residuals(self, t=None) -> np.ndarray:
        """``|t**p - W(sigma(t)**p) / C|`` with ``sigma`` from the table."""
        if t is None:
            t = residual_points(self)
        t = np.asarray(t, dtype=float)
        return np.abs(t ** self.p - self.phi(self.sigma(t) ** self.p))

    def to_csv(self, provenance: str | None = None) -> str:
        buf = io.StringIO()
        if provenance:
            buf.write(f"# {provenance}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "sigma", "sigma_inv", "residual"])
        t = self.grid.edges ** (1.0 / self.p)
        rows = zip(t, self.sigma(t), self.sigma_inv(t), self.residuals(t))
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def residual_points(m: SigmaMap) -> np.ndarray:
    """Table nodes plus the geometric midpoints between them."""
    t = m.table_t
    mids = np.sqrt(t[1:-1] * t[2:])
    return np.concatenate((t, mids, [0.5 * t[1]]))


def build_sigma(b1: SV, b2: SV, p: float, resolution: int = DEFAULT_RESOLUTION,
                min_cell: float = DEFAULT_MIN_CELL, tolerance: float = 1e-6) -> SigmaMap:
    """Tabulate sigma for the pair ``(b1, b2)`` and exponent ``p``."""
    p = float(p)
    w = weight_of(b1, b2, p)
    grid = make_grid(resolution, "geometric-toward-0", min_cell)
    mono = w.monomial()
    if mono is not None and mono[1] == 0.0:
        W = grid.edges.copy()
        tail = 1.0 - W
        return SigmaMap(p, b1, b2, w, 1.0, grid, _ro(W), _ro(tail), True, 0.0)
    C = float(weight_integral(w, [0.0], [1.0])[0])
    if not np.isfinite(C) or C <= 0 or C > 1e300:
        raise NonIntegrableWeight(f"(b1/b2)**p is not integrable on (0,1): C = {C}")
    cells = np.asarray(cell_integrals(w, grid, 0.0))
    if not np.all(np.isfinite(cells)):
        raise NonIntegrableWeight("(b1/b2)**p has a non-integrable cell")
    W = np.concatenate(([0.0], kahan_cumsum(cells)))
    tail = np.concatenate((kahan_cumsum(cells[::-1])[::-1], [0.0]))
    W[-1] = C
    m = SigmaMap(p, b1, b2, w, C, grid, _ro(W), _ro(tail), False, 0.0)
    res = float(np.max(m.residuals()))
    if res > tolerance:
        raise ResolutionTooCoarse(f"sigma residual {res:.3e} exceeds tolerance {tolerance:.1e}")
    object.__setattr__(m, "residual", res)
    return m


def _ro(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


# diagnostics ---------------------------------------------------------------


def _probe_t(lo: float = 1e-8, hi: float = 1.0 - 1e-8, n: int = 400) -> np.ndarray:
    near0 = np.geomspace(lo, 0.5, n)
    near1 = 1.0 - np.geomspace(1.0 - hi, 0.5, n)[::-1]
    return np.unique(np.concatenate((near0, near1)))


def sigma_inverse_asymptotic_check(m: SigmaMap, t=None) -> RatioRange:
    """Range of ``sigma^{-1}(t) / (t b1(t**p) / b2(t**p))``."""
    t = _probe_t() if t is None else np.asarray(t, dtype=float)
    tp = t ** m.p
    ratio = m.sigma_inv(t) / (t * m.b1(tp) / m.b2(tp))
    return ratio_range(ratio, t)


@dataclass(frozen=True)
class DominationReport:
    holds: bool
    strict: bool
    strict_expected: bool
    points: int
    min_gap: float

    def to_json(self):
        return {"holds": self.holds, "strict": self.strict,
                "strict_expected": self.strict_expected, "points": self.points,
                "min_gap": self.min_gap}


def sigma_domination_check(m: SigmaMap, t=None) -> DominationReport:
    """``t <= sigma^{-1}(t**(1/p))**p = phi(t)`` at every grid point."""
    mono = m.weight.monotonicity()
    if mono not in ("nonincreasing", "constant"):
        raise PreconditionViolation(f"b1/b2 is classified {mono!r}, not nonincreasing",
                                    "b1/b2 nonincreasing")
    t = m.grid.edges if t is None else np.asarray(t, dtype=float)
    gap = m.phi(t) - t
    interior = (t > 0) & (t < 1)
    strict_expected = bool(m.weight.strictly_decreasing())
    return DominationReport(
        holds=bool(np.all(gap >= 0)),
        strict=bool(np.all(gap[interior] > 0)),
        strict_expected=strict_expected,
        points=int(t.size),
        min_gap=float(gap[interior].min()) if np.any(interior) else 0.0,
    )


def bp_remark_c_check(m: SigmaMap, t=None, require_bp: bool = True):
    """Ranges of ``b1(t) / b1(phi(t))`` and ``b1(t) / b1(psi(t))``."""
    if require_bp:
        rep = in_class_Bp(m.b1, m.b2, m.p)
        if not rep.verdict:
            raise PreconditionViolation("(b1, b2) is not certified in B_p", "(b1,b2) in B_p")
    t = _probe_t() if t is None else np.asarray(t, dtype=float)
    b = m.b1(t)
    r_inv = b / m.b1(m.phi(t))
    r_fwd = b / m.b1(m.psi(t))
    return ratio_range(r_inv, t), ratio_range(r_fwd, t)


def derivative_check(m: SigmaMap, t=None) -> RatioRange:
    """Finite-difference ``phi'`` against ``b1**p b2**-p`` (diagnostic only)."""
    t = _probe_t(1e-6, 1 - 1e-6, 200) if t is None else np.asarray(t, dtype=float)
    h = 1e-4 * np.minimum(t, 1.0 - t)
    d = (m.phi(t + h) - m.phi(t - h)) / (2.0 * h)
    return ratio_range(d / m.weight(t), t)
