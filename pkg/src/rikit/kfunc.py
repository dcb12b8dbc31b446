"""K-functionals for the couples (L^p, L^inf) and (L^{p,b1}, L^{inf,b2}).

Three evaluators share the same discretization of ``g*``:

* :func:`k_lp_linf`, the classical formula ``(int_0^{t^p} f*^p)^{1/p}``;
* :func:`k_explicit_karamata`, the two-term expression ``I(g)(t)``;
* :func:`k_bruteforce`, the best truncation ``g = (|g| - lam)_+ + min(|g|, lam)``
  over the candidate levels ``lam`` in ``{g* values} U {0}``.

For each candidate level the two norms are computed once (prefix sums for
integer ``p``), after which ``K(t) = min_k A_k + t B_k`` is a lower envelope
of lines and is evaluated for a whole t-grid at once.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import InvalidArgument
from .grid import StepFunction
from .karamata import SV, Pow, simplify, weight_integral
from .rearrange import rearrangement
from .sigma import SigmaMap

COUPLES = ("lp-linf", "karamata")


@dataclass(frozen=True)
class KEstimate:
    value: float
    method: str
    t: float
    couple: str
    witness: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise InvalidArgument("K estimate must be finite")
        if (self.method == "brute-force") != (self.witness is not None):
            raise InvalidArgument("a witness level is present exactly for brute-force estimates")


def default_t_grid(n: int = 256, lo: float = 1e-8) -> np.ndarray:
    """Log-spaced ``t`` in ``[lo, 1)``."""
    return np.geomspace(lo, 1.0, n + 1)[:-1]


# shared pieces ------------------------------------------------------------


def _cell_weights(gs: StepFunction, b: SV | None, p: float) -> np.ndarray:
    g = gs.grid
    if b is None:
        return g.widths
    return weight_integral(simplify(Pow(b, p)), g.edges[:-1], g.edges[1:], 0.0)


def cumulative_power(gs: StepFunction, b: SV | None, p: float, x) -> np.ndarray:
    """``int_0^x (g* b)^p`` for nonincreasing ``gs``, exact weights, any ``x`` in [0, 1]."""
    x = np.asarray(x, dtype=float)
    g = gs.grid
    vp = gs.values ** p
    cum = np.concatenate(([0.0], np.cumsum(vp * _cell_weights(gs, b, p))))
    k = g.locate(x)
    if b is None:
        part = x - g.left[k]
    else:
        part = weight_integral(simplify(Pow(b, p)), g.left[k].ravel(), x.ravel(), 0.0).reshape(x.shape)
    return cum[k] + vp[k] * part


def _star(g: StepFunction) -> StepFunction:
    return g if g.monotone == "nonincreasing" and np.all(g.values >= 0) else rearrangement(g)


# L^p, L^inf ---------------------------------------------------------------


def k_lp_linf_curve(f: StepFunction, t, p: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise InvalidArgument("t must be positive")
    fs = _star(f)
    x = np.minimum(t, 1.0) ** p
    return cumulative_power(fs, None, p, x) ** (1.0 / p)


def k_lp_linf(f: StepFunction, t: float, p: float) -> KEstimate:
    """``(int_0^{min(t,1)^p} f*^p)^{1/p}``."""
    val = float(k_lp_linf_curve(f, np.array([t]), p)[0])
    return KEstimate(val, "explicit", float(t), "lp-linf")


# explicit I(g)(t) ---------------------------------------------------------


def _suffix_max(a: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(a[::-1])[::-1]


def k_explicit_curve(g: StepFunction, t, m: SigmaMap) -> np.ndarray:
    """``I(g)(t)`` for every ``t`` in (0, 1)."""
    t = np.asarray(t, dtype=float)
    gs = _star(g)
    grid = gs.grid
    u = m.psi(t ** m.p)
    first = cumulative_power(gs, m.b1, m.p, u) ** (1.0 / m.p)
    vb = gs.values * m.b2(grid.points)
    suf = np.concatenate((_suffix_max(vb), [0.0]))
    # representatives at or to the right of u, plus the point u itself
    j = np.searchsorted(grid.points, u, side="left")
    at_u = gs(u) * m.b2(np.maximum(u, 1e-300))
    second = np.maximum(suf[j], at_u)
    return first + t * second


def k_explicit_karamata(g: StepFunction, t: float, m: SigmaMap) -> KEstimate:
    if not 0.0 < t < 1.0:
        raise InvalidArgument("the explicit formula is stated for t in (0, 1)")
    val = float(k_explicit_curve(g, np.array([t]), m)[0])
    return KEstimate(val, "explicit", float(t), "karamata")


# brute force ----------------------------------------------------------------


def _truncation_lines(gs: StepFunction, p: float, b1: SV | None, b2: SV | None):
    """Norm pieces ``(A_k, B_k, lam_k)`` for each candidate level."""
    v = gs.values
    n = v.size
    omega = _cell_weights(gs, b1, p)
    if float(p).is_integer() and p <= 8:
        ip = int(p)
        # sum_{j<k} (v_j - v_k)^p w_j by the binomial expansion of prefix sums
        S = [np.concatenate(([0.0], np.cumsum(v ** i * omega)))[:-1] for i in range(ip + 1)]
        A = np.zeros(n)
        for i in range(ip + 1):
            A += comb(ip, i) * (-v) ** (ip - i) * S[i]
        A = np.maximum(A, 0.0)
    else:
        A = np.empty(n)
        step = max(1, 2 ** 22 // max(n, 1))
        for s in range(0, n, step):
            lam = v[s:s + step]
            diff = np.clip(v[None, :] - lam[:, None], 0.0, None)
            A[s:s + step] = (diff ** p) @ omega
    bw = np.ones(n) if b2 is None else b2(gs.grid.points)
    pref = np.maximum.accumulate(bw)
    suf = np.concatenate((_suffix_max(v * bw), [0.0]))
    B = np.maximum(v * pref, suf[1:])
    # level 0: everything in X0
    A = np.concatenate((A, [float(np.sum(v ** p * omega))]))
    B = np.concatenate((B, [0.0]))
    lam = np.concatenate((v, [0.0]))
    return A ** (1.0 / p), B, lam


def _couple_params(couple: str, params):
    if couple == "lp-linf":
        p = params.p if isinstance(params, SigmaMap) else float(params)
        return p, None, None
    if couple == "karamata":
        if isinstance(params, SigmaMap):
            return params.p, params.b1, params.b2
        p, b1, b2 = params
        return float(p), b1, b2
    raise InvalidArgument(f"unknown couple {couple!r}; expected one of {COUPLES}")


def k_bruteforce_curve(g: StepFunction, t, couple: str, params):
    """Values and witness levels of the best truncation for every ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise InvalidArgument("t must be positive")
    p, b1, b2 = _couple_params(couple, params)
    A, B, lam = _truncation_lines(_star(g), p, b1, b2)
    vals = np.empty(t.shape)
    wit = np.empty(t.shape)
    flat_t = t.ravel()
    for s in range(0, flat_t.size, 64):
        tt = flat_t[s:s + 64]
        obj = A[None, :] + tt[:, None] * B[None, :]
        k = np.argmin(obj, axis=1)
        vals.ravel()[s:s + 64] = obj[np.arange(tt.size), k]
        wit.ravel()[s:s + 64] = lam[k]
    return vals, wit


def k_bruteforce(g: StepFunction, t: float, couple: str, params) -> KEstimate:
    """Best truncation decomposition; an upper bound for the K-functional."""
    vals, wit = k_bruteforce_curve(g, np.array([t]), couple, params)
    return KEstimate(float(vals[0]), "brute-force", float(t), couple, float(wit[0]))


# the four equivalent inequalities ------------------------------------------


@dataclass
class ChainReport:
    constants: dict
    t: np.ndarray

    def holds_with(self, c: float) -> dict:
        return {k: bool(v <= c) for k, v in self.constants.items()}

    def to_json(self):
        return {"constants": dict(self.constants), "t_points": int(self.t.size)}


def _ratio_sup(lhs, rhs):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(lhs <= 0, 0.0, lhs / rhs)
    return float(np.max(r, initial=0.0))


def u_profile(f: StepFunction, m: SigmaMap, grid=None) -> StepFunction:
    """``f*(phi(t)) / b2(t)`` on ``grid``: the step function behind U."""
    from .operators import op_U

    return op_U(f, m, grid)


def k_inequality_chain_check(f: StepFunction, g: StepFunction, m: SigmaMap, t=None,
                             grid=None) -> ChainReport:
    """Best constants of the four equivalent forms on a t-grid in (0, 1).

    (eq1) ``I(g)(t) <= c (int_0^{t^p} f*^p)^{1/p}``;
    (eq2) ``int_0^t (g* b1)^p <= c int_0^t (f*(phi(s)) b1(s) / b2(s))^p ds``;
    (eq3) ``int_0^{sigma(t)^p} (g* b1)^p <= c int_0^{t^p} f*^p``;
    (eq4) ``t^p sup_{s >= sigma(t)^p} int_0^s (g* b1)^p / (s (b1/b2)(s)^p) <= c int_0^{t^p} f*^p``.

    The right-hand side of (eq2) is discretized exactly like ``U f`` on
    ``grid`` (default: the grid of ``f``).
    """
    t = default_t_grid() if t is None else np.asarray(t, dtype=float)
    p = m.p
    fs, gs = _star(f), _star(g)
    Ff = cumulative_power(fs, None, p, t ** p)
    u = m.psi(t ** p)
    G = lambda x: cumulative_power(gs, m.b1, p, x)

    c1 = _ratio_sup(k_explicit_curve(gs, t, m), Ff ** (1.0 / p))
    uf = u_profile(f, m, grid if grid is not None else f.grid)
    c2 = _ratio_sup(G(t), cumulative_power(uf, m.b1, p, t))
    c3 = _ratio_sup(G(u), Ff)

    x = gs.grid.breakpoints
    H = G(x) / (x * m.weight(np.minimum(x, 1.0)))
    suf = np.concatenate((_suffix_max(H[:-1]), [0.0]))
    j = np.searchsorted(x[:-1], u, side="left")
    Hu = G(u) / (u * m.weight(np.maximum(u, 1e-300)))
    c4 = _ratio_sup(t ** p * np.maximum(suf[j], Hu), Ff)
    return ChainReport({"eq1": c1, "eq2": c2, "eq3": c3, "eq4": c4}, t)


def kfunc_csv(g: StepFunction, m: SigmaMap, t=None, provenance: str | None = None) -> str:
    """CSV with columns t, K_explicit, K_bruteforce, ratio, lambda_witness."""
    t = default_t_grid() if t is None else np.asarray(t, dtype=float)
    ke = k_explicit_curve(g, t, m)
    kb, lam = k_bruteforce_curve(g, t, "karamata", m)
    buf = io.StringIO()
    if provenance:
        buf.write(f"# {provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "K_explicit", "K_bruteforce", "ratio", "lambda_witness"])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ke > 0, kb / ke, 0.0)
    for row in zip(t, ke, kb, ratio, lam):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
