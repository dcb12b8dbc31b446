"""Nonincreasing rearrangements and the Hardy / HLP test utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .grid import Grid, StepFunction, exact_cumsum


def rearrangement(f: StepFunction) -> StepFunction:
    """``f*`` as a step function.

    When ``|f|`` is already nonincreasing the grid is kept.  Otherwise the
    cells are sorted by value (stable, so ties keep their original order)
    and the result lives on the grid of cumulative sorted widths.  Equal
    values then occupy consecutive cells, so every level set has exactly the
    same total measure as before: breakpoints are correctly rounded partial
    sums, and :func:`distribution` rounds level-set measures the same way.
    """
    vals = np.abs(f.values)
    if np.all(np.diff(vals) <= 0):
        return StepFunction(f.grid, vals, "nonincreasing")
    order = np.argsort(-vals, kind="stable")
    widths = f.grid.widths[order]
    bp = np.minimum(exact_cumsum(widths), 1.0)
    bp[-1] = 1.0
    # cells swallowed by rounding of the running sum carry no measure
    keep = np.diff(np.concatenate(([0.0], bp))) > 0
    grid = Grid(bp[keep], "custom")
    return StepFunction(grid, vals[order][keep], "nonincreasing")


def distribution(f: StepFunction, lam) -> np.ndarray:
    """Measure of ``{|f| > lam}`` for each ``lam``.

    For nonincreasing ``|f|`` the level set is an initial interval and its
    measure is a breakpoint; otherwise the cell widths are summed with
    ``math.fsum``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    vals = np.abs(f.values)
    edges = f.grid.edges
    if np.all(np.diff(vals) <= 0):
        return edges[np.sum(vals[None, :] > lam[:, None], axis=1)]
    w = f.grid.widths
    out = []
    for x in lam:
        mask = vals > x
        out.append(1.0 if mask.all() else math.fsum(w[mask]))
    return np.array(out)


def maximal_rearrangement(f: StepFunction) -> StepFunction:
    """``f**(t) = (1/t) int_0^t f*`` at the cell representatives of ``f*``.

    The first cell uses its representative ``x_1 / 2`` as divisor, so the
    value there is ``f*`` on that cell.
    """
    fs = rearrangement(f)
    g = fs.grid
    cum = np.concatenate(([0.0], np.cumsum(fs.values * g.widths)[:-1]))
    pts = g.points
    integral = cum + fs.values * (pts - g.left)
    vals = integral / pts
    # rounding must not break the ordering guaranteed by the definition
    vals = np.maximum(vals, fs.values)
    vals = np.minimum.accumulate(vals)
    return StepFunction(g, vals, "nonincreasing")


@dataclass(frozen=True)
class ImplicationReport:
    hypothesis: bool
    conclusion: bool

    @property
    def consistent(self) -> bool:
        """False exactly when the hypothesis holds but the conclusion fails."""
        return (not self.hypothesis) or self.conclusion


def _common(*fs: StepFunction):
    from .grid import union_grid, resample

    grid = union_grid(*(f.grid for f in fs))
    return grid, [resample(f, grid) if f.grid != grid else f for f in fs]


def hardy_lemma_check(f: StepFunction, g: StepFunction, h: StepFunction,
                      rtol: float = 1e-12) -> ImplicationReport:
    """Hardy's lemma on a shared grid.

    Hypothesis: ``int_0^t f <= int_0^t g`` at every breakpoint.
    Conclusion: ``int f h <= int g h``.
    """
    grid, (f, g, h) = _common(f, g, h)
    if np.any(f.values < 0) or np.any(g.values < 0) or np.any(h.values < 0):
        raise InvalidArgument("hardy_lemma_check needs nonnegative functions")
    if np.any(np.diff(h.values) > 0):
        raise InvalidArgument("h must be nonincreasing")
    w = grid.widths
    F = np.cumsum(f.values * w)
    G = np.cumsum(g.values * w)
    scale = max(F[-1], G[-1], 1e-300)
    hyp = bool(np.all(F <= G + rtol * scale))
    lhs = float(np.sum(f.values * h.values * w))
    rhs = float(np.sum(g.values * h.values * w))
    # the hypothesis slack, propagated through summation by parts
    slack = rtol * (scale * float(h.values.max(initial=0.0)) + max(abs(rhs), abs(lhs)))
    concl = lhs <= rhs + slack
    return ImplicationReport(hyp, bool(concl))


def hlp_check(f: StepFunction, g: StepFunction, norm, tol: float = 1e-10) -> ImplicationReport:
    """Hardy-Littlewood-Polya principle for a Banach r.i. norm."""
    from .spaces import norm as evaluate_norm

    if getattr(norm, "banach", "unknown") != "banach":
        raise InvalidArgument("hlp_check needs a Banach function norm")
    fs, gs = rearrangement(f), rearrangement(g)
    grid, (fs, gs) = _common(fs, gs)
    w = grid.widths
    F = np.cumsum(fs.values * w)
    G = np.cumsum(gs.values * w)
    hyp = bool(np.all(F <= G + 1e-12 * max(G[-1], F[-1], 1e-300)))
    concl = evaluate_norm(norm, f) <= evaluate_norm(norm, g) * (1.0 + tol) + 1e-300
    return ImplicationReport(hyp, bool(concl))
