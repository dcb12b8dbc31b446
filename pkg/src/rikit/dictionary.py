"""Test-function dictionaries shared by the operators and the campaigns.

Every entry is defined by a resolution-free recipe and sampled on the grid
it is requested for, so the same dictionary at ``N`` and ``2N`` cells
describes the same functions.  Entries are ``(label, StepFunction)`` pairs.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, StepFunction
from .karamata import ell


def _indicator(grid: Grid, a: float) -> StepFunction:
    return StepFunction(grid, (grid.left < a).astype(float), "nonincreasing")


def _sampled(grid: Grid, fn) -> StepFunction:
    return StepFunction.from_callable(grid, fn, "nonincreasing")


def random_profiles(n: int, seed: int):
    """Cut points and levels of ``n`` random nonincreasing step profiles.

    Levels are partial sums of sorted exponential samples, read from the
    top down; cut points are log-uniform in ``[1e-8, 1]``.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = int(rng.integers(2, 12))
        cuts = np.sort(10.0 ** rng.uniform(-8.0, 0.0, k - 1))
        levels = np.cumsum(np.sort(rng.exponential(1.0, k)))[::-1]
        out.append((cuts, levels))
    return out


def _profile(grid: Grid, cuts, levels) -> StepFunction:
    idx = np.searchsorted(cuts, grid.left, side="right")
    return StepFunction(grid, levels[idx], "nonincreasing")


def function_dictionary(grid: Grid, p: float, seed: int = 0, n_random: int = 50,
                        n_indicators: int = 24, a_range=(1e-6, 0.9)):
    """Indicators, powers, log shapes, their products and random profiles."""
    out = []
    for a in np.geomspace(a_range[0], a_range[1], n_indicators):
        out.append((f"chi(0,{a:.3e})", _indicator(grid, a)))
    for g in (0.1, 0.25, 0.45):
        gamma = g / p
        out.append((f"t^-{gamma:g}", _sampled(grid, lambda t, e=gamma: t ** -e)))
    for d in (0.5, 1.0):
        out.append((f"ell^{d:g}", _sampled(grid, lambda t, e=d: ell(t) ** e)))
    for d in (-1.0, -0.5):
        # the nonincreasing rearrangement of ell^d, d < 0
        out.append((f"ell^{d:g}*", _sampled(grid, lambda t, e=d: ell(1.0 - t) ** e)))
    for g in (0.1, 0.25):
        for d in (0.5, 1.0):
            gamma = g / p
            out.append((f"t^-{gamma:g}*ell^{d:g}",
                        _sampled(grid, lambda t, e=gamma, k=d: t ** -e * ell(t) ** k)))
    for i, (cuts, levels) in enumerate(random_profiles(n_random, seed)):
        out.append((f"random[{i}]", _profile(grid, cuts, levels)))
    return out


def dual_dictionary(grid: Grid, levels: int = 24, seed: int = 1, n_random: int = 10):
    """Functions ``g`` for the duality chain: indicators, powers, ell shapes, random."""
    out = [(f"chi(0,{a:.3e})", _indicator(grid, a)) for a in np.geomspace(1e-7, 1.0, levels)]
    for gamma in (0.25, 0.5, 0.75):
        out.append((f"t^-{gamma:g}", _sampled(grid, lambda t, e=gamma: t ** -e)))
    for d in (0.5, 1.0):
        out.append((f"ell^{d:g}", _sampled(grid, lambda t, e=d: ell(t) ** e)))
    for i, (cuts, lev) in enumerate(random_profiles(n_random, seed)):
        out.append((f"random[{i}]", _profile(grid, cuts, lev)))
    return out


def lookup(dictionary, label: str) -> StepFunction:
    for lab, f in dictionary:
        if lab == label:
            return f
    raise KeyError(label)
