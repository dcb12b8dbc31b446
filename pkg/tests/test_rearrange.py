import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rikit.errors import InvalidArgument
from rikit.grid import StepFunction, make_grid
from rikit.karamata import ell_pow
from rikit.rearrange import (distribution, hardy_lemma_check, hlp_check,
                             maximal_rearrangement, rearrangement)
from rikit.spaces import Lebesgue, OrliczKaramata, norm

from conftest import random_nonincreasing, random_step

GRID = make_grid(256, "geometric-toward-0", 1e-8)
UNIFORM = make_grid(64, "uniform", 1e-3)


def test_constant():
    f = StepFunction.constant(GRID, -2.5)
    fs = rearrangement(f)
    assert np.all(fs.values == 2.5) and fs.monotone == "nonincreasing"


def test_indicator_of_scattered_set():
    vals = np.zeros(UNIFORM.size)
    vals[[3, 10, 11, 40]] = 1.0
    fs = rearrangement(StepFunction(UNIFORM, vals))
    a = 4 / 64
    assert np.array_equal(fs.values, (fs.grid.left < a).astype(float))
    assert distribution(fs, 0.5)[0] == a


def test_uniform_sorted_descending():
    rng = np.random.default_rng(7)
    f = random_step(rng, UNIFORM, signed=True)
    fs = rearrangement(f)
    # oracle: sort (|value|, width) pairs and accumulate widths
    order = np.argsort(-np.abs(f.values), kind="stable")
    assert np.array_equal(fs.values, np.abs(f.values)[order])
    assert np.allclose(fs.grid.breakpoints, np.cumsum(UNIFORM.widths[order]), rtol=0, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_equimeasurable_idempotent_norms(seed):
    rng = np.random.default_rng(seed)
    # few distinct levels so that ties and level sets are exercised
    vals = rng.integers(-4, 5, GRID.size).astype(float)
    f = StepFunction(GRID, vals)
    fs = rearrangement(f)
    lam = np.arange(-1, 5) + 0.5
    assert np.array_equal(distribution(f, lam), distribution(fs, lam))
    again = rearrangement(fs)
    assert again.grid == fs.grid and np.array_equal(again.values, fs.values)
    for q in (1.0, 2.0, np.inf):
        a, b = norm(Lebesgue(q), f), norm(Lebesgue(q), fs)
        assert abs(a - b) <= 1e-12 * max(a, 1e-300)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_monotone_in_modulus(seed):
    rng = np.random.default_rng(seed)
    f = random_step(rng, UNIFORM, signed=True)
    g = f.with_values(np.abs(f.values) + rng.uniform(0, 1, UNIFORM.size))
    fs, gs = rearrangement(f), rearrangement(g)
    x = np.linspace(0, 1, 1000, endpoint=False)
    assert np.all(fs(x) <= gs(x))


def test_maximal_constant_and_indicator():
    ff = maximal_rearrangement(StepFunction.constant(GRID, 1.0))
    assert np.allclose(ff.values, 1.0, rtol=0, atol=1e-15)
    a = 0.3
    chi = StepFunction.indicator(UNIFORM, a)
    ff = maximal_rearrangement(chi)
    a_eff = UNIFORM.breakpoints[UNIFORM.locate(a)]  # measure of the sampled indicator
    assert np.allclose(ff.values, np.minimum(1.0, a_eff / ff.grid.points), rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_maximal_dominates(seed):
    rng = np.random.default_rng(seed)
    f = random_step(rng, GRID, signed=True)
    fs, ff = rearrangement(f), maximal_rearrangement(f)
    assert np.all(ff.values >= fs.values)
    assert np.all(np.diff(ff.values) <= 0)


def test_hardy_trivial_cases():
    rng = np.random.default_rng(1)
    f = random_step(rng, UNIFORM)
    h = random_nonincreasing(rng, UNIFORM)
    r = hardy_lemma_check(f, f, h)
    assert r.hypothesis and r.conclusion
    g = f.with_values(f.values + 0.1)
    r = hardy_lemma_check(f, g, StepFunction.constant(UNIFORM, 1.0))
    assert r.hypothesis and r.conclusion


def test_hardy_rejects_bad_input():
    f = StepFunction.constant(UNIFORM, 1.0)
    with pytest.raises(InvalidArgument):
        hardy_lemma_check(f.scale(-1), f, f)
    with pytest.raises(InvalidArgument):
        hardy_lemma_check(f, f, StepFunction(UNIFORM, np.arange(64.0)))


def test_hardy_random_triples():
    rng = np.random.default_rng(2024)
    fired = 0
    for _ in range(1000):
        f = random_step(rng, UNIFORM)
        g = f.with_values(f.values + rng.normal(0.05, 0.3, UNIFORM.size).clip(-f.values))
        h = random_nonincreasing(rng, UNIFORM)
        r = hardy_lemma_check(f, g, h)
        fired += r.hypothesis
        assert r.consistent
    assert fired > 50


def test_hlp_examples():
    f = StepFunction.indicator(UNIFORM, 0.25)
    g = StepFunction.indicator(UNIFORM, 0.5)
    r = hlp_check(f, g, Lebesgue(1.0))
    assert r.hypothesis and r.conclusion
    assert norm(Lebesgue(1.0), f) == 0.25 and norm(Lebesgue(1.0), g) == 0.5
    r = hlp_check(g, g, Lebesgue(2.0))
    assert r.hypothesis and r.conclusion


def test_hlp_rejects_quasi_norm():
    f = StepFunction.constant(UNIFORM, 1.0)
    with pytest.raises(InvalidArgument):
        hlp_check(f, f, Lebesgue(0.5))


@pytest.mark.parametrize("space", [Lebesgue(2.0), OrliczKaramata(1.0, ell_pow(0.5))])
def test_hlp_random_pairs(space):
    rng = np.random.default_rng(11)
    fired = 0
    for _ in range(1000):
        f = random_step(rng, UNIFORM, signed=True)
        g = f.with_values(f.values * rng.uniform(0.8, 1.6, UNIFORM.size))
        r = hlp_check(f, g, space)
        fired += r.hypothesis
        assert r.consistent
    assert fired > 50
