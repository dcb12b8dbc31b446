import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rikit.errors import DomainError, InvalidArgument
from rikit.grid import Grid, StepFunction, compose_with_monotone, integrate, make_grid

from conftest import random_step


def test_uniform_grid():
    g = make_grid(8, "uniform", 1e-3)
    assert np.array_equal(g.breakpoints, np.arange(1, 9) / 8)


def test_geometric_endpoints():
    g = make_grid(16, "geometric-toward-0", 1e-8)
    assert g.breakpoints[0] == 1e-8
    assert g.breakpoints[-1] == 1.0


def test_geometric_ratio_constant():
    g = make_grid(1024, "geometric-toward-0", 1e-12)
    w = g.widths
    r = w[1:] / w[:-1]
    # the last width absorbs the rounding that pins the endpoint at 1
    assert np.max(np.abs(r[:-1] / r[0] - 1)) < 1e-9
    assert abs(r[-1] / r[0] - 1) < 1e-6


def test_both_ends_symmetric():
    g = make_grid(64, "geometric-toward-both-ends", 1e-9)
    w = g.widths
    assert abs(w[0] - 1e-9) < 1e-20
    assert abs(w[-1] - 1e-9) < 1e-15
    assert np.allclose(w, w[::-1], rtol=1e-6, atol=1e-15)


@pytest.mark.parametrize("size,min_cell", [(4, 1e-3), (7, 1e-3), (16, 0.5), (16, 0.0), (16, 1.0)])
def test_make_grid_rejects(size, min_cell):
    with pytest.raises(InvalidArgument):
        make_grid(size, "geometric-toward-0", min_cell)


def test_unknown_scheme():
    with pytest.raises(InvalidArgument):
        make_grid(16, "chebyshev", 1e-3)


def test_grid_invariants_enforced():
    with pytest.raises(InvalidArgument):
        Grid(np.array([0.5, 0.4, 1.0]))
    with pytest.raises(InvalidArgument):
        Grid(np.array([0.5, 0.9]))


def test_stepfunction_monotone_flag_checked():
    g = make_grid(8, "uniform", 1e-3)
    with pytest.raises(InvalidArgument):
        StepFunction(g, np.arange(8.0), "nonincreasing")
    with pytest.raises(InvalidArgument):
        StepFunction(g, np.full(8, np.nan))


def test_integrate_constant_and_indicator():
    g = make_grid(64, "uniform", 1e-3)
    assert integrate(StepFunction.constant(g, 1.0), 0, 1).value == 1.0
    chi = StepFunction.indicator(g, 0.5)
    res = integrate(chi, 0, 1)
    assert res.value == 0.5 and res.abs_error_estimate == 0.0


def test_integrate_identity_sampled():
    g = make_grid(1024, "uniform", 1e-4)
    f = StepFunction.from_callable(g, lambda t: t)
    assert abs(integrate(f).value - 0.5) < 1e-3


def test_integrate_rejects_reversed():
    g = make_grid(8, "uniform", 1e-3)
    with pytest.raises(InvalidArgument):
        integrate(StepFunction.constant(g, 1.0), 0.6, 0.2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_integrate_additive_and_monotone(seed, a, b, c):
    a, b, c = sorted((a, b, c))
    rng = np.random.default_rng(seed)
    g = make_grid(64, "geometric-toward-0", 1e-6)
    f = random_step(rng, g)
    h = f.with_values(f.values + rng.uniform(0, 1, g.size))
    whole = integrate(f, a, c).value
    parts = integrate(f, a, b).value + integrate(f, b, c).value
    assert abs(whole - parts) <= 1e-15 * max(1.0, abs(whole))
    assert integrate(f, a, c).value <= integrate(h, a, c).value + 1e-15


def test_compose_identity_exact():
    rng = np.random.default_rng(3)
    g = make_grid(128, "geometric-toward-0", 1e-8)
    f = random_step(rng, g)
    out = compose_with_monotone(f, lambda t: t)
    assert np.array_equal(out.values, f.values)


def test_compose_square_keeps_nonincreasing():
    g = make_grid(128, "geometric-toward-0", 1e-8)
    f = StepFunction.from_callable(g, lambda t: t ** -0.3, "nonincreasing")
    out = compose_with_monotone(f, lambda t: t ** 2)
    assert out.monotone == "nonincreasing"
    assert np.all(np.diff(out.values) <= 0)


def test_compose_indicator_half():
    g = make_grid(64, "uniform", 1e-3)
    f = StepFunction.indicator(g, 0.25)
    out = compose_with_monotone(f, lambda t: t / 2)
    # oracle: evaluate chi_(0,1/4)(t/2) at the left endpoints directly
    expected = (g.left / 2 < 0.25).astype(float)
    assert np.array_equal(out.values, expected)
    assert np.array_equal(out.values, StepFunction.indicator(g, 0.5).values)


def test_compose_domain_error():
    g = make_grid(16, "uniform", 1e-3)
    with pytest.raises(DomainError):
        compose_with_monotone(StepFunction.constant(g, 1.0), lambda t: 2 * t)


def test_json_roundtrip():
    rng = np.random.default_rng(0)
    g = make_grid(32, "geometric-toward-both-ends", 1e-6)
    f = random_step(rng, g)
    back = StepFunction.from_json(json.loads(f.dumps()))
    assert back.grid == g and np.array_equal(back.values, f.values)
