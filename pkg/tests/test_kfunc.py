import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rikit.dictionary import function_dictionary
from rikit.errors import InvalidArgument
from rikit.grid import StepFunction, make_grid
from rikit.karamata import ONE
from rikit.kfunc import (KEstimate, default_t_grid, k_bruteforce, k_bruteforce_curve,
                         k_explicit_curve, k_explicit_karamata, k_inequality_chain_check,
                         k_lp_linf, k_lp_linf_curve, kfunc_csv)
from rikit.operators import op_U
from rikit.rearrange import rearrangement
from rikit.sigma import build_sigma
from rikit.spaces import Lebesgue, OrliczKaramata, norm

from conftest import random_nonincreasing, random_step, sigma_map

GRID = make_grid(2048, "geometric-toward-0", 1e-10)
UNIFORM = make_grid(64, "uniform", 1e-3)
IDENTITY = build_sigma(ONE, ONE, 1.0, 1024)


def test_lp_linf_examples():
    assert k_lp_linf(StepFunction.constant(GRID, 1.0), 0.5, 1.0).value == pytest.approx(0.5, rel=1e-15)
    chi = StepFunction.indicator(UNIFORM, 0.25)
    for t in (1.0, 3.0, 100.0):
        assert k_lp_linf(chi, t, 1.0).value == 0.25


@pytest.mark.parametrize("t,expected", [(0.25, 1.0), (1 / 16, 0.5)])
def test_lp_linf_inverse_square_root(t, expected):
    # int_0^t s^{-1/2} ds = 2 t^{1/2}
    grid = make_grid(2 ** 13, "geometric-toward-0", 1e-10)
    f = StepFunction.from_callable(grid, lambda s: s ** -0.5, "nonincreasing")
    assert abs(k_lp_linf(f, t, 1.0).value - expected) <= 1e-3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_lp_linf_flat_beyond_one(seed, p):
    f = random_step(np.random.default_rng(seed), UNIFORM)
    v = k_lp_linf_curve(f, np.array([1.0, 1.5, 10.0]), p)
    assert v[0] == v[1] == v[2]


def test_explicit_identity_constant():
    t = np.linspace(0.01, 0.99, 50)
    one = StepFunction.constant(GRID, 1.0)
    assert np.allclose(k_explicit_curve(one, t, IDENTITY), 2 * t, rtol=1e-14, atol=0)


def test_explicit_indicator_first_term_only():
    m = sigma_map("gaussian")
    # sigma(0.6) = psi(0.6) > 1/4 since phi(1/4) = (2 + log 4) / 8 < 0.6
    chi = StepFunction.indicator(UNIFORM, 0.25)
    assert m.psi(0.6) > 0.25
    # oracle: mpmath quad of (1 - log s)^{1/2} on (0, 1/4)
    assert k_explicit_karamata(chi, 0.6, m).value == pytest.approx(0.45585070384531645414, rel=1e-12)


def test_explicit_rejects_t():
    with pytest.raises(InvalidArgument):
        k_explicit_karamata(StepFunction.constant(GRID, 1.0), 1.0, sigma_map("gaussian"))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_explicit_dominates_left_endpoint(seed):
    m = sigma_map("gaussian")
    g = random_nonincreasing(np.random.default_rng(seed), GRID)
    t = default_t_grid(64)
    u = m.psi(t)
    lower = t * g(u) * m.b2(u)
    assert np.all(k_explicit_curve(g, t, m) >= lower * (1 - 1e-14))


def test_bruteforce_constant():
    c = 3.0
    g = StepFunction.constant(UNIFORM, c)
    est = k_bruteforce(g, 0.4, "lp-linf", 1.0)
    assert est.value == pytest.approx(c * 0.4) and est.witness == c
    est = k_bruteforce(g, 2.0, "lp-linf", 1.0)
    assert est.value == pytest.approx(c) and est.witness == 0.0


def test_bruteforce_indicator():
    chi = StepFunction.indicator(UNIFORM, 0.5)
    est = k_bruteforce(chi, 0.2, "lp-linf", 1.0)
    assert est.value == pytest.approx(0.2) and est.witness == 1.0


def _naive_truncation(g, t, p, b1, b2):
    # oracle: evaluate both norms of every truncation through the spaces module
    gs = rearrangement(g)
    x0 = Lebesgue(p) if b1 is None else OrliczKaramata(p, b1)
    x1 = Lebesgue(math.inf) if b2 is None else OrliczKaramata(math.inf, b2)
    best = math.inf
    for lam in list(gs.values) + [0.0]:
        top = gs.with_values(np.maximum(gs.values - lam, 0.0))
        low = gs.with_values(np.minimum(gs.values, lam))
        best = min(best, norm(x0, top) + t * norm(x1, low))
    return best


@pytest.mark.parametrize("couple", ["lp-linf", "karamata"])
@pytest.mark.parametrize("p", [1.0, 2.0, 1.5])
def test_bruteforce_matches_naive(couple, p):
    rng = np.random.default_rng(int(p * 10))
    grid = make_grid(48, "geometric-toward-0", 1e-6)
    b1, b2 = (None, None) if couple == "lp-linf" else (sigma_map("gaussian").b1, sigma_map("gaussian").b2)
    params = p if couple == "lp-linf" else (p, b1, b2)
    for _ in range(3):
        g = random_step(rng, grid, signed=True)
        for t in (1e-4, 0.05, 0.5, 2.0):
            got = k_bruteforce(g, t, couple, params).value
            assert got == pytest.approx(_naive_truncation(g, t, p, b1, b2), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["lp-linf", "karamata"]))
def test_bruteforce_concave_nondecreasing(seed, couple):
    m = sigma_map("gaussian")
    g = random_step(np.random.default_rng(seed), GRID)
    t = np.linspace(1e-3, 2.0, 401)
    v, _ = k_bruteforce_curve(g, t, couple, m)
    assert np.all(np.diff(v) >= -1e-9)
    mid = 0.5 * (v[:-2] + v[2:])
    assert np.all(v[1:-1] >= mid - 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_lp_linf_concave_p1(seed):
    g = random_step(np.random.default_rng(seed), GRID)
    t = np.linspace(1e-3, 1.0, 401)
    v = k_lp_linf_curve(g, t, 1.0)
    assert np.all(np.diff(v) >= 0)
    assert np.all(v[1:-1] >= 0.5 * (v[:-2] + v[2:]) - 1e-9)


@pytest.mark.parametrize("name", ["gaussian", "quarter", "half-p2"])
def test_oracle_consistency_band(name):
    m = sigma_map(name)
    t = default_t_grid(64)
    worst = 1.0
    for _, f in function_dictionary(GRID, m.p, n_random=10):
        ke = k_explicit_curve(f, t, m)
        kb, _ = k_bruteforce_curve(f, t, "karamata", m)
        r = kb / ke
        worst = max(worst, r.max(), 1 / r.min())
        kl = k_lp_linf_curve(f, t, m.p)
        kb2, _ = k_bruteforce_curve(f, t, "lp-linf", m.p)
        r2 = kb2 / kl
        assert r2.max() <= 2 ** (1 / m.p) + 1e-9 and r2.min() >= 1 - 1e-6
    assert worst < 10


def test_kestimate_invariants():
    with pytest.raises(InvalidArgument):
        KEstimate(float("inf"), "explicit", 0.5, "lp-linf")
    with pytest.raises(InvalidArgument):
        KEstimate(1.0, "brute-force", 0.5, "lp-linf")
    with pytest.raises(InvalidArgument):
        KEstimate(1.0, "explicit", 0.5, "lp-linf", witness=1.0)
    with pytest.raises(InvalidArgument):
        k_bruteforce(StepFunction.constant(UNIFORM, 1.0), 0.5, "lorentz", 1.0)


def test_chain_with_U():
    m = sigma_map("gaussian")
    for _, f in function_dictionary(GRID, 1.0, n_random=5)[::3]:
        c = k_inequality_chain_check(f, op_U(f, m), m).constants
        assert c["eq2"] == pytest.approx(1.0, abs=1e-12)
        assert all(np.isfinite(v) and v < 10 for v in c.values())


def test_chain_constants_and_zero():
    m = sigma_map("gaussian")
    one = StepFunction.constant(GRID, 1.0)
    rep = k_inequality_chain_check(one, one, m)
    assert all(np.isfinite(v) and v > 0 for v in rep.constants.values())
    zero = StepFunction.constant(GRID, 0.0)
    rep = k_inequality_chain_check(one, zero, m)
    assert rep.constants == {"eq1": 0.0, "eq2": 0.0, "eq3": 0.0, "eq4": 0.0}
    assert all(rep.holds_with(0.0).values())


def test_csv():
    m = sigma_map("gaussian")
    text = kfunc_csv(StepFunction.indicator(GRID, 0.1), m, default_t_grid(16), "scenario_sha256=x")
    lines = text.splitlines()
    assert lines[0] == "# scenario_sha256=x"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0] == ["t", "K_explicit", "K_bruteforce", "ratio", "lambda_witness"]
    assert len(rows) == 17
