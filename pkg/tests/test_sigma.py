import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rikit.errors import NonIntegrableWeight, PreconditionViolation, ResolutionTooCoarse
from rikit.karamata import ONE, ell, ell_pow
from rikit.sigma import (bp_remark_c_check, build_sigma, derivative_check,
                         sigma_domination_check, sigma_inverse_asymptotic_check)

from conftest import PRESET_PAIRS, sigma_map

# W^{-1}(C t^p)^{1/p} at t = 1/2 with W(u) = int_0^u ell = u (2 - log u), C = 2;
# oracle: mpmath findroot at 40 digits
SIGMA_HALF = {"gaussian": 0.31784443289937268383, "quarter": 0.31784443289937268383,
              "half-p2": 0.34898257411168678321}


@pytest.mark.parametrize("name", sorted(PRESET_PAIRS))
def test_sigma_half_oracle(name):
    m = sigma_map(name)
    assert m.sigma(0.5, exact=True) == pytest.approx(SIGMA_HALF[name], rel=1e-14)
    assert m.sigma(0.5) == pytest.approx(SIGMA_HALF[name], rel=1e-6)
    assert m.C == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("name", sorted(PRESET_PAIRS))
def test_endpoints_and_monotone_tables(name):
    m = sigma_map(name)
    assert m.sigma(0.0) == 0.0 and m.sigma(1.0) == 1.0
    assert m.sigma_inv(0.0) == 0.0 and m.sigma_inv(1.0) == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(m.table_t) > 0) and np.all(np.diff(m.table_sigma) > 0)


@pytest.mark.parametrize("name", sorted(PRESET_PAIRS))
def test_residual_and_refinement(name):
    coarse, fine = sigma_map(name, 2 ** 13), sigma_map(name, 2 ** 14)
    assert fine.residual <= 1e-6
    assert fine.residual <= 0.5 * coarse.residual


def test_gaussian_phi_closed_form():
    # for the Gaussian pair phi(s) = W(s) / 2 = s log(e / sqrt(s))
    m = sigma_map("gaussian")
    s = np.geomspace(1e-12, 0.999, 300)
    assert np.allclose(m.phi(s), s * (2 - np.log(s)) / 2, rtol=1e-13, atol=0)
    assert np.allclose(m.phi(s), s * np.log(np.e / np.sqrt(s)), rtol=1e-13, atol=0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-12, 1.0))
def test_round_trip(t):
    m = sigma_map("gaussian")
    s = m.sigma(t)
    cell = np.max(np.diff(m.table_t))
    assert abs(m.sigma_inv(s) - t) <= 2 * cell
    assert m.psi(m.phi(t)) == pytest.approx(t, rel=1e-13)


def test_identity_map():
    m = build_sigma(ONE, ONE, 1.0, 1024)
    t = np.linspace(0, 1, 101)
    assert m.identity and m.residual == 0.0
    assert np.array_equal(m.sigma(t), t) and np.array_equal(m.sigma_inv(t), t)
    r = sigma_inverse_asymptotic_check(m)
    assert r.lo == pytest.approx(1.0, abs=1e-15) and r.hi == pytest.approx(1.0, abs=1e-15)
    d = sigma_domination_check(m)
    assert d.holds and d.min_gap == 0.0 and not d.strict_expected
    r1, r2 = bp_remark_c_check(m, require_bp=False)
    assert r1.lo == r1.hi == 1.0 and r2.lo == r2.hi == 1.0


def test_resolution_too_coarse():
    with pytest.raises(ResolutionTooCoarse):
        build_sigma(ell_pow(0.5), ell_pow(-0.5), 1.0, 16, tolerance=1e-12)


def test_non_integrable_weight():
    # C = e Gamma(401, 1) overflows double precision
    with pytest.raises(NonIntegrableWeight):
        build_sigma(ell_pow(400.0), ONE, 1.0, 1024)


@pytest.mark.parametrize("pair", [PRESET_PAIRS["gaussian"], (ell_pow(1.0), ONE, 1.0)])
def test_inverse_asymptotics_bounded_and_stable(pair):
    r1 = sigma_inverse_asymptotic_check(build_sigma(*pair, 2 ** 13))
    r2 = sigma_inverse_asymptotic_check(build_sigma(*pair, 2 ** 14))
    assert r1.bounded and r1.band < 2.0
    assert r2.lo == pytest.approx(r1.lo, rel=1e-6) and r2.hi == pytest.approx(r1.hi, rel=1e-6)


def test_inverse_asymptotics_closed_form():
    # sigma^-1(t) / (t ell(t)) = (2 - log t) / (2 (1 - log t)) for the Gaussian pair
    m = sigma_map("gaussian")
    r = sigma_inverse_asymptotic_check(m, np.array([1e-8, 0.5]))
    t = np.array([1e-8, 0.5])
    oracle = (2 - np.log(t)) / (2 * ell(t))
    assert r.lo == pytest.approx(oracle.min(), rel=1e-12)
    assert r.hi == pytest.approx(oracle.max(), rel=1e-12)


@pytest.mark.parametrize("pair,strict", [
    (PRESET_PAIRS["gaussian"], True), (PRESET_PAIRS["half-p2"], True),
])
def test_domination(pair, strict):
    m = build_sigma(*pair, 2 ** 13)
    d = sigma_domination_check(m)
    assert d.holds and d.strict == strict and d.points == m.grid.size + 1


def test_domination_precondition():
    m = build_sigma(ell_pow(-0.5), ell_pow(0.25), 1.0, 2 ** 13)
    with pytest.raises(PreconditionViolation) as exc:
        sigma_domination_check(m)
    assert exc.value.hypothesis == "b1/b2 nonincreasing"


@pytest.mark.parametrize("name", ["gaussian", "quarter"])
def test_bp_remark_c(name):
    r1, r2 = bp_remark_c_check(sigma_map(name))
    assert r1.bounded and r2.bounded and r1.band < 2 and r2.band < 2


def test_bp_remark_c_requires_membership():
    with pytest.raises(PreconditionViolation):
        bp_remark_c_check(build_sigma(ONE, ONE, 1.0, 1024))


def test_derivative_diagnostic():
    # (sigma^-1(t^{1/p})^p)' = (b1/b2)^p / C, so the ratio is 1/C = 1/2
    r = derivative_check(sigma_map("gaussian"))
    assert r.lo == pytest.approx(0.5, rel=1e-4) and r.hi == pytest.approx(0.5, rel=1e-4)


def test_csv_export():
    m = sigma_map("gaussian")
    text = m.to_csv("scenario_sha256=abc")
    lines = text.splitlines()
    assert lines[0] == "# scenario_sha256=abc"
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0] == ["t", "sigma", "sigma_inv", "residual"]
    assert len(rows) == m.grid.size + 2
    assert max(float(r[3]) for r in rows[1:]) <= 1e-6
