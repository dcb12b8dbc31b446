import numpy as np
import pytest

from rikit.grid import StepFunction, make_grid
from rikit.karamata import ONE, ell_pow
from rikit.sigma import build_sigma

PRESET_PAIRS = {
    "gaussian": (ell_pow(0.5), ell_pow(-0.5), 1.0),
    "quarter": (ell_pow(0.25), ell_pow(-0.75), 1.0),
    "half-p2": (ell_pow(0.5), ONE, 2.0),
}

_SIGMA = {}


def sigma_map(name, resolution=2 ** 13):
    key = (name, resolution)
    if key not in _SIGMA:
        b1, b2, p = PRESET_PAIRS[name] if isinstance(name, str) else name
        _SIGMA[key] = build_sigma(b1, b2, p, resolution)
    return _SIGMA[key]


@pytest.fixture(scope="session")
def gauss():
    return sigma_map("gaussian")


@pytest.fixture(scope="session")
def grid512():
    return make_grid(512, "geometric-toward-0", 1e-10)


def random_step(rng, grid, lo=0.0, hi=1.0, signed=False):
    vals = rng.uniform(lo, hi, grid.size)
    if signed:
        vals *= rng.choice([-1.0, 1.0], grid.size)
    return StepFunction(grid, vals)


def random_nonincreasing(rng, grid):
    vals = np.sort(rng.exponential(1.0, grid.size))[::-1]
    return StepFunction(grid, vals, "nonincreasing")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])
