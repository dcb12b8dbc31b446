"""Scenario files and campaign reports."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import InvalidArgument, PreconditionViolation
from .grid import Grid, make_grid
from .karamata import SV, ONE, ell_pow, sv_from_json
from .spaces import Lebesgue, SpaceSpec, p_convex, space_from_json

DEFAULT_TOLERANCES = {"residual": 1e-6, "stability": 0.05, "equivalence_band": 10.0}
DEFAULT_GRID = {"size": 2 ** 13, "scheme": "geometric-toward-0", "min_cell": 1e-10}
DEFAULT_DICTIONARY = {"n_random": 50, "n_indicators": 24, "dual_levels": 24, "dual_random": 10}


@dataclass
class Scenario:
    p: float
    b1: SV
    b2: SV
    X: SpaceSpec = field(default_factory=lambda: Lebesgue(2.0))
    Y: SpaceSpec = field(default_factory=lambda: Lebesgue(2.0))
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    dictionary: dict = field(default_factory=lambda: dict(DEFAULT_DICTIONARY))
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sigma_resolution: int = 2 ** 14

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidArgument("p must be positive")
        self.grid = {**DEFAULT_GRID, **self.grid}
        self.dictionary = {**DEFAULT_DICTIONARY, **self.dictionary}
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    # grids ------------------------------------------------------------------

    def make_grid(self, refine: int = 0, scheme: str | None = None) -> Grid:
        return make_grid(int(self.grid["size"]) * 2 ** refine, scheme or self.grid["scheme"],
                         float(self.grid["min_cell"]))

    def resolutions(self):
        n = int(self.grid["size"])
        return (n, 2 * n)

    # invariants -------------------------------------------------------------

    def check_spaces(self):
        for name, sp in (("X", self.X), ("Y", self.Y)):
            ok, why = p_convex(sp, self.p)
            if not ok:
                raise PreconditionViolation(f"{name} is not certified {self.p}-convex: {why}",
                                            f"{name} p-convex")

    # serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "b1": self.b1.to_json(),
            "b2": self.b2.to_json(),
            "X": self.X.to_json(),
            "Y": self.Y.to_json(),
            "grid": dict(self.grid),
            "dictionary": dict(self.dictionary),
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
            "sigma_resolution": self.sigma_resolution,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        try:
            return cls(
                p=float(obj["p"]),
                b1=sv_from_json(obj["b1"]),
                b2=sv_from_json(obj["b2"]),
                X=space_from_json(obj.get("X", {"lebesgue": 2})),
                Y=space_from_json(obj.get("Y", {"lebesgue": 2})),
                grid=dict(obj.get("grid", {})),
                dictionary=dict(obj.get("dictionary", {})),
                seed=int(obj.get("seed", 0)),
                tolerances=dict(obj.get("tolerances", {})),
                sigma_resolution=int(obj.get("sigma_resolution", 2 ** 14)),
            )
        except KeyError as exc:
            raise InvalidArgument(f"scenario is missing {exc}") from None

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(canonical(self.to_json()).encode()).hexdigest()


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def gaussian_scenario(**overrides) -> Scenario:
    """p = 1, b1 = ell^(1/2), b2 = ell^(-1/2), X = Y = L^2."""
    kw = dict(p=1.0, b1=ell_pow(0.5), b2=ell_pow(-0.5))
    kw.update(overrides)
    return Scenario(**kw)


PRESETS = {
    "gaussian": (ell_pow(0.5), ell_pow(-0.5), 1.0),
    "quarter": (ell_pow(0.25), ell_pow(-0.75), 1.0),
    "half-p2": (ell_pow(0.5), ONE, 2.0),
}


# reports ------------------------------------------------------------------------

STATUS_CODES = {"pass": 0, "precondition": 2, "instability": 3, "violation": 4}


@dataclass
class Check:
    name: str
    passed: bool
    kind: str = "inequality"  # or "stability"
    data: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "kind": self.kind, "data": self.data}


@dataclass
class CampaignReport:
    campaign: str
    scenario_sha256: str
    seed: int
    resolutions: list
    checks: list = field(default_factory=list)
    precondition: str | None = None
    notes: list = field(default_factory=list)

    def add(self, name: str, passed: bool, kind: str = "inequality", **data) -> Check:
        c = Check(name, bool(passed), kind, data)
        self.checks.append(c)
        return c

    @property
    def status(self) -> str:
        if self.precondition is not None:
            return "precondition"
        failed = [c for c in self.checks if not c.passed]
        if any(c.kind == "inequality" for c in failed):
            return "violation"
        if failed:
            return "instability"
        return "pass"

    @property
    def exit_code(self) -> int:
        return STATUS_CODES[self.status]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "campaign": self.campaign,
            "provenance": {"scenario_sha256": self.scenario_sha256, "seed": self.seed,
                           "resolutions": list(self.resolutions)},
            "status": self.status,
            "precondition_violation": self.precondition,
            "checks": [c.to_json() for c in self.checks],
            "notes": list(self.notes),
        }

    def dumps(self) -> str:
        return json.dumps(_clean(self.to_json()), sort_keys=True, indent=2)


def _clean(obj):
    # json cannot carry inf/nan portably; numpy scalars need unwrapping
    import math

    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
