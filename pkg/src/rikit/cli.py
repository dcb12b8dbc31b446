"""Command-line entry point: ``rikit {sigma,kfunc,gaussible,verify}``."""

from __future__ import annotations

import argparse
import json
import sys

from . import campaigns
from .dictionary import function_dictionary, lookup
from .errors import InvalidArgument, PreconditionViolation, RikitError
from .grid import StepFunction
from .kfunc import kfunc_csv
from .scenario import STATUS_CODES, Scenario, gaussian_scenario

VERIFY = {
    "s-vs-u": campaigns.verify_S_dominated_by_U,
    "main-links": campaigns.verify_main_theorem_links,
    "bp-table": campaigns.bp_table_campaign,
    "gaussian": campaigns.gaussian_preset_report,
}


def _scenario(path: str | None) -> Scenario:
    return gaussian_scenario() if path is None else Scenario.load(path)


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _provenance(s: Scenario) -> str:
    return f"scenario_sha256={s.sha256} seed={s.seed}"


def _function(s: Scenario, spec: str) -> StepFunction:
    grid = s.make_grid()
    try:
        d = function_dictionary(grid, s.p, s.seed, int(s.dictionary["n_random"]),
                                int(s.dictionary["n_indicators"]))
        return lookup(d, spec)
    except KeyError:
        pass
    try:
        with open(spec) as fh:
            return StepFunction.from_json(json.load(fh))
    except OSError:
        raise InvalidArgument(f"{spec!r} is neither a dictionary label nor a readable file") from None


def cmd_sigma(args) -> int:
    s = _scenario(args.scenario)
    m = campaigns.sigma_for(s)
    _write(m.to_csv(_provenance(s)), args.out)
    return 0


def cmd_kfunc(args) -> int:
    s = _scenario(args.scenario)
    rep = campaigns.CampaignReport("kfunc", s.sha256, s.seed, [])
    if not campaigns._gate_bp(rep, s):
        print(f"precondition violation: {rep.precondition}", file=sys.stderr)
        return STATUS_CODES["precondition"]
    f = _function(s, args.function)
    _write(kfunc_csv(f, campaigns.sigma_for(s), provenance=_provenance(s)), args.out)
    return 0


def _emit(rep, out) -> int:
    _write(rep.dumps() + "\n", out)
    return rep.exit_code


def cmd_gaussible(args) -> int:
    return _emit(campaigns.gaussibility_campaign(_scenario(args.scenario), args.op), args.out)


def cmd_verify(args) -> int:
    return _emit(VERIFY[args.what](_scenario(args.scenario)), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rikit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", help="scenario JSON (default: Gaussian preset)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.set_defaults(fn=fn)
        return sp

    add("sigma", cmd_sigma, "tabulate sigma and write CSV")
    add("kfunc", cmd_kfunc, "explicit vs brute-force K-functional CSV").add_argument(
        "--function", required=True, help="dictionary label or StepFunction JSON file")
    add("gaussible", cmd_gaussible, "gaussibility constant report").add_argument(
        "--op", default="U", help="U, S, T or an operator JSON file")
    add("verify", cmd_verify, "theorem-level campaigns").add_argument(
        "what", choices=sorted(VERIFY))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PreconditionViolation as exc:
        print(f"precondition violation ({exc.hypothesis}): {exc}", file=sys.stderr)
        return STATUS_CODES["precondition"]
    except RikitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
