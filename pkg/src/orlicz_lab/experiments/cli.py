"""Command line entry point.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad
arguments or configuration, 3 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from .._roots import RootFindingError
from ..measure import _build, field_from_csv
from ..operator import SolverError
from ..orlicz import luxemburg_norm
from ..young import ConjugateForm, YoungParams
from .config import ConfigError, load_config
from .scenarios import SCENARIOS, PreconditionError

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _young(text):
    try:
        parts = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected p,q got %r" % text)
    if len(parts) == 1:
        parts.append(0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected p,q got %r" % text)
    try:
        return YoungParams(*parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser():
    ap = argparse.ArgumentParser(prog="orlicz-lab",
                                 description="Orlicz-norm and L-infinity bound experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV + JSON")
    run.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    run.add_argument("--config", help="key = value file (defaults if omitted)")
    run.add_argument("--out", help="output directory (ORLICZ_LAB_OUT overrides)")
    run.add_argument("-q", "--quiet", action="store_true")

    nm = sub.add_parser("norm", help="Luxemburg norm of a field stored as CSV")
    nm.add_argument("--young", required=True, type=_young, metavar="P,Q")
    nm.add_argument("--field", required=True, help="CSV written by field_to_csv")
    nm.add_argument("--dimension", type=int, default=3,
                    help="ball dimension when the CSV has an r column")

    cj = sub.add_parser("conjugate", help="evaluate the conjugate Young function")
    cj.add_argument("--young", required=True, type=_young, metavar="P,Q")
    cj.add_argument("--t", required=True, type=float)
    cj.add_argument("--closed", action="store_true", help="closed-form equivalent instead")
    return ap


def _cmd_run(args):
    cfg = load_config(args.config)
    out = os.environ.get("ORLICZ_LAB_OUT") or args.out or cfg["output.dir"]
    result = SCENARIOS[args.scenario](cfg)
    paths = result.write(out)
    if not args.quiet:
        for a in result.assertions:
            mark = "ok  " if a["pass"] else "FAIL"
            print("%s %s: %s %s %s" % (mark, a["name"], a["value"], a["op"], a["bound"]))
        n_ok = sum(a["pass"] for a in result.assertions)
        print("%s: %s (%d/%d assertions)" % (result.scenario,
                                             "PASS" if result.passed else "FAIL",
                                             n_ok, len(result.assertions)))
        for p in paths:
            print("wrote", p)
    return EXIT_OK if result.passed else EXIT_ASSERT


def _cmd_norm(args):
    if not os.path.exists(args.field):
        raise ConfigError("no such field file: %s" % args.field)
    g = field_from_csv(args.field)
    dom = g.domain
    if dom.geometry == "radial-ball" and args.dimension != dom.dimension:
        dom = _build("radial-ball", dom.axes, None, args.dimension, dom.radius, dom.meta)
    print(repr(luxemburg_norm(np.asarray(g.values), args.young, dom).value))
    return EXIT_OK


def _cmd_conjugate(args):
    if args.t < 0:
        raise ConfigError("--t must be nonnegative")
    kind = "closed-form" if args.closed else "numeric-legendre"
    print(repr(float(ConjugateForm(args.young, kind)(args.t))))
    return EXIT_OK


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    handler = {"run": _cmd_run, "norm": _cmd_norm, "conjugate": _cmd_conjugate}[args.command]
    try:
        return handler(args)
    except (ConfigError, PreconditionError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, RootFindingError, OverflowError, FloatingPointError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
