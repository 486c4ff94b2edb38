"""Command-line entry point: ``coincidence-lab run|validate|catalog``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .scenario import EXIT_ERROR, EXIT_OK, EXIT_PARTIAL, ScenarioError, load_scenario, run
from .spwf import FAMILIES

log = logging.getLogger("coincidence_lab")


def _load(path):
    try:
        return load_scenario(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
    except ScenarioError as exc:
        print(f"error: {path} is invalid:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
    return None


def cmd_run(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_ERROR
    for w in sc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    try:
        status, path = run(sc, out=args.out, fmt=args.format, jobs=args.jobs, default_stem=stem)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    msg = "all points converged" if status == EXIT_OK else "some points did NOT converge (see manifest)"
    print(f"wrote {path} ({msg})")
    return status


def cmd_validate(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return EXIT_ERROR
    for w in sc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{args.scenario}: ok ({sc.experiment})")
    return EXIT_OK


def cmd_catalog(args) -> int:
    for name, (cls, lam) in FAMILIES.items():
        doc = (cls.__doc__ or "").strip().splitlines()[0].replace("``", "")
        print(f"{name:14s} {lam:36s} {doc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coincidence-lab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a scenario file")
    r.add_argument("scenario")
    r.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    r.add_argument("--out", help="output path (overrides the scenario)")
    r.add_argument("--format", choices=("csv", "json"), help="output format (overrides the scenario)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("catalog", help="list wavefunction families and their length scales")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
