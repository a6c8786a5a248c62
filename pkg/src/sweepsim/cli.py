"""Command-line entry point.

Subcommands: run, suite, talweg, desingularize, bridge.  Exit codes:
0 when every check passes, 1 when any check fails, 2 on usage or parse
errors.  The environment variable SWEEPSIM_OUTPUT_ROOT overrides where
artifacts are written.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ScenarioError
from .runner import run_file, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sweepsim",
        description="Run sweeping-process experiments from scenario files.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_single(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="path to a scenario file")
        p.add_argument("--out", default=None, help="output root directory")
        return p

    add_single("run", "run one scenario of any experiment kind")
    add_single("talweg", "run a talweg-profile scenario")
    add_single("desingularize", "run a desingularization scenario")
    add_single("bridge", "run a gradient-bridge scenario")

    p = sub.add_parser("suite", help="run every scenario in a directory")
    p.add_argument("directory", help="directory of scenario files")
    p.add_argument("--jobs", type=int, default=1, help="parallel scenarios")
    p.add_argument("--out", default=None, help="output root directory")
    return parser


_KIND_OF_COMMAND = {"talweg": "talweg", "desingularize": "desingularize",
                    "bridge": "bridge"}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        if args.command == "suite":
            reports, agg = run_suite(args.directory, jobs=args.jobs,
                                     output_root=args.out)
            for rep in reports:
                print(f"{rep.scenario}: {rep.overall}")
            print(f"aggregate report: {agg}")
            if not reports:
                print("warning: no scenario files found")
                return 0
            return 0 if all(r.passed for r in reports) else 1

        from .scenario import load_scenario
        scn = load_scenario(args.scenario)
        expected = _KIND_OF_COMMAND.get(args.command)
        if expected and scn.experiment != expected:
            print(f"error: {args.scenario} declares experiment="
                  f"{scn.experiment}, expected {expected}", file=sys.stderr)
            return 2
        from .runner import run
        rep = run(scn, output_root=args.out)
        print(rep.to_text(), end="")
        return 0 if rep.passed else 1
    except (ScenarioError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
