"""Command-line front end.

Commands::

    nqs-geom run <scenario> [--format machine|human] [--jobs N] [--out PATH]
    nqs-geom validate <scenario>
    nqs-geom demo <markov-chain|qutrit-metric|qutrit-holonomy> [run options]

Exit codes: 0 all tasks succeeded, 1 at least one task failed, 2 usage or
scenario (parse/validation) error.  ``NQS_GEOM_JOBS`` sets the ``--jobs``
default.  Machine-format reports are byte-identical for identical scenarios,
independent of the jobs setting.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import ScenarioError, UsageError
from .report import emit_report
from .runner import run_tasks
from .scenario import load_scenario

__all__ = ["main", "console_main"]

DEMOS = {
    "markov-chain": "markov_chain.nqs",
    "qutrit-metric": "qutrit_metric.nqs",
    "qutrit-holonomy": "qutrit_holonomy.nqs",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nqs-geom",
        description="Run scenario files against the context-geometry engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_options(p: argparse.ArgumentParser):
        p.add_argument(
            "--format",
            choices=("machine", "human"),
            default="machine",
            help="report format (default: machine)",
        )
        p.add_argument(
            "--jobs",
            type=int,
            default=None,
            help="max parallel tasks (default: NQS_GEOM_JOBS or 1)",
        )
        p.add_argument(
            "--out",
            type=Path,
            default=None,
            help="write the report to this file instead of stdout",
        )

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", type=Path, help="path to a scenario file")
    add_run_options(run)

    val = sub.add_parser("validate", help="load and validate a scenario file")
    val.add_argument("scenario", type=Path, help="path to a scenario file")

    demo = sub.add_parser("demo", help="run a bundled demo scenario")
    demo.add_argument("name", choices=sorted(DEMOS), help="demo scenario name")
    add_run_options(demo)

    return parser


def _resolve_jobs(value: int | None) -> int:
    if value is None:
        raw = os.environ.get("NQS_GEOM_JOBS", "").strip()
        if not raw:
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise UsageError(f"NQS_GEOM_JOBS must be an integer, got {raw!r}")
    if value < 1:
        raise UsageError(f"jobs must be >= 1, got {value}")
    return value


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _run_and_report(source, fmt: str, jobs: int | None, out: Path | None) -> int:
    scenario = load_scenario(source)
    report = run_tasks(scenario, jobs=_resolve_jobs(jobs))
    _emit(emit_report(report, fmt), out)
    return 0 if report.all_ok else 1


def main(argv=None) -> int:
    """Entry point; returns the process exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and bad flags itself
        code = exc.code
        return code if isinstance(code, int) else 2

    try:
        if args.command == "run":
            return _run_and_report(args.scenario, args.format, args.jobs, args.out)

        if args.command == "validate":
            scenario = load_scenario(args.scenario)
            print(
                f"ok: {len(scenario.contexts)} context(s), "
                f"{len(scenario.graph.edges)} edge(s), "
                f"{len(scenario.tasks)} task(s)"
            )
            return 0

        if args.command == "demo":
            text = (
                resources.files("nqs_geom")
                .joinpath("scenarios", DEMOS[args.name])
                .read_text(encoding="utf-8")
            )
            return _run_and_report(text, args.format, args.jobs, args.out)

        raise UsageError(f"unknown command {args.command!r}")
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
