"""Headless entry points for automation and CI.

Exit codes: 0 success, 1 validation findings or load failure, 2 replay
divergence. Reports are JSON on standard output; the stats output is
byte-identical to the GET /api/stats response body.
"""

from __future__ import annotations

import argparse
import sys

from .commands import replay_journal
from .errors import GastopoError, ReplayDivergence
from .project import load_project, read_journal_file, save_project
from .serialize import compact_dumps
from .validation import compute_statistics, topology_check


def _load(path: str, *, print_warnings: bool = True):
    dataset = load_project(path)
    if print_warnings:
        for warning in dataset.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    return dataset


def cmd_validate(args: argparse.Namespace) -> int:
    dataset = _load(args.project)
    report = topology_check(dataset, strict=False)
    print(compact_dumps(report.as_dict()))
    return 0 if not report.dangling_references else 1


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _load(args.project)
    print(compact_dumps(compute_statistics(dataset)))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    dataset = _load(args.project)
    manifest = save_project(dataset, args.out)
    print(compact_dumps({"written": manifest.written_files()}))
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    dataset = _load(args.project)
    entries = read_journal_file(args.journal)
    try:
        replayed = replay_journal(dataset, entries)
    except ReplayDivergence as exc:
        print(f"replay divergence: {exc}", file=sys.stderr)
        return 2
    manifest = save_project(replayed, args.out)
    print(compact_dumps({"written": manifest.written_files(), "replayed_entries": len(entries)}))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve  # deferred: uvicorn is only needed here

    serve(args.project, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gastopo",
        description="Georeferenced, graph-consistent gas infrastructure datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check references and report topology")
    p.add_argument("project", help="project directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="print network statistics")
    p.add_argument("project", help="project directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="serve the project over HTTP")
    p.add_argument("project", help="project directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", default=None, help="directory with built UI assets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="canonically re-save a project")
    p.add_argument("project", help="project directory")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("replay", help="replay a journal over an initial project")
    p.add_argument("project", help="initial project directory")
    p.add_argument("--journal", required=True, help="journal file (one record per line)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GastopoError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
