"""Command-line entry point.

Exit codes: 0 success, 1 internal error, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import InputError, SociominerError
from .pipeline import TARGETS, Workspace, load_config, parse_sweep, run_pipeline, run_stage

log = logging.getLogger("sociominer")

COMMANDS = {
    "ingest": "parse git logs and mbox archives into the workspace",
    "identities": "resolve committer and sender identities",
    "traits": "score personality traits per committer",
    "cluster": "cluster committers by touched files or by traits",
    "analyze": "centroids, entropy ranking and participation tables",
    "graph": "export the committer/list communication graph",
    "report": "render heat maps and radar charts",
    "run": "run every stage, skipping those whose inputs are unchanged",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sociominer",
        description="Mine git history and mailing lists for socio-technical structure.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in COMMANDS.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="path to the JSON run configuration")
        if name == "cluster":
            sp.add_argument("--target", choices=TARGETS, default="technical")
            sp.add_argument("--sweep", type=parse_sweep, metavar="A..B",
                            help="also write the SSE curve for k in [A, B]")
    fx = sub.add_parser("fixture", help="write the bundled synthetic fixture to a directory")
    fx.add_argument("directory")
    fx.add_argument("--seed", type=int, default=7)
    return p


def _dispatch(args) -> None:
    if args.command == "fixture":
        from .fixtures import write_fixture
        print(write_fixture(args.directory, seed=args.seed))
        return
    cfg = load_config(args.config)
    if args.command == "run":
        actions = run_pipeline(cfg)
        for name, action in actions.items():
            print(f"{name}: {action}")
        return
    with Workspace(cfg) as ws:
        if args.command == "cluster":
            run_stage(ws, f"cluster_{args.target}", target=args.target, sweep=args.sweep)
        else:
            run_stage(ws, args.command)
    stage = f"cluster_{args.target}" if args.command == "cluster" else args.command
    for w in ws.manifest["stages"][stage].get("warnings", []):
        print(f"{stage}: {w}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except SociominerError as exc:
        where = getattr(exc, "stage", None) or args.command
        print(f"sociominer {where}: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, InputError) else 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"sociominer {args.command}: internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
