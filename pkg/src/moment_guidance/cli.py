"""Command-line entry points.

Every subcommand reads one JSON run config (``--config``) plus optional
``--set key.path=value`` overrides. Errors exit with a stable status:
2 invalid config/usage, 3 data or format problems, 4 numeric failures,
each printed as one machine-parsable line ``CODE: message`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, workflows
from .config import load_run_config
from .errors import MomentGuidanceError, UsageError
from .evaluation import aggregate_recall_rows

_FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "recall_rows.json")


def default_aggregate_fixture() -> str:
    """Bundled mR@K table used to sanity-check the mR_all arithmetic."""
    return _FIXTURE


def _add_common(sub: argparse.ArgumentParser, config_required: bool = True) -> None:
    sub.add_argument("--config", required=config_required, help="path to the JSON run config")
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="override a config value by dot path (JSON literals accepted)",
    )
    sub.add_argument("--threads", type=int, default=None, help="parallel worker cap (default from config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moment-guidance",
        description="Guidance-score re-ranking pipeline for long-video moment retrieval",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, description in (
        ("gen-synth", "generate a synthetic planted-signal dataset"),
        ("train-guidance", "train the describable-window classifier"),
        ("score-windows", "score guidance windows for the eval split"),
        ("ground", "run the base grounding scorer over the eval split"),
        ("fuse", "fuse guidance scores into predictions and re-rank"),
        ("bench", "count forward passes and time the stages"),
    ):
        _add_common(sub.add_parser(name, description=description))

    eval_p = sub.add_parser("eval", description="evaluate ranked predictions")
    _add_common(eval_p, config_required=False)
    eval_p.add_argument(
        "--aggregate",
        nargs="?",
        const=_FIXTURE,
        default=None,
        metavar="TABLE.json",
        help="aggregate an mR@K table into mR_all instead of running a full evaluation "
        "(defaults to the bundled fixture)",
    )
    return parser


def _print_summary(summary: dict) -> None:
    for key, value in summary.items():
        print(f"{key}={value}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval" and args.aggregate is not None:
            with open(args.aggregate, encoding="utf-8") as fh:
                doc = json.load(fh)
            for name, mr_all in aggregate_recall_rows(doc):
                print(f"{name}: mR_all={mr_all:.2f}")
            return 0
        if args.config is None:
            raise UsageError("--config is required")
        rc = load_run_config(args.config, args.overrides, threads=args.threads)
        if args.command == "gen-synth":
            _print_summary(workflows.cmd_gen_synth(rc))
        elif args.command == "train-guidance":
            _print_summary(workflows.cmd_train_guidance(rc))
        elif args.command == "score-windows":
            _print_summary(workflows.cmd_score_windows(rc))
        elif args.command == "ground":
            _print_summary(workflows.cmd_ground(rc))
        elif args.command == "fuse":
            _print_summary(workflows.cmd_fuse(rc))
        elif args.command == "eval":
            summary, report = workflows.cmd_eval(rc)
            _print_summary(summary)
            print(f"mR_all {report.mr_all:.2f} over {report.query_count} queries")
        elif args.command == "bench":
            _print_summary(bench.cmd_bench(rc))
        return 0
    except MomentGuidanceError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status
    except FileNotFoundError as exc:
        print(f"E_DATA: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
