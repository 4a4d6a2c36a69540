"""Command-line entry point.

Each subcommand maps to a slice of the canonical stage order and shares
the same options. Exit codes: 0 success, 1 one or more samples failed,
2 configuration or plan errors (the run aborts before processing).
"""

from __future__ import annotations

import argparse
import sys

from dubkit.config import ConfigError, PipelineConfig, load_config
from dubkit.formats.manifest import ManifestError, read_manifest, write_manifest
from dubkit.pipeline.stages import StagePlan, run
from dubkit.pipeline.stats import build_testset

SUBCOMMAND_STAGES = {
    "ingest": ("segment-ingest", "separation-ingest", "overlap-filter"),
    "diarize": ("diarize",),
    "correct": ("correct", "scene"),
    "tokenize": ("tokenize",),
    "ssc-plan": ("ssc-plan",),
    "metrics": ("metrics",),
    "stats": ("stats",),
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config file (YAML)")
    common.add_argument("--manifest", required=True, help="input manifest (JSONL)")
    common.add_argument("--out", required=True, help="output path")
    common.add_argument("--jobs", type=int, help="worker count (default: config)")
    common.add_argument("--seed", type=int, help="run seed (default: config)")

    parser = argparse.ArgumentParser(
        prog="dubkit", description="Movie-dubbing corpus production and evaluation."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, stages in SUBCOMMAND_STAGES.items():
        sub.add_parser(name, parents=[common], help=f"run stages: {', '.join(stages)}")
    sub.add_parser(
        "testset",
        parents=[common],
        help="select per-series samples, one per scene category",
    ).add_argument("--per-series", type=int, default=4)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            config.seed = args.seed
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError(f"jobs must be >= 1, got {args.jobs}")
            config.jobs = args.jobs
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "testset":
        try:
            records = read_manifest(args.manifest)
            selected, warnings = build_testset(records, per_series=args.per_series)
        except (ManifestError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        write_manifest(args.out, selected)
        for message in warnings:
            print(f"warning: {message}", file=sys.stderr)
        print(f"testset: {len(selected)} samples -> {args.out}")
        return 0

    try:
        plan = StagePlan(SUBCOMMAND_STAGES[args.command])
        report = run(plan, args.manifest, args.out, config=config, jobs=config.jobs)
    except (ConfigError, ManifestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"{args.command}: total={report.total} kept={report.kept} "
        f"discarded={report.discarded} failed={report.failed} -> {args.out}"
    )
    return 1 if report.failed else 0


if __name__ == "__main__":
    sys.exit(main())
