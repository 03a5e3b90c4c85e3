"""Command-line experiment runner.

Subcommands: ``run <config>`` executes a config file, ``preset <name>``
executes a named preset, ``list-presets`` prints the catalogue.  Exit codes:
0 success, 1 validation error, 2 runtime cap exceeded.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ValidationError,
    config_from_file,
    list_presets,
    preset_config,
    run_experiment,
)
from .mb.sim import ActiveSetCapError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchqem",
        description="Superposed-branch error-mitigation experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment described by a config file")
    run_p.add_argument("config", help="path to an INI experiment file")
    _common(run_p)

    preset_p = sub.add_parser("preset", help="run a named preset")
    preset_p.add_argument("name", help="preset name (see list-presets)")
    _common(preset_p)

    sub.add_parser("list-presets", help="list available presets")
    return parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output file path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-presets":
        for name, description in list_presets():
            print(f"{name:24s} {description}")
        return 0
    try:
        if args.command == "preset":
            config = preset_config(args.name, seed=args.seed or 1234)
        else:
            config = config_from_file(args.config)
            if args.seed is not None:
                config.seed = args.seed
        rows = run_experiment(config, out_path=args.out, fmt=args.format, jobs=args.jobs)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ActiveSetCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        from .experiments import rows_to_csv, rows_to_json

        text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
        sys.stdout.write(text)
    else:
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
