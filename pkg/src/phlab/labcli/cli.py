"""Command-line entry point.

  phlab run --config exp.toml [--out DIR] [--threads N] [--normalize-timings]
  phlab validate --config exp.toml

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 indeterminate
verdict.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from ..errors import ConfigError, PhlabError
from .config import load_config
from .runner import emit_csv, run_experiment
from .svg import emit_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INDETERMINATE = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--threads", type=int, default=None, help="cap worker threads")
    run.add_argument("--normalize-timings", action="store_true",
                     help="zero all timings so report JSON is byte-identical across runs")
    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {args.config} is a valid {cfg.kind!r} experiment")
        return EXIT_OK

    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        cfg = dataclasses.replace(cfg, params=dataclasses.replace(cfg.params, threads=args.threads))
    out_dir = args.out or cfg.out_dir or "phlab-out"

    try:
        report = run_experiment(cfg)
    except PhlabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(normalize_timings=args.normalize_timings))
    emit_csv(report, out_dir)
    emit_svg(report, out_dir)
    print(f"report written to {json_path}")

    if report.error is not None:
        print(f"numerical failure in stage {report.failed_stage}: {report.error}", file=sys.stderr)
        return EXIT_NUMERICAL
    verdicts = report.verdicts or {}
    if any(v == "indeterminate" for v in verdicts.values()):
        print("indeterminate verdict; see report for diagnostics", file=sys.stderr)
        return EXIT_INDETERMINATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
