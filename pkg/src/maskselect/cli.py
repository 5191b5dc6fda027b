"""Command-line entry points.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import ConfigurationError, DataError, MaskSelectError, ModelSpecError
from .harness import ExperimentConfig, build_synthetic_config, config_from_dict, run_and_export


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskselect",
        description="Feature selection experiments with binary-mask optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment described by a JSON config file")
    run_p.add_argument("--config", required=True, help="path to the experiment config (JSON)")
    _common_options(run_p)

    synth_p = sub.add_parser("synth", help="generate and run the synthetic benchmark")
    synth_p.add_argument("--seed", required=True, type=int, help="seed for data, split, and models")
    synth_p.add_argument("--out", required=True, help="output directory")
    _common_options(synth_p)
    return parser


def _common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format",
        choices=("csv", "markdown", "both"),
        default="both",
        help="report format(s) to write",
    )
    p.add_argument("--trace-dir", default=None, help="directory for selection traces")


def load_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"no such config file: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"config file is not valid JSON: {err}") from None
    return config_from_dict(raw)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config_file(args.config)
        else:
            if args.seed < 0:
                raise ConfigurationError("--seed must be a non-negative integer")
            config = build_synthetic_config(args.seed, args.out)
        report = run_and_export(config, fmt=args.format, trace_dir=args.trace_dir)
    except (ConfigurationError, ModelSpecError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except (MaskSelectError, OSError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 3
    for row in report.rows:
        print(
            f"{row.method:>12}  selected={row.n_selected:<4d} {row.hyperparameter:<12}"
            f" val={row.val_loss:.6g} test={row.test_loss:.6g}"
        )
    print(f"report written to {config.output_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
