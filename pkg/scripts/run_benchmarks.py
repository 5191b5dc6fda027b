#!/usr/bin/env python3
"""Run the two CSV benchmarks with both model families.

Point --sonar / --residential at the prepared CSV exports (see README
for how to prepare them). Without those flags, deterministic surrogate
tables with the same shapes are generated under data/ so the pipeline
can be exercised end to end.
"""
import argparse
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))

from maskselect.core import LogLoss, MeanSquaredError, Task
from maskselect.data import SplitSpec
from maskselect.harness import GBT_GRID, MLP_GRID, CsvSource, ExperimentConfig, run_and_export
from maskselect.models import ModelKind


def _ensure_data(args) -> tuple[Path, Path]:
    if args.sonar and args.residential:
        return Path(args.sonar), Path(args.residential)
    from surrogates import write_residential_like, write_sonar_like

    data_dir = REPO_ROOT / "data"
    data_dir.mkdir(exist_ok=True)
    sonar = Path(args.sonar) if args.sonar else write_sonar_like(data_dir / "surrogate_sonar.csv")
    resid = (
        Path(args.residential)
        if args.residential
        else write_residential_like(data_dir / "surrogate_residential.csv")
    )
    print(f"using sonar={sonar} residential={resid}")
    return sonar, resid


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sonar", help="classification CSV with a 'label' target column")
    parser.add_argument("--residential", help="regression CSV with a 'construction_cost' target")
    parser.add_argument("--sonar-target", default="label")
    parser.add_argument("--residential-target", default="construction_cost")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="out/benchmarks")
    args = parser.parse_args()

    sonar, resid = _ensure_data(args)
    cells = [
        ("sonar", ModelKind.GBT, GBT_GRID, sonar, args.sonar_target, Task.CLASSIFICATION),
        ("sonar", ModelKind.MLP, MLP_GRID, sonar, args.sonar_target, Task.CLASSIFICATION),
        ("residential", ModelKind.GBT, GBT_GRID, resid, args.residential_target, Task.REGRESSION),
        ("residential", ModelKind.MLP, MLP_GRID, resid, args.residential_target, Task.REGRESSION),
    ]
    for name, kind, grid, path, target, task in cells:
        out = f"{args.out}/{name}_{kind.value}"
        config = ExperimentConfig(
            source=CsvSource(str(path), target, task),
            model_kind=kind,
            model_grid=grid,
            loss=MeanSquaredError() if task is Task.REGRESSION else LogLoss(),
            output_dir=out,
            seed=args.seed,
            split=SplitSpec(seed=args.seed),
        )
        report = run_and_export(config)
        print(f"=== {name} / {kind.value} -> {out} ===")
        for row in report.rows:
            note = f"  ({row.note})" if row.note else ""
            print(
                f"{row.method:>12} {row.hyperparameter:<10} n={row.n_selected:<4d} "
                f"val={row.val_loss:.4f} test={row.test_loss:.4f}{note}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
