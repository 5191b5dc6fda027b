"""Experiment harness: tune the model, tune each selector, refit on the
selected columns, evaluate once on the held-out test split, and emit
machine-readable reports and per-run selection traces."""
from __future__ import annotations

import csv
import datetime
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .baselines import RfeConfig, mutual_information_scores, pearson_scores, rfe, select_top_k
from .core import (
    ConfigurationError,
    Dataset,
    LogLoss,
    LossKind,
    MaskSelectError,
    MeanSquaredError,
    Task,
    evaluate_loss,
    select_columns,
)
from .data import SplitSpec, generate_synthetic, load_csv, split, standardize
from .models import HyperparameterGrid, ModelKind, cross_validate, fit, supports_importances
from .selectors import FlbmoConfig, GbmoConfig, SelectionTrace, finalize_selection, flbmo, gbmo

SELECTOR_NAMES = ("gbmo", "flbmo", "cc", "mi", "rfe")

# Search spaces used by the experiments
MU_GRID = (0.00025, 0.001, 0.01, 0.05)
ETA_FRACTIONS = (1 / 6, 1 / 5, 1 / 4, 1 / 2)
SYNTHETIC_ETA_GRID = (6, 10, 15, 20)
GBT_GRID: dict[str, tuple] = {
    "num_leaves": (7, 15),
    "learning_rate": (0.01, 0.025, 0.05),
    "n_estimators": (10, 20),
    "subsample": (0.6, 0.8),
    "colsample_bytree": (0.6, 0.8),
    "min_child_samples": (5, 10),
}
MLP_GRID: dict[str, tuple] = {
    "hidden_layer_sizes": ((20,), (40,), (10,), (20, 10)),
    "activation": ("relu", "logistic"),
    "alpha": (0.0001, 0.001, 0.01),
    "learning_rate_init": (0.001, 0.01),
}


@dataclass(frozen=True)
class SyntheticSource:
    n_samples: int = 300
    n_features: int = 100
    n_informative: int = 10


@dataclass(frozen=True)
class CsvSource:
    path: str
    target_column: Union[str, int]
    task: Task
    header: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    source: Union[SyntheticSource, CsvSource]
    model_kind: ModelKind
    model_grid: Mapping[str, Sequence[Any]]
    loss: LossKind
    output_dir: str = "out"
    seed: int = 0
    selectors: tuple[str, ...] = SELECTOR_NAMES
    mu_grid: tuple[float, ...] = MU_GRID
    eta_fractions: tuple[float, ...] = ETA_FRACTIONS
    eta_grid: tuple[int, ...] | None = None
    split: SplitSpec = field(default_factory=SplitSpec)
    min_features: int = 1
    cv_folds: int = 3

    def validate(self) -> None:
        for name in self.selectors:
            if name not in SELECTOR_NAMES:
                raise ConfigurationError(
                    f"unknown selector {name!r}; expected a subset of {SELECTOR_NAMES}"
                )
        if len(set(self.selectors)) != len(self.selectors):
            raise ConfigurationError("selectors must not repeat")
        if "gbmo" in self.selectors and not self.mu_grid:
            raise ConfigurationError("gbmo requires a non-empty mu grid")
        needs_eta = {"flbmo", "cc", "mi", "rfe"} & set(self.selectors)
        if needs_eta and self.eta_grid is None and not self.eta_fractions:
            raise ConfigurationError("eta-based selectors need eta_grid or eta_fractions")
        task = self.source.task if isinstance(self.source, CsvSource) else Task.REGRESSION
        if isinstance(self.loss, MeanSquaredError) and task is not Task.REGRESSION:
            raise ConfigurationError("mean squared error only pairs with regression")
        if isinstance(self.loss, LogLoss) and task is not Task.CLASSIFICATION:
            raise ConfigurationError("log loss only pairs with classification")
        self.split.validate()


@dataclass(frozen=True)
class MethodResult:
    method: str
    n_selected: int
    hyperparameter: str
    val_loss: float
    test_loss: float
    selected_indices: tuple[int, ...]
    note: str = ""


@dataclass(frozen=True)
class TraceRun:
    method: str
    hyperparameter: str
    slug: str
    trace: SelectionTrace


@dataclass
class ExperimentReport:
    rows: tuple[MethodResult, ...]
    traces: tuple[TraceRun, ...]
    metadata: dict


@dataclass(frozen=True)
class _Candidate:
    label: str
    slug: str
    indices: np.ndarray
    model: Any
    val_loss: float
    trace: SelectionTrace | None = None


@contextmanager
def _stage(name: str):
    try:
        yield
    except MaskSelectError as err:
        raise type(err)(f"stage {name!r}: {err}") from err


def resolve_eta_grid(fractions: Sequence[float], n_features: int) -> list[int]:
    """Turn symbolic feature-count fractions into concrete eta values.

    Each fraction of M is rounded half-up, clamped to [1, M - 1], and
    deduplicated preserving order.
    """
    if n_features < 2:
        raise ConfigurationError("eta fractions need at least 2 features")
    out: list[int] = []
    for frac in fractions:
        value = int(math.floor(frac * n_features + 0.5))
        value = min(max(value, 1), n_features - 1)
        if value not in out:
            out.append(value)
    return out


def _load_source(config: ExperimentConfig) -> Dataset:
    src = config.source
    if isinstance(src, SyntheticSource):
        return generate_synthetic(src.n_samples, src.n_features, src.n_informative, config.seed)
    return load_csv(src.path, src.target_column, src.task, src.header)


def _score_on(model, dataset: Dataset, indices: np.ndarray, loss: LossKind) -> float:
    preds = model.predict(select_columns(dataset.features, indices))
    return evaluate_loss(preds, dataset.targets, loss)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the full selection protocol for one dataset and model kind.

    Order: split, standardize, tune the model (on the train split for the
    mask selectors, on train+fs_val for the baselines and the
    all-features row), run every selector hyperparameter candidate,
    score candidates on the model-validation split, then evaluate each
    method's winner exactly once on the test split.
    """
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with _stage("config"):
        config.validate()
    with _stage("data"):
        dataset = _load_source(config)
    with _stage("split"):
        bundle = split(dataset, config.split)
    with _stage("standardize"):
        std_bundle, _scaler = standardize(bundle)
    train, fs_val, model_val, test = std_bundle.splits()
    pool = std_bundle.train_pool()
    task = dataset.task
    loss = config.loss
    n_features = dataset.n_features

    grid = HyperparameterGrid.from_param_grid(config.model_kind, config.model_grid, config.seed)
    uses_mask_selector = bool({"gbmo", "flbmo"} & set(config.selectors))
    with _stage("model_tuning"):
        spec_pool = cross_validate(
            grid, pool.features, pool.targets, task, loss, config.cv_folds, config.seed
        )
        spec_mask = None
        full_model = None
        if uses_mask_selector:
            spec_mask = cross_validate(
                grid, train.features, train.targets, task, loss, config.cv_folds, config.seed
            )
            full_model = fit(spec_mask, train.features, train.targets, task)

    if config.eta_grid is not None:
        etas = [int(e) for e in config.eta_grid]
        for eta in etas:
            if not 1 <= eta <= n_features:
                raise ConfigurationError(f"eta={eta} outside [1, {n_features}]")
    else:
        etas = resolve_eta_grid(config.eta_fractions, n_features)

    traces: list[TraceRun] = []
    method_candidates: dict[str, list[_Candidate]] = {}
    notes: dict[str, str] = {}

    all_indices = np.arange(n_features)
    with _stage("all_features"):
        base_model = fit(spec_pool, pool.features, pool.targets, task)
        method_candidates["all_features"] = [
            _Candidate("-", "all", all_indices, base_model, _score_on(base_model, model_val, all_indices, loss))
        ]

    for name in config.selectors:
        with _stage(name):
            cands: list[_Candidate] = []
            if name == "gbmo":
                assert full_model is not None and spec_mask is not None
                for mu in config.mu_grid:
                    cfg = GbmoConfig(mu=float(mu), min_features=config.min_features)
                    mask, trace = gbmo(train, fs_val, full_model, loss, cfg)
                    label = f"mu={mu!r}"
                    slug = f"mu{mu!r}"
                    traces.append(TraceRun(name, label, slug, trace))
                    indices, refit = finalize_selection(train, mask, spec_mask)
                    cands.append(_Candidate(label, slug, indices, refit, _score_on(refit, model_val, indices, loss)))
            elif name == "flbmo":
                assert full_model is not None and spec_mask is not None
                for eta in etas:
                    mask, trace = flbmo(train, fs_val, full_model, loss, FlbmoConfig(eta=eta))
                    label = f"eta={eta}"
                    slug = f"eta{eta}"
                    traces.append(TraceRun(name, label, slug, trace))
                    indices, refit = finalize_selection(train, mask, spec_mask)
                    cands.append(_Candidate(label, slug, indices, refit, _score_on(refit, model_val, indices, loss)))
            elif name in ("cc", "mi"):
                if name == "cc":
                    scores = pearson_scores(pool.features, pool.targets)
                else:
                    scores = mutual_information_scores(pool.features, pool.targets, task)
                for eta in etas:
                    indices = select_top_k(scores, eta)
                    refit = fit(spec_pool, select_columns(pool.features, indices), pool.targets, task)
                    cands.append(
                        _Candidate(f"eta={eta}", f"eta{eta}", indices, refit, _score_on(refit, model_val, indices, loss))
                    )
            elif name == "rfe":
                if not supports_importances(spec_pool.kind):
                    notes[name] = (
                        f"skipped: model kind {spec_pool.kind.value!r} has no intrinsic feature importances"
                    )
                    method_candidates[name] = []
                    continue
                for eta in etas:
                    indices = rfe(pool.features, pool.targets, task, loss, RfeConfig(eta=eta, spec=spec_pool))
                    refit = fit(spec_pool, select_columns(pool.features, indices), pool.targets, task)
                    cands.append(
                        _Candidate(f"eta={eta}", f"eta{eta}", indices, refit, _score_on(refit, model_val, indices, loss))
                    )
            method_candidates[name] = cands

    # each method reads the untouched test split exactly once, after all tuning
    rows: list[MethodResult] = []
    test_evaluations: dict[str, int] = {}
    with _stage("test_evaluation"):
        for method in ("all_features", *config.selectors):
            cands = method_candidates[method]
            if not cands:
                rows.append(
                    MethodResult(method, 0, "-", math.nan, math.nan, (), notes.get(method, ""))
                )
                test_evaluations[method] = 0
                continue
            winner = min(enumerate(cands), key=lambda pair: (pair[1].val_loss, pair[0]))[1]
            test_loss = _score_on(winner.model, test, winner.indices, loss)
            test_evaluations[method] = test_evaluations.get(method, 0) + 1
            rows.append(
                MethodResult(
                    method,
                    int(winner.indices.size),
                    winner.label,
                    winner.val_loss,
                    test_loss,
                    tuple(int(i) for i in winner.indices),
                    notes.get(method, ""),
                )
            )

    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    metadata = {
        "seed": config.seed,
        "n_samples": dataset.n_samples,
        "n_features": dataset.n_features,
        "task": task.value,
        "model_kind": config.model_kind.value,
        "split_sizes": [s.n_samples for s in std_bundle.splits()],
        "model_spec_pool": dict(spec_pool.resolved()),
        "model_spec_mask": dict(spec_mask.resolved()) if spec_mask is not None else None,
        "eta_grid": etas,
        "test_evaluations": test_evaluations,
        "started": started,
        "finished": finished,
    }
    return ExperimentReport(tuple(rows), tuple(traces), metadata)


def _format_float(value: float) -> str:
    return repr(float(value))


def export_report(report: ExperimentReport, output_dir: str | Path, fmt: str = "csv") -> Path:
    """Write report.csv (raw losses) or report.md (display formatting)."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / "report.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "n_selected", "hyperparameter", "val_loss", "test_loss"])
            for row in report.rows:
                writer.writerow(
                    [row.method, row.n_selected, row.hyperparameter,
                     _format_float(row.val_loss), _format_float(row.test_loss)]
                )
        return path
    if fmt == "markdown":
        path = out / "report.md"
        regression = report.metadata.get("task") == Task.REGRESSION.value
        scale = 1e4 if regression else 1.0
        unit = "MSE(1e-4)" if regression else "Log loss"
        finite = [r.test_loss for r in report.rows if not math.isnan(r.test_loss)]
        best = min(finite) if finite else math.nan
        lines = [
            "# Experiment report",
            "",
            f"- model: {report.metadata.get('model_kind')}",
            f"- dataset: {report.metadata.get('n_samples')} samples, "
            f"{report.metadata.get('n_features')} features ({report.metadata.get('task')})",
            f"- seed: {report.metadata.get('seed')}",
            "",
            f"| Method | Selected | Hyperparameter | Validation {unit} | Test {unit} |",
            "|---|---|---|---|---|",
        ]
        for row in report.rows:
            if math.isnan(row.test_loss):
                val_s, test_s = "n/a", "n/a"
            else:
                val_s = f"{row.val_loss * scale:.4f}"
                test_s = f"{row.test_loss * scale:.4f}"
                if row.test_loss == best:
                    test_s = f"**{test_s}**"
            lines.append(
                f"| {row.method} | {row.n_selected} | {row.hyperparameter} | {val_s} | {test_s} |"
            )
        skipped = [r for r in report.rows if r.note]
        if skipped:
            lines.append("")
            for row in skipped:
                lines.append(f"- {row.method}: {row.note}")
        lines.append("")
        lines.append("The best test loss is shown in bold; ties are all marked.")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    raise ConfigurationError(f"unknown report format {fmt!r}")


def export_traces(traces: Sequence[TraceRun], output_dir: str | Path) -> list[Path]:
    """One CSV and one two-panel SVG (remaining and loss vs iteration) per run."""
    if not traces:
        raise ConfigurationError("no traces to export")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for run in traces:
        stem = f"trace_{run.method}_{run.slug}"
        csv_path = out / f"{stem}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "eliminated_index", "loss_min", "remaining_features"])
            for rec in run.trace.records:
                eliminated = "stopped" if rec.eliminated is None else rec.eliminated
                writer.writerow([rec.iteration, eliminated, _format_float(rec.loss_min), rec.remaining])
        written.append(csv_path)
        written.append(_plot_trace(run, out / f"{stem}.svg"))
    return written


def _plot_trace(run: TraceRun, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = run.trace.records
    iters = [r.iteration for r in records]
    remaining = [r.remaining for r in records]
    loss_pts = [(r.iteration, r.loss_min) for r in records if not math.isnan(r.loss_min)]
    fig, (ax_remaining, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))
    ax_remaining.plot(iters, remaining, marker=".", color="tab:blue")
    ax_remaining.set_xlabel("iteration")
    ax_remaining.set_ylabel("remaining features")
    ax_remaining.set_title(f"{run.method} {run.hyperparameter}: remaining")
    if loss_pts:
        ax_loss.plot([p[0] for p in loss_pts], [p[1] for p in loss_pts], marker=".", color="tab:red")
    ax_loss.set_xlabel("iteration")
    ax_loss.set_ylabel("validation loss")
    ax_loss.set_title(f"{run.method} {run.hyperparameter}: loss")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def run_and_export(
    config: ExperimentConfig, fmt: str = "both", trace_dir: str | Path | None = None
) -> ExperimentReport:
    """Run the experiment, then write reports, traces, and run metadata."""
    if fmt not in ("csv", "markdown", "both"):
        raise ConfigurationError(f"unknown format {fmt!r}")
    report = run_experiment(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        export_report(report, out, "csv")
    if fmt in ("markdown", "both"):
        export_report(report, out, "markdown")
    if report.traces:
        export_traces(report.traces, Path(trace_dir) if trace_dir is not None else out / "traces")
    meta = dict(report.metadata)
    meta["config"] = config_to_dict(config)
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return report


def build_synthetic_config(seed: int, output_dir: str) -> ExperimentConfig:
    """The synthetic benchmark: 300x100 data with 10 informative features,
    gradient-boosted trees over the full tuning grid, all five selectors,
    and the explicit eta grid used for this benchmark."""
    return ExperimentConfig(
        source=SyntheticSource(),
        model_kind=ModelKind.GBT,
        model_grid=GBT_GRID,
        loss=MeanSquaredError(),
        output_dir=output_dir,
        seed=seed,
        selectors=SELECTOR_NAMES,
        mu_grid=MU_GRID,
        eta_grid=SYNTHETIC_ETA_GRID,
        split=SplitSpec(seed=seed),
    )


def _parse_task(raw: str) -> Task:
    try:
        return Task(raw)
    except ValueError:
        raise ConfigurationError(f"unknown task {raw!r}") from None


def _parse_loss(raw: str | None, task: Task) -> LossKind:
    if raw is None:
        return MeanSquaredError() if task is Task.REGRESSION else LogLoss()
    if raw in ("mse", "mean_squared_error"):
        return MeanSquaredError()
    if raw in ("log_loss", "logloss"):
        return LogLoss()
    raise ConfigurationError(f"unknown loss {raw!r}")


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed JSON, with validation."""
    try:
        ds = raw["dataset"]
        ds_type = ds["type"]
        if ds_type == "synthetic":
            source: Union[SyntheticSource, CsvSource] = SyntheticSource(
                int(ds.get("n_samples", 300)),
                int(ds.get("n_features", 100)),
                int(ds.get("n_informative", 10)),
            )
            task = Task.REGRESSION
        elif ds_type == "csv":
            task = _parse_task(ds["task"])
            source = CsvSource(
                path=str(ds["path"]),
                target_column=ds["target_column"],
                task=task,
                header=bool(ds.get("header", True)),
            )
        else:
            raise ConfigurationError(f"unknown dataset type {ds_type!r}")

        model = raw["model"]
        try:
            kind = ModelKind(model["kind"])
        except ValueError:
            raise ConfigurationError(f"unknown model kind {model['kind']!r}") from None
        grid_raw = model.get("grid", {})
        grid: dict[str, tuple] = {}
        for name, values in grid_raw.items():
            if name == "hidden_layer_sizes":
                grid[name] = tuple(tuple(int(h) for h in v) for v in values)
            else:
                grid[name] = tuple(values)

        seed = int(raw.get("seed", 0))
        split_raw = raw.get("split", {})
        fractions = split_raw.get("fractions", (0.45, 0.30, 0.10, 0.15))
        if len(fractions) != 4:
            raise ConfigurationError("split fractions must have exactly 4 entries")
        split_spec = SplitSpec(*[float(f) for f in fractions], seed=int(split_raw.get("seed", seed)))

        eta_grid_raw = raw.get("eta_grid")
        return ExperimentConfig(
            source=source,
            model_kind=kind,
            model_grid=grid,
            loss=_parse_loss(raw.get("loss"), task),
            output_dir=str(raw.get("output_dir", "out")),
            seed=seed,
            selectors=tuple(raw.get("selectors", SELECTOR_NAMES)),
            mu_grid=tuple(float(m) for m in raw.get("mu_grid", MU_GRID)),
            eta_fractions=tuple(float(f) for f in raw.get("eta_fractions", ETA_FRACTIONS)),
            eta_grid=tuple(int(e) for e in eta_grid_raw) if eta_grid_raw is not None else None,
            split=split_spec,
            min_features=int(raw.get("min_features", 1)),
            cv_folds=int(raw.get("cv_folds", 3)),
        )
    except KeyError as err:
        raise ConfigurationError(f"config is missing required key {err}") from None
    except (TypeError, ValueError) as err:
        raise ConfigurationError(f"malformed config value: {err}") from None


def config_to_dict(config: ExperimentConfig) -> dict:
    if isinstance(config.source, SyntheticSource):
        dataset: dict[str, Any] = {
            "type": "synthetic",
            "n_samples": config.source.n_samples,
            "n_features": config.source.n_features,
            "n_informative": config.source.n_informative,
        }
    else:
        dataset = {
            "type": "csv",
            "path": config.source.path,
            "target_column": config.source.target_column,
            "task": config.source.task.value,
            "header": config.source.header,
        }
    return {
        "dataset": dataset,
        "model": {
            "kind": config.model_kind.value,
            "grid": {k: list(v) for k, v in config.model_grid.items()},
        },
        "selectors": list(config.selectors),
        "mu_grid": list(config.mu_grid),
        "eta_fractions": list(config.eta_fractions),
        "eta_grid": list(config.eta_grid) if config.eta_grid is not None else None,
        "split": {"fractions": list(config.split.fractions()), "seed": config.split.seed},
        "loss": "mse" if isinstance(config.loss, MeanSquaredError) else "log_loss",
        "output_dir": config.output_dir,
        "seed": config.seed,
        "min_features": config.min_features,
        "cv_folds": config.cv_folds,
    }
