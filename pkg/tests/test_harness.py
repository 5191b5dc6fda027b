import csv
import json
import math
from dataclasses import replace

import pytest

from maskselect.core import ConfigurationError, LogLoss, MeanSquaredError, Task
from maskselect.data import SplitSpec
from maskselect.harness import (
    CsvSource,
    ExperimentConfig,
    SyntheticSource,
    build_synthetic_config,
    config_from_dict,
    config_to_dict,
    export_report,
    resolve_eta_grid,
    run_and_export,
    run_experiment,
)
from maskselect.models import ModelKind


def tiny_config(out_dir, selectors=("gbmo", "flbmo", "cc", "mi", "rfe"), seed=3):
    """Small, fast experiment: ridge model on a 40-feature synthetic set."""
    return ExperimentConfig(
        source=SyntheticSource(n_samples=160, n_features=12, n_informative=4),
        model_kind=ModelKind.RIDGE,
        model_grid={"alpha": (0.1, 10.0)},
        loss=MeanSquaredError(),
        output_dir=str(out_dir),
        seed=seed,
        selectors=selectors,
        mu_grid=(0.001, 0.05),
        eta_grid=(3, 6),
        split=SplitSpec(seed=seed),
    )


class TestResolveEtaGrid:
    def test_hundred_features(self):
        assert resolve_eta_grid((1 / 6, 1 / 5, 1 / 4, 1 / 2), 100) == [17, 20, 25, 50]

    def test_sixty_features(self):
        assert resolve_eta_grid((1 / 6, 1 / 5, 1 / 4, 1 / 2), 60) == [10, 12, 15, 30]

    def test_small_m_deduplicates(self):
        assert resolve_eta_grid((1 / 6, 1 / 5, 1 / 4, 1 / 2), 6) == [1, 2, 3]

    def test_clamped_to_m_minus_one(self):
        assert resolve_eta_grid((0.99,), 10) == [9]

    def test_rounding_is_half_up(self):
        # 15/6 = 2.5 rounds up to 3
        assert resolve_eta_grid((1 / 6,), 15) == [3]


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    return run_experiment(tiny_config(out))


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    out = tmp_path_factory.mktemp("files")
    report = run_and_export(tiny_config(out), fmt="both")
    return out, report


class TestRunExperiment:
    def test_one_row_per_method_all_features_first(self, report):
        assert [r.method for r in report.rows] == ["all_features", "gbmo", "flbmo", "cc", "mi", "rfe"]

    def test_all_features_row_selects_everything(self, report):
        row = report.rows[0]
        assert row.n_selected == 12
        assert row.selected_indices == tuple(range(12))

    def test_flbmo_row_has_exact_count(self, report):
        row = next(r for r in report.rows if r.method == "flbmo")
        assert row.n_selected in (3, 6)
        assert row.hyperparameter in ("eta=3", "eta=6")

    def test_traces_cover_every_mask_selector_candidate(self, report):
        methods = [t.method for t in report.traces]
        assert methods.count("gbmo") == 2  # one per mu candidate
        assert methods.count("flbmo") == 2  # one per eta candidate

    def test_test_split_read_once_per_method(self, report):
        assert report.metadata["test_evaluations"] == {
            "all_features": 1, "gbmo": 1, "flbmo": 1, "cc": 1, "mi": 1, "rfe": 1,
        }

    def test_only_all_features_runs_with_empty_selector_list(self, tmp_path):
        report = run_experiment(tiny_config(tmp_path, selectors=()))
        assert len(report.rows) == 1
        assert report.rows[0].method == "all_features"

    def test_same_config_gives_identical_rows(self, tmp_path, report):
        again = run_experiment(tiny_config(tmp_path))
        assert again.rows == report.rows

    def test_rfe_skipped_with_note_for_importance_free_model(self, tmp_path):
        cfg = replace(
            tiny_config(tmp_path, selectors=("rfe",)),
            model_kind=ModelKind.KNN,
            model_grid={"n_neighbors": (3, 5)},
        )
        report = run_experiment(cfg)
        row = next(r for r in report.rows if r.method == "rfe")
        assert "no intrinsic feature importances" in row.note
        assert math.isnan(row.test_loss)
        assert row.n_selected == 0

    def test_loss_task_mismatch_rejected(self, tmp_path):
        cfg = replace(tiny_config(tmp_path), loss=LogLoss())
        with pytest.raises(ConfigurationError):
            run_experiment(cfg)


class TestExports:
    def test_report_csv_structure(self, exported):
        out, report = exported
        with (out / "report.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "n_selected", "hyperparameter", "val_loss", "test_loss"]
        assert len(rows) == 1 + len(report.rows)
        for raw, row in zip(rows[1:], report.rows):
            assert raw[0] == row.method
            assert float(raw[3]) == row.val_loss
            assert float(raw[4]) == row.test_loss

    def test_markdown_marks_best_test_loss(self, exported):
        out, report = exported
        text = (out / "report.md").read_text()
        best = min(r.test_loss for r in report.rows)
        n_marked = text.count("**")
        assert n_marked >= 2  # at least one bolded cell
        best_rows = [r for r in report.rows if r.test_loss == best]
        assert n_marked == 2 * len(best_rows)

    def test_markdown_tie_marks_all(self, tmp_path):
        from maskselect.harness import ExperimentReport, MethodResult

        rows = (
            MethodResult("all_features", 3, "-", 0.5, 0.25, (0, 1, 2)),
            MethodResult("cc", 2, "eta=2", 0.5, 0.25, (0, 1)),
            MethodResult("mi", 1, "eta=1", 0.9, 0.75, (0,)),
        )
        report = ExperimentReport(rows, (), {"task": "regression"})
        path = export_report(report, tmp_path, "markdown")
        assert path.read_text().count("**") == 4

    def test_markdown_scales_regression_losses(self, tmp_path):
        from maskselect.harness import ExperimentReport, MethodResult

        rows = (MethodResult("all_features", 3, "-", 0.00012, 0.00034, (0, 1, 2)),)
        report = ExperimentReport(rows, (), {"task": "regression"})
        text = export_report(report, tmp_path, "markdown").read_text()
        assert "MSE(1e-4)" in text
        assert "3.4000" in text  # 0.00034 * 1e4

    def test_trace_csv_has_eliminations_plus_stop_record(self, exported):
        out, report = exported
        trace_files = sorted((out / "traces").glob("trace_*.csv"))
        assert trace_files
        for run in report.traces:
            path = out / "traces" / f"trace_{run.method}_{run.slug}.csv"
            with path.open() as fh:
                rows = list(csv.reader(fh))
            assert rows[0] == ["iteration", "eliminated_index", "loss_min", "remaining_features"]
            body = rows[1:]
            assert len(body) == len(run.trace.eliminations()) + 1
            assert body[-1][1] == "stopped"
            remaining = [int(r[3]) for r in body[:-1]]
            assert remaining == list(range(12 - 1, 12 - len(remaining) - 1, -1))

    def test_svg_written_per_trace(self, exported):
        out, report = exported
        svgs = sorted((out / "traces").glob("trace_*.svg"))
        assert len(svgs) == len(report.traces)
        assert svgs[0].read_text().lstrip().startswith("<?xml")

    def test_run_meta_written(self, exported):
        out, _ = exported
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["n_features"] == 12
        assert meta["config"]["model"]["kind"] == "ridge"

    def test_byte_identical_reruns(self, tmp_path):
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        run_and_export(tiny_config(a_dir), fmt="csv")
        run_and_export(tiny_config(b_dir), fmt="csv")
        assert (a_dir / "report.csv").read_bytes() == (b_dir / "report.csv").read_bytes()
        a_traces = sorted((a_dir / "traces").glob("*.csv"))
        b_traces = sorted((b_dir / "traces").glob("*.csv"))
        assert [p.name for p in a_traces] == [p.name for p in b_traces]
        for pa, pb in zip(a_traces, b_traces):
            assert pa.read_bytes() == pb.read_bytes()


class TestConfigRoundtrip:
    def test_dict_roundtrip(self, tmp_path):
        cfg = tiny_config(tmp_path)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_synthetic_benchmark_config(self):
        cfg = build_synthetic_config(seed=9, output_dir="x")
        assert isinstance(cfg.source, SyntheticSource)
        assert cfg.eta_grid == (6, 10, 15, 20)
        assert cfg.mu_grid == (0.00025, 0.001, 0.01, 0.05)
        assert cfg.split.seed == 9

    def test_csv_config_parses(self, tmp_path):
        raw = {
            "dataset": {"type": "csv", "path": "d.csv", "target_column": "y", "task": "classification"},
            "model": {"kind": "mlp", "grid": {"hidden_layer_sizes": [[20], [20, 10]]}},
            "seed": 4,
        }
        cfg = config_from_dict(raw)
        assert isinstance(cfg.source, CsvSource)
        assert cfg.source.task is Task.CLASSIFICATION
        assert isinstance(cfg.loss, LogLoss)
        assert cfg.model_grid["hidden_layer_sizes"] == ((20,), (20, 10))

    def test_unknown_selector_rejected(self, tmp_path):
        cfg = replace(tiny_config(tmp_path), selectors=("gbmo", "bogus"))
        with pytest.raises(ConfigurationError):
            cfg.validate()

    def test_missing_key_raises_configuration_error(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"model": {"kind": "ridge"}})
