"""maskselect: model-agnostic feature selection by binary-mask optimization.

A trained model is queried, never retrained, while a binary mask zeroes
out the least useful features one per iteration. Includes correlation,
mutual-information, and recursive-feature-elimination baselines plus an
experiment harness with reference models.
"""
from .core import (
    ConfigurationError,
    DataError,
    Dataset,
    DimensionError,
    FitError,
    LabelRangeError,
    LogLoss,
    LossKind,
    Mask,
    MaskSelectError,
    MeanSquaredError,
    ModelSpecError,
    ScoringError,
    SelectionError,
    Task,
    TrainedModel,
    apply_mask,
    evaluate_loss,
    mask_support,
    select_columns,
)
from .data import SplitBundle, SplitSpec, Standardizer, generate_synthetic, load_csv, split, standardize
from .models import (
    HyperparameterGrid,
    ModelKind,
    ModelSpec,
    cross_validate,
    feature_importances,
    fit,
    predict,
)
from .baselines import RfeConfig, ScoreVector, mutual_information_scores, pearson_scores, rfe, select_top_k
from .selectors import (
    FlbmoConfig,
    GbmoConfig,
    SelectionTrace,
    SlufResult,
    TraceRecord,
    finalize_selection,
    flbmo,
    gbmo,
    sluf,
)
from .harness import (
    CsvSource,
    ExperimentConfig,
    ExperimentReport,
    MethodResult,
    SyntheticSource,
    build_synthetic_config,
    export_report,
    export_traces,
    resolve_eta_grid,
    run_experiment,
)

__version__ = "0.1.0"
