"""Binary-mask feature selection against a fixed trained model.

The model is fitted once on all features and then only queried: each
iteration zeroes out, in turn, every still-active column of the
validation matrix and eliminates the feature whose absence leaves the
smallest validation loss. GBMO stops when that smallest loss exceeds the
previous iteration's loss by more than a slack factor; FLBMO stops when
an exact target count of features remains.

Masking assumes the zeroed value is neutral for the model. On
standardized inputs (see data.standardize) a zero equals the column
mean, so masking behaves like mean imputation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigurationError,
    Dataset,
    DimensionError,
    LossKind,
    Mask,
    SelectionError,
    TrainedModel,
    apply_mask,
    evaluate_loss,
    mask_support,
    select_columns,
)
from .models import ModelSpec, fit

STOP_LOSS_INCREASE = "loss_increase"
STOP_MIN_FEATURES = "min_features"
STOP_TARGET_COUNT = "target_count"


@dataclass(frozen=True)
class GbmoConfig:
    """Slack factor mu >= 0 and a floor on how many features must survive."""

    mu: float
    min_features: int = 1

    def validate(self, n_features: int) -> None:
        if not self.mu >= 0:
            raise ConfigurationError(f"mu must be >= 0, got {self.mu}")
        if not 1 <= self.min_features <= n_features:
            raise ConfigurationError(
                f"min_features must lie in [1, {n_features}], got {self.min_features}"
            )


@dataclass(frozen=True)
class FlbmoConfig:
    """Exact number of features the returned mask must keep."""

    eta: int

    def validate(self, n_features: int) -> None:
        if not 1 <= self.eta <= n_features:
            raise ConfigurationError(
                f"eta must lie in [1, {n_features}], got {self.eta}"
            )


@dataclass(frozen=True)
class SlufResult:
    j_star: int
    loss_min: float


@dataclass(frozen=True)
class TraceRecord:
    """One selection step: an elimination, or the terminal stop marker."""

    iteration: int
    eliminated: int | None  # None marks the stop record
    loss_min: float
    remaining: int


@dataclass(frozen=True)
class SelectionTrace:
    records: tuple[TraceRecord, ...]
    final_mask: Mask
    stop_reason: str

    def eliminations(self) -> tuple[TraceRecord, ...]:
        return tuple(r for r in self.records if r.eliminated is not None)

    @property
    def stop_record(self) -> TraceRecord:
        return self.records[-1]


def sluf(
    mask: Mask,
    val_features: np.ndarray,
    val_targets: np.ndarray,
    model: TrainedModel,
    loss: LossKind,
) -> SlufResult:
    """Select the least useful active feature.

    For every active index j, predictions are evaluated on the
    validation matrix with the current mask applied and column j
    additionally zeroed; the j achieving the minimum loss wins, with
    ties going to the lowest index.
    """
    support = mask_support(mask)
    if support.size == 0:
        raise SelectionError("mask support is empty; nothing to eliminate")
    feats = np.asarray(val_features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise DimensionError("validation features must be a non-empty 2-D matrix")
    if feats.shape[1] != len(mask) or feats.shape[1] != model.n_features_in:
        raise DimensionError(
            f"width mismatch: mask {len(mask)}, features {feats.shape[1]}, "
            f"model {model.n_features_in}"
        )
    masked = apply_mask(feats, mask)
    best_j = -1
    best_loss = math.inf
    for j in support:
        saved = masked[:, j].copy()
        masked[:, j] = 0.0
        candidate_loss = evaluate_loss(model.predict(masked), val_targets, loss)
        masked[:, j] = saved
        if candidate_loss < best_loss:
            best_loss = candidate_loss
            best_j = int(j)
    return SlufResult(j_star=best_j, loss_min=best_loss)


def _check_selector_inputs(train: Dataset, val: Dataset, model: TrainedModel) -> int:
    if train.n_features != val.n_features:
        raise DimensionError(
            f"train has {train.n_features} features but validation has {val.n_features}"
        )
    if model.n_features_in != train.n_features:
        raise DimensionError(
            f"model expects {model.n_features_in} features, splits have {train.n_features}"
        )
    if val.n_samples < 1:
        raise DimensionError("validation split is empty")
    return train.n_features


def gbmo(
    train: Dataset,
    val: Dataset,
    model: TrainedModel,
    loss: LossKind,
    config: GbmoConfig,
) -> tuple[Mask, SelectionTrace]:
    """Greedy backward elimination with a slack-based stopping rule.

    Starting from the all-ones mask with a previous loss of +inf, each
    iteration eliminates the least useful feature unless its loss
    exceeds previous_loss * (1 + mu) strictly, in which case the mask
    from before this iteration is returned. The previous loss ratchets
    to each accepted iteration's loss, and elimination also halts once
    the support reaches the min_features floor. The model is only ever
    queried, never refitted.
    """
    n_features = _check_selector_inputs(train, val, model)
    config.validate(n_features)
    mask = Mask.all_ones(n_features)
    prev_loss = math.inf
    records: list[TraceRecord] = []
    t = 1
    while True:
        if mask.n_active <= config.min_features:
            reason = STOP_MIN_FEATURES
            stop_loss = math.nan
            break
        result = sluf(mask, val.features, val.targets, model, loss)
        if result.loss_min > prev_loss * (1.0 + config.mu):
            reason = STOP_LOSS_INCREASE
            stop_loss = result.loss_min
            break
        mask = mask.zeroed(result.j_star)
        records.append(TraceRecord(t, result.j_star, result.loss_min, mask.n_active))
        prev_loss = result.loss_min
        t += 1
    records.append(TraceRecord(t, None, stop_loss, mask.n_active))
    return mask, SelectionTrace(tuple(records), mask, reason)


def flbmo(
    train: Dataset,
    val: Dataset,
    model: TrainedModel,
    loss: LossKind,
    config: FlbmoConfig,
) -> tuple[Mask, SelectionTrace]:
    """Backward elimination until exactly eta features remain.

    The same least-useful-feature step as gbmo, but with no loss-based
    stopping: the returned mask always has support size eta.
    """
    n_features = _check_selector_inputs(train, val, model)
    config.validate(n_features)
    mask = Mask.all_ones(n_features)
    records: list[TraceRecord] = []
    t = 1
    while mask.n_active > config.eta:
        result = sluf(mask, val.features, val.targets, model, loss)
        mask = mask.zeroed(result.j_star)
        records.append(TraceRecord(t, result.j_star, result.loss_min, mask.n_active))
        t += 1
    records.append(TraceRecord(t, None, math.nan, mask.n_active))
    return mask, SelectionTrace(tuple(records), mask, STOP_TARGET_COUNT)


def finalize_selection(
    train: Dataset, mask: Mask, spec: ModelSpec
) -> tuple[np.ndarray, TrainedModel]:
    """Materialize a terminal mask: drop zero columns and refit on the survivors."""
    indices = mask_support(mask)
    if indices.size == 0:
        raise SelectionError("cannot finalize an empty selection")
    reduced = select_columns(train.features, indices)
    model = fit(spec, reduced, train.targets, train.task)
    return indices, model
