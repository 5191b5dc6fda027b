"""Core domain types, loss evaluation, and binary-mask algebra.

Feature indices are 0-based everywhere in this package. Deselecting a
feature never changes the width of a matrix: a binary mask zeroes the
column instead, so a model fitted on the full width keeps working.
"""
from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

import numpy as np


class MaskSelectError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MaskSelectError):
    """Shapes or widths of inputs do not agree."""


class LabelRangeError(MaskSelectError):
    """A class label falls outside the range covered by the predictions."""


class SelectionError(MaskSelectError):
    """A feature-index selection is empty, duplicated, or out of range."""


class ConfigurationError(MaskSelectError):
    """A configuration value violates its documented invariant."""


class DataError(MaskSelectError):
    """A dataset cannot be ingested or fails its invariants."""


class ModelSpecError(MaskSelectError):
    """A model specification does not validate against its schema."""


class FitError(MaskSelectError):
    """Model fitting received degenerate or insufficient data."""


class ScoringError(MaskSelectError):
    """A feature-scoring routine received degenerate input."""


class Task(Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class MeanSquaredError:
    """Squared-error loss for regression targets."""


@dataclass(frozen=True)
class LogLoss:
    """Negative log probability of the true class.

    Probabilities are clipped to [epsilon, 1 - epsilon] before the log so
    the loss stays finite for hard 0/1 predictions.
    """

    epsilon: float = 1e-15


LossKind = Union[MeanSquaredError, LogLoss]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """A feature matrix with aligned targets.

    features is an (N, M) float matrix; targets is length N, float for
    regression and non-negative integer class labels for classification.
    """

    features: np.ndarray
    targets: np.ndarray
    task: Task
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        feats = np.array(self.features, dtype=np.float64, copy=True)
        if feats.ndim != 2:
            raise DimensionError(f"features must be 2-D, got ndim={feats.ndim}")
        if feats.shape[1] < 1:
            raise DataError("dataset needs at least one feature column")
        raw_targets = np.asarray(self.targets)
        if raw_targets.ndim != 1:
            raise DimensionError("targets must be 1-D")
        if raw_targets.shape[0] != feats.shape[0]:
            raise DimensionError(
                f"{feats.shape[0]} feature rows vs {raw_targets.shape[0]} targets"
            )
        if not np.all(np.isfinite(feats)):
            raise DataError("features contain NaN or infinite entries")
        if self.task is Task.CLASSIFICATION:
            tgt = np.asarray(raw_targets, dtype=np.float64)
            if not np.all(np.isfinite(tgt)):
                raise DataError("targets contain NaN or infinite entries")
            if np.any(tgt != np.round(tgt)) or np.any(tgt < 0):
                raise DataError("classification targets must be non-negative integers")
            tgt = tgt.astype(np.int64)
            if np.unique(tgt).size < 2:
                raise DataError("classification needs at least two classes")
        else:
            tgt = np.array(raw_targets, dtype=np.float64, copy=True)
            if not np.all(np.isfinite(tgt)):
                raise DataError("targets contain NaN or infinite entries")
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != feats.shape[1]:
                raise DimensionError("feature_names length must equal feature count")
            object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "targets", _freeze(np.array(tgt, copy=True)))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task is not Task.CLASSIFICATION:
            raise DataError("n_classes is only defined for classification datasets")
        return int(self.targets.max()) + 1

    def take(self, rows: np.ndarray) -> "Dataset":
        """New dataset restricted to the given sample rows."""
        return Dataset(self.features[rows], self.targets[rows], self.task, self.feature_names)


@dataclass(frozen=True)
class Mask:
    """Binary vector over feature columns; 1 keeps a column, 0 zeroes it."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.array(self.bits, dtype=np.int8, copy=True)
        if bits.ndim != 1 or bits.size < 1:
            raise DimensionError("mask must be a non-empty 1-D vector")
        if not np.all((bits == 0) | (bits == 1)):
            raise DataError("mask entries must be exactly 0 or 1")
        object.__setattr__(self, "bits", _freeze(bits))

    @classmethod
    def all_ones(cls, length: int) -> "Mask":
        return cls(np.ones(length, dtype=np.int8))

    def __len__(self) -> int:
        return self.bits.size

    @property
    def n_active(self) -> int:
        return int(self.bits.sum())

    def support(self) -> np.ndarray:
        """Ascending indices of active (1) entries."""
        return np.flatnonzero(self.bits)

    def zeroed(self, index: int) -> "Mask":
        """Copy of this mask with one currently-active entry set to 0."""
        if not 0 <= index < self.bits.size:
            raise SelectionError(f"index {index} out of range for mask of length {self.bits.size}")
        if self.bits[index] == 0:
            raise SelectionError(f"index {index} is already masked out")
        bits = np.array(self.bits, copy=True)
        bits[index] = 0
        return Mask(bits)


class TrainedModel(ABC):
    """A fitted predictor queried through batch prediction only.

    Prediction is a pure function of the input: the same matrix always
    yields the same output and never mutates the model. Classification
    models emit per-class probability rows summing to 1.
    """

    task: Task
    n_features_in: int

    @abstractmethod
    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predict one row per input row; (N,) for regression, (N, C) probabilities otherwise."""

    @abstractmethod
    def _state_arrays(self) -> Iterable[np.ndarray]:
        """Arrays that fully determine predictions; used for fingerprinting."""

    def fingerprint(self) -> str:
        """Digest of the fitted state; unchanged fingerprints imply unchanged predictions."""
        h = hashlib.sha256()
        h.update(type(self).__name__.encode())
        h.update(str(self.n_features_in).encode())
        for arr in self._state_arrays():
            a = np.ascontiguousarray(arr)
            h.update(str(a.shape).encode())
            h.update(a.tobytes())
        return h.hexdigest()

    def _check_width(self, features: np.ndarray) -> np.ndarray:
        feats = np.asarray(features, dtype=np.float64)
        if feats.ndim != 2:
            raise DimensionError(f"prediction input must be 2-D, got ndim={feats.ndim}")
        if feats.shape[1] != self.n_features_in:
            raise DimensionError(
                f"model expects {self.n_features_in} columns, got {feats.shape[1]}"
            )
        return feats


def evaluate_loss(predictions: np.ndarray, targets: np.ndarray, loss: LossKind) -> float:
    """Mean per-sample loss of predictions against targets.

    MSE expects two equal-length real vectors. Log loss expects an
    (N, C) matrix of class probabilities and integer labels in [0, C).
    """
    if isinstance(loss, MeanSquaredError):
        preds = np.asarray(predictions, dtype=np.float64)
        tgts = np.asarray(targets, dtype=np.float64)
        if preds.ndim != 1 or tgts.ndim != 1:
            raise DimensionError("mean squared error expects 1-D predictions and targets")
        if preds.shape[0] != tgts.shape[0] or preds.shape[0] < 1:
            raise DimensionError(
                f"{preds.shape[0]} predictions vs {tgts.shape[0]} targets"
            )
        return float(np.mean((preds - tgts) ** 2))
    if isinstance(loss, LogLoss):
        probs = np.asarray(predictions, dtype=np.float64)
        labels = np.asarray(targets)
        if probs.ndim != 2:
            raise DimensionError("log loss expects an (N, C) probability matrix")
        if labels.ndim != 1 or labels.shape[0] != probs.shape[0] or probs.shape[0] < 1:
            raise DimensionError(
                f"{probs.shape[0]} prediction rows vs {labels.shape[0]} targets"
            )
        labels = labels.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
            raise LabelRangeError(
                f"labels must lie in [0, {probs.shape[1]}) for these predictions"
            )
        p_true = probs[np.arange(probs.shape[0]), labels]
        p_true = np.clip(p_true, loss.epsilon, 1.0 - loss.epsilon)
        return float(np.mean(-np.log(p_true)))
    raise ConfigurationError(f"unknown loss kind: {loss!r}")


def apply_mask(features: np.ndarray, mask: Mask) -> np.ndarray:
    """Elementwise product of every row with the mask; masked columns become zero.

    The input matrix is never modified.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionError("apply_mask expects a 2-D feature matrix")
    if feats.shape[1] != len(mask):
        raise DimensionError(
            f"mask length {len(mask)} does not match {feats.shape[1]} columns"
        )
    return feats * mask.bits.astype(np.float64)


def select_columns(features: np.ndarray, indices: Sequence[int] | np.ndarray) -> np.ndarray:
    """Submatrix of the given columns, in ascending index order."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionError("select_columns expects a 2-D feature matrix")
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size == 0:
        raise SelectionError("cannot select an empty set of columns")
    if np.unique(idx).size != idx.size:
        raise SelectionError("column indices must be unique")
    if idx.min() < 0 or idx.max() >= feats.shape[1]:
        raise SelectionError(
            f"column indices must lie in [0, {feats.shape[1]}), got {idx.min()}..{idx.max()}"
        )
    return feats[:, np.sort(idx)]


def mask_support(mask: Mask) -> np.ndarray:
    """Ascending indices of the mask's active entries; its length is the L0 norm."""
    return mask.support()
