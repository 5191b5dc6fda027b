"""Comparison feature selectors: correlation and mutual-information
filters, and recursive feature elimination as the wrapper baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, LossKind, ScoringError, Task
from .models import ModelSpec, feature_importances, fit, supports_importances

MI_BINS = 10


@dataclass(frozen=True)
class ScoreVector:
    """Per-feature relevance score; higher means more related to the target."""

    scores: np.ndarray
    method: str  # "cc" or "mi"

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))


@dataclass(frozen=True)
class RfeConfig:
    eta: int
    spec: ModelSpec


def pearson_scores(features: np.ndarray, targets: np.ndarray) -> ScoreVector:
    """Absolute Pearson correlation of each feature with the target.

    Only linear relations register; a zero-variance feature scores 0.
    """
    feats = np.asarray(features, dtype=np.float64)
    tgts = np.asarray(targets, dtype=np.float64)
    if feats.shape[0] < 2:
        raise ScoringError("correlation needs at least 2 samples")
    ty = tgts - tgts.mean()
    sy = np.sqrt(np.mean(ty**2))
    if sy <= 0:
        raise ScoringError("target has zero variance")
    fx = feats - feats.mean(axis=0)
    sx = np.sqrt(np.mean(fx**2, axis=0))
    cov = np.mean(fx * ty[:, None], axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(sx > 0, cov / (sx * sy), 0.0)
    return ScoreVector(np.clip(np.abs(r), 0.0, 1.0), "cc")


def _discretize(values: np.ndarray, bins: int) -> np.ndarray:
    lo = values.min()
    hi = values.max()
    if hi <= lo:
        return np.zeros(values.shape[0], dtype=np.int64)
    edges = lo + (hi - lo) * np.arange(1, bins) / bins
    return np.searchsorted(edges, values, side="right")


def _histogram_mi(a: np.ndarray, b: np.ndarray, n_a: int, n_b: int) -> float:
    n = a.shape[0]
    joint = np.bincount(a * n_b + b, minlength=n_a * n_b).reshape(n_a, n_b)
    row = joint.sum(axis=1)
    col = joint.sum(axis=0)
    terms = []
    for i in range(n_a):
        if row[i] == 0:
            continue
        for j in range(n_b):
            c = joint[i, j]
            if c == 0:
                continue
            terms.append((c / n) * math.log(n * c / (row[i] * col[j])))
    # fsum is exact to rounding, so the estimate is independent of cell order
    return max(0.0, math.fsum(terms))


def mutual_information_scores(
    features: np.ndarray, targets: np.ndarray, task: Task, bins: int = MI_BINS
) -> ScoreVector:
    """Plug-in histogram mutual information of each feature with the target.

    Continuous variables are discretized into equal-width bins over
    their observed range; classification labels are used as-is. Scores
    are in nats and carry the usual positive plug-in bias.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.shape[0] < 2:
        raise ScoringError("mutual information needs at least 2 samples")
    if task is Task.CLASSIFICATION:
        tgt_codes = np.asarray(targets, dtype=np.int64)
        n_tgt = int(tgt_codes.max()) + 1
    else:
        tgt_codes = _discretize(np.asarray(targets, dtype=np.float64), bins)
        n_tgt = bins
    scores = np.empty(feats.shape[1])
    for j in range(feats.shape[1]):
        codes = _discretize(feats[:, j], bins)
        scores[j] = _histogram_mi(codes, tgt_codes, bins, n_tgt)
    return ScoreVector(scores, "mi")


def select_top_k(scores: ScoreVector, k: int) -> np.ndarray:
    """Indices of the k largest scores, ties to the lowest index, ascending."""
    m = scores.scores.shape[0]
    if not 1 <= k <= m:
        raise ConfigurationError(f"k must lie in [1, {m}], got {k}")
    order = sorted(range(m), key=lambda j: (-scores.scores[j], j))
    return np.sort(np.asarray(order[:k], dtype=np.int64))


def rfe(
    features: np.ndarray,
    targets: np.ndarray,
    task: Task,
    loss: LossKind,
    config: RfeConfig,
) -> np.ndarray:
    """Recursive feature elimination down to eta features.

    Fits the model, drops the single feature with the smallest intrinsic
    importance (ties to the lowest original index), refits, and repeats.
    Unlike the mask selectors this retrains at every step.
    """
    del loss  # selection is driven purely by importances
    feats = np.asarray(features, dtype=np.float64)
    m = feats.shape[1]
    if not supports_importances(config.spec.kind):
        raise ConfigurationError(
            f"model kind {config.spec.kind.value!r} has no intrinsic feature importances"
        )
    if not 1 <= config.eta <= m:
        raise ConfigurationError(f"eta must lie in [1, {m}], got {config.eta}")

    remaining = np.arange(m)
    model = fit(config.spec, feats[:, remaining], targets, task)
    while remaining.size > config.eta:
        imp = feature_importances(model)
        assert imp is not None
        drop = int(np.argmin(imp))  # argmin's first hit is the lowest original index
        remaining = np.delete(remaining, drop)
        model = fit(config.spec, feats[:, remaining], targets, task)
    return remaining
