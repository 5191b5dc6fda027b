"""Trainable reference predictors and grid-search cross-validation.

Ridge and k-nearest-neighbors serve as cheap, analyzable oracles; the
multi-layer perceptron and gradient-boosted trees mirror the models the
selection experiments are run with. Fitting is deterministic given the
spec seed and the data.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    ConfigurationError,
    DimensionError,
    FitError,
    LossKind,
    ModelSpecError,
    Task,
    TrainedModel,
    evaluate_loss,
)
from .gbt import GbtParams, fit_gbt
from .mlp import MlpParams, fit_mlp


class ModelKind(Enum):
    RIDGE = "ridge"
    KNN = "knn"
    MLP = "mlp"
    GBT = "gbt"


def _positive_int(v: Any) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _nonneg_float(v: Any) -> bool:
    return isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) and v >= 0


def _fraction(v: Any) -> bool:
    return isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) and 0 < v <= 1


def _hidden_sizes(v: Any) -> bool:
    return (
        isinstance(v, (tuple, list))
        and len(v) >= 1
        and all(_positive_int(h) for h in v)
    )


_SCHEMAS: dict[ModelKind, dict[str, tuple[Any, Any]]] = {
    ModelKind.RIDGE: {"alpha": (1.0, _nonneg_float)},
    ModelKind.KNN: {"n_neighbors": (5, _positive_int)},
    ModelKind.MLP: {
        "hidden_layer_sizes": ((20,), _hidden_sizes),
        "activation": ("relu", lambda v: v in ("relu", "logistic")),
        "alpha": (1e-4, _nonneg_float),
        "learning_rate_init": (1e-3, lambda v: _nonneg_float(v) and v > 0),
    },
    ModelKind.GBT: {
        "num_leaves": (15, lambda v: _positive_int(v) and v >= 2),
        "learning_rate": (0.05, lambda v: _nonneg_float(v) and v > 0),
        "n_estimators": (20, _positive_int),
        "subsample": (1.0, _fraction),
        "colsample_bytree": (1.0, _fraction),
        "min_child_samples": (5, _positive_int),
        "max_depth": (8, _positive_int),
    },
}


@dataclass(frozen=True)
class ModelSpec:
    """A model kind plus validated hyperparameters and a fitting seed."""

    kind: ModelKind
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        schema = _SCHEMAS[self.kind]
        hp = dict(self.hyperparameters)
        for name, value in hp.items():
            if name not in schema:
                raise ModelSpecError(f"{self.kind.value} has no hyperparameter {name!r}")
            _, check = schema[name]
            if name == "hidden_layer_sizes":
                value = tuple(value)
                hp[name] = value
            if not check(value):
                raise ModelSpecError(f"invalid value {value!r} for {self.kind.value}.{name}")
        object.__setattr__(self, "hyperparameters", dict(hp))

    def resolved(self) -> dict[str, Any]:
        """Hyperparameters with schema defaults filled in."""
        schema = _SCHEMAS[self.kind]
        out = {name: default for name, (default, _) in schema.items()}
        out.update(self.hyperparameters)
        return out


@dataclass(frozen=True)
class HyperparameterGrid:
    """Ordered candidate specs sharing one model kind."""

    specs: tuple[ModelSpec, ...]

    def __post_init__(self) -> None:
        if not self.specs:
            raise ConfigurationError("hyperparameter grid must not be empty")
        kinds = {spec.kind for spec in self.specs}
        if len(kinds) != 1:
            raise ConfigurationError("all grid candidates must share one model kind")

    @property
    def kind(self) -> ModelKind:
        return self.specs[0].kind

    @classmethod
    def from_param_grid(
        cls, kind: ModelKind, params: Mapping[str, Sequence[Any]], seed: int = 0
    ) -> "HyperparameterGrid":
        """Cartesian product of per-parameter candidate lists, in insertion order."""
        if not params:
            return cls((ModelSpec(kind, {}, seed),))
        names = list(params)
        combos = itertools.product(*(params[name] for name in names))
        specs = tuple(ModelSpec(kind, dict(zip(names, combo)), seed) for combo in combos)
        return cls(specs)


class RidgeModel(TrainedModel):
    def __init__(self, coef: np.ndarray, intercept: float):
        self.task = Task.REGRESSION
        self.n_features_in = coef.shape[0]
        self.coef = coef
        self.intercept = intercept

    def predict(self, features: np.ndarray) -> np.ndarray:
        feats = self._check_width(features)
        return feats @ self.coef + self.intercept

    def feature_importances(self) -> np.ndarray:
        return np.abs(self.coef)

    def _state_arrays(self):
        yield self.coef
        yield np.atleast_1d(self.intercept)


class KnnModel(TrainedModel):
    def __init__(self, train_features, train_targets, n_neighbors, task, n_classes):
        self.task = task
        self.n_features_in = train_features.shape[1]
        self.train_features = train_features
        self.train_targets = train_targets
        self.n_neighbors = n_neighbors
        self.n_classes = n_classes

    def predict(self, features: np.ndarray) -> np.ndarray:
        feats = self._check_width(features)
        if feats.shape[0] == 0:
            if self.task is Task.REGRESSION:
                return np.empty(0)
            return np.empty((0, self.n_classes))
        sq = (
            np.sum(feats**2, axis=1)[:, None]
            - 2.0 * feats @ self.train_features.T
            + np.sum(self.train_features**2, axis=1)[None, :]
        )
        np.maximum(sq, 0.0, out=sq)
        # stable sort: equal distances resolve to the lower training index
        neighbors = np.argsort(sq, axis=1, kind="stable")[:, : self.n_neighbors]
        if self.task is Task.REGRESSION:
            return self.train_targets[neighbors].mean(axis=1)
        votes = self.train_targets[neighbors]
        counts = np.zeros((feats.shape[0], self.n_classes))
        for k in range(self.n_neighbors):
            counts[np.arange(feats.shape[0]), votes[:, k]] += 1.0
        return counts / self.n_neighbors

    def _state_arrays(self):
        yield self.train_features
        yield np.asarray(self.train_targets, dtype=np.float64)
        yield np.atleast_1d(self.n_neighbors)


def fit(spec: ModelSpec, features: np.ndarray, targets: np.ndarray, task: Task) -> TrainedModel:
    """Fit a model of the spec's kind; deterministic given (spec, data)."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionError("fit expects a 2-D feature matrix")
    tgts = np.asarray(targets)
    if tgts.ndim != 1 or tgts.shape[0] != feats.shape[0]:
        raise DimensionError(
            f"{feats.shape[0]} feature rows vs {tgts.shape[0]} targets"
        )
    if feats.shape[0] < 2:
        raise FitError("fitting needs at least two samples")
    if task is Task.CLASSIFICATION:
        labels = np.asarray(tgts, dtype=np.int64)
        if np.unique(labels).size < 2:
            raise FitError("classification fit needs at least two classes present")

    hp = spec.resolved()
    if spec.kind is ModelKind.RIDGE:
        if task is not Task.REGRESSION:
            raise ModelSpecError("ridge supports regression tasks only")
        return _fit_ridge(hp["alpha"], feats, np.asarray(tgts, dtype=np.float64))
    if spec.kind is ModelKind.KNN:
        k = hp["n_neighbors"]
        if k > feats.shape[0]:
            raise FitError(f"n_neighbors={k} exceeds {feats.shape[0]} training samples")
        n_classes = int(np.max(tgts)) + 1 if task is Task.CLASSIFICATION else 0
        tr_targets = (
            np.asarray(tgts, dtype=np.int64)
            if task is Task.CLASSIFICATION
            else np.asarray(tgts, dtype=np.float64)
        )
        return KnnModel(feats.copy(), tr_targets.copy(), k, task, n_classes)
    if spec.kind is ModelKind.MLP:
        params = MlpParams(
            hidden_layer_sizes=tuple(hp["hidden_layer_sizes"]),
            activation=hp["activation"],
            alpha=float(hp["alpha"]),
            learning_rate_init=float(hp["learning_rate_init"]),
        )
        return fit_mlp(params, feats, tgts, task, spec.seed)
    if spec.kind is ModelKind.GBT:
        params = GbtParams(
            num_leaves=int(hp["num_leaves"]),
            learning_rate=float(hp["learning_rate"]),
            n_estimators=int(hp["n_estimators"]),
            subsample=float(hp["subsample"]),
            colsample_bytree=float(hp["colsample_bytree"]),
            min_child_samples=int(hp["min_child_samples"]),
            max_depth=int(hp["max_depth"]),
        )
        return fit_gbt(params, feats, tgts, task, spec.seed)
    raise ModelSpecError(f"unknown model kind {spec.kind!r}")


def _fit_ridge(alpha: float, features: np.ndarray, targets: np.ndarray) -> RidgeModel:
    n, m = features.shape
    aug = np.hstack([features, np.ones((n, 1))])
    if alpha > 0:
        penalty = np.eye(m + 1) * alpha
        penalty[m, m] = 0.0  # intercept is not penalized
        beta = np.linalg.solve(aug.T @ aug + penalty, aug.T @ targets)
    else:
        beta, *_ = np.linalg.lstsq(aug, targets, rcond=None)
    return RidgeModel(beta[:m], float(beta[m]))


def predict(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """One prediction per row: (N,) values or (N, C) probability rows."""
    return model.predict(features)


def feature_importances(model: TrainedModel) -> np.ndarray | None:
    """Non-negative per-feature importances, or None when the kind has none.

    Ridge importances are |coefficient| and are only comparable on
    standardized inputs; gradient-boosted trees report total split gain.
    """
    getter = getattr(model, "feature_importances", None)
    if getter is None:
        return None
    return getter()


def supports_importances(kind: ModelKind) -> bool:
    return kind in (ModelKind.RIDGE, ModelKind.GBT)


def _fold_ids(targets: np.ndarray, task: Task, folds: int, seed: int) -> np.ndarray:
    n = targets.shape[0]
    rng = np.random.default_rng(seed)
    ids = np.empty(n, dtype=np.int64)
    if task is Task.CLASSIFICATION:
        # per-class round robin keeps every class on the training side of each fold
        labels = np.asarray(targets, dtype=np.int64)
        for c in np.unique(labels):
            members = np.flatnonzero(labels == c)
            members = members[rng.permutation(members.size)]
            ids[members] = np.arange(members.size) % folds
    else:
        perm = rng.permutation(n)
        for f, chunk in enumerate(np.array_split(perm, folds)):
            ids[chunk] = f
    return ids


def cross_validate(
    grid: HyperparameterGrid,
    features: np.ndarray,
    targets: np.ndarray,
    task: Task,
    loss: LossKind,
    folds: int = 3,
    seed: int = 0,
) -> ModelSpec:
    """Return the grid spec with the lowest mean out-of-fold loss.

    Ties break toward the earlier grid position; fold assignment and
    fitting are fully determined by the seed.
    """
    if folds < 2:
        raise ConfigurationError("cross-validation needs at least 2 folds")
    feats = np.asarray(features, dtype=np.float64)
    n = feats.shape[0]
    if n < folds:
        raise ConfigurationError(f"{n} samples cannot be split into {folds} folds")
    tgts = np.asarray(targets)
    ids = _fold_ids(tgts, task, folds, seed)

    best_spec = None
    best_loss = np.inf
    for spec in grid.specs:
        fold_losses = []
        for f in range(folds):
            test_rows = ids == f
            model = fit(spec, feats[~test_rows], tgts[~test_rows], task)
            preds = model.predict(feats[test_rows])
            fold_losses.append(evaluate_loss(preds, tgts[test_rows], loss))
        mean_loss = float(np.mean(fold_losses))
        if mean_loss < best_loss:
            best_loss = mean_loss
            best_spec = spec
    assert best_spec is not None
    return best_spec
