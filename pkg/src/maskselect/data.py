"""Synthetic data generation, CSV ingestion, four-way splitting, standardization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConfigurationError, DataError, Dataset, Task


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for the (train, fs_val, model_val, test) partition.

    fs_val is the split the mask selectors query; model_val scores
    selector hyperparameters; test is touched once per method.
    """

    train: float = 0.45
    fs_val: float = 0.30
    model_val: float = 0.10
    test: float = 0.15
    seed: int = 0

    def fractions(self) -> tuple[float, float, float, float]:
        return (self.train, self.fs_val, self.model_val, self.test)

    def validate(self) -> None:
        fracs = self.fractions()
        if any(f < 0 for f in fracs):
            raise ConfigurationError("split fractions must be non-negative")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigurationError(f"split fractions must sum to 1, got {sum(fracs)}")


@dataclass(frozen=True)
class SplitBundle:
    """The four sample-disjoint splits of one source dataset."""

    train: Dataset
    fs_val: Dataset
    model_val: Dataset
    test: Dataset

    def train_pool(self) -> Dataset:
        """Union of train and fs_val; the training split for baseline methods."""
        feats = np.vstack([self.train.features, self.fs_val.features])
        tgts = np.concatenate([self.train.targets, self.fs_val.targets])
        return Dataset(feats, tgts, self.train.task, self.train.feature_names)

    def splits(self) -> tuple[Dataset, Dataset, Dataset, Dataset]:
        return (self.train, self.fs_val, self.model_val, self.test)


_CONST_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Standardizer:
    """Per-column location/scale estimated on the training split only.

    Constant columns are flagged and transform to all-zeros. Regression
    targets get their own location/scale; classification labels pass
    through untouched.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray
    target_mean: float | None = None
    target_std: float | None = None

    def transform_features(self, features: np.ndarray) -> np.ndarray:
        feats = np.asarray(features, dtype=np.float64)
        safe_std = np.where(self.constant, 1.0, self.std)
        out = (feats - self.mean) / safe_std
        out[:, self.constant] = 0.0
        return out

    def inverse_features(self, features: np.ndarray) -> np.ndarray:
        feats = np.asarray(features, dtype=np.float64)
        safe_std = np.where(self.constant, 1.0, self.std)
        out = feats * safe_std + self.mean
        out[:, self.constant] = self.mean[self.constant]
        return out

    def transform_targets(self, targets: np.ndarray) -> np.ndarray:
        if self.target_mean is None:
            return np.asarray(targets)
        scale = self.target_std if self.target_std > _CONST_STD_FLOOR else 1.0
        return (np.asarray(targets, dtype=np.float64) - self.target_mean) / scale

    def inverse_targets(self, targets: np.ndarray) -> np.ndarray:
        if self.target_mean is None:
            return np.asarray(targets)
        scale = self.target_std if self.target_std > _CONST_STD_FLOOR else 1.0
        return np.asarray(targets, dtype=np.float64) * scale + self.target_mean


def synthetic_target(features: np.ndarray, n_informative: int) -> np.ndarray:
    """Target rule of the synthetic benchmark: sum of x^2 + sin(x) over informative columns."""
    info = np.asarray(features, dtype=np.float64)[:, :n_informative]
    return np.sum(info**2 + np.sin(info), axis=1)


def generate_synthetic(
    n_samples: int = 300,
    n_features: int = 100,
    n_informative: int = 10,
    seed: int = 0,
) -> Dataset:
    """Regression dataset where only the first n_informative columns drive the target.

    Features are i.i.d. standard normal, so a zeroed column equals the
    column mean and every remaining column carries both a quadratic and
    a sinusoidal effect.
    """
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    if not 0 < n_informative <= n_features:
        raise ConfigurationError("need 1 <= n_informative <= n_features")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n_samples, n_features))
    targets = synthetic_target(features, n_informative)
    names = tuple(f"f{j}" for j in range(n_features))
    return Dataset(features, targets, Task.REGRESSION, names)


def load_csv(
    path: str | Path,
    target_column: str | int,
    task: Task,
    header: bool = True,
) -> Dataset:
    """Read a numeric comma-separated table into a Dataset.

    The target column is removed from the features. Classification
    targets may be arbitrary strings; they are label-encoded in first
    appearance order. Any unparseable feature cell aborts with the
    offending row number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path} is empty")

    if header:
        names = [c.strip() for c in rows[0]]
        body = rows[1:]
    else:
        names = [str(i) for i in range(len(rows[0]))]
        body = rows
    if not body:
        raise DataError(f"{path} has a header but no data rows")

    if isinstance(target_column, int):
        t_idx = target_column
        if not 0 <= t_idx < len(names):
            raise DataError(f"target column index {t_idx} out of range for {len(names)} columns")
    else:
        if target_column not in names:
            raise DataError(f"target column {target_column!r} not found in header {names}")
        t_idx = names.index(target_column)

    feat_idx = [i for i in range(len(names)) if i != t_idx]
    if not feat_idx:
        raise DataError("file has no feature columns besides the target")

    features = np.empty((len(body), len(feat_idx)), dtype=np.float64)
    raw_targets: list[str] = []
    for r, row in enumerate(body):
        rownum = r + (2 if header else 1)
        if len(row) != len(names):
            raise DataError(f"row {rownum}: expected {len(names)} cells, got {len(row)}")
        for c, i in enumerate(feat_idx):
            cell = row[i].strip()
            try:
                features[r, c] = float(cell)
            except ValueError:
                raise DataError(f"row {rownum}: non-numeric feature cell {cell!r}") from None
            if not math.isfinite(features[r, c]):
                raise DataError(f"row {rownum}: non-finite feature cell {cell!r}")
        raw_targets.append(row[t_idx].strip())

    if task is Task.CLASSIFICATION:
        encoding: dict[str, int] = {}
        labels = np.empty(len(raw_targets), dtype=np.int64)
        for r, cell in enumerate(raw_targets):
            if cell not in encoding:
                encoding[cell] = len(encoding)
            labels[r] = encoding[cell]
        if len(encoding) < 2:
            raise DataError("classification target has a single class")
        targets: np.ndarray = labels
    else:
        targets = np.empty(len(raw_targets), dtype=np.float64)
        for r, cell in enumerate(raw_targets):
            try:
                targets[r] = float(cell)
            except ValueError:
                rownum = r + (2 if header else 1)
                raise DataError(f"row {rownum}: non-numeric target cell {cell!r}") from None

    feature_names = tuple(names[i] for i in feat_idx)
    return Dataset(features, targets, task, feature_names)


def _largest_remainder_sizes(n: int, fractions: tuple[float, ...]) -> list[int]:
    quotas = [f * n for f in fractions]
    sizes = [int(math.floor(q)) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    leftover = n - sum(sizes)
    # ties go to the lower index: stable sort on the negated remainder
    order = sorted(range(len(fractions)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def _stratified_order(targets: np.ndarray, perm: np.ndarray) -> np.ndarray:
    # spread each class uniformly along the ordering so contiguous cuts stay stratified
    labels = targets[perm]
    keys = np.empty(perm.size, dtype=np.float64)
    for c in np.unique(labels):
        pos = np.flatnonzero(labels == c)
        keys[pos] = (np.arange(pos.size) + 0.5) / pos.size
    return perm[np.argsort(keys, kind="stable")]


def split(dataset: Dataset, spec: SplitSpec) -> SplitBundle:
    """Partition a dataset into the four experiment splits.

    Samples are permuted by the spec seed and cut contiguously, with
    split sizes chosen by largest-remainder rounding. Classification
    splits are stratified so each split mirrors the class balance.
    """
    spec.validate()
    n = dataset.n_samples
    sizes = _largest_remainder_sizes(n, spec.fractions())
    if any(s == 0 for s in sizes):
        raise ConfigurationError(
            f"split of {n} samples by fractions {spec.fractions()} yields an empty split {sizes}"
        )
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    if dataset.task is Task.CLASSIFICATION:
        perm = _stratified_order(dataset.targets, perm)
    cuts = np.cumsum(sizes)[:-1]
    parts = np.split(perm, cuts)
    train, fs_val, model_val, test = (dataset.take(p) for p in parts)
    return SplitBundle(train, fs_val, model_val, test)


def standardize(bundle: SplitBundle) -> tuple[SplitBundle, Standardizer]:
    """Standardize all four splits with statistics from the training split.

    Constant training columns become all-zero in every split. For
    regression the targets are standardized too, so masked-out values
    (zeros) coincide with column means and losses stay scale-free.
    """
    train = bundle.train
    if train.n_samples < 1:
        raise ConfigurationError("training split is empty")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    constant = std <= _CONST_STD_FLOOR
    if train.task is Task.REGRESSION:
        t_mean = float(train.targets.mean())
        t_std = float(train.targets.std())
    else:
        t_mean = None
        t_std = None
    scaler = Standardizer(mean=mean, std=std, constant=constant, target_mean=t_mean, target_std=t_std)

    def _apply(ds: Dataset) -> Dataset:
        feats = scaler.transform_features(ds.features)
        tgts = scaler.transform_targets(ds.targets)
        return Dataset(feats, tgts, ds.task, ds.feature_names)

    new_bundle = SplitBundle(*(_apply(ds) for ds in bundle.splits()))
    return new_bundle, scaler
