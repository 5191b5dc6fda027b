"""Gradient-boosted decision trees built from scratch on numpy.

Trees grow leaf-wise (best split first) up to a leaf-count cap, with
histogram split finding over per-column quantile bins. Regression boosts
squared-error residuals; classification boosts log-odds with Newton leaf
values and a sigmoid/softmax output.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .core import FitError, Task, TrainedModel

_MAX_BINS = 64
_MIN_GAIN = 1e-12
_HESS_EPS = 1e-12
_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class GbtParams:
    num_leaves: int = 15
    learning_rate: float = 0.05
    n_estimators: int = 20
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    min_child_samples: int = 5
    max_depth: int = 8  # guard only; the leaf cap usually binds first


class _Tree:
    """Flat-array decision tree; leaves have left == -1."""

    __slots__ = ("feature", "threshold", "cut_bin", "left", "right", "value")

    def __init__(self, feature, threshold, cut_bin, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.cut_bin = np.asarray(cut_bin, dtype=np.int64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    def predict(self, features: np.ndarray) -> np.ndarray:
        n = features.shape[0]
        idx = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.left[idx] >= 0)
        while active.size:
            node = idx[active]
            go_left = features[active, self.feature[node]] < self.threshold[node]
            idx[active] = np.where(go_left, self.left[node], self.right[node])
            active = active[self.left[idx[active]] >= 0]
        return self.value[idx]

    def predict_binned(self, binned: np.ndarray) -> np.ndarray:
        # training-side routing; by construction identical to predict() on raw values
        n = binned.shape[0]
        idx = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.left[idx] >= 0)
        while active.size:
            node = idx[active]
            go_left = binned[active, self.feature[node]] <= self.cut_bin[node]
            idx[active] = np.where(go_left, self.left[node], self.right[node])
            active = active[self.left[idx[active]] >= 0]
        return self.value[idx]


def _bin_columns(features: np.ndarray, max_bins: int) -> tuple[np.ndarray, list[np.ndarray]]:
    n, m = features.shape
    qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
    binned = np.empty((n, m), dtype=np.int64)
    edges: list[np.ndarray] = []
    for j in range(m):
        col = features[:, j]
        e = np.unique(np.quantile(col, qs))
        e = e[(e > col.min()) & (e <= col.max())]
        edges.append(e)
        binned[:, j] = np.searchsorted(e, col, side="right")
    return binned, edges


class _TreeGrower:
    def __init__(self, binned, edges, params, min_child, hess_based):
        self.binned = binned
        self.edges = edges
        self.params = params
        self.min_child = max(1, min_child)
        self.hess_based = hess_based
        self.n_edges = np.array([len(e) for e in edges], dtype=np.int64)

    def _best_split(self, rows, grad, hess, cols):
        nb = self.binned[np.ix_(rows, cols)]
        n_cols = len(cols)
        size = n_cols * _MAX_BINS
        flat = (nb + np.arange(n_cols, dtype=np.int64) * _MAX_BINS).ravel()
        cnt = np.bincount(flat, minlength=size).reshape(n_cols, _MAX_BINS)
        g = np.bincount(flat, weights=np.repeat(grad[rows], n_cols), minlength=size)
        g = g.reshape(n_cols, _MAX_BINS)
        if self.hess_based:
            h = np.bincount(flat, weights=np.repeat(hess[rows], n_cols), minlength=size)
            h = h.reshape(n_cols, _MAX_BINS)
        else:
            h = cnt.astype(np.float64)
        c_cnt = np.cumsum(cnt, axis=1)
        c_g = np.cumsum(g, axis=1)
        c_h = np.cumsum(h, axis=1)
        total_cnt = c_cnt[:, -1:]
        total_g = c_g[:, -1:]
        total_h = c_h[:, -1:]

        n_left = c_cnt[:, :-1]
        n_right = total_cnt - n_left
        g_left = c_g[:, :-1]
        h_left = c_h[:, :-1]
        g_right = total_g - g_left
        h_right = total_h - h_left
        gain = (
            g_left**2 / (h_left + _HESS_EPS)
            + g_right**2 / (h_right + _HESS_EPS)
            - total_g**2 / (total_h + _HESS_EPS)
        )
        bin_ids = np.arange(_MAX_BINS - 1)
        valid = (
            (n_left >= self.min_child)
            & (n_right >= self.min_child)
            & (bin_ids[None, :] < self.n_edges[cols][:, None])
        )
        gain = np.where(valid, gain, -np.inf)
        flat_best = int(np.argmax(gain))
        best_gain = gain.ravel()[flat_best]
        if not np.isfinite(best_gain) or best_gain <= _MIN_GAIN:
            return None
        ci, b = divmod(flat_best, _MAX_BINS - 1)
        feature = int(cols[ci])
        go_left = nb[:, ci] <= b
        return best_gain, feature, b, rows[go_left], rows[~go_left]

    def grow(self, rows, grad, hess, cols, gains_out):
        lr = self.params.learning_rate

        def leaf_value(r):
            gs = float(grad[r].sum())
            hs = float(hess[r].sum()) if self.hess_based else float(r.size)
            return lr * gs / (hs + _HESS_EPS)

        feature = [0]
        threshold = [np.inf]
        cut_bin = [-1]
        left = [-1]
        right = [-1]
        value = [leaf_value(rows)]
        depth = {0: 0}
        node_rows = {0: rows}

        candidates: list[tuple[float, int, int]] = []  # (-gain, seq, node), split data in side table
        pending: dict[int, tuple] = {}
        seq = 0

        def consider(node: int) -> None:
            nonlocal seq
            if depth[node] >= self.params.max_depth:
                return
            found = self._best_split(node_rows[node], grad, hess, cols)
            if found is None:
                return
            pending[node] = found
            candidates.append((-found[0], seq, node))
            seq += 1

        consider(0)
        heapq.heapify(candidates)
        leaves = 1
        while leaves < self.params.num_leaves and candidates:
            _, _, node = heapq.heappop(candidates)
            gain, feat, b, rows_l, rows_r = pending.pop(node)
            gains_out[feat] += gain
            li = len(feature)
            ri = li + 1
            for r in (rows_l, rows_r):
                feature.append(0)
                threshold.append(np.inf)
                cut_bin.append(-1)
                left.append(-1)
                right.append(-1)
                value.append(leaf_value(r))
            feature[node] = feat
            threshold[node] = float(self.edges[feat][b])
            cut_bin[node] = b
            left[node] = li
            right[node] = ri
            depth[li] = depth[ri] = depth[node] + 1
            node_rows[li] = rows_l
            node_rows[ri] = rows_r
            del node_rows[node]
            consider(li)
            consider(ri)
            leaves += 1

        return _Tree(feature, threshold, cut_bin, left, right, value)


class GbtModel(TrainedModel):
    def __init__(self, task, n_features_in, base_score, tree_rounds, n_classes, gains, loss_path):
        self.task = task
        self.n_features_in = n_features_in
        self.base_score = base_score          # scalar (regression/binary) or (C,) vector
        self.tree_rounds = tree_rounds        # list of rounds; each round is a list of trees
        self.n_classes = n_classes
        self._gains = gains
        self.training_loss_path = loss_path   # training loss after each boosting round

    def _raw(self, feats: np.ndarray) -> np.ndarray:
        if self.task is Task.CLASSIFICATION and self.n_classes > 2:
            raw = np.tile(self.base_score, (feats.shape[0], 1))
            for round_trees in self.tree_rounds:
                for k, tree in enumerate(round_trees):
                    raw[:, k] += tree.predict(feats)
            return raw
        raw = np.full(feats.shape[0], float(self.base_score))
        for round_trees in self.tree_rounds:
            raw += round_trees[0].predict(feats)
        return raw

    def predict(self, features: np.ndarray) -> np.ndarray:
        feats = self._check_width(features)
        raw = self._raw(feats)
        if self.task is Task.REGRESSION:
            return raw
        if self.n_classes == 2:
            p = _sigmoid(raw)
            return np.column_stack([1.0 - p, p])
        return _softmax(raw)

    def feature_importances(self) -> np.ndarray:
        return self._gains.copy()

    def _state_arrays(self):
        yield np.atleast_1d(np.asarray(self.base_score, dtype=np.float64))
        for round_trees in self.tree_rounds:
            for tree in round_trees:
                yield tree.feature
                yield tree.threshold
                yield tree.left
                yield tree.right
                yield tree.value


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(raw: np.ndarray) -> np.ndarray:
    shifted = raw - raw.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def fit_gbt(params: GbtParams, features: np.ndarray, targets: np.ndarray, task: Task, seed: int) -> GbtModel:
    feats = np.asarray(features, dtype=np.float64)
    n, m = feats.shape
    rng = np.random.default_rng(seed)
    binned, edges = _bin_columns(feats, _MAX_BINS)
    gains = np.zeros(m, dtype=np.float64)
    grower = _TreeGrower(binned, edges, params, params.min_child_samples, task is Task.CLASSIFICATION)

    n_rows = max(1, int(round(params.subsample * n)))
    n_cols = max(1, int(round(params.colsample_bytree * m)))

    def draw_rows():
        if n_rows >= n:
            return np.arange(n)
        return np.sort(rng.choice(n, size=n_rows, replace=False))

    def draw_cols():
        if n_cols >= m:
            return np.arange(m)
        return np.sort(rng.choice(m, size=n_cols, replace=False))

    loss_path: list[float] = []
    tree_rounds: list[list[_Tree]] = []

    if task is Task.REGRESSION:
        base = float(np.mean(targets))
        f_cur = np.full(n, base)
        for _ in range(params.n_estimators):
            rows, cols = draw_rows(), draw_cols()
            grad = targets - f_cur
            tree = grower.grow(rows, grad, None, cols, gains)
            f_cur = f_cur + tree.predict_binned(binned)
            tree_rounds.append([tree])
            loss_path.append(float(np.mean((targets - f_cur) ** 2)))
        return GbtModel(task, m, base, tree_rounds, 0, gains, loss_path)

    labels = np.asarray(targets, dtype=np.int64)
    n_classes = int(labels.max()) + 1
    if np.unique(labels).size < 2:
        raise FitError("classification fit needs at least two classes")

    if n_classes == 2:
        p_bar = float(np.clip(labels.mean(), _PROB_FLOOR, 1.0 - _PROB_FLOOR))
        base = float(np.log(p_bar / (1.0 - p_bar)))
        f_cur = np.full(n, base)
        y = labels.astype(np.float64)
        for _ in range(params.n_estimators):
            rows, cols = draw_rows(), draw_cols()
            p = _sigmoid(f_cur)
            grad = y - p
            hess = p * (1.0 - p)
            tree = grower.grow(rows, grad, hess, cols, gains)
            f_cur = f_cur + tree.predict_binned(binned)
            tree_rounds.append([tree])
            p = np.clip(_sigmoid(f_cur), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
            loss_path.append(float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))))
        return GbtModel(task, m, base, tree_rounds, n_classes, gains, loss_path)

    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    class_rate = np.clip(onehot.mean(axis=0), _PROB_FLOOR, 1.0)
    base_vec = np.log(class_rate)
    f_cur = np.tile(base_vec, (n, 1))
    for _ in range(params.n_estimators):
        rows, cols = draw_rows(), draw_cols()
        probs = _softmax(f_cur)
        round_trees: list[_Tree] = []
        for k in range(n_classes):
            grad = onehot[:, k] - probs[:, k]
            hess = probs[:, k] * (1.0 - probs[:, k])
            tree = grower.grow(rows, grad, hess, cols, gains)
            f_cur[:, k] += tree.predict_binned(binned)
            round_trees.append(tree)
        tree_rounds.append(round_trees)
        probs = _softmax(f_cur)
        p_true = np.clip(probs[np.arange(n), labels], _PROB_FLOOR, 1.0)
        loss_path.append(float(np.mean(-np.log(p_true))))
    return GbtModel(task, m, base_vec, tree_rounds, n_classes, gains, loss_path)
