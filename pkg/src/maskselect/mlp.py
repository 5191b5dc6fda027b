"""Fully-connected network trained by plain mini-batch gradient descent.

Fixed epoch cap and batch size; constant learning rate; L2 penalty on
weights only. The loss/gradient pair is exposed as a pure function of a
flat parameter vector so gradients can be checked by finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelSpecError, Task, TrainedModel

EPOCHS = 200
BATCH_SIZE = 32

_ACTIVATIONS = ("relu", "logistic")


@dataclass(frozen=True)
class MlpParams:
    hidden_layer_sizes: tuple[int, ...] = (20,)
    activation: str = "relu"
    alpha: float = 1e-4
    learning_rate_init: float = 1e-3


def _layer_sizes(n_inputs: int, hidden: tuple[int, ...], n_outputs: int) -> list[int]:
    return [n_inputs, *hidden, n_outputs]


def init_parameters(sizes: list[int], rng: np.random.Generator) -> list[np.ndarray]:
    """Glorot-uniform weights and zero biases, flattened per layer as [W, b]."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        params.append(w)
        params.append(b)
    return params


def flatten_parameters(params: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def unflatten_parameters(flat: np.ndarray, sizes: list[int]) -> list[np.ndarray]:
    params = []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out))
        pos += fan_in * fan_out
        params.append(flat[pos : pos + fan_out])
        pos += fan_out
    return params


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return 1.0 / (1.0 + np.exp(-z))


def _activation_grad(a: np.ndarray, activation: str) -> np.ndarray:
    # derivative written in terms of the activation output
    if activation == "relu":
        return (a > 0.0).astype(np.float64)
    return a * (1.0 - a)


def _forward(params: list[np.ndarray], features: np.ndarray, activation: str):
    acts = [features]
    n_layers = len(params) // 2
    a = features
    for layer in range(n_layers - 1):
        w, b = params[2 * layer], params[2 * layer + 1]
        a = _activate(a @ w + b, activation)
        acts.append(a)
    w, b = params[-2], params[-1]
    out = a @ w + b
    return out, acts


def loss_and_gradient(
    params: list[np.ndarray],
    features: np.ndarray,
    targets: np.ndarray,
    task: Task,
    activation: str,
    alpha: float,
) -> tuple[float, list[np.ndarray]]:
    """Batch objective and its gradient w.r.t. every weight and bias.

    Objective = mean data loss + 0.5 * alpha * ||weights||^2 / batch_size
    (biases are not penalized).
    """
    n = features.shape[0]
    out, acts = _forward(params, features, activation)
    if task is Task.REGRESSION:
        pred = out[:, 0]
        diff = pred - np.asarray(targets, dtype=np.float64)
        data_loss = float(np.mean(diff**2))
        delta = (2.0 / n) * diff[:, None]
    else:
        labels = np.asarray(targets, dtype=np.int64)
        shifted = out - out.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_z
        data_loss = float(np.mean(-log_probs[np.arange(n), labels]))
        probs = np.exp(log_probs)
        delta = probs.copy()
        delta[np.arange(n), labels] -= 1.0
        delta /= n

    weights = params[0::2]
    penalty = 0.5 * alpha * sum(float(np.sum(w**2)) for w in weights) / n
    loss = data_loss + penalty

    grads: list[np.ndarray] = [np.empty(0)] * len(params)
    n_layers = len(params) // 2
    for layer in range(n_layers - 1, -1, -1):
        w = params[2 * layer]
        a_prev = acts[layer]
        grads[2 * layer] = a_prev.T @ delta + (alpha / n) * w
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ w.T) * _activation_grad(acts[layer], activation)
    return loss, grads


class MlpModel(TrainedModel):
    def __init__(self, params, sizes, activation, task, n_classes):
        self.task = task
        self.n_features_in = sizes[0]
        self.parameters = params
        self.sizes = sizes
        self.activation = activation
        self.n_classes = n_classes

    def predict(self, features: np.ndarray) -> np.ndarray:
        feats = self._check_width(features)
        out, _ = _forward(self.parameters, feats, self.activation)
        if self.task is Task.REGRESSION:
            return out[:, 0]
        shifted = out - out.max(axis=1, keepdims=True)
        ex = np.exp(shifted)
        return ex / ex.sum(axis=1, keepdims=True)

    def _state_arrays(self):
        yield from self.parameters


def fit_mlp(
    hp: MlpParams, features: np.ndarray, targets: np.ndarray, task: Task, seed: int
) -> MlpModel:
    if hp.activation not in _ACTIVATIONS:
        raise ModelSpecError(f"activation must be one of {_ACTIVATIONS}, got {hp.activation!r}")
    feats = np.asarray(features, dtype=np.float64)
    n, m = feats.shape
    if task is Task.CLASSIFICATION:
        labels = np.asarray(targets, dtype=np.int64)
        n_classes = int(labels.max()) + 1
        n_out = n_classes
        tgts: np.ndarray = labels
    else:
        n_classes = 0
        n_out = 1
        tgts = np.asarray(targets, dtype=np.float64)

    sizes = _layer_sizes(m, tuple(int(h) for h in hp.hidden_layer_sizes), n_out)
    rng = np.random.default_rng(seed)
    params = init_parameters(sizes, rng)

    lr = hp.learning_rate_init
    for _ in range(EPOCHS):
        order = rng.permutation(n)
        for start in range(0, n, BATCH_SIZE):
            batch = order[start : start + BATCH_SIZE]
            _, grads = loss_and_gradient(
                params, feats[batch], tgts[batch], task, hp.activation, hp.alpha
            )
            for p, g in zip(params, grads):
                p -= lr * g
    return MlpModel(params, sizes, hp.activation, task, n_classes)
