"""Deterministic stand-in benchmark datasets.

Used by the acceptance suite when the real UCI CSV exports are not
available locally. Shapes, task kinds, and the defining statistical
character match the real datasets: small sample counts, many columns,
and a handful of strong drivers buried among inert distractor columns,
so models fitted on everything overfit while pruned fits generalize.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SONAR_SHAPE = (208, 60)
RESIDENTIAL_SHAPE = (372, 105)


def write_sonar_like(path: Path, seed: int = 7_052) -> Path:
    n, m = SONAR_SHAPE
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    # three strong discriminative bands among 57 distractors
    logit = 2.0 * X[:, 0] + 1.6 * X[:, 1] - 1.2 * X[:, 2]
    prob = 1.0 / (1.0 + np.exp(-logit))
    y = (rng.random(n) < prob).astype(int)
    labels = np.where(y == 1, "metal", "rock")
    header = [f"band_{j:02d}" for j in range(m)] + ["label"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(n):
            writer.writerow([f"{v:.6f}" for v in X[i]] + [labels[i]])
    return Path(path)


def write_residential_like(path: Path, seed: int = 11_731) -> Path:
    n, m = RESIDENTIAL_SHAPE
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    # six cost drivers among 99 inert descriptor columns
    coef = np.array([1.2, 1.0, 0.9, 0.7, 0.6, 0.5])
    y = X[:, :6] @ coef
    y = y + 0.75 * y.std() * rng.standard_normal(n)
    header = [f"v_{j:03d}" for j in range(m)] + ["construction_cost"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(n):
            writer.writerow([f"{v:.6f}" for v in X[i]] + [f"{y[i]:.6f}"])
    return Path(path)
