"""Dataset loading and synthetic generators.

Every dataset is split 80/20 into train and test by a seeded permutation,
with ``floor(0.8 * n)`` training rows.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from advact.errors import ContractError, ParseError

SYNTH_NAMES = ("regress-sin", "blobs-2class", "spirals-2class")


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    task: str = "regression"
    feature_names: list = field(default_factory=list)

    @property
    def input_dim(self):
        return self.x_train.shape[1]

    @property
    def output_dim(self):
        if self.task == "classification":
            return int(max(self.y_train.max(initial=0), self.y_test.max(initial=0))) + 1
        return self.y_train.shape[1]


def split_indices(n, seed):
    """Train and test row indices; the first ``floor(4n/5)`` permuted rows train."""
    order = np.random.default_rng(seed).permutation(n)
    cut = (4 * n) // 5
    return order[:cut], order[cut:]


def standardize(x_train, x_test):
    """Scale features by train-split mean and std; constant columns are only centred."""
    mu = x_train.mean(axis=0, keepdims=True)
    sd = x_train.std(axis=0, keepdims=True)
    sd[sd == 0] = 1.0
    return (x_train - mu) / sd, (x_test - mu) / sd


def _make(x, y, seed, task, normalize, names=()):
    if len(x) == 0:
        raise ContractError("dataset has no rows")
    tr, te = split_indices(len(x), seed)
    x_tr, x_te = x[tr], x[te]
    if normalize:
        x_tr, x_te = standardize(x_tr, x_te)
    return Dataset(x_tr, y[tr], x_te, y[te], task, list(names))


def load_csv(path, label_column, normalize=True, seed=0, task="regression"):
    """Read a numeric CSV with a header row.

    ``task="classification"`` turns the label column into integer class ids.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", line=1) from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"label column {label_column!r} not in header", line=1)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(row)}", line=line)
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"non-numeric cell in {row!r}", line=line) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite cell", line=line)
            rows.append(values)
    if not rows:
        raise ContractError(f"{path}: header only, no data rows")
    table = np.array(rows)
    j = header.index(label_column)
    x = np.delete(table, j, axis=1)
    if task == "classification":
        y = table[:, j].astype(np.int64)
    else:
        y = table[:, j:j + 1]
    names = [h for i, h in enumerate(header) if i != j]
    return _make(x, y, seed, task, normalize, names)


def _regress_sin(rng, n, noise):
    x = rng.uniform(-1.0, 1.0, size=(n, 3))
    y = np.sin(3.0 * x[:, 0]) + x[:, 1] ** 2 - 0.5 * x[:, 2]
    y = y + noise * rng.standard_normal(n)
    return x, y[:, None], "regression"


def _blobs(rng, n, noise, separation=4.0):
    labels = np.arange(n) % 2
    centers = np.where(labels[:, None] == 0, -separation / 2, separation / 2) * np.array([[1.0, 0.0]])
    x = centers + noise * rng.standard_normal((n, 2))
    return x, labels.astype(np.int64), "classification"


def _spirals(rng, n, noise, turns=1.5):
    labels = np.arange(n) % 2
    t = np.sqrt(rng.uniform(0.0, 1.0, size=n))
    theta = 2.0 * math.pi * turns * t + math.pi * labels
    x = np.stack([t * np.cos(theta), t * np.sin(theta)], axis=1)
    x = x + noise * rng.standard_normal((n, 2))
    return x, labels.astype(np.int64), "classification"


def synth_dataset(name, n=1000, noise=0.1, seed=0, normalize=False, **params):
    """Generate a synthetic dataset.

    regress-sin
        x ~ U(-1, 1)^3, y = sin(3 x1) + x2^2 - 0.5 x3 + noise * N(0, 1).
    blobs-2class
        Alternating labels; class 0 centred at (-s/2, 0), class 1 at (s/2, 0)
        with s = ``separation`` (default 4), isotropic noise of std ``noise``.
    spirals-2class
        Two interleaved arms: radius t = sqrt(u), angle 2 pi turns t + pi label,
        u ~ U(0, 1), ``turns`` default 1.5, plus isotropic noise.
    """
    makers = {"regress-sin": _regress_sin, "blobs-2class": _blobs, "spirals-2class": _spirals}
    if name not in makers:
        raise ContractError(f"unknown synthetic dataset {name!r}; choose from {SYNTH_NAMES}")
    if n < 1 or noise < 0:
        raise ContractError("n must be positive and noise non-negative")
    rng = np.random.default_rng(seed)
    x, y, task = makers[name](rng, n, noise, **params)
    names = [f"x{i + 1}" for i in range(x.shape[1])]
    return _make(x, y, seed, task, normalize, names)


def write_csv(ds, path, label="y"):
    """Write train then test rows of ``ds`` to ``path`` with a header."""
    x = np.concatenate([ds.x_train, ds.x_test])
    y = np.concatenate([ds.y_train, ds.y_test]).reshape(len(x), -1)
    names = ds.feature_names or [f"x{i + 1}" for i in range(x.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [label])
        for xi, yi in zip(x, y):
            cells = [repr(float(v)) for v in xi]
            cells.append(str(int(yi[0])) if ds.task == "classification" else repr(float(yi[0])))
            w.writerow(cells)
