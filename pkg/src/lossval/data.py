"""Datasets: CSV ingestion, synthetic generators, splitting, standardization."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError, ShapeError

TASKS = ("classification", "regression")


@dataclass
class Dataset:
    """Feature matrix plus targets for one task.

    Classification targets are integer class ids in [0, n_classes);
    regression targets are floats. `norm_mean`/`norm_std` record the
    statistics a standardized dataset was scaled with (fit on the training
    split), or None for raw data.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    name: str = "dataset"
    n_classes: int | None = None
    norm_mean: np.ndarray | None = None
    norm_std: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise ShapeError("X contains non-finite entries")
        if self.task == "classification":
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.n_classes is None:
                self.n_classes = int(self.y.max()) + 1 if self.y.size else 0
            if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
                raise ShapeError("labels out of range for n_classes")
        else:
            self.y = np.asarray(self.y, dtype=np.float64)
            if not np.all(np.isfinite(self.y)):
                raise ShapeError("targets contain non-finite entries")
        if self.y.shape != (self.X.shape[0],):
            raise ShapeError(f"y shape {self.y.shape} vs {self.X.shape[0]} rows")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def subset(self, idx, name=None):
        return Dataset(
            self.X[idx],
            self.y[idx],
            self.task,
            name or self.name,
            self.n_classes,
            self.norm_mean,
            self.norm_std,
        )

    def onehot(self):
        if self.task != "classification":
            raise ConfigError("one-hot targets only exist for classification")
        return np.eye(self.n_classes)[self.y]


@dataclass
class SplitSpec:
    """Train/validation/test sizes plus the shuffle seed."""

    n_train: int = 1000
    n_val: int = 100
    n_test: int = 3000
    seed: int = 0


def load_csv(path, label_column, task):
    """Parse a headered numeric CSV into a Dataset.

    Every cell must be numeric; classification labels must be integers.
    Errors name the offending row and column (1-based, header is row 1).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ConfigError(f"label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        rows, labels = [], []
        for rnum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {rnum} has {len(row)} cells, expected {len(header)}")
            vals = []
            for cnum, cell in enumerate(row, start=1):
                cell = cell.strip()
                if cell == "":
                    raise ParseError(f"{path}: blank cell at row {rnum}, column {cnum}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row {rnum}, column {cnum}"
                    ) from None
            rows.append([vals[i] for i in feat_idx])
            labels.append(vals[label_idx])
    X = np.asarray(rows, dtype=np.float64)
    if task == "classification":
        y = np.asarray(labels)
        if not np.all(y == np.round(y)):
            raise ParseError(f"{path}: classification labels must be integers")
        y = y.astype(np.int64)
        uniq = np.unique(y)
        remap = {int(v): i for i, v in enumerate(uniq)}
        y = np.asarray([remap[int(v)] for v in y], dtype=np.int64)
        return Dataset(X, y, task, name=str(path), n_classes=len(uniq))
    return Dataset(X, np.asarray(labels, dtype=np.float64), task, name=str(path))


def save_csv(dataset: Dataset, path, label_column="label"):
    """Write a Dataset so `load_csv` reproduces X and y exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(dataset.dim)] + [label_column])
        for x_row, target in zip(dataset.X, dataset.y):
            cells = [repr(float(v)) for v in x_row]
            if dataset.task == "classification":
                cells.append(str(int(target)))
            else:
                cells.append(repr(float(target)))
            writer.writerow(cells)


def synth_blobs(n, dim=10, n_classes=3, sep=3.0, seed=0):
    """Gaussian clusters with unit variance, centers on a circle of radius
    `sep` in the first two feature dimensions."""
    if n_classes > n:
        raise ConfigError(f"n_classes={n_classes} exceeds n={n}")
    if dim < 2:
        raise ConfigError("blobs need at least 2 features")
    rng = np.random.default_rng(seed)
    centers = np.zeros((n_classes, dim))
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers[:, 0] = sep * np.cos(angles)
    centers[:, 1] = sep * np.sin(angles)
    y = rng.integers(0, n_classes, size=n)
    X = centers[y] + rng.normal(size=(n, dim))
    return Dataset(X, y, "classification", name="blobs", n_classes=n_classes)


def synth_friedman1(n, noise=1.0, seed=0):
    """The classic 10-feature nonlinear regression surface; features are
    uniform on [0, 1], only the first five matter."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 10))
    y = (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )
    if noise > 0.0:
        y = y + noise * rng.normal(size=n)
    return Dataset(X, y, "regression", name="friedman1")


def split_standardize(dataset: Dataset, spec: SplitSpec):
    """Seeded shuffle, split into train/val/test, standardize all three
    with statistics fit on the training split."""
    total = spec.n_train + spec.n_val + spec.n_test
    if total > dataset.n:
        raise ConfigError(f"split needs {total} rows, dataset has {dataset.n}")
    if min(spec.n_train, spec.n_val, spec.n_test) < 1:
        raise ConfigError("all split sizes must be >= 1")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(dataset.n)
    tr = perm[: spec.n_train]
    va = perm[spec.n_train : spec.n_train + spec.n_val]
    te = perm[spec.n_train + spec.n_val : total]
    mean = dataset.X[tr].mean(axis=0)
    std = dataset.X[tr].std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)

    def build(idx, tag):
        X = (dataset.X[idx] - mean) / std
        return Dataset(
            X,
            dataset.y[idx],
            dataset.task,
            f"{dataset.name}/{tag}",
            dataset.n_classes,
            norm_mean=mean,
            norm_std=std,
        )

    return build(tr, "train"), build(va, "val"), build(te, "test")
