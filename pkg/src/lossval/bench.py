"""Benchmark harness: noise injection, detection metrics, point
removal/addition curves, and multi-seed suite aggregation.

Every harness output depends on input scores only through their ordering,
and a suite-level seed determines every number in the report. Cells of a
suite are independent, so they may run in any order or in parallel; the
report is assembled in canonical cell order either way.
"""

from __future__ import annotations

import json
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import core, valuators
from .data import Dataset, SplitSpec, split_standardize, synth_blobs, synth_friedman1
from .errors import ConfigError, ShapeError

REPORT_FORMAT_VERSION = 1

NOISE_KINDS = ("label", "feature", "mixed")


@dataclass
class NoiseSpec:
    """What to corrupt: kind, rate, and the seed that picks the victims."""

    kind: str = "label"
    rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.rate < 1.0):
            raise ConfigError(f"noise rate must be in [0, 1), got {self.rate}")


def _flip_labels(y, idx, n_classes, rng):
    # uniform reassignment to a *different* class
    shift = rng.integers(1, n_classes, size=idx.size)
    y[idx] = (y[idx] + shift) % n_classes


def _swap_targets(y, idx, rng):
    # pairwise swaps preserve the marginal target distribution
    sel = rng.permutation(idx)
    if sel.size == 1:
        warnings.warn("single regression target cannot be swapped; left unchanged",
                      stacklevel=3)
        return
    if sel.size % 2 == 1:
        tri = sel[-3:]
        y[tri] = y[np.roll(tri, 1)]
        sel = sel[:-3]
    half = sel.size // 2
    left, right = sel[:half], sel[half:]
    y[left], y[right] = y[right].copy(), y[left].copy()


def inject_noise(dataset: Dataset, spec: NoiseSpec):
    """Return (corrupted copy, corrupted index array).

    Label noise reassigns classification labels uniformly to a different
    class and swaps regression targets between selected points. Feature
    noise adds standard-normal draws to every feature of the selected rows
    (meant for standardized features). Mixed noise applies label noise to
    half the selected indices and feature noise to the other half
    (disjoint; label noise gets the odd one).
    """
    n = dataset.n
    n_corr = int(round(spec.rate * n))
    rng = np.random.default_rng(spec.seed)
    if n_corr == 0:
        if spec.rate > 0.0:
            warnings.warn("rate * n rounds to zero; nothing corrupted", stacklevel=2)
        return dataset.subset(np.arange(n)), np.empty(0, dtype=np.int64)
    if dataset.task == "classification" and dataset.n_classes < 2 and spec.kind != "feature":
        raise ConfigError("label noise needs at least 2 classes")
    idx = np.sort(rng.choice(n, size=n_corr, replace=False))
    X = dataset.X.copy()
    y = dataset.y.copy()

    if spec.kind == "mixed":
        split = rng.permutation(idx)
        label_idx = np.sort(split[: (n_corr + 1) // 2])
        feature_idx = np.sort(split[(n_corr + 1) // 2 :])
    elif spec.kind == "label":
        label_idx, feature_idx = idx, np.empty(0, dtype=np.int64)
    else:
        label_idx, feature_idx = np.empty(0, dtype=np.int64), idx

    if label_idx.size:
        if dataset.task == "classification":
            _flip_labels(y, label_idx, dataset.n_classes, rng)
        else:
            _swap_targets(y, label_idx, rng)
    if feature_idx.size:
        X[feature_idx] += rng.normal(0.0, 1.0, size=(feature_idx.size, dataset.dim))

    corrupted = Dataset(X, y, dataset.task, dataset.name, dataset.n_classes,
                        dataset.norm_mean, dataset.norm_std)
    return corrupted, idx


@dataclass
class DetectionReport:
    """Noisy-sample detection curve plus the F1 at the corruption budget."""

    curve_x: np.ndarray          # fraction of data inspected, 0..1
    curve_y: np.ndarray          # fraction of corrupted found
    f1: float
    curve_mean: float
    n_corrupted: int


def detection_curve(scores, corrupted):
    """Inspect points in ascending score order (ties broken by index) and
    track the fraction of corrupted points found; F1 is evaluated at an
    inspection budget equal to the true corruption count, where precision
    equals recall."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(corrupted, dtype=np.int64)] = True
    c = int(mask.sum())
    order = np.argsort(scores, kind="stable")
    found = np.concatenate([[0.0], np.cumsum(mask[order])])
    x = np.arange(n + 1) / n
    if c == 0:
        y = np.ones(n + 1)
        y[0] = 0.0
        return DetectionReport(x, y, 0.0, float(y.mean()), 0)
    y = found / c
    f1 = float(found[c] / c)
    return DetectionReport(x, y, f1, float(y.mean()), c)


@dataclass
class CurveReport:
    """Test metric along a removal/addition grid and its average."""

    fractions: np.ndarray
    values: np.ndarray
    mean: float
    flags: list = field(default_factory=list)
    normalized: bool = False


REMOVAL_GRID = np.arange(0, 11) * 0.05     # 0% .. 50%
ADDITION_GRID = np.arange(1, 11) * 0.05    # 5% .. 50%


def _retrain_metric(train_subset: Dataset, test: Dataset, evaluator):
    state = valuators.fit_evaluator(train_subset, evaluator)
    if test.task == "classification":
        return core.accuracy(state.mlp, test)
    return core.neg_mse(state.mlp, test)


def point_removal(train: Dataset, test: Dataset, scores,
                  evaluator: valuators.EvaluatorSpec | None = None):
    """Iteratively drop the top-valued points (5% steps to 50%), retraining
    the evaluator each step on what remains."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (train.n,):
        raise ShapeError(f"scores shape {scores.shape}, expected ({train.n},)")
    if evaluator is None:
        evaluator = valuators.EvaluatorSpec()
    desc = np.argsort(-scores, kind="stable")
    values, flags = [], []
    for frac in REMOVAL_GRID:
        drop = int(round(frac * train.n))
        kept = np.sort(desc[drop:])
        try:
            values.append(_retrain_metric(train.subset(kept), test, evaluator))
        except Exception as exc:
            values.append(np.nan)
            flags.append(f"fraction {frac:.2f}: {exc}")
    values = np.asarray(values)
    mean = float(np.nanmean(values))
    return CurveReport(REMOVAL_GRID.copy(), values, mean, flags)


def point_addition(train: Dataset, test: Dataset, scores,
                   evaluator: valuators.EvaluatorSpec | None = None):
    """Start from the 5% lowest-valued points and keep adding the next
    least-valued 5% until half the data is used."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (train.n,):
        raise ShapeError(f"scores shape {scores.shape}, expected ({train.n},)")
    if evaluator is None:
        evaluator = valuators.EvaluatorSpec()
    asc = np.argsort(scores, kind="stable")
    values, flags = [], []
    for frac in ADDITION_GRID:
        take = int(round(frac * train.n))
        subset = np.sort(asc[:take])
        try:
            values.append(_retrain_metric(train.subset(subset), test, evaluator))
        except Exception as exc:
            values.append(np.nan)
            flags.append(f"fraction {frac:.2f}: {exc}")
    values = np.asarray(values)
    mean = float(np.nanmean(values))
    return CurveReport(ADDITION_GRID.copy(), values, mean, flags)


def normalize_curve(report: CurveReport):
    """Scale values by the largest magnitude so regression curves from
    different datasets can be averaged."""
    scale = float(np.nanmax(np.abs(report.values)))
    if scale == 0.0:
        scale = 1.0
    vals = report.values / scale
    return CurveReport(report.fractions.copy(), vals, float(np.nanmean(vals)),
                       list(report.flags), normalized=True)


# ---------------------------------------------------------------------------
# Suite runner


@dataclass
class BenchmarkConfig:
    """Full grid of a benchmark run."""

    datasets: tuple = ("blobs",)
    methods: tuple = ("lossval", "knn_shapley", "random")
    noise_kinds: tuple = ("label",)
    rates: tuple = (0.05, 0.10, 0.15, 0.20)
    n_seeds: int = 15
    split: SplitSpec = field(default_factory=SplitSpec)
    epochs: int = 30
    lossval_lr_model: float = 0.01
    lossval_lr_weights: float = 0.01
    batch_size: int = 128
    mlp_hidden: tuple = (100, 100, 100, 100, 100)
    mlp_activation: str = "relu"
    sinkhorn_unroll: int = 200
    sinkhorn_tol: float = 1e-6
    blob_classes: int = 3
    blob_dim: int = 10
    blob_sep: float = 3.0
    evaluator_epochs: int = 30
    with_removal: bool = False
    with_addition: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        for kind in self.noise_kinds:
            if kind not in NOISE_KINDS:
                raise ConfigError(f"unknown noise kind {kind!r}")
        for rate in self.rates:
            if not (0.0 <= rate < 1.0):
                raise ConfigError(f"invalid rate {rate}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")


def _cell_seeds(dataset, kind, rate, seed):
    """Independent, reproducible streams for one cell. The data streams do
    not depend on the method, so methods are compared on identical data.
    Uses crc32 rather than hash() so workers and reruns agree."""
    key = [int(seed), zlib.crc32(dataset.encode()), NOISE_KINDS.index(kind),
           int(round(rate * 10000))]
    ss = np.random.SeedSequence(key)
    gen_s, split_s, noise_s, method_s = ss.spawn(4)
    return gen_s, split_s, noise_s, method_s


def _make_dataset(name, cfg: BenchmarkConfig, gen_seed):
    total = cfg.split.n_train + cfg.split.n_val + cfg.split.n_test
    if name == "blobs":
        return synth_blobs(total, dim=cfg.blob_dim, n_classes=cfg.blob_classes,
                           sep=cfg.blob_sep, seed=gen_seed)
    if name == "friedman1":
        return synth_friedman1(total, noise=1.0, seed=gen_seed)
    raise ConfigError(f"unknown dataset {name!r}")


def _lossval_scores(train, val, cfg: BenchmarkConfig, variant, epochs, seed):
    lv = core.LossValConfig(
        variant=variant, epochs=epochs, batch_size=cfg.batch_size,
        lr_model=cfg.lossval_lr_model, lr_weights=cfg.lossval_lr_weights,
        sinkhorn_unroll=cfg.sinkhorn_unroll, sinkhorn_tol=cfg.sinkhorn_tol,
        seed=seed,
    )
    mlp_cfg = core.MLPConfig(hidden=tuple(cfg.mlp_hidden),
                             activation=cfg.mlp_activation)
    result, _ = core.train_with_lossval(train, val, mlp_cfg, lv)
    return result


def compute_scores(method, train, val, cfg: BenchmarkConfig, seed):
    """Run one valuation method on a prepared train/val pair."""
    if method == "lossval":
        return _lossval_scores(train, val, cfg, "lossval", cfg.epochs, seed)
    if method == "lossval_5":
        return _lossval_scores(train, val, cfg, "lossval", 5, seed)
    if method in core.VARIANTS:
        return _lossval_scores(train, val, cfg, method, cfg.epochs, seed)
    if method == "knn_shapley":
        return valuators.knn_shapley(train, val, k=min(100, train.n))
    if method == "loo":
        spec = valuators.EvaluatorSpec(epochs=cfg.evaluator_epochs, seed=seed)
        return valuators.loo_valuation(train, val, spec)
    if method == "random":
        return valuators.random_valuation(train.n, seed=seed)
    raise ConfigError(f"unknown method {method!r}")


def _run_cell(args):
    cfg_dict, dataset, method, kind, rate, seed = args
    cfg = BenchmarkConfig(**cfg_dict)
    record = {
        "dataset": dataset, "method": method, "noise_kind": kind,
        "rate": rate, "seed": seed,
    }
    try:
        gen_s, split_s, noise_s, method_s = _cell_seeds(dataset, kind, rate, seed)
        full = _make_dataset(dataset, cfg, gen_s)
        split = SplitSpec(cfg.split.n_train, cfg.split.n_val, cfg.split.n_test,
                          seed=int(split_s.generate_state(1)[0] & 0x7FFFFFFF))
        train, val, test = split_standardize(full, split)
        noisy_train, corrupted = inject_noise(
            train, NoiseSpec(kind, rate, seed=int(noise_s.generate_state(1)[0] & 0x7FFFFFFF))
        )
        m_seed = int(method_s.generate_state(1)[0] & 0x7FFFFFFF)
        result = compute_scores(method, noisy_train, val, cfg, m_seed)
        det = detection_curve(result.scores, corrupted)
        record["f1"] = det.f1
        record["detection_curve_mean"] = det.curve_mean
        if cfg.with_removal or cfg.with_addition:
            evaluator = valuators.EvaluatorSpec(epochs=cfg.evaluator_epochs, seed=0)
            if cfg.with_removal:
                rem = point_removal(noisy_train, test, result.scores, evaluator)
                record["removal_mean"] = rem.mean
                record["removal_curve"] = [float(v) for v in rem.values]
            if cfg.with_addition:
                add = point_addition(noisy_train, test, result.scores, evaluator)
                record["addition_mean"] = add.mean
                record["addition_curve"] = [float(v) for v in add.values]
    except Exception as exc:  # isolate per-cell failures
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


@dataclass
class ExperimentReport:
    """Per-cell records plus mean/standard-error aggregates."""

    format_version: int
    config: dict
    cells: list
    aggregates: list

    def to_json(self):
        return json.dumps(
            {
                "format_version": self.format_version,
                "config": self.config,
                "cells": self.cells,
                "aggregates": self.aggregates,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        if raw.get("format_version") != REPORT_FORMAT_VERSION:
            raise ConfigError(f"unsupported report version {raw.get('format_version')}")
        return cls(raw["format_version"], raw["config"], raw["cells"],
                   raw["aggregates"])


def _aggregate(cells):
    """Group over seeds; mean and standard error per metric."""
    metrics = ("f1", "detection_curve_mean", "removal_mean", "addition_mean")
    groups = {}
    for cell in cells:
        if "error" in cell:
            continue
        key = (cell["dataset"], cell["method"], cell["noise_kind"], cell["rate"])
        groups.setdefault(key, []).append(cell)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        block = groups[key]
        row = {
            "dataset": key[0], "method": key[1], "noise_kind": key[2],
            "rate": key[3], "n_cells": len(block),
        }
        for metric in metrics:
            vals = np.asarray([c[metric] for c in block if metric in c])
            if vals.size == 0:
                continue
            row[f"{metric}_mean"] = float(vals.mean())
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            row[f"{metric}_se"] = sd / np.sqrt(vals.size)
        rows.append(row)
    return rows


def run_benchmark(cfg: BenchmarkConfig):
    """Execute the full grid and aggregate. Cells run independently and
    the report is deterministic for a given config."""
    cells_spec = [
        (asdict(cfg), dataset, method, kind, rate, seed)
        for dataset in cfg.datasets
        for method in cfg.methods
        for kind in cfg.noise_kinds
        for rate in cfg.rates
        for seed in range(cfg.n_seeds)
    ]
    # SplitSpec does not survive asdict round-trip as a dataclass
    for spec in cells_spec:
        spec[0]["split"] = SplitSpec(**spec[0]["split"]) if isinstance(spec[0]["split"], dict) else spec[0]["split"]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(_run_cell, cells_spec))
    else:
        results = [_run_cell(spec) for spec in cells_spec]
    order = {
        (s[1], s[2], s[3], s[4], s[5]): i for i, s in enumerate(cells_spec)
    }
    results.sort(key=lambda r: order[(r["dataset"], r["method"], r["noise_kind"],
                                      r["rate"], r["seed"])])
    cfg_dict = asdict(cfg)
    cfg_dict.pop("n_jobs")  # execution machinery; reports must not depend on it
    return ExperimentReport(
        format_version=REPORT_FORMAT_VERSION,
        config=cfg_dict,
        cells=results,
        aggregates=_aggregate(results),
    )
