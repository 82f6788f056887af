"""Reference valuation methods: Leave-One-Out, KNN-Shapley, random scores."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from . import core
from .data import Dataset
from .errors import ConfigError, ShapeError


@dataclass
class EvaluatorSpec:
    """The small model retrained inside LOO / curve experiments.

    logistic_regression and linear_regression are the zero-hidden-layer
    networks; `mlp` uses the task's default architecture.
    """

    model_kind: str = "auto"     # auto picks logistic/linear from the task
    epochs: int = 30
    lr: float = 0.05
    batch_size: int = 128
    seed: int = 0

    def resolve(self, task):
        kind = self.model_kind
        if kind == "auto":
            kind = "logistic_regression" if task == "classification" else "linear_regression"
        if kind == "logistic_regression" and task != "classification":
            raise ConfigError("logistic regression needs a classification task")
        if kind == "linear_regression" and task != "regression":
            raise ConfigError("linear regression needs a regression task")
        return kind


def fit_evaluator(train: Dataset, spec: EvaluatorSpec):
    kind = spec.resolve(train.task)
    if kind == "mlp":
        mlp_config = core.default_mlp_config(train.task)
    else:
        mlp_config = core.MLPConfig(hidden=(), activation="relu")
    return core.train_plain(train, mlp_config, spec.epochs, spec.lr,
                            spec.batch_size, spec.seed)


def _val_metric(state, val: Dataset):
    # validation accuracy / negative validation MSE
    if val.task == "classification":
        return core.accuracy(state.mlp, val)
    return core.neg_mse(state.mlp, val)


def loo_valuation(train: Dataset, val: Dataset, evaluator: EvaluatorSpec | None = None):
    """score_i = metric(all data) - metric(all but i); all fits share the seed."""
    if train.n < 2:
        raise ConfigError("leave-one-out needs at least 2 training points")
    if evaluator is None:
        evaluator = EvaluatorSpec()
    t_start = time.perf_counter()
    base = _val_metric(fit_evaluator(train, evaluator), val)
    scores = np.zeros(train.n)
    diagnostics = []
    keep = np.ones(train.n, dtype=bool)
    for i in range(train.n):
        keep[i] = False
        reduced = train.subset(np.flatnonzero(keep))
        keep[i] = True
        try:
            scores[i] = base - _val_metric(fit_evaluator(reduced, evaluator), val)
        except Exception as exc:  # degenerate reduced set
            scores[i] = 0.0
            diagnostics.append(f"instance {i}: {exc}")
    return core.ValuationResult(
        scores=scores,
        method="loo",
        config=asdict(evaluator),
        seed=evaluator.seed,
        wall_time=time.perf_counter() - t_start,
        diagnostics=diagnostics,
    )


def _knn_match_matrix(train: Dataset, val: Dataset, tau_factor=0.1):
    """match[i, j] = 1 if train point i counts as agreeing with val point j."""
    if train.task == "classification":
        return (train.y[:, None] == val.y[None, :]).astype(np.float64)
    tau = tau_factor * float(np.std(val.y))
    return (np.abs(train.y[:, None] - val.y[None, :]) <= tau).astype(np.float64)


def knn_shapley(train: Dataset, val: Dataset, k=100):
    """Closed-form Shapley values of the k-nearest-neighbor utility.

    For each validation point, train points are sorted by distance and the
    values follow the telescoping recursion

        s[N]   = match[N] / N
        s[pos] = s[pos+1] + (match[pos] - match[pos+1]) * min(k, pos) / (k * pos)

    over 1-based sorted positions; per-point values are summed over the
    validation set. Regression targets use the agreement indicator
    |y - y_val| <= 0.1 * std(val targets).
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if train.dim != val.dim:
        raise ShapeError(f"train dim {train.dim} != val dim {val.dim}")
    n = train.n
    if k > n:
        warnings.warn(f"k={k} larger than n={n}; clamped", stacklevel=2)
        k = n
    t_start = time.perf_counter()
    d2 = ((train.X[:, None, :] - val.X[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=0, kind="stable")            # (n, J) nearest first
    match = _knn_match_matrix(train, val)
    j_cols = np.arange(val.n)
    m_sorted = match[order, j_cols[None, :]]                  # (n, J)

    pos = np.arange(1, n, dtype=np.float64)                   # 1-based position of the nearer point
    coef = np.minimum(k, pos) / (k * pos)                     # (n-1,)
    delta = (m_sorted[:-1] - m_sorted[1:]) * coef[:, None]    # step from pos+1 to pos
    s_sorted = np.empty_like(m_sorted)
    s_sorted[-1] = m_sorted[-1] / n
    # suffix-accumulate the telescoping steps
    s_sorted[:-1] = s_sorted[-1] + np.cumsum(delta[::-1], axis=0)[::-1]

    scores = np.zeros(n)
    np.add.at(scores, order.ravel(), s_sorted.ravel())
    return core.ValuationResult(
        scores=scores,
        method="knn_shapley",
        config={"k": k},
        seed=0,
        wall_time=time.perf_counter() - t_start,
    )


def knn_utility(train: Dataset, val: Dataset, k=100):
    """Total utility of the full training set: for each validation point the
    fraction of its min(k, n) nearest train points that agree, summed."""
    k = min(k, train.n)
    d2 = ((train.X[:, None, :] - val.X[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=0, kind="stable")
    match = _knn_match_matrix(train, val)
    m_sorted = match[order, np.arange(val.n)[None, :]]
    return float(m_sorted[:k].sum() / k)


def random_valuation(n, seed=0):
    """I.i.d. uniform scores; the reference line for every benchmark."""
    if n < 1:
        raise ConfigError("need at least one instance")
    rng = np.random.default_rng(seed)
    return core.ValuationResult(
        scores=rng.uniform(size=n),
        method="random",
        config={},
        seed=seed,
        wall_time=0.0,
    )
