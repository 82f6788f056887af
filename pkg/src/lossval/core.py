"""Joint training of model parameters and per-instance weights.

The objective couples an instance-weighted target loss with the transport
cost between the (weight-distributed) batch features and the validation
features. Raw weight parameters theta live behind a softmax map:

    w = B * softmax(theta_batch)      effective weights, mean exactly 1
    a = softmax(theta_batch)          source marginal of the transport plan

so weights stay positive, start at exactly 1 (theta = 0), and the final
scores are the effective weights over the full training set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import losses, nn, ot
from .data import Dataset
from .errors import ConfigError, NumericError, ShapeError

#: The objective variants: the full form, its no-square and additive
#: ablations, and the single-factor forms.
VARIANTS = (
    "lossval",          # L_w * OT^2
    "mult_no_square",   # L_w * OT
    "additive",         # L_w + OT
    "additive_square",  # L_w + OT^2
    "target_only",      # L_w
    "ot_only",          # OT
    "ot_square_only",   # OT^2
)


@dataclass
class MLPConfig:
    hidden: tuple = (100, 100, 100, 100, 100)
    activation: str = "relu"


def default_mlp_config(task):
    if task == "classification":
        return MLPConfig(hidden=(100,) * 5, activation="relu")
    return MLPConfig(hidden=(90,) * 3, activation="tanh")


@dataclass
class LossValConfig:
    """Training-run configuration. Epoch presets of interest are 5 and 30."""

    variant: str = "lossval"
    epochs: int = 30
    batch_size: int = 128
    lr_model: float = 0.01
    lr_weights: float = 0.01
    sinkhorn_eps: float | None = None      # None: 0.05 * mean(C), per batch
    sinkhorn_eps_scale: float = 0.05
    sinkhorn_unroll: int = 200
    sinkhorn_tol: float = 0.0              # 0 disables early stopping
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr_model <= 0.0 or self.lr_weights <= 0.0:
            raise ConfigError("learning rates must be positive")
        if self.sinkhorn_unroll < 1:
            raise ConfigError("sinkhorn_unroll must be >= 1")


@dataclass
class ModelState:
    """MLP parameters, optimizer state, and the raw weight parameters."""

    mlp: nn.MLPParams
    theta: np.ndarray
    adam: nn.AdamState | None = None


@dataclass
class ValuationResult:
    """Per-instance importance scores plus provenance."""

    scores: np.ndarray
    method: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    wall_time: float = 0.0        # informational; excluded from serialization
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(self.scores)):
            raise NumericError(f"non-finite scores from {self.method}")


def _softmax_and_weights(theta):
    """(a, w) with a = softmax(theta) and w = N*a.

    w is computed as exp * (N / sum) so that theta = 0 yields w = 1.0
    bit-exactly for every N.
    """
    theta = np.asarray(theta, dtype=np.float64)
    e = np.exp(theta - theta.max())
    s = e.sum()
    return e / s, e * (theta.size / s)


def effective_weights(theta):
    """w = N * softmax(theta); positive, mean 1, exactly 1 at theta = 0."""
    return _softmax_and_weights(theta)[1]


def _softmax_scale_backward(a, scale, grad_w):
    # back through w = scale * softmax(theta)
    return scale * a * (grad_w - float(a @ grad_w))


def _loss_kind(task):
    return "cross_entropy" if task == "classification" else "mse"


def _variant_factors(variant, target_loss, ot_cost):
    """Value of the variant plus d(value)/d(target_loss), d(value)/d(ot)."""
    L, T = target_loss, ot_cost
    if variant == "lossval":
        return L * T * T, T * T, 2.0 * L * T
    if variant == "mult_no_square":
        return L * T, T, L
    if variant == "additive":
        return L + T, 1.0, 1.0
    if variant == "additive_square":
        return L + T * T, 1.0, 2.0 * T
    if variant == "target_only":
        return L, 1.0, 0.0
    if variant == "ot_only":
        return T, 0.0, 1.0
    if variant == "ot_square_only":
        return T * T, 0.0, 2.0 * T
    raise ConfigError(f"unknown variant {variant!r}")


def _needs_ot(variant):
    return variant != "target_only"


def _batch_eps(C, eps, eps_scale):
    if eps is not None:
        return float(eps)
    return float(eps_scale * C.mean())


def _objective_parts(pred, targets, features, x_val, theta_batch, variant, task,
                     eps=None, eps_scale=0.05, unroll=200, want_grads=True):
    """Shared forward/backward for the variant objective on one batch.

    Returns (value, target_loss, ot_cost, grad_pred, grad_theta); the two
    gradients are None when want_grads is False.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    theta_batch = np.asarray(theta_batch, dtype=np.float64)
    B = theta_batch.size
    if B == 0:
        raise ShapeError("empty batch")
    kind = _loss_kind(task)
    a, w = _softmax_and_weights(theta_batch)

    if kind == "cross_entropy":
        target_loss = losses.weighted_cross_entropy(pred, targets, w)
    else:
        target_loss = losses.weighted_mse(pred, targets, w)

    grad_ot_theta = np.zeros(B)
    ot_cost = 0.0
    if _needs_ot(variant):
        C = ot.cost_matrix(features, x_val)
        eps_val = _batch_eps(C, eps, eps_scale)
        b = ot.uniform_marginal(x_val.shape[0])
        if want_grads:
            ot_cost, grad_ot_theta, _ = ot.ot_grad_weights(theta_batch, b, C, eps_val, unroll)
        else:
            ot_cost = ot.ot_cost_fixed(theta_batch, b, C, eps_val, unroll)

    value, d_loss, d_ot = _variant_factors(variant, target_loss, ot_cost)
    if not want_grads:
        return value, target_loss, ot_cost, None, None

    grad_pred_w, per_inst = losses.loss_grads(kind, pred, targets, w)
    grad_pred = d_loss * grad_pred_w
    grad_theta = _softmax_scale_backward(a, B, d_loss * per_inst) + d_ot * grad_ot_theta
    return value, target_loss, ot_cost, grad_pred, grad_theta


def lossval_objective(pred, targets, features, x_val, theta_batch, variant="lossval",
                      task="classification", eps=None, eps_scale=0.05, unroll=200):
    """Scalar value of the chosen variant on one batch."""
    value, _, _, _, _ = _objective_parts(
        pred, targets, features, x_val, theta_batch, variant, task,
        eps=eps, eps_scale=eps_scale, unroll=unroll, want_grads=False,
    )
    return value


def lossval_grad_weights(pred, targets, features, x_val, theta_batch, variant="lossval",
                         task="classification", eps=None, eps_scale=0.05, unroll=200):
    """Exact gradient of the variant value with respect to theta_batch."""
    _, _, _, _, grad_theta = _objective_parts(
        pred, targets, features, x_val, theta_batch, variant, task,
        eps=eps, eps_scale=eps_scale, unroll=unroll,
    )
    return grad_theta


def _ot_forward_backward_adaptive(theta_batch, features, x_val, eps, eps_scale,
                                  unroll, tol):
    """Training-loop transport pass; the gradient unrolls exactly the
    iterations the forward performed (early stop at `tol` when set)."""
    C = ot.cost_matrix(features, x_val)
    eps_val = _batch_eps(C, eps, eps_scale)
    b = ot.uniform_marginal(x_val.shape[0])
    return ot.ot_grad_weights(theta_batch, b, C, eps_val, unroll, tol=tol)


def train_with_lossval(train: Dataset, val: Dataset, mlp_config: MLPConfig | None,
                       config: LossValConfig, learn_weights=True):
    """Jointly fit the model and the instance weights; returns
    (ValuationResult, ModelState).

    One Adam instance covers both parameter groups with their own learning
    rates. Scores are the final effective weights. With
    learn_weights=False the weight vector is pinned at exactly 1 and theta
    is left out of the optimizer, which reproduces plain training
    bit-for-bit for the target-only variant.
    """
    if train.dim != val.dim:
        raise ShapeError(f"train dim {train.dim} != val dim {val.dim}")
    if train.task != val.task:
        raise ConfigError("train/val task mismatch")
    task = train.task
    if mlp_config is None:
        mlp_config = default_mlp_config(task)
    t_start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    out_dim = train.n_classes if task == "classification" else 1
    head = "softmax" if task == "classification" else "identity"
    mlp = nn.init_mlp(train.dim, mlp_config.hidden, out_dim,
                      mlp_config.activation, head, rng)
    N = train.n
    theta = np.zeros(N)
    targets_full = train.onehot() if task == "classification" else train.y

    params = mlp.flat()
    lrs = [config.lr_model] * len(params)
    if learn_weights:
        params = params + [theta]
        lrs = lrs + [config.lr_weights]
    state = nn.AdamState.init(params, lrs)

    n_layers = len(mlp.weights)
    for epoch in range(config.epochs):
        order = rng.permutation(N)
        for start in range(0, N, config.batch_size):
            idx = order[start : start + config.batch_size]
            B = idx.size
            xb = train.X[idx]
            tb = targets_full[idx]
            mlp = nn.MLPParams.from_flat(params[: 2 * n_layers],
                                         mlp_config.activation, head)
            pred, trace = nn.mlp_forward(mlp, xb)
            if task == "regression":
                pred_v = pred[:, 0]
            theta_b = params[-1][idx] if learn_weights else np.zeros(B)
            if learn_weights:
                a, w = _softmax_and_weights(theta_b)
            else:
                a, w = np.full(B, 1.0 / B), np.ones(B)

            kind = _loss_kind(task)
            if kind == "cross_entropy":
                target_loss = losses.weighted_cross_entropy(pred, tb, w)
            else:
                target_loss = losses.weighted_mse(pred_v, tb, w)

            ot_cost, grad_ot_theta = 0.0, np.zeros(B)
            if _needs_ot(config.variant):
                ot_cost, grad_ot_theta, _ = _ot_forward_backward_adaptive(
                    theta_b, xb, val.X, config.sinkhorn_eps,
                    config.sinkhorn_eps_scale, config.sinkhorn_unroll,
                    config.sinkhorn_tol,
                )
            value, d_loss, d_ot = _variant_factors(config.variant, target_loss, ot_cost)
            if not np.isfinite(value):
                raise NumericError(
                    f"non-finite loss {value} at epoch {epoch}, batch {start // config.batch_size}"
                )

            if kind == "cross_entropy":
                grad_pred_w, per_inst = losses.loss_grads(kind, pred, tb, w)
            else:
                grad_pred_flat, per_inst = losses.loss_grads(kind, pred_v, tb, w)
                grad_pred_w = grad_pred_flat.reshape(pred.shape)
            grads_model, _ = nn.mlp_backward(mlp, trace, d_loss * grad_pred_w)

            grads = grads_model
            if learn_weights:
                g_theta_b = _softmax_scale_backward(a, B, d_loss * per_inst)
                g_theta_b = g_theta_b + d_ot * grad_ot_theta
                g_theta = np.zeros(N)
                g_theta[idx] = g_theta_b
                grads = grads_model + [g_theta]
            params, state = nn.adam_step(params, grads, state)

    mlp = nn.MLPParams.from_flat(params[: 2 * n_layers], mlp_config.activation, head)
    theta_final = params[-1] if learn_weights else np.zeros(N)
    scores = effective_weights(theta_final)
    result = ValuationResult(
        scores=scores,
        method="lossval" if config.variant == "lossval" else f"lossval:{config.variant}",
        config=asdict(config),
        seed=config.seed,
        wall_time=time.perf_counter() - t_start,
    )
    return result, ModelState(mlp=mlp, theta=theta_final, adam=state)


def init_state(train: Dataset, mlp_config: MLPConfig | None, seed):
    """Freshly initialized, untrained model for the dataset's task."""
    task = train.task
    if mlp_config is None:
        mlp_config = default_mlp_config(task)
    rng = np.random.default_rng(seed)
    out_dim = train.n_classes if task == "classification" else 1
    head = "softmax" if task == "classification" else "identity"
    mlp = nn.init_mlp(train.dim, mlp_config.hidden, out_dim,
                      mlp_config.activation, head, rng)
    return ModelState(mlp=mlp, theta=np.zeros(train.n))


def train_plain(train: Dataset, mlp_config: MLPConfig | None, epochs, lr_model,
                batch_size, seed):
    """Standard (unweighted) training with the same engine and batching.

    epochs = 0 returns the seeded initialization untouched, a deterministic
    degenerate learner.
    """
    if epochs == 0:
        return init_state(train, mlp_config, seed)
    cfg = LossValConfig(
        variant="target_only", epochs=epochs, batch_size=batch_size,
        lr_model=lr_model, lr_weights=1.0, seed=seed,
    )
    dummy_val = train.subset(np.arange(min(train.n, 2)))
    _, state = train_with_lossval(train, dummy_val, mlp_config, cfg,
                                  learn_weights=False)
    return state


def predict(mlp: nn.MLPParams, X):
    out, _ = nn.mlp_forward(mlp, X)
    return out


def accuracy(mlp: nn.MLPParams, data: Dataset):
    pred = predict(mlp, data.X)
    return float(np.mean(pred.argmax(axis=1) == data.y))


def neg_mse(mlp: nn.MLPParams, data: Dataset):
    pred = predict(mlp, data.X)[:, 0]
    return float(-np.mean((pred - data.y) ** 2))


def r2_score(mlp: nn.MLPParams, data: Dataset):
    pred = predict(mlp, data.X)[:, 0]
    ss_res = float(np.sum((data.y - pred) ** 2))
    ss_tot = float(np.sum((data.y - data.y.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def test_metric(mlp: nn.MLPParams, data: Dataset):
    """Accuracy for classification, R^2 for regression."""
    if data.task == "classification":
        return accuracy(mlp, data)
    return r2_score(mlp, data)


def downstream_parity(train: Dataset, val: Dataset, test: Dataset,
                      mlp_config: MLPConfig | None = None, epochs=30,
                      lr_model=0.01, batch_size=128, seed=0,
                      lossval_config: LossValConfig | None = None):
    """Twin training runs (plain loss vs the full objective) with identical
    seeds and model configuration; returns (plain_metric, weighted_metric)
    on the held-out test split."""
    if lossval_config is None:
        lossval_config = LossValConfig(
            variant="lossval", epochs=epochs, batch_size=batch_size,
            lr_model=lr_model, seed=seed, sinkhorn_tol=1e-6,
        )
    plain_state = train_plain(train, mlp_config, lossval_config.epochs,
                              lossval_config.lr_model,
                              lossval_config.batch_size, lossval_config.seed)
    _, weighted_state = train_with_lossval(train, val, mlp_config, lossval_config)
    return test_metric(plain_state.mlp, test), test_metric(weighted_state.mlp, test)
