"""Instance-weighted target losses.

Both losses are plain sums over the batch (no averaging), so they are
linear in the weight vector and the gradient with respect to a weight is
exactly that instance's unweighted loss.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

LOG_FLOOR = 1e-12  # keeps log finite on confident-wrong predictions

LOSS_KINDS = ("cross_entropy", "mse")


def _check_weights(w, n):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ShapeError(f"weights shape {w.shape}, expected ({n},)")
    if not np.all(np.isfinite(w)):
        raise ShapeError("weights must be finite")
    return w


def weighted_cross_entropy(pred, targets, w):
    """-sum_n w_n sum_k y_{n,k} log(pred_{n,k}), log clamped at 1e-12.

    `pred` rows are probability vectors, `targets` is one-hot with the
    same shape.
    """
    pred = np.asarray(pred, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if pred.ndim != 2 or pred.shape != targets.shape:
        raise ShapeError(f"pred {pred.shape} vs targets {targets.shape}")
    w = _check_weights(w, pred.shape[0])
    logp = np.log(np.maximum(pred, LOG_FLOOR))
    return float(-(w * (targets * logp).sum(axis=1)).sum())


def weighted_mse(pred, targets, w):
    """sum_n w_n (y_n - pred_n)^2 over a batch of scalar targets."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if pred.shape != targets.shape:
        raise ShapeError(f"pred {pred.shape} vs targets {targets.shape}")
    w = _check_weights(w, pred.shape[0])
    return float((w * (targets - pred) ** 2).sum())


def per_instance_loss(kind, pred, targets):
    """The unweighted loss of each instance (also the weight gradient)."""
    if kind == "cross_entropy":
        pred = np.asarray(pred, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if pred.shape != targets.shape:
            raise ShapeError(f"pred {pred.shape} vs targets {targets.shape}")
        logp = np.log(np.maximum(pred, LOG_FLOOR))
        return -(targets * logp).sum(axis=1)
    if kind == "mse":
        pred = np.asarray(pred, dtype=np.float64).reshape(-1)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        if pred.shape != targets.shape:
            raise ShapeError(f"pred {pred.shape} vs targets {targets.shape}")
        return (targets - pred) ** 2
    raise ShapeError(f"unknown loss kind {kind!r}")


def loss_grads(kind, pred, targets, w):
    """Gradients of the weighted loss: (grad_pred, grad_w).

    grad_w[i] is the unweighted per-instance loss (independent of w);
    grad_pred is the usual loss gradient scaled by the weights. Entries of
    `pred` at or below the log floor get zero cross-entropy gradient,
    matching the clamped forward value.
    """
    if kind not in LOSS_KINDS:
        raise ShapeError(f"unknown loss kind {kind!r}")
    grad_w = per_instance_loss(kind, pred, targets)
    if kind == "cross_entropy":
        pred = np.asarray(pred, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        w = _check_weights(w, pred.shape[0])
        clamped = np.maximum(pred, LOG_FLOOR)
        grad_pred = -(w[:, None] * targets) / clamped
        grad_pred[pred < LOG_FLOOR] = 0.0
    else:
        pred_v = np.asarray(pred, dtype=np.float64).reshape(-1)
        targets_v = np.asarray(targets, dtype=np.float64).reshape(-1)
        w = _check_weights(w, pred_v.shape[0])
        grad_flat = -2.0 * w * (targets_v - pred_v)
        grad_pred = grad_flat.reshape(np.asarray(pred).shape)
    return grad_pred, grad_w
