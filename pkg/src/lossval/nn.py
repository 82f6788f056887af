"""Minimal dense MLP engine: forward pass, exact reverse-mode gradients, Adam.

Everything runs on float64 numpy arrays. Inputs are (batch, features) row
matrices; a layer stores its weight as (out, in) and its bias as (out,).
The output head is either a row-wise softmax (classification) or the
identity (regression).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericError, ShapeError

ACTIVATIONS = ("relu", "tanh", "sigmoid")
OUTPUTS = ("softmax", "identity")


def check_matrix(x, name="x"):
    """Reject non-2D or non-finite user-facing input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{name} contains non-finite entries")
    return x


@dataclass
class MLPParams:
    """Layer weights/biases plus the activation and output-head choice."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    output: str = "softmax"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")
        if self.output not in OUTPUTS:
            raise ShapeError(f"unknown output head {self.output!r}")
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ShapeError("need at least one layer with matching biases")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {i}: weight {W.shape} vs bias {b.shape}")
            if i > 0 and W.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i} input dim {W.shape[1]} does not chain with "
                    f"previous output dim {self.weights[i - 1].shape[0]}"
                )

    @property
    def in_dim(self):
        return self.weights[0].shape[1]

    @property
    def out_dim(self):
        return self.weights[-1].shape[0]

    def flat(self):
        """Parameters as a flat list [W0, b0, W1, b1, ...]."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.append(W)
            out.append(b)
        return out

    @classmethod
    def from_flat(cls, arrays, activation, output):
        ws, bs = list(arrays[0::2]), list(arrays[1::2])
        return cls(ws, bs, activation, output)

    def copy(self):
        return MLPParams(
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            self.output,
        )


@dataclass
class ForwardTrace:
    """Per-layer caches needed by the backward pass."""

    inputs: list[np.ndarray]       # input to each layer (first entry is x)
    preacts: list[np.ndarray]      # z = x W^T + b for each layer
    output: np.ndarray             # head output


def init_mlp(in_dim, hidden, out_dim, activation="relu", output="softmax", rng=None):
    """Build an MLP with He-uniform (relu) or Xavier-uniform (tanh/sigmoid) init.

    `hidden` is a tuple of hidden-layer widths; empty means a plain
    linear/logistic model. `rng` is a numpy Generator or a seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    sizes = (in_dim,) + tuple(hidden) + (out_dim,)
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if activation == "relu":
            lim = np.sqrt(6.0 / fan_in)
        else:
            lim = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MLPParams(ws, bs, activation, output)


def softmax_rows(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


def _act_grad(z, h, kind):
    # h is the stored activation value for z, reused where cheaper
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - h * h
    return h * (1.0 - h)


def mlp_forward(params: MLPParams, x) -> tuple[np.ndarray, ForwardTrace]:
    """Run the network on a (batch, in_dim) matrix.

    Returns the head output and a trace for `mlp_backward`. With a softmax
    head every output row is a probability vector.
    """
    x = check_matrix(x)
    if x.shape[1] != params.in_dim:
        raise ShapeError(f"input has {x.shape[1]} features, network expects {params.in_dim}")
    inputs, preacts = [], []
    h = x
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ W.T + b
        preacts.append(z)
        if i < last:
            h = _act(z, params.activation)
        elif params.output == "softmax":
            h = softmax_rows(z)
        else:
            h = z
    return h, ForwardTrace(inputs, preacts, h)


def mlp_backward(params: MLPParams, trace: ForwardTrace, grad_output):
    """Reverse-mode gradients for the scalar whose output-gradient is given.

    Returns (grads, grad_input) where grads is a flat list matching
    `params.flat()` order.
    """
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != trace.output.shape:
        raise ShapeError(
            f"grad_output shape {grad_output.shape} != output shape {trace.output.shape}"
        )
    last = len(params.weights) - 1
    if params.output == "softmax":
        y = trace.output
        dz = (grad_output - (grad_output * y).sum(axis=1, keepdims=True)) * y
    else:
        dz = grad_output
    grads = []
    for i in range(last, -1, -1):
        W = params.weights[i]
        grads.append(dz.sum(axis=0))          # bias
        grads.append(dz.T @ trace.inputs[i])  # weight
        dh = dz @ W
        if i > 0:
            z_prev = trace.preacts[i - 1]
            h_prev = trace.inputs[i]
            dz = dh * _act_grad(z_prev, h_prev, params.activation)
    grads.reverse()
    return grads, dh


@dataclass
class AdamState:
    """Bias-corrected Adam moments for a flat parameter list.

    `lrs` holds one learning rate per parameter array, which is how the
    model group and the instance-weight group share a single optimizer.
    """

    m: list[np.ndarray]
    v: list[np.ndarray]
    lrs: list[float]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ShapeError("beta1, beta2 must lie in (0, 1)")
        if self.t < 0:
            raise ShapeError("step count must be >= 0")

    @classmethod
    def init(cls, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        """Zero moments matching `params`; `lr` is a scalar or one per array."""
        if np.isscalar(lr):
            lrs = [float(lr)] * len(params)
        else:
            lrs = [float(v) for v in lr]
            if len(lrs) != len(params):
                raise ShapeError("need one learning rate per parameter array")
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lrs=lrs,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(params, grads, state: AdamState):
    """One Adam update. Returns (new_params, new_state); inputs untouched."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params/grads/state length mismatch")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {i}")
        if g.shape != params[i].shape:
            raise ShapeError(f"gradient {i} shape {g.shape} != param shape {params[i].shape}")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_m, new_v, new_p = [], [], []
    for p, g, m, v, lr in zip(params, grads, state.m, state.v, state.lrs):
        m1 = b1 * m + (1.0 - b1) * g
        v1 = b2 * v + (1.0 - b2) * g * g
        mhat = m1 / (1.0 - b1**t)
        vhat = v1 / (1.0 - b2**t)
        new_m.append(m1)
        new_v.append(v1)
        new_p.append(p - lr * mhat / (np.sqrt(vhat) + state.eps))
    return new_p, replace(state, m=new_m, v=new_v, t=t)
