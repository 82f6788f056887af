"""Entropy-regularized optimal transport between weighted point clouds.

The forward solver runs log-domain Sinkhorn scaling updates, so tiny
regularization strengths that would underflow the Gibbs kernel are safe.
The gradient path differentiates the transport cost through a fixed,
finite number of unrolled scaling updates with respect to the raw weight
parameters behind the source marginal (a = softmax(theta)), so it is the
exact gradient of the quantity actually computed and can be checked with
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError
from .nn import check_matrix


def cost_matrix(x_src, x_dst):
    """Pairwise squared Euclidean distances, (N, J)."""
    x_src = check_matrix(x_src, "x_src")
    x_dst = check_matrix(x_dst, "x_dst")
    if x_src.shape[1] != x_dst.shape[1]:
        raise ShapeError(
            f"feature dims differ: {x_src.shape[1]} vs {x_dst.shape[1]}"
        )
    diff = x_src[:, None, :] - x_dst[None, :, :]
    return np.einsum("njd,njd->nj", diff, diff)


def uniform_marginal(n):
    return np.full(n, 1.0 / n)


def softmax(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


def _logsumexp(z, axis):
    m = np.max(z, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True))).squeeze(axis)


@dataclass
class TransportPlan:
    """Sinkhorn coupling with duals and convergence diagnostics.

    `cost` is the bare transport effort <gamma, C>; the entropy term used
    to compute the plan is not included. `f`/`g` are the dual potentials;
    the classic scalings are u = exp(f/eps), v = exp(g/eps), which can
    overflow for small eps, hence the log-domain storage.
    """

    gamma: np.ndarray
    f: np.ndarray
    g: np.ndarray
    eps: float
    iterations: int
    marginal_err: float
    cost: float
    converged: bool
    marginal_err_log: np.ndarray

    @property
    def u(self):
        return np.exp(self.f / self.eps)

    @property
    def v(self):
        return np.exp(self.g / self.eps)


def _check_marginal(p, n, name):
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n,):
        raise ShapeError(f"{name} shape {p.shape}, expected ({n},)")
    if np.any(p <= 0.0) or not np.all(np.isfinite(p)):
        raise ShapeError(f"{name} must be strictly positive and finite")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ShapeError(f"{name} must sum to 1, got {p.sum()!r}")
    return p


def sinkhorn(a, b, C, eps, max_iters=5000, tol=1e-9):
    """Solve entropic OT; alternate scaling updates until the worst marginal
    violation drops below `tol` or `max_iters` is hit.

    Non-convergence is not an error: the plan is returned with
    `converged=False` and the final violation, and the per-iteration
    violations are logged in `marginal_err_log`.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2:
        raise ShapeError(f"cost matrix must be 2-D, got {C.shape}")
    n, m = C.shape
    a = _check_marginal(a, n, "source marginal")
    b = _check_marginal(b, m, "target marginal")
    if not (eps > 0.0):
        raise ShapeError(f"eps must be positive, got {eps}")
    la, lb = np.log(a), np.log(b)
    f = np.zeros(n)
    g = np.zeros(m)
    errs = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        f = eps * la - eps * _logsumexp((g[None, :] - C) / eps, axis=1)
        g = eps * lb - eps * _logsumexp((f[:, None] - C) / eps, axis=0)
        gamma = np.exp((f[:, None] + g[None, :] - C) / eps)
        if np.any(np.isnan(gamma)):
            raise NumericError(f"NaN in transport kernel at eps={eps}")
        err = max(
            float(np.max(np.abs(gamma.sum(axis=1) - a))),
            float(np.max(np.abs(gamma.sum(axis=0) - b))),
        )
        errs.append(err)
        if err <= tol:
            converged = True
            break
    cost = float(np.sum(gamma * C))
    return TransportPlan(
        gamma=gamma,
        f=f,
        g=g,
        eps=float(eps),
        iterations=it,
        marginal_err=errs[-1],
        cost=cost,
        converged=converged,
        marginal_err_log=np.asarray(errs),
    )


def _unrolled_forward(la, lb, C, eps, iters, a=None, b=None, tol=0.0):
    """Scaling updates from g=0, keeping the potentials history.

    Runs exactly `iters` updates when tol == 0; otherwise stops once the
    plan's worst marginal violation is at most `tol`.
    """
    g = np.zeros(lb.size)
    fs, gs = [], [g]
    for _ in range(iters):
        f = eps * la - eps * _logsumexp((g[None, :] - C) / eps, axis=1)
        g = eps * lb - eps * _logsumexp((f[:, None] - C) / eps, axis=0)
        fs.append(f)
        gs.append(g)
        if tol > 0.0:
            gamma = np.exp((f[:, None] + g[None, :] - C) / eps)
            err = max(
                float(np.max(np.abs(gamma.sum(axis=1) - a))),
                float(np.max(np.abs(gamma.sum(axis=0) - b))),
            )
            if err <= tol:
                break
    gamma = np.exp((fs[-1][:, None] + gs[-1][None, :] - C) / eps)
    if np.any(np.isnan(gamma)):
        raise NumericError(f"NaN in transport kernel at eps={eps}")
    return gamma, fs, gs


def ot_cost_fixed(theta, b, C, eps, iters):
    """Transport cost after exactly `iters` updates, a = softmax(theta).

    This is the forward evaluation the gradient path differentiates; tests
    take finite differences of this exact function.
    """
    theta = np.asarray(theta, dtype=np.float64)
    a = softmax(theta)
    gamma, _, _ = _unrolled_forward(np.log(a), np.log(b), C, eps, iters)
    return float(np.sum(gamma * C))


def ot_grad_weights(theta, b, C, eps, iters, tol=0.0):
    """Cost and its exact gradient with respect to theta.

    Reverse-mode through the unrolled scaling recursion and the softmax
    marginal map. With tol > 0 the forward recursion stops early at that
    marginal violation and the backward pass covers exactly the iterations
    performed, so the gradient always belongs to the computed cost.
    Returns (cost, grad_theta, plan_marginal_err).
    """
    theta = np.asarray(theta, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    n, m = C.shape
    if theta.shape != (n,):
        raise ShapeError(f"theta shape {theta.shape}, expected ({n},)")
    b = _check_marginal(b, m, "target marginal")
    if not (eps > 0.0):
        raise ShapeError(f"eps must be positive, got {eps}")
    a = softmax(theta)
    la, lb = np.log(a), np.log(b)
    gamma, fs, gs = _unrolled_forward(la, lb, C, eps, iters, a=a, b=b, tol=tol)
    iters = len(fs)
    cost = float(np.sum(gamma * C))
    err = max(
        float(np.max(np.abs(gamma.sum(axis=1) - a))),
        float(np.max(np.abs(gamma.sum(axis=0) - b))),
    )

    # cost = <gamma, C>, gamma = exp((f + g - C)/eps)
    gc = gamma * C
    df = gc.sum(axis=1) / eps
    dg = gc.sum(axis=0) / eps
    dla = np.zeros(n)
    for t in range(iters - 1, -1, -1):
        # reverse the g-update, which consumed fs[t]
        zc = (fs[t][:, None] - C) / eps
        ec = np.exp(zc - zc.max(axis=0, keepdims=True))
        col_softmax = ec / ec.sum(axis=0, keepdims=True)
        df = df - col_softmax @ dg
        # reverse the f-update, which consumed gs[t] and la
        zr = (gs[t][None, :] - C) / eps
        er = np.exp(zr - zr.max(axis=1, keepdims=True))
        row_softmax = er / er.sum(axis=1, keepdims=True)
        dla += eps * df
        dg = -(row_softmax.T @ df)
        df = np.zeros(n)
    # la = theta - logsumexp(theta)
    grad_theta = dla - a * dla.sum()
    return cost, grad_theta, err
