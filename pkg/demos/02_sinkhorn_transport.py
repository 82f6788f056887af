"""Entropic optimal transport between weighted point clouds.

Shows the log-domain solver on a tiny 1-D problem where the exact answer
is the sorted matching, then differentiates the transport cost with
respect to the raw weight parameters and confirms the sign structure: a
source point far from the validation cloud gets a positive gradient
(up-weighting it raises the cost).
"""

import numpy as np

from lossval import cost_matrix, sinkhorn
from lossval.ot import ot_grad_weights, uniform_marginal

rng = np.random.default_rng(0)

# 1-D clouds that pair off: the optimal plan is the sorted matching, and at
# eps far below the pair gaps the entropic blur is negligible
base = np.cumsum(rng.uniform(0.3, 0.5, 6))
x = np.sort(base + rng.uniform(-0.05, 0.05, 6))
y = np.sort(base + rng.uniform(-0.05, 0.05, 6))
C = cost_matrix(x[:, None], y[:, None])
plan = sinkhorn(uniform_marginal(6), uniform_marginal(6), C,
                eps=1e-3, max_iters=5000, tol=1e-9)
exact = np.mean((x - y) ** 2)
print(f"sinkhorn cost {plan.cost:.6f} vs sorted matching {exact:.6f} "
      f"({plan.iterations} iterations, marginal error {plan.marginal_err:.1e})")

# weight gradients: push mass away from an outlier source point
src = rng.normal(size=(5, 2))
src[0] += 8.0
dst = rng.normal(size=(4, 2))
C = cost_matrix(src, dst)
theta = np.zeros(5)
cost, grad, _ = ot_grad_weights(theta, uniform_marginal(4), C,
                                eps=0.05 * C.mean(), iters=100)
print(f"\ntransport cost with uniform weights: {cost:.3f}")
print("gradient w.r.t. raw weight parameters:", np.round(grad, 3))
print("the outlier source (index 0) has the only positive entry: "
      "gradient descent down-weights it")
