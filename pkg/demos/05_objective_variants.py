"""Why multiply the two loss factors instead of adding them.

Evaluates every objective variant on one batch, checks the compositional
identities, and shows the gradient coupling that multiplication buys: with
addition, the weight gradient of instance i ignores every other weight;
with multiplication the total target loss (which depends on all weights)
scales the transport term.
"""

import numpy as np

from lossval import VARIANTS, lossval_grad_weights, lossval_objective, synth_blobs

rng = np.random.default_rng(0)
train = synth_blobs(8, dim=4, n_classes=2, sep=2.0, seed=0)
x_val = rng.normal(size=(5, 4))
logits = rng.normal(size=(8, 2))
pred = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
targets = np.eye(2)[train.y]
theta = rng.normal(scale=0.3, size=8)

values = {}
for variant in VARIANTS:
    values[variant] = lossval_objective(pred, targets, train.X, x_val, theta,
                                        variant=variant, unroll=60)
    print(f"{variant:<16} {values[variant]:>12.5f}")

print("\ncompositional identities:")
print(f"  full == target * transport^2: "
      f"{np.isclose(values['lossval'], values['target_only'] * values['ot_only'] ** 2)}")
print(f"  additive == target + transport: "
      f"{np.isclose(values['additive'], values['target_only'] + values['ot_only'])}")

grad = lambda variant, th: lossval_grad_weights(
    pred, targets, train.X, x_val, th, variant=variant, unroll=60)

theta_bumped = theta.copy()
theta_bumped[5] += 1.0  # change another instance's weight parameter
g_mult = grad("mult_no_square", theta)[0], grad("mult_no_square", theta_bumped)[0]
print("\nmultiplicative gradient of instance 0 before/after bumping instance 5:")
print(f"  {g_mult[0]:+.6f} -> {g_mult[1]:+.6f}  (the other weights leak in "
      "through the total loss)")
