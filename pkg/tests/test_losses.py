import numpy as np
import pytest

from lossval import losses
from lossval.errors import ShapeError


def test_weight_one_reduces_to_plain_cross_entropy():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(10, 3))
    pred = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    targets = np.eye(3)[rng.integers(0, 3, 10)]
    plain = float(-(targets * np.log(pred)).sum())
    weighted = losses.weighted_cross_entropy(pred, targets, np.ones(10))
    assert abs(weighted - plain) <= 1e-12 * abs(plain)


def test_zero_weight_removes_instance():
    pred = np.array([[0.9, 0.1], [0.3, 0.7], [0.5, 0.5]])
    targets = np.eye(2)[[0, 1, 0]]
    w = np.array([1.0, 0.0, 2.0])
    with_zero = losses.weighted_cross_entropy(pred, targets, w)
    without = losses.weighted_cross_entropy(pred[[0, 2]], targets[[0, 2]], w[[0, 2]])
    assert with_zero == pytest.approx(without, abs=1e-15)


def test_cross_entropy_hand_evaluated_batch():
    pred = np.array([[0.8, 0.2], [0.4, 0.6]])
    targets = np.eye(2)[[0, 1]]
    value = losses.weighted_cross_entropy(pred, targets, np.array([2.0, 1.0]))
    assert value == pytest.approx(-(2 * np.log(0.8) + np.log(0.6)), rel=1e-14)


def test_log_clamp_keeps_confident_wrong_finite():
    pred = np.array([[1.0, 0.0]])
    targets = np.array([[0.0, 1.0]])
    value = losses.weighted_cross_entropy(pred, targets, np.ones(1))
    assert np.isfinite(value)
    assert value == pytest.approx(-np.log(1e-12))


def test_mse_perfect_predictions():
    y = np.array([1.0, -2.0, 0.5])
    assert losses.weighted_mse(y, y, np.ones(3)) == 0.0


def test_mse_weight_one_is_summed_squared_error():
    rng = np.random.default_rng(1)
    y, p = rng.normal(size=8), rng.normal(size=8)
    assert losses.weighted_mse(p, y, np.ones(8)) == pytest.approx(
        float(((y - p) ** 2).sum()), rel=1e-15
    )


def test_mse_hand_evaluated():
    value = losses.weighted_mse(np.array([0.0, 4.0]), np.array([1.0, 2.0]),
                                np.array([1.0, 3.0]))
    assert value == 13.0


def test_grad_w_is_per_instance_loss():
    rng = np.random.default_rng(2)
    y, p = rng.normal(size=6), rng.normal(size=6)
    _, grad_w = losses.loss_grads("mse", p, y, rng.uniform(0.5, 2.0, 6))
    assert np.allclose(grad_w, (y - p) ** 2, rtol=0, atol=0)

    pred = rng.dirichlet(np.ones(3), size=6)
    targets = np.eye(3)[rng.integers(0, 3, 6)]
    _, grad_w = losses.loss_grads("cross_entropy", pred, targets, np.ones(6))
    per = -(targets * np.log(pred)).sum(axis=1)
    assert np.allclose(grad_w, per, rtol=1e-15, atol=0)


def test_grad_w_does_not_depend_on_weights():
    rng = np.random.default_rng(3)
    y, p = rng.normal(size=5), rng.normal(size=5)
    w1 = rng.uniform(0.1, 2.0, 5)
    w2 = w1.copy()
    w2[3] += 1.7
    _, g1 = losses.loss_grads("mse", p, y, w1)
    _, g2 = losses.loss_grads("mse", p, y, w2)
    assert np.array_equal(g1, g2)


@pytest.mark.parametrize("kind", ["cross_entropy", "mse"])
def test_grad_pred_matches_finite_differences(kind):
    rng = np.random.default_rng(4)
    n = 5
    w = rng.uniform(0.5, 2.0, n)
    if kind == "cross_entropy":
        pred = rng.dirichlet(np.ones(3), size=n)
        targets = np.eye(3)[rng.integers(0, 3, n)]
        loss = lambda p: losses.weighted_cross_entropy(p, targets, w)
    else:
        pred = rng.normal(size=n)
        targets = rng.normal(size=n)
        loss = lambda p: losses.weighted_mse(p, targets, w)
    analytic, _ = losses.loss_grads(kind, pred, targets, w)
    h = 1e-6
    fd = np.zeros_like(np.asarray(pred, dtype=float))
    it = np.nditer(fd, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        hi, lo = pred.copy(), pred.copy()
        hi[ix] += h
        lo[ix] -= h
        fd[ix] = (loss(hi) - loss(lo)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic)), 1e-8)
    assert np.max(np.abs(analytic - fd) / denom) <= 1e-6


def test_linearity_in_weights_is_exact():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        pred = rng.dirichlet(np.ones(4), size=n)
        targets = np.eye(4)[rng.integers(0, 4, n)]
        w = rng.uniform(0.1, 3.0, n)
        assert losses.weighted_cross_entropy(pred, targets, 2 * w) == 2 * losses.weighted_cross_entropy(pred, targets, w)
        y, p = rng.normal(size=n), rng.normal(size=n)
        assert losses.weighted_mse(p, y, 2 * w) == 2 * losses.weighted_mse(p, y, w)


def test_size_mismatch_raises():
    with pytest.raises(ShapeError):
        losses.weighted_mse(np.zeros(3), np.zeros(4), np.ones(3))
    with pytest.raises(ShapeError):
        losses.weighted_cross_entropy(np.full((2, 2), 0.5), np.eye(2), np.ones(3))
    with pytest.raises(ShapeError):
        losses.loss_grads("huber", np.zeros(2), np.zeros(2), np.ones(2))
