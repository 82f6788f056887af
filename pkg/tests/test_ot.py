import numpy as np
import pytest

from lossval import ot
from lossval.errors import ShapeError


def naive_cost_matrix(X, Y):
    C = np.zeros((len(X), len(Y)))
    for i in range(len(X)):
        for j in range(len(Y)):
            for d in range(X.shape[1]):
                C[i, j] += (X[i, d] - Y[j, d]) ** 2
    return C


def matched_1d_problem(rng, n, jitter=0.04):
    """1-D clouds that pair off sharply; the optimal plan is the sorted
    matching with a wide margin, so tiny-regularization runs converge."""
    base = np.cumsum(rng.uniform(0.25, 0.45, n))
    x = base + rng.uniform(-jitter, jitter, n)
    y = base + rng.uniform(-jitter, jitter, n)
    rng.shuffle(x)
    rng.shuffle(y)
    return x[:, None], y[:, None]


def sorted_matching_cost(x, y):
    return float(np.mean((np.sort(x.ravel()) - np.sort(y.ravel())) ** 2))


def test_cost_matrix_single_identical_point():
    p = np.array([[1.5, -2.0]])
    assert np.array_equal(ot.cost_matrix(p, p), np.array([[0.0]]))


def test_cost_matrix_3_4_5():
    C = ot.cost_matrix(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]]))
    assert C[0, 0] == 25.0


def test_cost_matrix_against_naive_loops():
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    assert np.max(np.abs(ot.cost_matrix(X, Y) - naive_cost_matrix(X, Y))) <= 1e-12


def test_cost_matrix_dimension_mismatch():
    with pytest.raises(ShapeError):
        ot.cost_matrix(np.zeros((2, 3)), np.zeros((2, 4)))


def test_sinkhorn_identical_points_zero_cost():
    X = np.tile([[0.7, -0.3]], (4, 1))
    C = ot.cost_matrix(X, X)
    a = ot.uniform_marginal(4)
    plan = ot.sinkhorn(a, a, C, eps=1e-3)
    assert plan.cost == 0.0
    assert plan.cost <= 1e-3 * np.log(16)


def test_sinkhorn_matches_sorted_matching_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(4, 9))
        x, y = matched_1d_problem(rng, n)
        C = ot.cost_matrix(x, y)
        a = ot.uniform_marginal(n)
        plan = ot.sinkhorn(a, a, C, eps=1e-3, max_iters=20000, tol=1e-10)
        exact = sorted_matching_cost(x, y)
        assert plan.converged
        assert plan.marginal_err <= 1e-9
        assert abs(plan.cost - exact) <= 0.02 * exact


def test_sinkhorn_marginals_on_random_rectangular_problems():
    rng = np.random.default_rng(3)
    for _ in range(5):
        X, Y = rng.normal(size=(8, 2)), rng.normal(size=(6, 2))
        C = ot.cost_matrix(X, Y)
        a = rng.uniform(0.5, 1.5, 8)
        a /= a.sum()
        plan = ot.sinkhorn(a, ot.uniform_marginal(6), C, eps=0.05 * C.mean(),
                           max_iters=20000, tol=1e-9)
        assert plan.converged
        assert np.max(np.abs(plan.gamma.sum(axis=1) - a)) <= 1e-9
        assert np.max(np.abs(plan.gamma.sum(axis=0) - 1.0 / 6)) <= 1e-9
        assert plan.cost >= 0.0


def test_sinkhorn_marginal_error_log_is_monotone():
    rng = np.random.default_rng(5)
    X, Y = rng.normal(size=(8, 2)), rng.normal(size=(6, 2))
    C = ot.cost_matrix(X, Y)
    a = rng.uniform(0.5, 1.5, 8)
    a /= a.sum()
    plan = ot.sinkhorn(a, ot.uniform_marginal(6), C, eps=0.05 * C.mean(),
                       max_iters=3000, tol=1e-12)
    log = plan.marginal_err_log
    assert np.all(log[1:] <= log[:-1] + 1e-12)


def test_sinkhorn_nonconvergence_flagged_not_raised():
    rng = np.random.default_rng(9)
    X, Y = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
    C = ot.cost_matrix(X, Y)
    plan = ot.sinkhorn(ot.uniform_marginal(6), ot.uniform_marginal(5), C,
                       eps=0.01 * C.mean(), max_iters=2, tol=1e-12)
    assert not plan.converged
    assert plan.iterations == 2
    assert plan.marginal_err > 1e-12


def test_sinkhorn_nan_kernel_names_eps():
    from lossval.errors import NumericError

    # a fully unreachable source point poisons the scaling update
    C = np.array([[np.inf, np.inf], [0.0, 0.0]])
    a = ot.uniform_marginal(2)
    with np.errstate(invalid="ignore"):
        with pytest.raises(NumericError, match="eps=0.5"):
            ot.sinkhorn(a, a, C, eps=0.5, max_iters=3)


def test_sinkhorn_input_validation():
    C = np.zeros((2, 2))
    with pytest.raises(ShapeError):
        ot.sinkhorn(np.array([0.5, 0.5]), np.array([0.5, 0.5]), C, eps=-1.0)
    with pytest.raises(ShapeError):
        ot.sinkhorn(np.array([0.7, 0.7]), np.array([0.5, 0.5]), C, eps=0.1)
    with pytest.raises(ShapeError):
        ot.sinkhorn(np.array([1.0, 0.0]), np.array([0.5, 0.5]), C, eps=0.1)


def test_scalings_recover_plan_at_moderate_eps():
    rng = np.random.default_rng(11)
    X, Y = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    C = ot.cost_matrix(X, Y)
    eps = 0.2 * C.mean()
    plan = ot.sinkhorn(ot.uniform_marginal(5), ot.uniform_marginal(4), C, eps)
    K = np.exp(-C / eps)
    rebuilt = plan.u[:, None] * K * plan.v[None, :]
    assert np.max(np.abs(rebuilt - plan.gamma)) <= 1e-12


def test_grad_zero_by_symmetry():
    # all sources identical: every row of C is the same, cost is constant in theta
    X = np.zeros((4, 2))
    Y = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    C = ot.cost_matrix(X, Y)
    cost, grad, _ = ot.ot_grad_weights(np.zeros(4), ot.uniform_marginal(3), C,
                                       eps=0.1, iters=50)
    assert cost == pytest.approx(1.0, rel=1e-9)
    assert np.max(np.abs(grad)) <= 1e-12


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(13)
    X, Y = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    C = ot.cost_matrix(X, Y)
    b = ot.uniform_marginal(4)
    eps = 0.05 * C.mean()
    theta = rng.normal(scale=0.5, size=5)
    iters = 60
    _, grad, _ = ot.ot_grad_weights(theta, b, C, eps, iters)
    h = 1e-5
    fd = np.zeros(5)
    for i in range(5):
        hi, lo = theta.copy(), theta.copy()
        hi[i] += h
        lo[i] -= h
        fd[i] = (ot.ot_cost_fixed(hi, b, C, eps, iters)
                 - ot.ot_cost_fixed(lo, b, C, eps, iters)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(grad)), 1e-8)
    assert np.max(np.abs(grad - fd) / denom) <= 1e-4


def test_grad_consistency_across_random_shapes():
    rng = np.random.default_rng(17)
    for _ in range(5):
        n, m = int(rng.integers(3, 7)), int(rng.integers(3, 6))
        X, Y = rng.normal(size=(n, 2)), rng.normal(size=(m, 2))
        C = ot.cost_matrix(X, Y)
        b = ot.uniform_marginal(m)
        eps = 0.08 * C.mean()
        theta = rng.normal(scale=0.3, size=n)
        _, grad, _ = ot.ot_grad_weights(theta, b, C, eps, 40)
        h = 1e-5
        fd = np.zeros(n)
        for i in range(n):
            hi, lo = theta.copy(), theta.copy()
            hi[i] += h
            lo[i] -= h
            fd[i] = (ot.ot_cost_fixed(hi, b, C, eps, 40)
                     - ot.ot_cost_fixed(lo, b, C, eps, 40)) / (2 * h)
        denom = np.maximum(np.maximum(np.abs(fd), np.abs(grad)), 1e-8)
        assert np.max(np.abs(grad - fd) / denom) <= 1e-4


def test_upweighting_far_source_increases_cost():
    rng = np.random.default_rng(19)
    X = rng.normal(size=(5, 2))
    X[0] += 12.0  # far from every validation point
    Y = rng.normal(size=(4, 2))
    C = ot.cost_matrix(X, Y)
    b = ot.uniform_marginal(4)
    eps = 0.05 * C.mean()
    theta = np.zeros(5)
    _, grad, _ = ot.ot_grad_weights(theta, b, C, eps, 80)
    assert grad[0] > 0.0
    h = 1e-4
    hi, lo = theta.copy(), theta.copy()
    hi[0] += h
    lo[0] -= h
    assert (ot.ot_cost_fixed(hi, b, C, eps, 80)
            > ot.ot_cost_fixed(lo, b, C, eps, 80))


def test_early_stop_gradient_belongs_to_computed_cost():
    rng = np.random.default_rng(23)
    X, Y = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    C = ot.cost_matrix(X, Y)
    b = ot.uniform_marginal(4)
    eps = 0.1 * C.mean()
    theta = rng.normal(scale=0.3, size=5)
    cost_stop, grad_stop, err = ot.ot_grad_weights(theta, b, C, eps, 500, tol=1e-7)
    assert err <= 1e-7
    # the full-unroll gradient agrees closely once both are converged
    cost_full, grad_full, _ = ot.ot_grad_weights(theta, b, C, eps, 500)
    assert cost_stop == pytest.approx(cost_full, rel=1e-6)
    assert np.allclose(grad_stop, grad_full, atol=1e-6)
