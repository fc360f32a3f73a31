import numpy as np
import pytest

from aksvd.compat import (
    Learnable,
    LearnableConfig,
    PcaProjection,
    PseudoInverse,
    RandomProjection,
    _c_gradient_analytic_rbf,
    _c_gradient_fd,
    _gram_values,
    _head_gradients,
    learn_compat,
    realize_compat,
    strategy_from_name,
)
from aksvd.errors import NumericalError
from aksvd.kernels import KernelSpec


def test_square_passthrough_all_strategies():
    A = np.eye(3)
    for strat in (PseudoInverse(), PcaProjection(), RandomProjection(seed=1),
                  Learnable()):
        C = realize_compat(strat, A)
        assert np.array_equal(C, np.eye(3))
    rng = np.random.default_rng(0)
    B = rng.standard_normal((4, 4))
    assert np.array_equal(realize_compat(PcaProjection(), B), np.eye(4))


def test_pca_projection_axis_aligned():
    A = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    C = realize_compat(PcaProjection(), A)
    assert C.shape == (3, 2)
    assert np.allclose(C, np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), atol=1e-12)


def test_pca_projection_optimality_vs_random():
    # a1 minimizes ||A - A C C'||_F over orthonormal C
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 9))
    C = realize_compat(PcaProjection(), A)
    best = np.linalg.norm(A - A @ C @ C.T)
    for t in range(20):
        Q, _ = np.linalg.qr(rng.standard_normal((9, 5)))
        assert best <= np.linalg.norm(A - A @ Q @ Q.T) + 1e-12


def test_pseudo_inverse_orthonormal_rows():
    rng = np.random.default_rng(2)
    Q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
    A = Q.T  # 3x7 with orthonormal rows
    C = realize_compat(PseudoInverse(), A)
    assert np.allclose(C, A.T, atol=1e-12)


def test_pseudo_inverse_matches_pinv_oracle():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 9))
    C = realize_compat(PseudoInverse(), A)
    # ((A A')^+ A)' equals pinv(A) for full-row-rank A
    assert np.allclose(C, np.linalg.pinv(A), atol=1e-8)
    assert np.allclose(A @ C, np.eye(4), atol=1e-8)


def test_pseudo_inverse_singular_suggests_a1():
    A = np.zeros((3, 5))
    A[0, 0] = 1.0  # A A' has rank 1 < 3
    with pytest.raises(NumericalError, match="a1"):
        realize_compat(PseudoInverse(), A)


def test_random_projection_deterministic():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((3, 8))
    C1 = realize_compat(RandomProjection(seed=99), A)
    C2 = realize_compat(RandomProjection(seed=99), A)
    assert np.array_equal(C1, C2)
    C3 = realize_compat(RandomProjection(seed=100), A)
    assert not np.array_equal(C1, C3)
    assert C1.shape == (8, 3)


def test_mirrored_construction_tall():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((8, 3))  # N > M
    C = realize_compat(PcaProjection(), A)
    assert C.shape == (8, 3)
    # columns are the top left singular vectors of A (right of A')
    u, _, _ = np.linalg.svd(A, full_matrices=False)
    for s in range(3):
        assert abs(C[:, s] @ u[:, s]) >= 1 - 1e-10


def test_strategy_from_name():
    assert isinstance(strategy_from_name("a0"), PseudoInverse)
    assert isinstance(strategy_from_name("a1"), PcaProjection)
    assert strategy_from_name("a2", seed=7) == RandomProjection(seed=7)
    assert isinstance(strategy_from_name("a3"), Learnable)
    with pytest.raises(ValueError):
        strategy_from_name("a4")


# ---------------------------------------------------------------------------
# learnable C
# ---------------------------------------------------------------------------

def test_learn_compat_zero_steps_keeps_a1():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((10, 4))
    y = rng.standard_normal(10)
    cfg = LearnableConfig(rank_r=2, steps=0, learning_rate=1e-2, seed=0)
    res = learn_compat(A, y, KernelSpec.rbf(3.0), cfg)
    assert np.array_equal(res.c, realize_compat(PcaProjection(), A))


def test_learn_compat_linear_regression_reaches_zero():
    # targets an exact linear function of the projected features: the
    # closed-form least-squares solution has zero loss, and gradient
    # descent on the head should approach it
    rng = np.random.default_rng(7)
    A = rng.standard_normal((12, 4))
    cfg = LearnableConfig(rank_r=2, steps=200, learning_rate=0.5,
                          seed=0, task="regression", outer_iters=1)
    C0 = realize_compat(PcaProjection(), A)
    spec = KernelSpec.linear()
    G0 = _gram_values(A, C0, spec)
    _, _, vt = np.linalg.svd(G0, full_matrices=False)
    F = G0 @ vt[:2].T
    y = F @ np.array([1.5, -2.0]) + 0.3
    # oracle: exact linear fit exists
    coef, *_ = np.linalg.lstsq(np.column_stack([F, np.ones(12)]), y, rcond=None)
    assert np.linalg.norm(np.column_stack([F, np.ones(12)]) @ coef - y) <= 1e-10
    res = learn_compat(A, y, spec, cfg)
    rmse = np.sqrt(res.losses[-1])
    assert rmse <= 1e-3


def test_learn_compat_loss_nonincreasing():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((10, 5))
    y = rng.standard_normal(10)
    cfg = LearnableConfig(rank_r=3, steps=10, learning_rate=1e-2,
                          seed=1, gradient="analytic_rbf", outer_iters=8)
    res = learn_compat(A, y, KernelSpec.rbf(3.0), cfg)
    diffs = np.diff(res.losses)
    assert np.all(diffs <= 1e-6)


def test_learn_compat_classification():
    rng = np.random.default_rng(9)
    A = np.vstack([rng.standard_normal((8, 3)) + 4.0,
                   rng.standard_normal((8, 3)) - 4.0])
    y = np.array([0] * 8 + [1] * 8)
    cfg = LearnableConfig(rank_r=2, steps=30, learning_rate=0.1, seed=0,
                          task="classification", gradient="analytic_rbf",
                          outer_iters=5)
    res = learn_compat(A, y, KernelSpec.rbf(8.0), cfg)
    G = _gram_values(A, res.c, KernelSpec.rbf(8.0))
    _, _, vt = np.linalg.svd(G, full_matrices=False)
    pred = res.head.predict(G @ vt[:2].T)
    assert np.mean(pred == y) >= 0.9


def test_fd_matches_analytic_rbf_gradient():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((5, 7))  # wide: x side projected
    y = rng.standard_normal(5)
    spec = KernelSpec.rbf(2.5)
    C = realize_compat(PcaProjection(), A) + 0.05 * rng.standard_normal((7, 5))
    Y = y.reshape(-1, 1)
    G = _gram_values(A, C, spec)
    _, _, vt = np.linalg.svd(G, full_matrices=False)
    V = vt[:2].T
    W = 0.1 * rng.standard_normal((2, 1))
    b = np.array([0.05])
    _, _, dG = _head_gradients(G, V, Y, W, b)
    g_ana = _c_gradient_analytic_rbf(A, C, spec, dG)
    g_fd = _c_gradient_fd(A, C, spec, V, Y, W, b, h=1e-5)
    rel = np.linalg.norm(g_fd - g_ana) / np.linalg.norm(g_ana)
    assert rel <= 1e-4


def test_fd_matches_analytic_rbf_gradient_tall():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((7, 4))  # tall: z side projected
    y = rng.standard_normal(7)
    spec = KernelSpec.rbf(2.0)
    C = realize_compat(PcaProjection(), A) + 0.05 * rng.standard_normal((7, 4))
    Y = y.reshape(-1, 1)
    G = _gram_values(A, C, spec)
    _, _, vt = np.linalg.svd(G, full_matrices=False)
    V = vt[:2].T
    W = 0.1 * rng.standard_normal((2, 1))
    b = np.array([-0.02])
    _, _, dG = _head_gradients(G, V, Y, W, b)
    g_ana = _c_gradient_analytic_rbf(A, C, spec, dG)
    g_fd = _c_gradient_fd(A, C, spec, V, Y, W, b, h=1e-5)
    rel = np.linalg.norm(g_fd - g_ana) / np.linalg.norm(g_ana)
    assert rel <= 1e-4


def test_learn_compat_deterministic():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((8, 4))
    y = rng.standard_normal(8)
    cfg = LearnableConfig(rank_r=2, steps=5, learning_rate=1e-2, seed=3,
                          gradient="analytic_rbf", outer_iters=3)
    r1 = learn_compat(A, y, KernelSpec.rbf(3.0), cfg)
    r2 = learn_compat(A, y, KernelSpec.rbf(3.0), cfg)
    assert np.array_equal(r1.c, r2.c)
    assert r1.losses == r2.losses


def test_learnable_config_validation():
    with pytest.raises(ValueError):
        LearnableConfig(task="ranking")
    with pytest.raises(ValueError):
        LearnableConfig(gradient="autodiff")
    with pytest.raises(ValueError):
        LearnableConfig(rank_r=0)
