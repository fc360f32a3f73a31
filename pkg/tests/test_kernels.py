import numpy as np
import pytest

from aksvd.errors import NumericalError
from aksvd.kernels import (
    GramMatrix,
    KernelOperator,
    KernelSpec,
    auto_gamma,
    center,
    gram,
    kernel_vector,
)


def brute_kernel(spec, x, z, Z_all=None):
    """Independent per-pair oracle, plain Python floats."""
    if spec.family == "linear":
        return float(np.dot(x, z))
    if spec.family == "poly":
        return float((np.dot(x, z) + spec.offset) ** spec.degree)
    d2 = float(np.sum((x - z) ** 2))
    if spec.family == "rbf":
        return float(np.exp(-d2 / spec.gamma ** 2))
    den = sum(np.exp(-float(np.sum((x - zp) ** 2)) / spec.gamma ** 2) for zp in Z_all)
    return float(np.exp(-d2 / spec.gamma ** 2) / den)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("rbf")
    with pytest.raises(ValueError):
        KernelSpec("sne", gamma=-1.0)
    with pytest.raises(ValueError):
        KernelSpec("poly", degree=0)
    with pytest.raises(ValueError):
        KernelSpec("cosine")


def test_gram_linear_identity_scaled():
    G = gram(KernelSpec.linear(), np.eye(2), np.eye(2), scaled=True)
    assert np.allclose(G.values, 0.5 * np.eye(2))
    assert G.scaled and not G.centered


def test_gram_sne_two_points():
    # direct evaluation of the softmax-normalized similarity
    G = gram(KernelSpec.sne(1.0), np.array([[0.0]]), np.array([[0.0], [1.0]]), scaled=False)
    e1 = np.exp(-1.0)
    expected = np.array([[1.0 / (1.0 + e1), e1 / (1.0 + e1)]])
    assert np.allclose(G.values, expected, atol=1e-15)
    assert np.allclose(G.values, [[0.7310585786300049, 0.2689414213699951]])


def test_gram_rbf_asymmetric_index_sets():
    X = np.array([[0.0], [3.0]])
    Z = np.array([[3.0], [0.0]])
    G = gram(KernelSpec.rbf(1.0), X, Z, scaled=False)
    e9 = np.exp(-9.0)
    assert np.allclose(G.values, [[e9, 1.0], [1.0, e9]])
    # entry (0, 0) pairs x_0 with z_0 = x_1, not with x_0: no unit diagonal
    assert G.values[0, 0] != 1.0


def test_gram_matches_brute_oracle():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((6, 3))
    Z = rng.standard_normal((5, 3))
    for spec in (KernelSpec.linear(), KernelSpec.rbf(1.3),
                 KernelSpec.poly(2, 1.0), KernelSpec.sne(2.0)):
        G = gram(spec, X, Z, scaled=False)
        for i in range(6):
            for j in range(5):
                want = brute_kernel(spec, X[i], Z[j], Z)
                assert G.values[i, j] == pytest.approx(want, rel=1e-12)


def test_gram_dimension_mismatch():
    with pytest.raises(ValueError):
        gram(KernelSpec.linear(), np.ones((2, 3)), np.ones((2, 4)))


def test_gram_nonfinite_rejected():
    X = np.array([[np.nan, 0.0]])
    with pytest.raises(ValueError):
        gram(KernelSpec.linear(), X, np.ones((1, 2)))


def test_sne_underflow_reports_bandwidth():
    X = np.array([[0.0], [1000.0]])
    Z = np.array([[500.0]])
    with pytest.raises(NumericalError, match="bandwidth"):
        gram(KernelSpec.sne(1e-3), X, Z)


def test_sne_rows_stochastic():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 4))
    Z = rng.standard_normal((25, 4))
    G = gram(KernelSpec.sne(1.5), X, Z, scaled=False)
    assert np.all(np.abs(G.values.sum(axis=1) - 1.0) <= 1e-12)


def test_symmetry_only_when_sets_equal():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((6, 2))
    Z = rng.standard_normal((6, 2))
    for spec in (KernelSpec.linear(), KernelSpec.rbf(1.0), KernelSpec.poly()):
        # one set + symmetric family: the Gram matrix is symmetric
        same = gram(spec, X, X, scaled=False).values
        assert np.allclose(same, same.T)
        # two different sets: no matrix symmetry even with a symmetric kernel
        cross = gram(spec, X, Z, scaled=False).values
        assert not np.allclose(cross, cross.T)
    # sne is asymmetric by construction, even on one set
    sne = gram(KernelSpec.sne(1.0), X, X, scaled=False).values
    assert not np.allclose(sne, sne.T)
    # and swapping the sne argument sets does not transpose the matrix
    ab = gram(KernelSpec.sne(1.0), X, Z, scaled=False).values
    ba = gram(KernelSpec.sne(1.0), Z, X, scaled=False).values
    assert not np.allclose(ab, ba.T)


def test_lazy_dense_agreement_exact():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((60, 7))
    Z = rng.standard_normal((45, 7))
    for spec in (KernelSpec.linear(), KernelSpec.rbf(2.0), KernelSpec.sne(2.0)):
        dense = gram(spec, X, Z, scaled=True).values
        op = KernelOperator(X, Z, spec, scaled=True)
        for _ in range(1000):
            i = int(rng.integers(60))
            j = int(rng.integers(45))
            assert op.entry(i, j) == dense[i, j]


def test_lazy_block_agreement_exact():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((30, 5))
    Z = rng.standard_normal((20, 5))
    spec = KernelSpec.rbf(1.0)
    dense = gram(spec, X, Z).values
    op = KernelOperator(X, Z, spec)
    rows = rng.choice(30, 9, replace=False)
    cols = rng.choice(20, 6, replace=False)
    assert np.array_equal(op.block(rows, cols), dense[np.ix_(rows, cols)])


def test_eval_count():
    op = KernelOperator(np.ones((4, 2)), np.ones((5, 2)), KernelSpec.linear())
    op.block([0, 1], [0, 1, 2])
    op.entry(3, 4)
    assert op.eval_count == 7


def test_center_all_ones():
    G = GramMatrix(np.ones((3, 4)), scaled=False)
    C = center(G)
    assert np.allclose(C.values, 0.0, atol=1e-15)
    assert C.centered and C.grand_mean == 1.0


def test_center_diag_hand_value():
    # hand oracle: (I - J/2) diag(1,1) (I - J/2) = [[.5, -.5], [-.5, .5]]
    H = np.eye(2) - np.full((2, 2), 0.5)
    want = H @ np.diag([1.0, 1.0]) @ H
    C = center(GramMatrix(np.diag([1.0, 1.0]), scaled=False))
    assert np.allclose(C.values, want, atol=1e-15)
    assert np.allclose(C.values, [[0.5, -0.5], [-0.5, 0.5]])


def test_center_annihilates_row_and_col_sums():
    rng = np.random.default_rng(5)
    V = rng.standard_normal((7, 9))
    C = center(GramMatrix(V, scaled=False))
    assert np.all(np.abs(C.values.sum(axis=1)) <= 1e-12)
    assert np.all(np.abs(C.values.sum(axis=0)) <= 1e-12)


def test_center_idempotent():
    rng = np.random.default_rng(6)
    G = GramMatrix(rng.standard_normal((5, 6)), scaled=False)
    once = center(G)
    twice = center(once)
    assert np.all(np.abs(twice.values - once.values) <= 1e-12)
    assert twice.grand_mean == once.grand_mean


def test_kernel_vector_matches_gram_row():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((6, 3))
    Z = rng.standard_normal((8, 3))
    spec = KernelSpec.sne(1.7)
    G = gram(spec, X, Z, scaled=False)
    for i in range(6):
        k = kernel_vector(spec, X[i], Z)
        assert np.array_equal(k, G.values[i])


def test_kernel_vector_centered_constant_gram():
    # all-equal data makes a constant linear Gram; centering kills it
    X = np.ones((4, 2))
    Z = np.ones((3, 2))
    spec = KernelSpec.linear()
    C = center(gram(spec, X, Z, scaled=False))
    k = kernel_vector(spec, np.ones(2), Z, centering=C)
    assert np.allclose(k, 0.0, atol=1e-14)


def test_kernel_vector_centered_scaled_stats():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((5, 2))
    Z = rng.standard_normal((7, 2))
    spec = KernelSpec.rbf(1.0)
    C_scaled = center(gram(spec, X, Z, scaled=True))
    raw = kernel_vector(spec, X[2], Z)
    want = raw - raw.mean() - center(gram(spec, X, Z, scaled=False)).row_means \
        + center(gram(spec, X, Z, scaled=False)).grand_mean
    got = kernel_vector(spec, X[2], Z, centering=C_scaled)
    assert np.allclose(got, want, atol=1e-12)


def test_kernel_vector_sne_sums_to_one():
    rng = np.random.default_rng(10)
    Z = rng.standard_normal((12, 3))
    for _ in range(25):
        x = rng.standard_normal(3) * 3.0
        k = kernel_vector(KernelSpec.sne(2.0), x, Z)
        assert abs(k.sum() - 1.0) <= 1e-12


def test_sne_out_of_sample_denominator_uses_training_z():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((4, 2))
    Z = rng.standard_normal((5, 2))
    op = KernelOperator(X, Z, KernelSpec.sne(1.0), scaled=False)
    z_new = rng.standard_normal(2)
    got = op.z_col(z_new)
    g2 = 1.0
    for i in range(4):
        num = np.exp(-np.sum((X[i] - z_new) ** 2) / g2)
        den = sum(np.exp(-np.sum((X[i] - zp) ** 2) / g2) for zp in Z)  # training set only
        assert got[i] == pytest.approx(num / den, rel=1e-12)


def test_auto_gamma_heuristic():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((20, 6))
    assert auto_gamma(X) == pytest.approx(np.sqrt(6 * X.var()))
    assert auto_gamma(X, k=0.5) == pytest.approx(0.5 * np.sqrt(6 * X.var()))
