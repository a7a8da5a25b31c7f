import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hxpcs import linalg
from hxpcs.errors import ContractError, NormalizationError, ShapeError


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for q in range(a.shape[1]):
                s += a[i, q] * b[q, j]
            out[i, j] = s
    return out


def sequential_matmul(a, b):
    # each entry summed over q in order, one rounding per multiply and add
    out = np.zeros((a.shape[0], b.shape[1]))
    for q in range(a.shape[1]):
        out += a[:, q:q + 1] * b[q:q + 1, :]
    return out


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def matrices(rows, cols):
    return arrays(np.float64, st.tuples(rows, cols), elements=finite)


def test_matmul_identity():
    assert np.array_equal(linalg.matmul([[1.0, 0.0], [0.0, 1.0]], [[5.0, 6.0], [7.0, 8.0]]),
                          [[5.0, 6.0], [7.0, 8.0]])


def test_matmul_one_by_one():
    assert linalg.matmul([[1.0, 2.0]], [[3.0], [4.0]]).tolist() == [[11.0]]


def test_matmul_against_triple_loop(rng):
    a = rng.normal(size=(8, 32))
    b = rng.normal(size=(32, 8))
    assert np.max(np.abs(linalg.matmul(a, b) - naive_matmul(a, b))) <= 1e-12


@given(st.integers(8, 32), st.integers(8, 32), st.integers(8, 32), st.integers(0, 2**32 - 1))
def test_matmul_oracle_random_sizes(n, p, m, seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=(n, p)), r.normal(size=(p, m))
    assert np.max(np.abs(linalg.matmul(a, b) - naive_matmul(a, b))) <= 1e-12


@pytest.mark.parametrize("shape", [(1, 700, 33), (9, 300, 1100), (37, 129, 5), (20, 257, 64)])
def test_matmul_bitwise_sequential_order(rng, shape):
    n, p, m = shape
    a, b = rng.normal(size=(n, p)), rng.normal(size=(p, m))
    assert np.array_equal(linalg.matmul(a, b), sequential_matmul(a, b))


def test_matmul_row_prefix_is_bitwise_stable(rng):
    a, b = rng.normal(size=(40, 300)), rng.normal(size=(300, 17))
    full = linalg.matmul(a, b)
    for n in (1, 7, 8, 9, 33):
        assert np.array_equal(linalg.matmul(a[:n], b), full[:n])
    assert np.array_equal(linalg.matmul(a, b[:, :5]), full[:, :5])


def test_matmul_independent_of_thread_count(rng):
    a, b = rng.normal(size=(50, 200)), rng.normal(size=(200, 30))
    ref = linalg.matmul(a, b)
    try:
        linalg.set_threads(1)
        assert np.array_equal(linalg.matmul(a, b), ref)
    finally:
        linalg.set_threads(0)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        linalg.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_as_matrix_rejects_nan():
    with pytest.raises(ContractError):
        linalg.matmul([[np.nan]], [[1.0]])


def test_as_matrix_rejects_1d():
    with pytest.raises(ShapeError):
        linalg.gram(np.ones(3))


def test_gram_single_row():
    assert linalg.gram([[3.0, 4.0]]).tolist() == [[25.0]]


def test_gram_orthogonal_rows():
    assert np.array_equal(linalg.gram(np.eye(2)), np.eye(2))


def test_gram_matches_matmul(rng):
    x = rng.normal(size=(8, 32))
    g = linalg.gram(x)
    assert np.max(np.abs(g - linalg.matmul(x, x.T))) <= 1e-14
    assert np.array_equal(g, linalg.matmul(x, np.ascontiguousarray(x.T)))


@given(matrices(st.integers(1, 12), st.integers(1, 40)))
def test_gram_exactly_symmetric_and_psd(x):
    g = linalg.gram(x)
    assert np.array_equal(g, g.T)
    lam = np.linalg.eigvalsh(g)
    assert lam.min() >= -1e-10 * max(lam.max(), 1.0) - 1e-9


def test_row_normalize_simple():
    xn, norms = linalg.row_normalize([[3.0, 4.0]])
    assert np.allclose(xn, [[0.6, 0.8]], rtol=0, atol=1e-16)
    assert norms.tolist() == [5.0]


def test_row_normalize_unit_rows_unchanged():
    x = np.eye(3)
    xn, norms = linalg.row_normalize(x)
    assert np.array_equal(xn, x)
    assert np.array_equal(norms, np.ones(3))


def test_row_normalize_unit_norms(rng):
    xn, _ = linalg.row_normalize(rng.normal(size=(8, 32)))
    assert np.max(np.abs(np.linalg.norm(xn, axis=1) - 1.0)) <= 1e-14


def test_row_normalize_zero_row_names_index():
    x = np.ones((4, 5))
    x[2] = 0.0
    with pytest.raises(NormalizationError) as info:
        linalg.row_normalize(x)
    assert info.value.index == 2


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_sym_eig_diagonal(method):
    lam, v = linalg.sym_eig(np.diag([4.0, 1.0]), method=method)
    assert np.allclose(lam, [4.0, 1.0], atol=1e-14)
    assert np.allclose(np.abs(v), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_sym_eig_two_by_two(method):
    lam, _ = linalg.sym_eig([[2.0, 1.0], [1.0, 2.0]], method=method)
    assert np.allclose(lam, [3.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_sym_eig_residual(rng, method):
    a = rng.normal(size=(16, 16))
    s = a + a.T
    lam, v = linalg.sym_eig(s, method=method)
    assert np.all(np.diff(lam) <= 0)
    scale = np.max(np.abs(lam))
    for i in range(16):
        assert np.linalg.norm(s @ v[:, i] - lam[i] * v[:, i]) <= 1e-8 * scale
    assert np.max(np.abs(v.T @ v - np.eye(16))) <= 1e-10


@given(st.integers(2, 24), st.integers(0, 2**32 - 1))
def test_sym_eig_matches_lapack(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    s = a @ a.T
    lam, _ = linalg.sym_eig(s)
    ref = np.linalg.eigvalsh(s)[::-1]
    assert np.allclose(lam, ref, rtol=0, atol=1e-10 * ref[0])


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(ContractError):
        linalg.sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_sym_eig_rejects_unknown_method():
    with pytest.raises(ContractError):
        linalg.sym_eig(np.eye(2), method="qr")


def test_sym_eig_rejects_rectangular():
    with pytest.raises(ShapeError):
        linalg.sym_eig(np.ones((2, 3)))


def test_gram_svd_rank_one(rng):
    u, w = rng.normal(size=5), rng.normal(size=40)
    svd = linalg.gram_svd(np.outer(u, w))
    assert svd.rank == 1
    assert svd.singular_values[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(w), rel=1e-12)


def test_gram_svd_identity_block():
    x = np.hstack([np.eye(4), np.zeros((4, 4))])
    assert np.allclose(linalg.gram_svd(x).singular_values, 1.0, atol=1e-14)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_gram_svd_random(rng, method):
    x = rng.normal(size=(16, 64))
    svd = linalg.gram_svd(x, method=method)
    assert svd.rank == 16
    v = svd.right_vectors
    assert np.max(np.abs(v.T @ v - np.eye(16))) <= 1e-10
    assert np.linalg.norm(x - svd.reconstruct()) <= 1e-10 * np.linalg.norm(x)
    assert np.allclose(svd.singular_values, np.linalg.svd(x, compute_uv=False), rtol=1e-12)


@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_gram_svd_properties(n, seed):
    x = np.random.default_rng(seed).normal(size=(n, 3 * n))
    svd = linalg.gram_svd(x)
    s = svd.singular_values
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert svd.rank <= n
    v = svd.right_vectors
    assert np.max(np.abs(v.T @ v - np.eye(svd.rank))) <= 1e-10
    lam, _ = linalg.sym_eig(linalg.gram(x))
    assert np.allclose(s, np.sqrt(lam[: svd.rank]), rtol=1e-8)
    assert np.linalg.norm(x - svd.reconstruct()) <= 1e-10 * np.linalg.norm(x)


def test_gram_svd_sign_convention(rng):
    v = linalg.gram_svd(rng.normal(size=(6, 30))).right_vectors
    idx = np.argmax(np.abs(v), axis=0)
    assert np.all(v[idx, np.arange(v.shape[1])] > 0)


def test_gram_svd_drops_rounding_noise(rng):
    basis = rng.normal(size=(3, 50))
    x = rng.normal(size=(20, 3)) @ basis
    assert linalg.gram_svd(x).rank == 3


def test_gram_svd_rel_tol_bounds():
    for tol in (0.0, 1.0, -1e-3):
        with pytest.raises(ContractError):
            linalg.gram_svd(np.eye(2), rel_tol=tol)


def test_gram_svd_all_zero():
    with pytest.raises(ContractError):
        linalg.gram_svd(np.zeros((3, 4)))


def test_set_threads_rejects_negative():
    with pytest.raises(ContractError):
        linalg.set_threads(-1)
