import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from seqaccel.linalg import SparseCsrMatrix, lstsq, qr_reduced, spmv, svd_thin, sym_eig_jacobi


def random_sparse(n, m, density, seed):
    rng = np.random.default_rng(seed)
    return sp.random(n, m, density=density, random_state=rng, format="csr")


# --- SparseCsrMatrix / spmv -------------------------------------------------

def test_spmv_identity():
    assert np.array_equal(spmv(SparseCsrMatrix.identity(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_spmv_zero_matrix():
    Z = SparseCsrMatrix(4, 3, np.zeros(5), [], [])
    assert np.array_equal(spmv(Z, [1.0, -2.0, 5.0]), np.zeros(4))


def test_spmv_small_example():
    A = SparseCsrMatrix(2, 2, [0, 1, 3], [0, 0, 1], [2.0, 1.0, 3.0])
    dense = np.array([[2.0, 0.0], [1.0, 3.0]])
    assert np.array_equal(A.toarray(), dense)
    assert np.array_equal(spmv(A, [1.0, 1.0]), dense @ [1.0, 1.0])
    assert np.array_equal(spmv(A, [1.0, 1.0]), [2.0, 4.0])


def test_spmv_dimension_mismatch():
    with pytest.raises(ValueError):
        spmv(SparseCsrMatrix.identity(3), np.ones(4))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 50), m=st.integers(1, 50), density=st.floats(0.0, 1.0), seed=st.integers(0, 2**31))
def test_spmv_matches_dense(n, m, density, seed):
    mat = random_sparse(n, m, density, seed)
    A = SparseCsrMatrix.from_scipy(mat)
    v = np.random.default_rng(seed + 1).standard_normal(m)
    ref = mat.toarray() @ v
    scale = np.abs(mat.toarray()) @ np.abs(v)
    assert np.all(np.abs(spmv(A, v) - ref) <= 1e-13 * np.maximum(scale, 1e-300))


@pytest.mark.parametrize("kwargs, match", [
    (dict(n_rows=2, n_cols=2, row_offsets=[0, 1], col_indices=[0], values=[1.0]), "length"),
    (dict(n_rows=1, n_cols=2, row_offsets=[1, 1], col_indices=[], values=[]), "start at 0"),
    (dict(n_rows=1, n_cols=2, row_offsets=[0, 2], col_indices=[1, 0], values=[1.0, 1.0]), "increasing"),
    (dict(n_rows=1, n_cols=2, row_offsets=[0, 2], col_indices=[1, 1], values=[1.0, 1.0]), "increasing"),
    (dict(n_rows=1, n_cols=2, row_offsets=[0, 1], col_indices=[2], values=[1.0]), "range"),
    (dict(n_rows=1, n_cols=2, row_offsets=[0, 1], col_indices=[0], values=[np.nan]), "finite"),
    (dict(n_rows=1, n_cols=2, row_offsets=[0, 2], col_indices=[0], values=[1.0]), "disagree"),
])
def test_csr_invariants_rejected(kwargs, match):
    with pytest.raises(ValueError, match=match):
        SparseCsrMatrix(**kwargs)


def test_csr_allows_decreasing_index_across_rows():
    A = SparseCsrMatrix(2, 3, [0, 1, 3], [2, 0, 1], [1.0, 2.0, 3.0])
    assert np.array_equal(A.toarray(), [[0, 0, 1], [2, 3, 0]])


def test_csr_is_immutable():
    A = SparseCsrMatrix.identity(2)
    with pytest.raises(ValueError):
        A.values[0] = 5.0


# --- QR ----------------------------------------------------------------------

def test_qr_of_orthonormal_input():
    B, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((12, 4)))
    Q, R = qr_reduced(B)
    signs = np.sign(np.sum(Q * B, axis=0))
    assert np.allclose(Q * signs, B, atol=1e-13)
    assert np.allclose(np.abs(R), np.eye(4), atol=1e-13)


def test_qr_analytic_column():
    Q, R = qr_reduced([[3.0], [4.0]])
    assert np.allclose(Q, [[0.6], [0.8]], atol=1e-15)
    assert np.allclose(R, [[5.0]], atol=1e-14)


def test_qr_random_residuals():
    B = np.random.default_rng(1).standard_normal((50, 8))
    Q, R = qr_reduced(B)
    assert np.linalg.norm(B - Q @ R) <= 1e-12 * np.linalg.norm(B)
    assert np.linalg.norm(Q.T @ Q - np.eye(8)) <= 1e-10
    assert np.allclose(R, np.triu(R))
    assert np.all(np.diag(R) >= 0)


def test_qr_rank_deficient():
    rng = np.random.default_rng(2)
    u = rng.standard_normal(20)
    B = np.outer(u, [1.0, -2.0, 0.5])
    Q, R = qr_reduced(B)
    assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-12
    assert np.linalg.norm(Q @ R - B) <= 1e-12 * np.linalg.norm(B)
    assert abs(R[1, 1]) < 1e-12 * R[0, 0] and abs(R[2, 2]) < 1e-12 * R[0, 0]


def test_qr_zero_matrix():
    Q, R = qr_reduced(np.zeros((6, 3)))
    assert np.allclose(Q.T @ Q, np.eye(3))
    assert np.all(R == 0)


def test_qr_rejects_wide():
    with pytest.raises(ValueError):
        qr_reduced(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 60), m=st.integers(1, 12), logcond=st.floats(0, 8), seed=st.integers(0, 2**31))
def test_qr_orthonormal_across_conditioning(n, m, logcond, seed):
    m = min(n, m)
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, m)))
    V, _ = np.linalg.qr(rng.standard_normal((m, m)))
    B = U @ np.diag(np.logspace(0, -logcond, m)) @ V.T
    Q, R = qr_reduced(B)
    assert np.linalg.norm(Q.T @ Q - np.eye(m)) <= 1e-10
    assert np.linalg.norm(B - Q @ R) <= 1e-12 * np.linalg.norm(B)


# --- Jacobi eigensolver / SVD -------------------------------------------------

def test_jacobi_matches_lapack():
    G = np.random.default_rng(3).standard_normal((7, 7))
    G = G + G.T
    w, V = sym_eig_jacobi(G)
    ref = np.sort(np.linalg.eigvalsh(G))[::-1]
    assert np.allclose(w, ref, atol=1e-12)
    assert np.allclose(V @ np.diag(w) @ V.T, G, atol=1e-12)
    assert np.allclose(V.T @ V, np.eye(7), atol=1e-13)


def test_svd_diagonal_embedded():
    B = np.zeros((4, 2))
    B[0, 0], B[1, 1] = 1.0, 3.0
    _, S, _ = svd_thin(B)
    assert np.allclose(S, [3.0, 1.0], atol=1e-14)


def test_svd_rank_one():
    rng = np.random.default_rng(4)
    u, v = rng.standard_normal(9), rng.standard_normal(3)
    U, S, V = svd_thin(np.outer(u, v))
    assert np.isclose(S[0], np.linalg.norm(u) * np.linalg.norm(v), rtol=1e-13)
    assert np.all(S[1:] <= 1e-12 * S[0])
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-12)


def test_svd_random_against_gram_eigendecomposition():
    B = np.random.default_rng(5).standard_normal((30, 6))
    U, S, V = svd_thin(B)
    lam = np.sort(np.linalg.eigh(B.T @ B)[0])[::-1]  # LAPACK oracle on the 6x6 Gram matrix
    assert np.allclose(S ** 2, lam, rtol=1e-10)
    assert np.all(np.diff(S) <= 0) and np.all(S >= 0)
    assert np.linalg.norm(B - U @ np.diag(S) @ V.T) <= 1e-10 * np.linalg.norm(B)
    assert np.allclose(U.T @ U, np.eye(6), atol=1e-12)
    assert np.allclose(V.T @ V, np.eye(6), atol=1e-12)


def test_svd_fills_basis_for_zero_columns():
    B = np.zeros((5, 3))
    B[:, 0] = 1.0
    U, S, V = svd_thin(B)
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-12)
    assert np.allclose(B, U @ np.diag(S) @ V.T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), M=st.integers(1, 10), seed=st.integers(0, 2**31))
def test_svd_energy(n, M, seed):
    M = min(n, M)
    B = np.random.default_rng(seed).standard_normal((n, M))
    _, S, _ = svd_thin(B)
    assert np.isclose(np.sum(S ** 2), np.linalg.norm(B) ** 2, rtol=1e-10)


# --- least squares ------------------------------------------------------------

def test_lstsq_orthonormal():
    B, _ = np.linalg.qr(np.random.default_rng(6).standard_normal((15, 4)))
    rhs = np.random.default_rng(7).standard_normal(15)
    assert np.allclose(lstsq(B, rhs), B.T @ rhs, atol=1e-13)


def test_lstsq_square():
    rng = np.random.default_rng(8)
    B = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    rhs = rng.standard_normal(6)
    z = lstsq(B, rhs)
    assert np.linalg.norm(B @ z - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_lstsq_normal_equations():
    rng = np.random.default_rng(9)
    B = rng.standard_normal((40, 5))
    rhs = rng.standard_normal(40)
    z = lstsq(B, rhs)
    z_ne = np.linalg.solve(B.T @ B, B.T @ rhs)
    assert np.linalg.norm(B @ z - rhs) == pytest.approx(np.linalg.norm(B @ z_ne - rhs), rel=1e-8)
    assert np.allclose(z, z_ne, rtol=1e-8)


def test_lstsq_rank_deficient_zeroes_dependent_columns():
    rng = np.random.default_rng(10)
    B = rng.standard_normal((20, 3))
    B = np.column_stack([B[:, 0], B[:, 1], B[:, 0] + B[:, 1], B[:, 2]])
    rhs = rng.standard_normal(20)
    z = lstsq(B, rhs)
    assert z[2] == 0.0
    best = np.linalg.lstsq(B, rhs, rcond=None)[0]
    assert np.linalg.norm(B @ z - rhs) == pytest.approx(np.linalg.norm(B @ best - rhs), rel=1e-10)


def test_lstsq_local_optimality_probe():
    rng = np.random.default_rng(11)
    B = rng.standard_normal((30, 4))
    rhs = rng.standard_normal(30)
    z = lstsq(B, rhs)
    res = np.linalg.norm(B @ z - rhs)
    for _ in range(100):
        delta = rng.standard_normal(4) * 10.0 ** rng.uniform(-6, 0)
        assert res <= np.linalg.norm(B @ (z + delta) - rhs)
