import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from seqaccel.krylov import GmresConfig, ZeroPivotError, gmres, ilu0_factor
from seqaccel.linalg import SparseCsrMatrix
from seqaccel.testcase import Grid2d, assemble


def laplacian_2d(k):
    T = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(k, k))
    return SparseCsrMatrix.from_scipy(sp.kronsum(T, T).tocsr())


def dense_ilu0(A):
    """Textbook IKJ ILU(0) on a dense copy, used as an oracle."""
    a = A.toarray().copy()
    pattern = a != 0
    n = a.shape[0]
    for i in range(1, n):
        for k in range(i):
            if not pattern[i, k]:
                continue
            a[i, k] /= a[k, k]
            for j in range(k + 1, n):
                if pattern[i, j]:
                    a[i, j] -= a[i, k] * a[k, j]
    return np.tril(a, -1), np.triu(a)


def random_system(n, seed, density=0.02):
    rng = np.random.default_rng(seed)
    R = sp.random(n, n, density=density, random_state=rng, format="csr")
    R.data = rng.standard_normal(R.nnz)
    rowsum = np.asarray(abs(R).sum(axis=1)).ravel()
    D = sp.diags(rowsum + 1.0 + rng.uniform(0, 1, n))
    return SparseCsrMatrix.from_scipy((R + D).tocsr()), rng.standard_normal(n)


# --- ILU(0) -------------------------------------------------------------------

def test_ilu0_diagonal():
    A = SparseCsrMatrix.from_dense(np.diag([2.0, 3.0, 4.0]))
    f = ilu0_factor(A)
    assert f.L.nnz == 0
    assert np.array_equal(f.U.toarray(), A.toarray())


def test_ilu0_lower_triangular():
    dense = np.array([[2.0, 0, 0], [1.0, 4.0, 0], [3.0, -1.0, 5.0]])
    f = ilu0_factor(SparseCsrMatrix.from_dense(dense))
    assert np.allclose(f.U.toarray(), np.diag(np.diag(dense)))
    assert np.allclose(f.L.toarray(), np.tril(dense, -1) @ np.diag(1 / np.diag(dense)))


def test_ilu0_tridiagonal_matches_dense_lu():
    dense = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(5, 5)).toarray()
    f = ilu0_factor(SparseCsrMatrix.from_dense(dense))
    P, L, U = sla.lu(dense)
    assert np.allclose(P, np.eye(5))
    assert np.allclose(f.L.toarray() + np.eye(5), L, atol=1e-14)
    assert np.allclose(f.U.toarray(), U, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_ilu0_matches_dense_oracle_and_pattern(seed):
    A, _ = random_system(60, seed, density=0.08)
    f = ilu0_factor(A)
    L_ref, U_ref = dense_ilu0(A)
    assert np.allclose(f.L.toarray(), L_ref, atol=1e-12)
    assert np.allclose(f.U.toarray(), U_ref, atol=1e-12)
    pattern = A.toarray() != 0
    LU = f.product()
    assert np.allclose(LU[pattern], A.toarray()[pattern], atol=1e-12)
    combined = (f.L.toarray() != 0) | (f.U.toarray() != 0)
    assert not np.any(combined & ~pattern)


def test_ilu0_zero_pivot_reports_row():
    dense = np.array([[1.0, 1.0, 0], [1.0, 1.0, 1.0], [0, 1.0, 1.0]])
    with pytest.raises(ZeroPivotError) as exc:
        ilu0_factor(SparseCsrMatrix.from_dense(dense))
    assert exc.value.row == 1


def test_ilu0_missing_diagonal():
    A = SparseCsrMatrix(2, 2, [0, 1, 2], [1, 0], [1.0, 1.0])
    with pytest.raises(ZeroPivotError):
        ilu0_factor(A)


def test_ilu0_solve_inverts_product():
    A, b = random_system(80, 3)
    f = ilu0_factor(A)
    assert np.allclose(f.product() @ f.solve(b), b, atol=1e-12)


# --- GMRES ----------------------------------------------------------------------

def test_gmres_exact_initial_guess():
    A, b = random_system(50, 0)
    x = np.linalg.solve(A.toarray(), b)
    x_out, stats = gmres(A, b, x0=x)
    assert stats.iterations == 0 and stats.converged
    assert np.array_equal(x_out, x)


def test_gmres_identity_one_iteration():
    b = np.random.default_rng(0).standard_normal(10)
    x, stats = gmres(SparseCsrMatrix.identity(10), b)
    assert stats.iterations == 1 and stats.converged
    assert np.allclose(x, b, atol=1e-14)


@pytest.mark.parametrize("use_prec", [False, True])
def test_gmres_laplacian_against_direct(use_prec):
    A = laplacian_2d(10)
    b = np.random.default_rng(1).standard_normal(100)
    cfg = GmresConfig(tol=1e-7)
    prec = ilu0_factor(A) if use_prec else None
    x, stats = gmres(A, b, prec=prec, cfg=cfg)
    x_ref = np.linalg.solve(A.toarray(), b)
    assert stats.converged
    assert np.linalg.norm(b - A @ x) <= 1.1 * cfg.tol * np.linalg.norm(b)
    assert np.linalg.norm(x - x_ref) <= 1e-4 * np.linalg.norm(x_ref)
    h = np.array(stats.residual_history)
    assert np.all(np.diff(h) <= 1e-12 * h[0])
    assert len(h) == stats.iterations + 1


def test_gmres_solves_residual_equation():
    A, b = random_system(120, 7)
    rng = np.random.default_rng(8)
    x0 = rng.standard_normal(120)
    prec = ilu0_factor(A)
    cfg = GmresConfig(tol=1e-10)
    x, _ = gmres(A, b, x0=x0, prec=prec, cfg=cfg)
    d, _ = gmres(A, b - A @ x0, prec=prec, cfg=GmresConfig(tol=1e-10 * np.linalg.norm(b) / np.linalg.norm(b - A @ x0)))
    assert np.allclose(x, x0 + d, atol=1e-8 * np.linalg.norm(x))


def test_gmres_preconditioner_reduces_iterations_on_test_matrix():
    A, b = assemble(Grid2d(20, 20), 2.3)
    _, plain = gmres(A, b, cfg=GmresConfig(tol=1e-7, max_iters=1000))
    _, pre = gmres(A, b, prec=ilu0_factor(A), cfg=GmresConfig(tol=1e-7, max_iters=1000))
    assert plain.converged and pre.converged
    assert pre.iterations < plain.iterations


def test_gmres_spd_matches_cg():
    A = laplacian_2d(12)
    b = np.random.default_rng(2).standard_normal(144)
    tol = 1e-8
    x, _ = gmres(A, b, cfg=GmresConfig(tol=tol))
    x_cg, info = spla.cg(A.to_scipy(), b, rtol=1e-12, maxiter=5000)
    assert info == 0
    # agreement measured in the residual norm the tolerance refers to
    assert np.linalg.norm(A @ (x - x_cg)) <= 10 * tol * np.linalg.norm(b)


def test_gmres_max_iters_returns_best():
    A = laplacian_2d(15)
    b = np.ones(225)
    x, stats = gmres(A, b, cfg=GmresConfig(tol=1e-12, max_iters=5))
    assert not stats.converged
    assert stats.iterations == 5
    assert stats.final_residual == pytest.approx(np.linalg.norm(b - A @ x))
    assert stats.final_residual < np.linalg.norm(b)


def test_gmres_restarted_converges():
    A, b = random_system(200, 11)
    x, stats = gmres(A, b, prec=ilu0_factor(A), cfg=GmresConfig(tol=1e-9, max_iters=400, restart=3))
    assert stats.converged
    assert np.linalg.norm(b - A @ x) <= 1e-9 * np.linalg.norm(b)


def test_gmres_zero_rhs():
    x, stats = gmres(SparseCsrMatrix.identity(4), np.zeros(4))
    assert stats.iterations == 0 and np.all(x == 0)


def test_gmres_config_validation():
    with pytest.raises(ValueError):
        GmresConfig(tol=0.0)
    with pytest.raises(ValueError):
        GmresConfig(max_iters=0)


def test_gmres_dimension_checks():
    with pytest.raises(ValueError):
        gmres(SparseCsrMatrix.identity(3), np.ones(4))
