"""Dense and sparse kernels shared by the solver, recycling and theory code.

Dense matrices and vectors are plain ``numpy`` arrays. Sparse operators use
:class:`SparseCsrMatrix`, a validated CSR triple that hands its matvec to
``scipy.sparse``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._kernels import householder_qr, jacobi_sweeps

__all__ = [
    "SparseCsrMatrix",
    "spmv",
    "qr_reduced",
    "svd_thin",
    "sym_eig_jacobi",
    "lstsq",
    "LSTSQ_RANK_RTOL",
]

# |R[i,i]| <= LSTSQ_RANK_RTOL * max|R[j,j]| is treated as a zero pivot
LSTSQ_RANK_RTOL = 1e-12
# singular values below this fraction of the largest are not divided by
SVD_TINY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class SparseCsrMatrix:
    """Compressed sparse row matrix.

    Column indices within each row must be strictly increasing.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _scipy: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        indices = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        data = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if indptr.shape != (self.n_rows + 1,):
            raise ValueError(f"row_offsets must have length n_rows+1={self.n_rows + 1}")
        if indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise ValueError("row_offsets must start at 0 and be nondecreasing")
        if not (indptr[-1] == len(indices) == len(data)):
            raise ValueError("row_offsets[-1], len(col_indices) and len(values) disagree")
        if len(indices):
            if indices.min() < 0 or indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing within rows: only row starts may break the order
            step = np.diff(indices)
            row_start = np.zeros(len(indices), dtype=bool)
            row_start[indptr[:-1][np.diff(indptr) > 0]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix values must be finite")
        for name, arr in (("row_offsets", indptr), ("col_indices", indices), ("values", data)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        mat = sp.csr_matrix((data, indices, indptr), shape=(self.n_rows, self.n_cols))
        object.__setattr__(self, "_scipy", mat)

    @classmethod
    def from_scipy(cls, mat) -> "SparseCsrMatrix":
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.shape[0], mat.shape[1], mat.indptr, mat.indices, mat.data)

    @classmethod
    def from_dense(cls, dense) -> "SparseCsrMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(dense, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> "SparseCsrMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_scipy(self) -> sp.csr_matrix:
        """Read-only view as a scipy CSR matrix (shares storage)."""
        return self._scipy

    def toarray(self) -> np.ndarray:
        return self._scipy.toarray()

    def matmat(self, B: np.ndarray) -> np.ndarray:
        B = np.asarray(B, dtype=float)
        if B.shape[0] != self.n_cols:
            raise ValueError(f"dimension mismatch: {self.shape} @ {B.shape}")
        return np.asarray(self._scipy @ B)

    def __matmul__(self, other):
        other = np.asarray(other, dtype=float)
        if other.ndim == 1:
            return spmv(self, other)
        return self.matmat(other)

    def diagonal(self) -> np.ndarray:
        return self._scipy.diagonal()

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))


def spmv(A: SparseCsrMatrix, v) -> np.ndarray:
    """Return ``A @ v``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != A.n_cols:
        raise ValueError(f"dimension mismatch: matrix has {A.n_cols} columns, vector has shape {v.shape}")
    return A.to_scipy() @ v


def qr_reduced(B) -> tuple[np.ndarray, np.ndarray]:
    """Reduced Householder QR of a tall matrix.

    Returns ``Q`` (n x m, orthonormal columns) and upper-triangular ``R``
    (m x m) with a nonnegative diagonal. Rank-deficient input is allowed;
    the corresponding diagonal entries of ``R`` are (numerically) zero and
    ``Q`` is still completed to an orthonormal set.
    """
    B = np.array(B, dtype=float, order="F", copy=True)
    if B.ndim != 2:
        raise ValueError("qr_reduced expects a 2-D array")
    n, m = B.shape
    if n < m:
        raise ValueError(f"qr_reduced needs n >= m, got {n} x {m}")
    Q = np.zeros((n, m), order="F")
    householder_qr(B, Q)
    R = np.triu(B[:m, :])
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def sym_eig_jacobi(G, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order with matching columns of
    the orthogonal eigenvector matrix.
    """
    A = np.array(G, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("sym_eig_jacobi expects a square matrix")
    A = 0.5 * (A + A.T)
    k = A.shape[0]
    V = np.eye(k)
    if k <= 1 or not np.any(A):
        return np.diag(A).copy(), V
    jacobi_sweeps(A, V, tol, max_sweeps)
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def svd_thin(B) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``B = U diag(S) V^T`` of a tall matrix with few columns.

    Works on the Gram matrix ``B^T B``, so the cost is O(n M^2). Left
    singular vectors belonging to negligible singular values are
    completed by orthonormalization instead of division.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("svd_thin expects a 2-D array")
    n, M = B.shape
    if n < M:
        raise ValueError(f"svd_thin needs n >= M, got {n} x {M}")
    if M == 0:
        return np.zeros((n, 0)), np.zeros(0), np.zeros((0, 0))
    w, V = sym_eig_jacobi(B.T @ B)
    S = np.sqrt(np.clip(w, 0.0, None))
    BV = B @ V
    # refine singular values from the columns of B V (more accurate than sqrt of eigenvalues)
    S = np.linalg.norm(BV, axis=0)
    order = np.argsort(-S, kind="stable")
    S, V, BV = S[order], V[:, order], BV[:, order]
    U = np.zeros((n, M))
    cutoff = SVD_TINY_RTOL * S[0]
    rng = np.random.default_rng(0)
    for j in range(M):
        if S[j] > cutoff and S[j] > 0:
            u = BV[:, j] / S[j]
        else:
            u = rng.standard_normal(n)
        # two passes of Gram-Schmidt against the previous columns
        for _ in range(2):
            u = u - U[:, :j] @ (U[:, :j].T @ u)
        U[:, j] = u / np.linalg.norm(u)
    return U, S, V


def _back_substitute(R: np.ndarray, y: np.ndarray) -> np.ndarray:
    m = R.shape[0]
    z = np.zeros(m)
    for i in range(m - 1, -1, -1):
        z[i] = (y[i] - R[i, i + 1:] @ z[i + 1:]) / R[i, i]
    return z


def lstsq(B, rhs) -> np.ndarray:
    """Least-squares minimizer of ``||B z - rhs||_2`` via Householder QR.

    Columns whose ``R`` pivot is negligible lie in the span of the columns
    before them; they are dropped and their components set to zero, so the
    returned vector is still a minimizer.
    """
    B = np.asarray(B, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if B.ndim != 2 or rhs.shape != (B.shape[0],):
        raise ValueError(f"dimension mismatch: {B.shape} vs rhs {rhs.shape}")
    n, m = B.shape
    if n < m:
        raise ValueError(f"lstsq needs n >= m, got {n} x {m}")
    keep = np.arange(m)
    z = np.zeros(m)
    while len(keep):
        Q, R = qr_reduced(B[:, keep])
        d = np.abs(np.diag(R))
        dead = d <= LSTSQ_RANK_RTOL * d.max() if d.max() > 0 else np.ones_like(d, dtype=bool)
        if not dead.any():
            z[keep] = _back_substitute(R, Q.T @ rhs)
            break
        keep = keep[~dead]
    return z
