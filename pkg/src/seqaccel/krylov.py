"""ILU(0) preconditioning and right-preconditioned GMRES."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .linalg import SparseCsrMatrix, spmv

log = logging.getLogger(__name__)

__all__ = ["ZeroPivotError", "Ilu0Factors", "ilu0_factor", "GmresConfig", "SolveStats", "gmres"]


class ZeroPivotError(ArithmeticError):
    """ILU(0) met a zero pivot; ``row`` is the offending row."""

    def __init__(self, row: int):
        super().__init__(f"zero pivot in ILU(0) at row {row}")
        self.row = row


@dataclass(frozen=True)
class Ilu0Factors:
    """Unit lower factor ``L`` (diagonal not stored) and upper factor ``U``."""

    L: SparseCsrMatrix
    U: SparseCsrMatrix

    @property
    def n(self) -> int:
        return self.U.n_rows

    def solve(self, v) -> np.ndarray:
        """Apply ``(LU)^{-1}`` to ``v``."""
        v = np.ascontiguousarray(v, dtype=float)
        L, U = self.L, self.U
        y = _kernels.lower_unit_solve(L.n_rows, L.row_offsets, L.col_indices, L.values, v)
        return _kernels.upper_solve(U.n_rows, U.row_offsets, U.col_indices, U.values, y)

    def product(self) -> np.ndarray:
        """Dense ``L U`` (testing aid)."""
        return (self.L.toarray() + np.eye(self.n)) @ self.U.toarray()


def ilu0_factor(A: SparseCsrMatrix) -> Ilu0Factors:
    """Incomplete LU factorization restricted to the sparsity pattern of ``A``.

    Raises :class:`ZeroPivotError` on a zero (or structurally missing)
    diagonal entry.
    """
    n = A.n_rows
    if A.n_cols != n:
        raise ValueError(f"ILU(0) needs a square matrix, got {A.shape}")
    indptr, indices = A.row_offsets, A.col_indices
    rows = np.repeat(np.arange(n), np.diff(indptr))
    diag_mask = indices == rows
    has_diag = np.zeros(n, dtype=bool)
    has_diag[rows[diag_mask]] = True
    if not has_diag.all():
        raise ZeroPivotError(int(np.flatnonzero(~has_diag)[0]))
    diag_pos = np.flatnonzero(diag_mask).astype(np.int64)
    data = A.values.copy()
    bad = _kernels.ilu0_inplace(n, indptr, indices, data, diag_pos)
    if bad >= 0:
        raise ZeroPivotError(int(bad))

    lower = indices < rows
    upper = ~lower
    L = SparseCsrMatrix(n, n, np.concatenate(([0], np.cumsum(np.bincount(rows[lower], minlength=n)))),
                        indices[lower], data[lower])
    U = SparseCsrMatrix(n, n, np.concatenate(([0], np.cumsum(np.bincount(rows[upper], minlength=n)))),
                        indices[upper], data[upper])
    return Ilu0Factors(L, U)


@dataclass(frozen=True)
class GmresConfig:
    tol: float = 1e-7
    max_iters: int = 500
    restart: Optional[int] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restart is not None and self.restart < 1:
            raise ValueError("restart must be >= 1 when given")


@dataclass
class SolveStats:
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    initial_residual: float = 0.0
    final_residual: float = 0.0


def _arnoldi_cycle(A, prec, r0, beta, target, max_steps):
    """One GMRES cycle from residual ``r0``. Returns (correction, steps, history, breakdown)."""
    n = len(r0)
    V = np.zeros((max_steps + 1, n))
    H = np.zeros((max_steps + 1, max_steps))
    cs = np.zeros(max_steps)
    sn = np.zeros(max_steps)
    g = np.zeros(max_steps + 1)
    g[0] = beta
    V[0] = r0 / beta
    history = []
    breakdown = False
    j = 0
    for j in range(max_steps):
        zj = prec.solve(V[j]) if prec is not None else V[j]
        w = spmv(A, zj)
        wnorm0 = np.linalg.norm(w)
        # modified Gram-Schmidt, then one reorthogonalization pass
        for _ in range(2):
            for i in range(j + 1):
                hij = V[i] @ w
                H[i, j] += hij
                w -= hij * V[i]
        hnext = np.linalg.norm(w)
        H[j + 1, j] = hnext
        for i in range(j):
            tmp = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = tmp
        denom = np.hypot(H[j, j], H[j + 1, j])
        if denom == 0.0:
            cs[j], sn[j] = 1.0, 0.0
        else:
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        history.append(abs(g[j + 1]))
        if hnext <= 1e-14 * max(wnorm0, 1e-300):
            breakdown = True
            break
        if abs(g[j + 1]) <= target:
            break
        V[j + 1] = w / hnext
    steps = j + 1
    y = np.zeros(steps)
    for i in range(steps - 1, -1, -1):
        if H[i, i] == 0.0:
            continue
        y[i] = (g[i] - H[i, i + 1:steps] @ y[i + 1:]) / H[i, i]
    u = V[:steps].T @ y
    correction = prec.solve(u) if prec is not None else u
    return correction, steps, history, breakdown


def gmres(A: SparseCsrMatrix, b, x0=None, prec: Optional[Ilu0Factors] = None,
          cfg: GmresConfig = GmresConfig()) -> tuple[np.ndarray, SolveStats]:
    """Solve ``A x = b`` with right-preconditioned GMRES.

    Converged means ``||b - A x||_2 <= cfg.tol * ||b||_2``; with right
    preconditioning this is the residual the Arnoldi process tracks. The
    solver works on the residual equation ``A d = b - A x0`` and returns
    ``x0 + d``. ``stats.iterations`` counts Arnoldi steps, so a guess that
    already meets the tolerance costs 0 iterations.
    """
    b = np.asarray(b, dtype=float)
    n = A.n_rows
    if A.n_cols != n or b.shape != (n,):
        raise ValueError(f"dimension mismatch: A {A.shape}, b {b.shape}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
    if prec is not None and prec.n != n:
        raise ValueError("preconditioner size does not match the matrix")

    bnorm = np.linalg.norm(b)
    target = cfg.tol * bnorm
    r = b - spmv(A, x)
    rnorm = np.linalg.norm(r)
    stats = SolveStats(iterations=0, residual_history=[rnorm], initial_residual=rnorm)
    best_x, best_res = x, rnorm
    while rnorm > target and stats.iterations < cfg.max_iters:
        budget = cfg.max_iters - stats.iterations
        steps = budget if cfg.restart is None else min(cfg.restart, budget)
        correction, used, history, breakdown = _arnoldi_cycle(A, prec, r, rnorm, target, steps)
        stats.iterations += used
        x = x + correction
        r = b - spmv(A, x)
        rnorm = np.linalg.norm(r)
        stats.residual_history.extend(history)
        if rnorm < best_res:
            best_x, best_res = x, rnorm
        if breakdown and rnorm > target:
            # lucky breakdown should be exact; anything left is rounding, retry from the new residual
            log.debug("GMRES breakdown left residual %.3e", rnorm)
    stats.converged = best_res <= target
    stats.final_residual = best_res
    if not stats.converged:
        log.warning("GMRES stopped after %d iterations with relative residual %.3e",
                    stats.iterations, best_res / bnorm if bnorm else best_res)
    return best_x, stats
