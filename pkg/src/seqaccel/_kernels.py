"""Compiled inner loops (numba). Callers validate inputs; nothing here raises."""
import numpy as np
from numba import njit


@njit(cache=True)
def jacobi_sweeps(A, V, tol, max_sweeps):
    k = A.shape[0]
    scale = 0.0
    for i in range(k):
        for j in range(k):
            scale += A[i, j] * A[i, j]
    scale = np.sqrt(scale)
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(k):
            for j in range(k):
                if i != j:
                    off += A[i, j] * A[i, j]
        if np.sqrt(off) <= tol * scale:
            break
        rotated = False
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                rotated = True
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta != 0.0:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                else:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for i in range(k):
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[i, q] = s * aip + c * aiq
                for i in range(k):
                    api = A[p, i]
                    aqi = A[q, i]
                    A[p, i] = c * api - s * aqi
                    A[q, i] = s * api + c * aqi
                for i in range(k):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
        if not rotated:
            break


@njit(cache=True)
def ilu0_inplace(n, indptr, indices, data, diag_pos):
    """IKJ ILU(0) on a copy of the CSR values. Returns -1 or the failing row."""
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        start = indptr[i]
        end = indptr[i + 1]
        for p in range(start, end):
            marker[indices[p]] = p
        for p in range(start, end):
            k = indices[p]
            if k >= i:
                break
            pivot = data[diag_pos[k]]
            if pivot == 0.0:
                for pp in range(start, end):
                    marker[indices[pp]] = -1
                return k
            lik = data[p] / pivot
            data[p] = lik
            for pk in range(diag_pos[k] + 1, indptr[k + 1]):
                pos = marker[indices[pk]]
                if pos >= 0:
                    data[pos] -= lik * data[pk]
        for p in range(start, end):
            marker[indices[p]] = -1
        if data[diag_pos[i]] == 0.0:
            return i
    return -1


@njit(cache=True)
def lower_unit_solve(n, indptr, indices, data, b):
    x = b.copy()
    for i in range(n):
        s = x[i]
        for p in range(indptr[i], indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s
    return x


@njit(cache=True)
def upper_solve(n, indptr, indices, data, b):
    """Back substitution; the diagonal is the first stored entry of each row."""
    x = b.copy()
    for i in range(n - 1, -1, -1):
        start = indptr[i]
        s = x[i]
        for p in range(start + 1, indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s / data[start]
    return x


@njit(cache=True)
def householder_qr(B, Q):
    """In-place Householder QR: ``B`` (n x m) becomes R in its top block, ``Q`` gets the thin factor."""
    n, m = B.shape
    V = np.zeros((m, n)).T  # column-major like B and Q
    active = np.zeros(m, dtype=np.bool_)
    for k in range(m):
        normx = 0.0
        for i in range(k, n):
            normx += B[i, k] * B[i, k]
        normx = np.sqrt(normx)
        if normx == 0.0:
            continue
        alpha = -normx if B[k, k] >= 0 else normx
        vnorm2 = 0.0
        for i in range(k, n):
            V[i, k] = B[i, k]
        V[k, k] -= alpha
        for i in range(k, n):
            vnorm2 += V[i, k] * V[i, k]
        if vnorm2 == 0.0:
            continue
        vnorm = np.sqrt(vnorm2)
        for i in range(k, n):
            V[i, k] /= vnorm
        active[k] = True
        for j in range(k + 1, m):
            d = 0.0
            for i in range(k, n):
                d += V[i, k] * B[i, j]
            d *= 2.0
            for i in range(k, n):
                B[i, j] -= d * V[i, k]
        B[k, k] = alpha
        for i in range(k + 1, n):
            B[i, k] = 0.0
    for j in range(m):
        Q[j, j] = 1.0
    for k in range(m - 1, -1, -1):
        if not active[k]:
            continue
        for j in range(k, m):
            d = 0.0
            for i in range(k, n):
                d += V[i, k] * Q[i, j]
            d *= 2.0
            for i in range(k, n):
                Q[i, j] -= d * V[i, k]
