"""Initial guesses from a compressed history of previous solutions.

The history window holds the last ``M`` solutions. A basis of dimension
``m`` for (part of) its span comes either from a truncated SVD (POD) or
from the QR factorization of a Gaussian sketch ``Omega = X Z`` that is
kept current with one rank-one downdate and one rank-one update per step.
The guess is the residual minimizer over that basis.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import SparseCsrMatrix, lstsq, qr_reduced, svd_thin

__all__ = [
    "HistoryWindow",
    "SketchState",
    "GuessReport",
    "push_solution",
    "pod_basis",
    "sketch_from_scratch",
    "sketch_progressive_update",
    "basis_from_sketch",
    "compute_initial_guess",
    "DEFAULT_REFRESH_PERIOD",
]

DEFAULT_REFRESH_PERIOD = 50


class HistoryWindow:
    """Ring buffer of the ``capacity`` most recent solution vectors, oldest first."""

    def __init__(self, n: int, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.capacity = capacity
        self._buf = np.zeros((n, capacity))
        self._start = 0
        self._len = 0

    def __len__(self) -> int:
        return self._len

    @property
    def full(self) -> bool:
        return self._len == self.capacity

    def _slot(self, j: int) -> int:
        return (self._start + j) % self.capacity

    @property
    def columns(self) -> list[np.ndarray]:
        return [self._buf[:, self._slot(j)].copy() for j in range(self._len)]

    def matrix(self) -> np.ndarray:
        """History matrix ``X`` (n x len), columns ordered by timestep."""
        idx = [self._slot(j) for j in range(self._len)]
        return self._buf[:, idx]

    def newest(self) -> np.ndarray:
        if not self._len:
            raise IndexError("history is empty")
        return self._buf[:, self._slot(self._len - 1)].copy()

    def push(self, x) -> Optional[np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"solution has shape {x.shape}, window expects ({self.n},)")
        evicted = None
        if self._len == self.capacity:
            evicted = self._buf[:, self._start].copy()
            self._buf[:, self._start] = x
            self._start = (self._start + 1) % self.capacity
        else:
            self._buf[:, self._slot(self._len)] = x
            self._len += 1
        return evicted


def push_solution(h: HistoryWindow, x) -> Optional[np.ndarray]:
    """Append ``x`` to the window; return the evicted oldest column if it was full."""
    return h.push(x)


def pod_basis(h: HistoryWindow | np.ndarray, m: int) -> np.ndarray:
    """First ``m`` left singular vectors of the history matrix."""
    X = h.matrix() if isinstance(h, HistoryWindow) else np.asarray(h, dtype=float)
    if not 1 <= m <= X.shape[1]:
        raise ValueError(f"need 1 <= m <= {X.shape[1]} stored columns, got m={m}")
    U, _, _ = svd_thin(X)
    return U[:, :m]


@dataclass
class SketchState:
    """Gaussian test matrix ``Z`` (M x m) and sketch ``Omega = X Z`` (n x m)."""

    Z: np.ndarray
    Omega: np.ndarray
    age: int = 0
    refresh_period: int = DEFAULT_REFRESH_PERIOD
    rebuilds: int = 1

    @property
    def m(self) -> int:
        return self.Z.shape[1]


def sketch_from_scratch(h: HistoryWindow, m: int, rng: np.random.Generator,
                        refresh_period: int = DEFAULT_REFRESH_PERIOD,
                        Z: Optional[np.ndarray] = None) -> SketchState:
    """Draw ``Z`` with i.i.d. standard normal entries and form ``Omega = X Z``.

    ``Z`` may be supplied explicitly, bypassing ``rng``.
    """
    if not h.full:
        raise ValueError(f"sketch needs a full window ({len(h)}/{h.capacity} columns stored)")
    M = h.capacity
    if not 1 <= m <= M:
        raise ValueError(f"need 1 <= m <= M={M}, got m={m}")
    if refresh_period < 1:
        raise ValueError("refresh_period must be >= 1")
    if Z is None:
        Z = rng.standard_normal((M, m))
    else:
        Z = np.array(Z, dtype=float)
        if Z.shape != (M, m):
            raise ValueError(f"Z must have shape ({M}, {m})")
    return SketchState(Z=Z, Omega=h.matrix() @ Z, age=0, refresh_period=refresh_period)


def sketch_progressive_update(s: SketchState, evicted, pushed, rng: np.random.Generator,
                              window: Optional[HistoryWindow] = None,
                              z_new: Optional[np.ndarray] = None) -> SketchState:
    """Slide the sketch by one timestep.

    Removes ``evicted * z_1^T``, shifts the rows of ``Z`` up, draws a new
    last row ``z_M`` and adds ``pushed * z_M^T``. Every ``refresh_period``
    calls the sketch is instead rebuilt from ``window`` with a fresh ``Z``.
    The input state is not modified.
    """
    evicted = np.asarray(evicted, dtype=float)
    pushed = np.asarray(pushed, dtype=float)
    n, m = s.Omega.shape
    if evicted.shape != (n,) or pushed.shape != (n,):
        raise ValueError(f"update vectors must have shape ({n},)")
    age = s.age + 1
    if age >= s.refresh_period:
        if window is None:
            raise ValueError("refresh is due but no history window was given")
        if window.n != n or window.capacity != s.Z.shape[0]:
            raise ValueError("window does not match the sketch dimensions")
        fresh = sketch_from_scratch(window, m, rng, s.refresh_period)
        fresh.rebuilds = s.rebuilds + 1
        return fresh
    if z_new is None:
        z_new = rng.standard_normal(m)
    else:
        z_new = np.asarray(z_new, dtype=float)
        if z_new.shape != (m,):
            raise ValueError(f"z_new must have shape ({m},)")
    Omega = s.Omega - np.outer(evicted, s.Z[0])
    Z = np.empty_like(s.Z)
    Z[:-1] = s.Z[1:]
    Z[-1] = z_new
    Omega += np.outer(pushed, z_new)
    return SketchState(Z=Z, Omega=Omega, age=age, refresh_period=s.refresh_period, rebuilds=s.rebuilds)


def basis_from_sketch(s: SketchState) -> np.ndarray:
    """Orthonormal basis ``Q`` from the reduced QR of the sketch."""
    Q, _ = qr_reduced(s.Omega)
    return Q


@dataclass
class GuessReport:
    guess: np.ndarray
    reduced_dim: int
    guess_residual: float
    basis_time: float = 0.0
    lstsq_time: float = 0.0


def compute_initial_guess(A: SparseCsrMatrix, b, Q) -> GuessReport:
    """Residual-minimizing guess ``Q z*`` with ``z* = argmin ||A Q z - b||_2``."""
    b = np.asarray(b, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != A.n_cols or b.shape != (A.n_rows,):
        raise ValueError(f"dimension mismatch: A {A.shape}, b {b.shape}, Q {Q.shape}")
    t0 = time.perf_counter()
    W = A.matmat(Q)
    z = lstsq(W, b)
    guess = Q @ z
    res = float(np.linalg.norm(W @ z - b))
    return GuessReport(guess=guess, reduced_dim=Q.shape[1], guess_residual=res,
                       lstsq_time=time.perf_counter() - t0)
