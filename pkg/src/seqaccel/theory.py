"""Chebyshev least-squares extrapolation of a solution history and the
error bounds that go with it.

History samples live on ``M`` equispaced nodes of ``[-1, 1]``; the next
timestep is ``t = 1 + 2/(M-1)``. A function analytic inside the Bernstein
ellipse with parameter ``rho`` (foci at -1 and 1, semi-axes summing to
``rho``) has ``kappa_rho`` as the largest norm on the ellipse boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import qr_reduced

__all__ = [
    "BoundNotApplicable",
    "BernsteinParams",
    "ChebFit",
    "equispaced_nodes",
    "cheb_vector",
    "cheb_matrix",
    "cheb_lsq_fit",
    "extrapolate",
    "ellipse_boundary",
    "estimate_kappa",
    "bound_sigma_decay",
    "c_of_m_r",
    "bound_guess_residual",
    "bound_extrapolation",
    "bound_compressed",
    "sigma_min_lower_bound",
    "max_admissible_degree",
]


class BoundNotApplicable(ValueError):
    """Raised when bound parameters fall outside the range the bound covers."""


def equispaced_nodes(M: int) -> np.ndarray:
    if M < 2:
        raise ValueError("need at least two nodes")
    return np.linspace(-1.0, 1.0, M)


def max_admissible_degree(M: int) -> int:
    """Largest integer ``R`` with ``R <= sqrt(M-1)/2``."""
    R = int(math.floor(0.5 * math.sqrt(M - 1)))
    while R > 0 and R > 0.5 * math.sqrt(M - 1):
        R -= 1
    return R


def cheb_vector(R: int, t: float) -> np.ndarray:
    """``[T_0(t), ..., T_R(t)]`` by the three-term recurrence (any real ``t``)."""
    if R < 0:
        raise ValueError("degree must be >= 0")
    q = np.empty(R + 1)
    q[0] = 1.0
    if R >= 1:
        q[1] = t
    for k in range(1, R):
        q[k + 1] = 2.0 * t * q[k] - q[k - 1]
    return q


def cheb_matrix(R: int, nodes) -> np.ndarray:
    """``(R+1) x len(nodes)`` Chebyshev-Vandermonde matrix with columns ``cheb_vector(R, t_j)``."""
    nodes = np.asarray(nodes, dtype=float)
    Q = np.empty((R + 1, len(nodes)))
    Q[0] = 1.0
    if R >= 1:
        Q[1] = nodes
    for k in range(1, R):
        Q[k + 1] = 2.0 * nodes * Q[k] - Q[k - 1]
    return Q


@dataclass(frozen=True)
class ChebFit:
    C: np.ndarray        # n x (R+1) coefficient matrix
    degree: int
    nodes: np.ndarray


def cheb_lsq_fit(X, R: int) -> ChebFit:
    """Degree-``R`` least-squares fit ``C q_R(t)`` to the columns of ``X`` on equispaced nodes.

    Solves ``min ||X - C Q_R||_F`` through a QR factorization of ``Q_R^T``
    rather than the normal equations.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    M = X.shape[1]
    if not 0 <= R <= M - 1:
        raise ValueError(f"degree must satisfy 0 <= R <= M-1 = {M - 1}, got {R}")
    nodes = equispaced_nodes(M)
    Qr = cheb_matrix(R, nodes)
    Q1, R1 = qr_reduced(Qr.T)
    # pinv(Q_R) = Q1 R1^{-T}  =>  C = (R1^{-1} (X Q1)^T)^T
    C = solve_triangular(R1, (X @ Q1).T, lower=False).T
    return ChebFit(C=C, degree=R, nodes=nodes)


def extrapolate(fit: ChebFit, t: float) -> np.ndarray:
    return fit.C @ cheb_vector(fit.degree, t)


def ellipse_boundary(rho: float, n_points: int = 512) -> np.ndarray:
    """Equispaced (in angle) points ``(rho e^{i theta} + rho^{-1} e^{-i theta}) / 2``."""
    if rho <= 1:
        raise ValueError("rho must exceed 1")
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    w = rho * np.exp(1j * theta)
    return 0.5 * (w + 1.0 / w)


def estimate_kappa(x: Callable[[np.ndarray], np.ndarray], rho: float, n_points: int = 512) -> float:
    """Max of ``||x(t)||_2`` over sampled ellipse boundary points.

    ``x`` maps an array of complex times (shape ``(k,)``) to an ``(n, k)``
    array of function values.
    """
    z = ellipse_boundary(rho, n_points)
    vals = np.asarray(x(z))
    if vals.ndim == 1:
        vals = vals[None, :]
    return float(np.max(np.linalg.norm(vals, axis=0)))


@dataclass(frozen=True)
class BernsteinParams:
    rho: float
    kappa_rho: float
    t_next: float
    M: int
    R: int

    def __post_init__(self):
        if not self.rho > 1:
            raise BoundNotApplicable(f"rho must exceed 1, got {self.rho}")
        if self.kappa_rho < 0:
            raise ValueError("kappa_rho must be nonnegative")
        if self.t_next < 1:
            raise ValueError("t_next must be >= 1 (extrapolation target)")
        if self.M < 2 or self.R < 0:
            raise ValueError("need M >= 2 and R >= 0")

    @property
    def r(self) -> float:
        t = self.t_next
        return (t + math.sqrt(t * t - 1.0)) / self.rho

    @classmethod
    def next_step(cls, rho: float, kappa_rho: float, M: int, R: int) -> "BernsteinParams":
        """Parameters for extrapolating one uniform step past the history."""
        return cls(rho=rho, kappa_rho=kappa_rho, t_next=1.0 + 2.0 / (M - 1), M=M, R=R)


def bound_sigma_decay(p: BernsteinParams, k: int) -> float:
    """Upper bound on the ``k``-th largest singular value of the history matrix."""
    rho = p.rho
    return 2.0 * rho * p.kappa_rho * math.sqrt(p.M) / (1.0 - 1.0 / rho) * rho ** (-k)


def c_of_m_r(M: int, R: int) -> float:
    if M < 2:
        raise ValueError("M must be >= 2")
    return 5.0 * math.sqrt(5.0) * math.sqrt(2 * R + 1) * math.sqrt(M) / math.sqrt(2.0 * (M - 1))


def _check_bound_range(p: BernsteinParams) -> float:
    r = p.r
    if r >= 1:
        raise BoundNotApplicable(f"target t={p.t_next} lies outside the ellipse (r={r:.6g} >= 1)")
    if p.rho * r <= 1:
        raise BoundNotApplicable(f"rho*r = {p.rho * r:.6g} <= 1; the bound is undefined")
    if p.R > 0.5 * math.sqrt(p.M - 1):
        raise BoundNotApplicable(f"degree R={p.R} exceeds sqrt(M-1)/2 for M={p.M}")
    return r


def bound_compressed(p: BernsteinParams, normA: float, eps: float) -> float:
    """Residual bound for a basis whose projection error on the history is at most ``eps``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    r = _check_bound_range(p)
    rho, kap, R, M = p.rho, p.kappa_rho, p.R, p.M
    root = math.sqrt(rho * rho * r * r - 1.0)
    inner = 1.0 / (rho - 1.0)
    if eps:
        inner += eps * rho ** R / (2.0 * math.sqrt(M) * kap)
    bracket = 1.0 / (1.0 - r) + c_of_m_r(M, R) * rho / root * inner
    return 2.0 * normA * kap * bracket * r ** (R + 1)


def bound_guess_residual(p: BernsteinParams, normA: float) -> float:
    """Residual bound for the guess from the full (uncompressed) history."""
    return bound_compressed(p, normA, 0.0)


def bound_extrapolation(p: BernsteinParams) -> float:
    """Bound on ``||x(t) - p_R(t)||_2`` for the least-squares Chebyshev extrapolant."""
    return bound_compressed(p, 1.0, 0.0)


def sigma_min_lower_bound(M: int, R: int) -> float:
    """Lower bound on the smallest singular value of the equispaced Chebyshev-Vandermonde matrix."""
    if M < 2 or R < 0:
        raise ValueError("need M >= 2 and R >= 0")
    if R > 0.5 * math.sqrt(M - 1):
        raise BoundNotApplicable(f"degree R={R} exceeds sqrt(M-1)/2 for M={M}")
    return math.sqrt(2.0) / (5.0 * math.sqrt(5.0)) * math.sqrt(M - 1) / math.sqrt(2 * R + 1)
