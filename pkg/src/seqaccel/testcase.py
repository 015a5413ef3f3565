"""Sequence of variable-coefficient elliptic systems on the unit square.

``div(a grad f) = g`` on ``[0, 1]^2`` with Dirichlet data, discretized with
fourth-order finite differences. The matrix eliminates the boundary
values; the default (discrete) right-hand side is ``A f_exact`` so the
boundary never enters. Interior unknowns are numbered row-major:
``index = j * nx + i`` with ``i`` the x-index (fastest) and ``j`` the
y-index, both counted from 0 at the first interior point.

Near the boundary the 5-point centered stencils would reach outside the
domain, so the first and last interior points use shifted 6-node
stencils of the same (or higher) order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np
import scipy.sparse as sp

from .linalg import SparseCsrMatrix, spmv

__all__ = [
    "Grid2d",
    "TimeGrid",
    "coefficient_a",
    "coefficient_grad",
    "exact_f",
    "exact_f_derivatives",
    "source_g",
    "fd_weights",
    "assemble",
    "assemble_operator",
    "boundary_lift",
    "exact_solution",
    "system_sequence",
]

MIN_POINTS = 5


@dataclass(frozen=True)
class Grid2d:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one interior point per direction")

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx + 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny + 1)

    @property
    def n(self) -> int:
        return self.nx * self.ny

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened ``(x, y)`` of the interior points in unknown order."""
        x = self.hx * np.arange(1, self.nx + 1)
        y = self.hy * np.arange(1, self.ny + 1)
        X, Y = np.meshgrid(x, y)  # rows follow y, so x varies fastest
        return X.ravel(), Y.ravel()


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 2.3
    dt: float = 1e-3
    nt: int = 200

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")
        if self.nt < 0:
            raise ValueError("nt must be nonnegative")

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)


def coefficient_a(x, y, t):
    return np.exp(-(x - 0.5) ** 2 - (y - 0.5) ** 2) * np.cos(t * x) + 2.1


def coefficient_grad(x, y, t):
    """Analytic ``(da/dx, da/dy)``."""
    e = np.exp(-(x - 0.5) ** 2 - (y - 0.5) ** 2)
    c, s = np.cos(t * x), np.sin(t * x)
    return e * (-2.0 * (x - 0.5) * c - t * s), e * (-2.0 * (y - 0.5) * c)


def exact_f(x, y, t):
    sx = np.sin(15 * np.pi * x * t)
    g = np.exp((x - 0.5) ** 2 + (y - 0.5) ** 2 - 0.25 ** 2)
    return np.sin(4 * np.pi * y * t) * sx * (1.0 + sx * np.cos(3 * np.pi * y * t) * g)


def exact_f_derivatives(x, y, t):
    """``(f_x, f_y, f_xx, f_yy)`` of the manufactured solution, by hand.

    Split ``f = sin(by) sin(ax) + A(x) B(y) G(x, y)`` with ``A = sin(ax)^2``,
    ``B = sin(by) cos(cy)`` and ``G`` the Gaussian-like factor.
    """
    a, b, c = 15 * np.pi * t, 4 * np.pi * t, 3 * np.pi * t
    sx, cx = np.sin(a * x), np.cos(a * x)
    sy, cy = np.sin(b * y), np.cos(b * y)
    ky, ly = np.cos(c * y), np.sin(c * y)
    dx, dy = x - 0.5, y - 0.5
    G = np.exp(dx ** 2 + dy ** 2 - 0.0625)
    Gx, Gy = 2 * dx * G, 2 * dy * G
    Gxx, Gyy = (2 + 4 * dx ** 2) * G, (2 + 4 * dy ** 2) * G

    A = sx ** 2
    A1 = a * np.sin(2 * a * x)
    A2 = 2 * a ** 2 * np.cos(2 * a * x)
    B = sy * ky
    B1 = b * cy * ky - c * sy * ly
    B2 = -(b ** 2 + c ** 2) * sy * ky - 2 * b * c * cy * ly

    fx = a * sy * cx + B * (A1 * G + A * Gx)
    fy = b * cy * sx + A * (B1 * G + B * Gy)
    fxx = -a ** 2 * sy * sx + B * (A2 * G + 2 * A1 * Gx + A * Gxx)
    fyy = -b ** 2 * sy * sx + A * (B2 * G + 2 * B1 * Gy + B * Gyy)
    return fx, fy, fxx, fyy


def source_g(x, y, t):
    """Continuous right-hand side ``div(a grad f)`` for the manufactured ``f``."""
    fx, fy, fxx, fyy = exact_f_derivatives(x, y, t)
    ax, ay = coefficient_grad(x, y, t)
    return coefficient_a(x, y, t) * (fxx + fyy) + ax * fx + ay * fy


def fd_weights(offsets, deriv: int) -> np.ndarray:
    """Finite-difference weights (unit spacing) for the ``deriv``-th derivative on ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    k = len(offsets)
    V = np.vander(offsets, k, increasing=True).T  # V[p, j] = o_j^p
    rhs = np.zeros(k)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(V, rhs)


def _stencil_table(n: int):
    """Per interior index (1..n): 6 node indices and 1st/2nd derivative weights."""
    centered = np.array([-2, -1, 0, 1, 2])
    w1c, w2c = fd_weights(centered, 1), fd_weights(centered, 2)
    left = np.arange(-1, 5)
    right = -left[::-1]
    w1l, w2l = fd_weights(left, 1), fd_weights(left, 2)
    w1r, w2r = fd_weights(right, 1), fd_weights(right, 2)
    nodes = np.zeros((n, 6), dtype=np.int64)
    w1 = np.zeros((n, 6))
    w2 = np.zeros((n, 6))
    for idx in range(n):
        i = idx + 1  # grid index; boundaries at 0 and n+1
        if i - 2 < 0:
            off, a1, a2 = left, w1l, w2l
        elif i + 2 > n + 1:
            off, a1, a2 = right, w1r, w2r
        else:
            off, a1, a2 = np.append(centered, 0), np.append(w1c, 0.0), np.append(w2c, 0.0)
        nodes[idx] = i + off
        w1[idx] = a1
        w2[idx] = a2
    return nodes, w1, w2


def _couplings(grid: Grid2d, a: Callable, grad_a: Callable):
    """Stencil entries as (row, node x-index, node y-index, value), boundary nodes included."""
    nx, ny = grid.nx, grid.ny
    if nx < MIN_POINTS or ny < MIN_POINTS:
        raise ValueError(f"grid {nx}x{ny} too small for the stencil (need >= {MIN_POINTS} per direction)")
    hx, hy = grid.hx, grid.hy
    x, y = grid.coordinates()
    av = a(x, y)
    ax, ay = grad_a(x, y)
    ii = np.tile(np.arange(1, nx + 1), ny)
    jj = np.repeat(np.arange(1, ny + 1), nx)
    row = np.arange(nx * ny)[:, None]

    nodes_x, w1x, w2x = _stencil_table(nx)
    nodes_y, w1y, w2y = _stencil_table(ny)
    gx = nodes_x[ii - 1]
    vx = av[:, None] * w2x[ii - 1] / hx ** 2 + ax[:, None] * w1x[ii - 1] / hx
    gy = nodes_y[jj - 1]
    vy = av[:, None] * w2y[jj - 1] / hy ** 2 + ay[:, None] * w1y[jj - 1] / hy
    rows = np.concatenate([np.broadcast_to(row, gx.shape).ravel(), np.broadcast_to(row, gy.shape).ravel()])
    nodes_i = np.concatenate([gx.ravel(), np.broadcast_to(ii[:, None], gy.shape).ravel()])
    nodes_j = np.concatenate([np.broadcast_to(jj[:, None], gx.shape).ravel(), gy.ravel()])
    vals = np.concatenate([vx.ravel(), vy.ravel()])
    nz = vals != 0
    return rows[nz], nodes_i[nz], nodes_j[nz], vals[nz]


def _is_interior(grid: Grid2d, gi, gj):
    return (gi >= 1) & (gi <= grid.nx) & (gj >= 1) & (gj <= grid.ny)


def assemble_operator(grid: Grid2d, a: Callable, grad_a: Callable) -> SparseCsrMatrix:
    """Matrix of ``f -> a lap f + a_x f_x + a_y f_y`` for coefficient callables ``a(x, y)``, ``grad_a(x, y)``."""
    rows, gi, gj, vals = _couplings(grid, a, grad_a)
    inside = _is_interior(grid, gi, gj)
    cols = (gj[inside] - 1) * grid.nx + (gi[inside] - 1)
    mat = sp.coo_matrix((vals[inside], (rows[inside], cols)), shape=(grid.n, grid.n)).tocsr()
    return SparseCsrMatrix.from_scipy(mat)


def boundary_lift(grid: Grid2d, a: Callable, grad_a: Callable, f_boundary: Callable) -> np.ndarray:
    """Contribution of Dirichlet values ``f_boundary(x, y)`` to each interior equation."""
    rows, gi, gj, vals = _couplings(grid, a, grad_a)
    outside = ~_is_interior(grid, gi, gj)
    fb = f_boundary(gi[outside] * grid.hx, gj[outside] * grid.hy)
    return np.bincount(rows[outside], weights=vals[outside] * fb, minlength=grid.n)


def exact_solution(grid: Grid2d, t: float) -> np.ndarray:
    x, y = grid.coordinates()
    return exact_f(x, y, t)


def assemble(grid: Grid2d, t: float, rhs_mode: str = "discrete",
             a: Optional[Callable] = None, grad_a: Optional[Callable] = None):
    """System matrix ``A(t)`` and right-hand side ``b(t)``.

    ``rhs_mode="discrete"`` sets ``b = A f_exact`` so the sampled exact
    solution solves the discrete system; ``"continuous"`` samples the
    analytic source ``g`` and moves the boundary values of ``f`` to the
    right-hand side. Custom coefficients ``a(x, y)``/``grad_a(x, y)``
    replace the default time-dependent one.
    """
    if a is None:
        a = lambda x, y: coefficient_a(x, y, t)  # noqa: E731
        grad_a = lambda x, y: coefficient_grad(x, y, t)  # noqa: E731
    elif grad_a is None:
        raise ValueError("grad_a is required with a custom coefficient")
    A = assemble_operator(grid, a, grad_a)
    if rhs_mode == "discrete":
        b = spmv(A, exact_solution(grid, t))
    elif rhs_mode == "continuous":
        # the manufactured f is not zero on x=1 or y=1, so it doubles as Dirichlet data there
        x, y = grid.coordinates()
        b = source_g(x, y, t) - boundary_lift(grid, a, grad_a, lambda xb, yb: exact_f(xb, yb, t))
    else:
        raise ValueError(f"unknown rhs_mode {rhs_mode!r}")
    return A, b


def system_sequence(grid: Grid2d, tg: TimeGrid, rhs_mode: str = "discrete"
                    ) -> Iterator[tuple[float, SparseCsrMatrix, np.ndarray]]:
    """Yield ``(t_i, A(t_i), b(t_i))`` for ``t_i = t0 + i dt``, one system at a time."""
    for t in tg.times():
        A, b = assemble(grid, float(t), rhs_mode)
        yield float(t), A, b
