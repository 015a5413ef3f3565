import numpy as np
import pytest

from seqaccel.testcase import Grid2d, exact_solution


def history_matrix(nx=20, M=20, dt=1e-3, t0=2.3):
    """Exact test-case solutions x(t0), ..., x(t0 + (M-1) dt) as columns."""
    grid = Grid2d(nx, nx)
    return np.column_stack([exact_solution(grid, t0 + k * dt) for k in range(M)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
