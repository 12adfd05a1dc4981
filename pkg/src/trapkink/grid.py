"""Uniform symmetric grid, fourth-order finite differences and quadrature."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

# Second derivative, fourth order.  The two edge rows use mirror ghost nodes
# (f[-k] = f[k]), a natural free-end closure.  One-sided fourth-order rows
# give D2 complex eigenvalues and the wave equation grows at the boundary.
D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
D2_EDGE0 = np.array([-30.0, 32.0, -2.0, 0.0, 0.0, 0.0]) / 12.0
D2_EDGE1 = np.array([16.0, -31.0, 16.0, -1.0, 0.0, 0.0]) / 12.0

# First derivative, fourth order.
D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
D1_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
D1_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes ``x_i = i * dx`` for ``i = -m..m``.

    Built from integer multiples so that ``x[m + k] == -x[m - k]`` holds
    exactly in floating point.
    """

    dx: float
    m: int

    @classmethod
    def from_params(cls, params) -> "Grid":
        return cls(params.dx, (params.n - 1) // 2)

    @classmethod
    def symmetric(cls, x_max: float, dx: float) -> "Grid":
        return cls(dx, int(round(x_max / dx)))

    @property
    def n(self) -> int:
        return 2 * self.m + 1

    @property
    def center(self) -> int:
        return self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1, dtype=float) * self.dx

    @property
    def x_min(self) -> float:
        return -self.m * self.dx

    @property
    def x_max(self) -> float:
        return self.m * self.dx

    def reflect(self, f: np.ndarray) -> np.ndarray:
        """Return ``f(-x)``."""
        return np.asarray(f)[::-1]


def _edge_rows_matrix(n, interior, edge0, edge1, odd):
    """Assemble a banded difference matrix with one-sided closure rows."""
    half = len(interior) // 2
    rows, cols, vals = [], [], []
    for i in range(half, n - half):
        for k, c in enumerate(interior):
            if c != 0.0:
                rows.append(i)
                cols.append(i - half + k)
                vals.append(c)
    # Mirrored closures; odd operators (first derivative) flip sign.
    sign = -1.0 if odd else 1.0
    for i, w in ((0, edge0), (1, edge1)):
        for k, c in enumerate(w):
            if c != 0.0:
                rows += [i, n - 1 - i]
                cols += [k, n - 1 - k]
                vals += [c, sign * c]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


class StencilOperator:
    """Discrete second derivative ``D2`` on a grid.

    The matrix is kept in CSR form for Newton solves and eigenproblems;
    :func:`apply_d2` uses vectorised slices with the same weights.
    """

    def __init__(self, grid: Grid):
        if grid.n < 6:
            raise ValueError("fourth-order closures need at least 6 nodes")
        self.grid = grid
        self.dx = grid.dx
        self.n = grid.n
        self.matrix = _edge_rows_matrix(
            grid.n, D2_INTERIOR, D2_EDGE0, D2_EDGE1, odd=False
        ) / (grid.dx * grid.dx)

    def __matmul__(self, f):
        return apply_d2(self, f)


def apply_d2(op: StencilOperator, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n,):
        raise ValueError(f"expected field of length {op.n}, got {f.shape}")
    inv = 1.0 / (op.dx * op.dx)
    out = np.empty_like(f)
    c = D2_INTERIOR
    out[2:-2] = (
        c[0] * f[:-4] + c[1] * f[1:-3] + c[2] * f[2:-2] + c[3] * f[3:-1] + c[4] * f[4:]
    )
    out[0] = D2_EDGE0 @ f[:6]
    out[1] = D2_EDGE1 @ f[:6]
    out[-1] = D2_EDGE0 @ f[-1:-7:-1]
    out[-2] = D2_EDGE1 @ f[-1:-7:-1]
    return out * inv


def first_derivative(f, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"expected field of length {grid.n}, got {f.shape}")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / 12.0
    out[0] = D1_EDGE0 @ f[:5]
    out[1] = D1_EDGE1 @ f[:5]
    out[-1] = -(D1_EDGE0 @ f[-1:-6:-1])
    out[-2] = -(D1_EDGE1 @ f[-1:-6:-1])
    return out / grid.dx


def first_derivative_matrix(grid: Grid) -> sp.csr_matrix:
    return _edge_rows_matrix(grid.n, D1_INTERIOR, D1_EDGE0, D1_EDGE1, odd=True) / grid.dx


@lru_cache(maxsize=32)
def simpson_weights(n: int, dx: float) -> np.ndarray:
    """Composite Simpson weights; trapezoid weights when ``n`` is even.

    The returned array is shared, do not modify it.
    """
    w = np.ones(n)
    if n % 2 == 1 and n >= 3:
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * dx / 3.0
    w[0] = w[-1] = 0.5
    return w * dx


def quadrature(f, grid: Grid) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.n:
        raise ValueError(f"expected field of length {grid.n}, got {f.shape}")
    return float(f @ simpson_weights(grid.n, grid.dx))
