"""The stencils module contains the finite-difference operators shared by the
grid modules.

Weights come from Fornberg's recursion. Interior rows are centred; the rows
closer to the boundary than the half-width use a one-sided stencil of the
same formal accuracy, so polynomials of degree <= accuracy are
differentiated exactly on the whole grid. centred_matrix instead keeps the
centred stencil up to the edge with the field zero outside the grid, so the
first-derivative matrix is skew-symmetric.
"""
from functools import lru_cache

import numpy as np
from scipy import sparse


def fornberg_weights(z, nodes, order):
    """Weights c[k, j] such that sum_j c[k, j] f(nodes[j]) ~ f^(k)(z)."""

    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    c = np.zeros((order + 1, n))
    c1, c4 = 1.0, nodes[0] - z
    c[0, 0] = 1.0

    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, nodes[i] - z

        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3

            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2

            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3

        c1 = c2

    return c


@lru_cache(maxsize=64)
def derivative_matrix(n, spacing, order=1, accuracy=2):
    """Sparse (n x n) matrix of the order-th derivative on a uniform grid."""

    if accuracy % 2 or accuracy < 2:
        raise ValueError(f"accuracy must be a positive even integer, got {accuracy}")

    half = accuracy // 2 + (order - 1) // 2
    n_central = 2 * half + 1
    n_side = accuracy + order

    if n < max(n_central, n_side):
        raise ValueError(f"{n} points are too few for accuracy {accuracy}")

    central = fornberg_weights(0.0, np.arange(-half, half + 1), order)[order]
    rows, cols, data = [], [], []

    for i in range(n):
        if half <= i < n - half:
            offsets = np.arange(-half, half + 1)
            weights = central
        else:
            start = 0 if i < half else n - n_side
            offsets = np.arange(start, start + n_side) - i
            weights = fornberg_weights(0.0, offsets, order)[order]

        rows.extend([i] * len(offsets))
        cols.extend(i + offsets)
        data.extend(weights / spacing ** order)

    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


@lru_cache(maxsize=64)
def centred_matrix(n, spacing, accuracy=2):
    """First derivative with the centred stencil on every row, the field
    taken as zero outside the grid. The matrix is skew-symmetric."""

    if accuracy % 2 or accuracy < 2:
        raise ValueError(f"accuracy must be a positive even integer, got {accuracy}")

    half = accuracy // 2

    if n < 2 * half + 1:
        raise ValueError(f"{n} points are too few for accuracy {accuracy}")

    weights = fornberg_weights(0.0, np.arange(-half, half + 1), 1)[1] / spacing
    weights = 0.5 * (weights - weights[::-1])
    offsets = [k for k in range(-half, half + 1) if k != 0]
    diagonals = [np.full(n - abs(k), weights[k + half]) for k in offsets]

    return sparse.diags(diagonals, offsets, shape=(n, n), format="csr")


BOUNDARIES = ("one_sided", "zero")


class Stencil:
    """Derivatives along the x (axis 0) and v (axis 1) axes of a grid.

    boundary "one_sided" keeps the formal accuracy up to the grid edge;
    "zero" uses centred first derivatives of the zero-extended field.
    """

    def __init__(self, grid, accuracy=2, boundary="one_sided"):
        if boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary '{boundary}', choose from {BOUNDARIES}")
        self.grid = grid
        self.accuracy = accuracy
        self.boundary = boundary

    def _matrix(self, axis, order):
        n = self.grid.nx if axis == 0 else self.grid.nv
        step = self.grid.dx if axis == 0 else self.grid.dv
        if self.boundary == "zero" and order == 1:
            return centred_matrix(n, step, self.accuracy)
        return derivative_matrix(n, step, order, self.accuracy)

    def apply(self, values, axis, order=1):
        matrix = self._matrix(axis, order)
        if axis == 0:
            return np.asarray(matrix @ values)
        return np.asarray(matrix @ values.T).T

    def d_x(self, values):
        return self.apply(values, 0)

    def d_v(self, values):
        return self.apply(values, 1)

    def d_xx(self, values):
        return self.apply(values, 0, order=2)

    def d_vv(self, values):
        return self.apply(values, 1, order=2)

    def d_xv(self, values):
        return self.d_x(self.d_v(values))
