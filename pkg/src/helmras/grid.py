"""P1 finite element assembly of the Helmholtz operator on the unit square.

The mesh is the uniform triangulation of (0,1)^2 obtained by splitting every
grid cell along its lower-left to upper-right diagonal.  Homogeneous Dirichlet
data is eliminated, so the assembled system carries only the n_glob**2
interior nodes, ordered lexicographically with x running fastest.

For this triangulation the stiffness part reduces to the familiar 5-point
stencil while the consistent mass matrix couples each node to its four axis
neighbours and to the two diagonal neighbours that lie on the split, giving a
7-entry interior row for A = K - k^2 M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class SizingError(ValueError):
    """Grid too small for the downstream overlapping decomposition."""


@dataclass(frozen=True)
class GridSpec:
    """Wave number plus interior grid size; everything else is derived."""

    k: float
    n_glob: int

    @property
    def h(self) -> float:
        """Mesh spacing: the open square holds n_glob interior nodes per axis."""
        return 1.0 / (self.n_glob + 1)

    @property
    def n_ppwl(self) -> float:
        """Nominal grid points per wavelength, 2*pi / (k*h)."""
        return 2.0 * math.pi / (self.k * self.h)

    @property
    def n_dofs(self) -> int:
        return self.n_glob * self.n_glob


def build_grid(k: float, n_glob: int) -> GridSpec:
    """Validate and freeze a discretisation of the unit square."""
    if not k > 0:
        raise ValueError(f"wave number must be positive, got {k}")
    if n_glob < 3:
        raise SizingError(f"need at least 3 interior nodes per axis, got {n_glob}")
    return GridSpec(k=float(k), n_glob=int(n_glob))


# Interior stencil of A = K - k^2 M as (dx, dy, stiffness, 12*mass/h^2).
# The two mass-only diagonal entries sit on the cell-splitting diagonal.
_STENCIL = (
    (0, 0, 4.0, 6.0),
    (1, 0, -1.0, 1.0),
    (-1, 0, -1.0, 1.0),
    (0, 1, -1.0, 1.0),
    (0, -1, -1.0, 1.0),
    (1, 1, 0.0, 1.0),
    (-1, -1, 0.0, 1.0),
)


def assemble_matrix(grid: GridSpec) -> sp.csr_matrix:
    """Assemble the interior Helmholtz matrix A = K - k^2 M in CSR form.

    Rows follow the lexicographic node ordering (x fastest).  Couplings to
    eliminated boundary nodes are simply dropped.
    """
    n = grid.n_glob
    kh2 = grid.k * grid.k * grid.h * grid.h
    ix = np.tile(np.arange(1, n + 1), n)
    iy = np.repeat(np.arange(1, n + 1), n)
    flat = (iy - 1) * n + (ix - 1)

    rows, cols, vals = [], [], []
    for dx, dy, stiff, mass12 in _STENCIL:
        jx = ix + dx
        jy = iy + dy
        keep = (jx >= 1) & (jx <= n) & (jy >= 1) & (jy <= n)
        rows.append(flat[keep])
        cols.append(((jy - 1) * n + (jx - 1))[keep])
        value = stiff - kh2 * mass12 / 12.0
        vals.append(np.full(keep.sum(), value))

    a = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * n, n * n),
    ).tocsr()
    a.sort_indices()
    return a


def source_index(grid: GridSpec) -> int:
    """Flat 0-based index of the interior node nearest to (0.5, 0.5).

    Per-axis index is ceil(n_glob/2) in 1-based counting; for even n_glob the
    two middle nodes are equidistant from 0.5 and the tie breaks low.
    """
    c = (grid.n_glob + 1) // 2
    return (c - 1) * grid.n_glob + (c - 1)


def assemble_rhs(grid: GridSpec) -> np.ndarray:
    """Point source: unit nodal load at the interior node nearest the centre."""
    f = np.zeros(grid.n_dofs)
    f[source_index(grid)] = 1.0
    return f
