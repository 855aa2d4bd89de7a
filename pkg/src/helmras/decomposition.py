"""Overlapping Cartesian decomposition of the interior grid.

The grid is tiled into sqrt(N) x sqrt(N) owned blocks (sizes differing by at
most one node, larger blocks first), then each block is dilated by `overlap`
node layers and clipped at the domain boundary.  Ownership stays with the
undilated tiling, so the Boolean masks form an exact partition of unity and
blocks touching only one edge of the square end up rectangular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import GridSpec, SizingError


@dataclass(frozen=True)
class Subdomain:
    """One overlapped block: 1-based inclusive node ranges plus index maps."""

    id: int
    owned_x: tuple[int, int]
    owned_y: tuple[int, int]
    box_x: tuple[int, int]
    box_y: tuple[int, int]
    indices: np.ndarray
    owned_mask: np.ndarray

    @property
    def nx(self) -> int:
        return self.box_x[1] - self.box_x[0] + 1

    @property
    def ny(self) -> int:
        return self.box_y[1] - self.box_y[0] + 1

    @property
    def n_local(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class Partition:
    n_glob: int
    N: int
    q: int
    overlap: int
    subdomains: tuple[Subdomain, ...]


@dataclass(frozen=True)
class LocalSystem:
    """Local Dirichlet matrix of one subdomain: the principal submatrix of A."""

    id: int
    a: sp.csr_matrix
    nx: int
    ny: int


def _axis_blocks(n: int, q: int) -> list[tuple[int, int]]:
    """Owned 1-based node ranges along one axis; larger blocks come first."""
    base, rem = divmod(n, q)
    sizes = [base + 1] * rem + [base] * (q - rem)
    if min(sizes) < 2:
        raise SizingError(f"owned block of {min(sizes)} node(s); need >= 2 ({n} nodes over {q} blocks)")
    ranges = []
    lo = 1
    for s in sizes:
        ranges.append((lo, lo + s - 1))
        lo += s
    return ranges


def build_partition(grid: GridSpec, N: int, overlap: int = 1) -> Partition:
    """Overlapping decomposition into N = q^2 Cartesian subdomains."""
    q = math.isqrt(N)
    if q * q != N or N < 1:
        raise ValueError(f"subdomain count must be a perfect square, got {N}")
    if overlap < 0:
        raise ValueError(f"overlap must be >= 0, got {overlap}")
    n = grid.n_glob
    x_blocks = _axis_blocks(n, q)
    y_blocks = _axis_blocks(n, q)

    subs = []
    for by in range(q):
        for bx in range(q):
            ox, oy = x_blocks[bx], y_blocks[by]
            box_x = (max(1, ox[0] - overlap), min(n, ox[1] + overlap))
            box_y = (max(1, oy[0] - overlap), min(n, oy[1] + overlap))
            gx = np.arange(box_x[0], box_x[1] + 1)
            gy = np.arange(box_y[0], box_y[1] + 1)
            indices = ((gy - 1)[:, None] * n + (gx - 1)[None, :]).ravel()
            mask_x = (gx >= ox[0]) & (gx <= ox[1])
            mask_y = (gy >= oy[0]) & (gy <= oy[1])
            owned = (mask_y[:, None] & mask_x[None, :]).ravel()
            subs.append(
                Subdomain(
                    id=by * q + bx,
                    owned_x=ox,
                    owned_y=oy,
                    box_x=box_x,
                    box_y=box_y,
                    indices=indices,
                    owned_mask=owned,
                )
            )
    return Partition(n_glob=n, N=N, q=q, overlap=overlap, subdomains=tuple(subs))


def restrict(p: Partition, j: int, v: np.ndarray) -> np.ndarray:
    """Gather the subdomain's entries in local lexicographic order."""
    return v[p.subdomains[j].indices]


def prolong_weighted(p: Partition, j: int, v_j: np.ndarray) -> np.ndarray:
    """Scatter D_j v_j (owned entries only) into a zero global vector."""
    sd = p.subdomains[j]
    out = np.zeros(p.n_glob * p.n_glob)
    out[sd.indices[sd.owned_mask]] = v_j[sd.owned_mask]
    return out


def extract_local_matrix(a: sp.csr_matrix, p: Partition, j: int) -> LocalSystem:
    """A_j = R_j A R_j^T on the subdomain's flat index list."""
    sd = p.subdomains[j]
    a_j = a[sd.indices, :][:, sd.indices].tocsr()
    a_j.sort_indices()
    return LocalSystem(id=j, a=a_j, nx=sd.nx, ny=sd.ny)


def describe_partition(p: Partition) -> str:
    """Structured text dump of boxes and ownership, for fixtures and debugging."""
    lines = [f"partition n_glob={p.n_glob} N={p.N} overlap={p.overlap}"]
    for sd in p.subdomains:
        lines.append(
            f"  subdomain {sd.id}: owned x{sd.owned_x} y{sd.owned_y}"
            f" box x{sd.box_x} y{sd.box_y} local {sd.nx}x{sd.ny}"
            f" owned_nodes={int(sd.owned_mask.sum())}"
        )
    return "\n".join(lines)
