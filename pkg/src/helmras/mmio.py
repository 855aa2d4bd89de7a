"""MatrixMarket exchange for matrices and right-hand sides.

Thin wrappers over scipy.io that pin the coordinate format (1-based indices)
and let callers opt into the symmetric header for the structurally symmetric
grid operators.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp


def write_matrix(path, a: sp.csr_matrix, symmetric: bool = False) -> None:
    """Write a CSR matrix in coordinate real format (general or symmetric)."""
    scipy.io.mmwrite(str(path), a.tocoo(), field="real", symmetry="symmetric" if symmetric else "general")


def read_matrix(path) -> sp.csr_matrix:
    a = sp.csr_matrix(scipy.io.mmread(str(path)))
    a.sort_indices()
    return a


def write_vector(path, v: np.ndarray) -> None:
    """Write a vector as an n-by-1 coordinate matrix (zeros dropped)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(np.asarray(v, dtype=float).reshape(-1, 1)), field="real")


def read_vector(path) -> np.ndarray:
    v = scipy.io.mmread(str(path))
    if sp.issparse(v):
        v = v.toarray()
    return np.asarray(v, dtype=float).ravel()
