"""Sparse and dense kernels shared by the solver stack.

CSR matrices are plain scipy.sparse.csr_matrix with canonical (sorted,
duplicate-free) structure; vectors are 1-D float64 numpy arrays.  The banded
LU exploits the lexicographic ordering of the grid operators, ILU(0) keeps
exactly the input pattern, and dense_lu_solve exists as a small independent
oracle for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels


class SingularMatrixError(RuntimeError):
    """Factorisation hit an exactly zero pivot after pivoting."""


class ZeroPivotError(RuntimeError):
    """ILU(0) hit a zero pivot; carries the offending row."""

    def __init__(self, row: int, detail: str = ""):
        self.row = row
        super().__init__(detail or f"ILU(0) zero pivot in row {row}")


def _as_canonical_csr(a) -> sp.csr_matrix:
    a = sp.csr_matrix(a)
    if not a.has_sorted_indices:
        a.sort_indices()
    return a


def spmv(a: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    """y = A x with row-ordered accumulation (deterministic)."""
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {x.shape}")
    return a @ x


def sparse_triple_product(zt: sp.csr_matrix, a: sp.csr_matrix, z: sp.csr_matrix) -> sp.csr_matrix:
    """E = Zt A Z as a CSR matrix with sorted rows; Zt is passed explicitly."""
    if zt.shape[1] != a.shape[0] or a.shape[1] != z.shape[0]:
        raise ValueError(
            f"dimension mismatch: {zt.shape} x {a.shape} x {z.shape}"
        )
    e = _as_canonical_csr((zt @ a) @ z)
    e.sort_indices()
    return e


@dataclass(frozen=True)
class BandedLU:
    """LU factors of a band matrix, stored LAPACK-style with row pivots."""

    n: int
    lower_bw: int
    upper_bw: int
    ab: np.ndarray
    ipiv: np.ndarray


def bandwidths(a: sp.csr_matrix) -> tuple[int, int]:
    """(lower, upper) half-bandwidths of the stored pattern."""
    a = _as_canonical_csr(a)
    if a.nnz == 0:
        return 0, 0
    rows = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    d = a.indices - rows
    return int(max(0, -d.min())), int(max(0, d.max()))


def banded_factor(a: sp.csr_matrix) -> BandedLU:
    """Band LU with partial pivoting; the band widens by lower_bw for fill."""
    a = _as_canonical_csr(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {a.shape}")
    kl, ku = bandwidths(a)
    ab = np.zeros((2 * kl + ku + 1, n))
    rows = np.repeat(np.arange(n), np.diff(a.indptr))
    ab[kl + ku + rows - a.indices, a.indices] = a.data
    ipiv = np.zeros(n, dtype=np.int64)
    info = _kernels.band_factor(ab, n, kl, ku, ipiv)
    if info != 0:
        raise SingularMatrixError(f"zero pivot in column {info - 1}")
    return BandedLU(n=n, lower_bw=kl, upper_bw=ku, ab=ab, ipiv=ipiv)


def banded_solve(f: BandedLU, b: np.ndarray) -> np.ndarray:
    if b.shape[0] != f.n:
        raise ValueError(f"dimension mismatch: n={f.n}, b has {b.shape[0]}")
    x = np.array(b, dtype=float)
    _kernels.band_solve(f.ab, f.ipiv, f.n, f.lower_bw, f.upper_bw, x)
    return x


@dataclass(frozen=True)
class ILU0Factors:
    """ILU(0) factors on the exact pattern of the input matrix.

    Strictly-lower entries of `lu` hold L's multipliers (unit diagonal
    implied); the diagonal and upper entries hold U.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    lu: np.ndarray
    diag_pos: np.ndarray

    def lower(self) -> sp.csr_matrix:
        """L as an explicit unit-diagonal CSR matrix."""
        l = sp.csr_matrix((self.lu.copy(), self.indices, self.indptr), shape=(self.n, self.n))
        l = sp.tril(l, k=-1, format="csr")
        return (l + sp.eye(self.n, format="csr")).tocsr()

    def upper(self) -> sp.csr_matrix:
        u = sp.csr_matrix((self.lu.copy(), self.indices, self.indptr), shape=(self.n, self.n))
        return sp.triu(u, k=0, format="csr")


def ilu0_factor(a: sp.csr_matrix) -> ILU0Factors:
    """Standard no-fill ILU in the natural ordering, no pivoting."""
    a = _as_canonical_csr(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {a.shape}")
    diag_pos = np.full(n, -1, dtype=np.int64)
    rows = np.repeat(np.arange(n), np.diff(a.indptr))
    on_diag = rows == a.indices
    diag_pos[rows[on_diag]] = np.nonzero(on_diag)[0]
    if (diag_pos < 0).any():
        missing = int(np.nonzero(diag_pos < 0)[0][0])
        raise ValueError(f"row {missing} stores no diagonal entry")
    lu = a.data.copy()
    info = _kernels.ilu0_factor(n, a.indptr, a.indices, lu, diag_pos)
    if info != 0:
        raise ZeroPivotError(info - 1)
    return ILU0Factors(n=n, indptr=a.indptr.copy(), indices=a.indices.copy(), lu=lu, diag_pos=diag_pos)


def ilu0_apply(f: ILU0Factors, r: np.ndarray) -> np.ndarray:
    """z = U^{-1} L^{-1} r."""
    if r.shape[0] != f.n:
        raise ValueError(f"dimension mismatch: n={f.n}, r has {r.shape[0]}")
    return _kernels.ilu0_solve(f.n, f.indptr, f.indices, f.lu, f.diag_pos, np.asarray(r, dtype=float))


def dense_lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Partial-pivoting LU solve on a dense matrix; test oracle, n <= 1000."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise ValueError(f"dimension mismatch: {a.shape}, {b.shape}")
    if n > 1000:
        raise ValueError("dense oracle capped at n=1000")
    scale = np.abs(a).max(initial=0.0)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= 1e-14 * scale:
            raise SingularMatrixError(f"singular to working precision at column {j}")
        if p != j:
            a[[j, p]] = a[[p, j]]
            b[[j, p]] = b[[p, j]]
        m = a[j + 1 :, j] / a[j, j]
        a[j + 1 :, j] = m
        a[j + 1 :, j + 1 :] -= np.outer(m, a[j, j + 1 :])
        b[j + 1 :] -= m * b[j]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x
