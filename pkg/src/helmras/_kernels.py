"""Compiled kernels: banded LU, ILU(0) and the Arnoldi inner loops.

Everything here is deterministic (fixed accumulation order, no fastmath) so
repeated solves with identical inputs are bitwise identical.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def band_factor(ab, n, kl, ku, ipiv):
    """In-place LU of a band matrix with partial pivoting (LAPACK gbtrf layout).

    ab has 2*kl+ku+1 rows; entry (i, j) lives at ab[kl+ku+i-j, j] and the top
    kl rows are fill workspace.  Returns 0 on success, j+1 if column j has an
    exactly zero pivot.
    """
    kv = kl + ku
    for j in range(n):
        km = min(kl, n - 1 - j)
        piv = 0
        pmax = abs(ab[kv, j])
        for t in range(1, km + 1):
            v = abs(ab[kv + t, j])
            if v > pmax:
                pmax = v
                piv = t
        ipiv[j] = j + piv
        if ab[kv + piv, j] == 0.0:
            return j + 1
        jmax = min(j + kv, n - 1)
        if piv != 0:
            for c in range(j, jmax + 1):
                r1 = kv + j - c
                r2 = r1 + piv
                tmp = ab[r1, c]
                ab[r1, c] = ab[r2, c]
                ab[r2, c] = tmp
        pivval = ab[kv, j]
        for t in range(1, km + 1):
            m = ab[kv + t, j] / pivval
            ab[kv + t, j] = m
            for c in range(j + 1, jmax + 1):
                ab[kv + t + j - c, c] -= m * ab[kv + j - c, c]
    return 0


@njit(cache=True)
def band_solve(ab, ipiv, n, kl, ku, b):
    """Solve with a band_factor result; b is overwritten with the solution."""
    kv = kl + ku
    if kl > 0:
        for j in range(n - 1):
            ip = ipiv[j]
            if ip != j:
                tmp = b[ip]
                b[ip] = b[j]
                b[j] = tmp
            km = min(kl, n - 1 - j)
            for t in range(1, km + 1):
                b[j + t] -= ab[kv + t, j] * b[j]
    for j in range(n - 1, -1, -1):
        s = b[j]
        cmax = min(j + kv, n - 1)
        for c in range(j + 1, cmax + 1):
            s -= ab[kv + j - c, c] * b[c]
        b[j] = s / ab[kv, j]


@njit(cache=True)
def ilu0_factor(n, indptr, indices, data, diag_pos):
    """In-place ILU(0) on a CSR matrix with sorted indices (IKJ variant).

    L's multipliers overwrite the strictly-lower entries, U the rest.  Returns
    0 on success, i+1 if row i hits a zero pivot.
    """
    for i in range(n):
        row_end = indptr[i + 1]
        for kp in range(indptr[i], row_end):
            k = indices[kp]
            if k >= i:
                break
            dk = data[diag_pos[k]]
            if dk == 0.0:
                return k + 1
            m = data[kp] / dk
            data[kp] = m
            kp2 = diag_pos[k] + 1
            ip2 = kp + 1
            kend = indptr[k + 1]
            while kp2 < kend and ip2 < row_end:
                ck = indices[kp2]
                ci = indices[ip2]
                if ck == ci:
                    data[ip2] -= m * data[kp2]
                    kp2 += 1
                    ip2 += 1
                elif ck < ci:
                    kp2 += 1
                else:
                    ip2 += 1
        if data[diag_pos[i]] == 0.0:
            return i + 1
    return 0


@njit(cache=True)
def ilu0_solve(n, indptr, indices, lu, diag_pos, r):
    """Forward substitution with unit-diagonal L, then backward with U."""
    x = r.copy()
    for i in range(n):
        s = x[i]
        for p in range(indptr[i], diag_pos[i]):
            s -= lu[p] * x[indices[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag_pos[i] + 1, indptr[i + 1]):
            s -= lu[p] * x[indices[p]]
        x[i] = s / lu[diag_pos[i]]
    return x


@njit(cache=True)
def mgs_step(v_rows, m, w, h):
    """Single-pass modified Gram-Schmidt of w against the first m rows of v_rows."""
    nn = w.size
    for i in range(m):
        s = 0.0
        vi = v_rows[i]
        for t in range(nn):
            s += vi[t] * w[t]
        h[i] = s
        for t in range(nn):
            w[t] -= s * vi[t]


@njit(cache=True)
def givens_update(h, cs, sn, g, j):
    """Rotate a fresh Hessenberg column into triangular form.

    Applies rotations 0..j-1 to h[0..j+1], forms rotation j from the trailing
    pair and updates the least-squares right-hand side g.  Returns the new
    residual-norm estimate |g[j+1]|.
    """
    for i in range(j):
        t = cs[i] * h[i] + sn[i] * h[i + 1]
        h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1]
        h[i] = t
    a = h[j]
    b = h[j + 1]
    r = math.hypot(a, b)
    if r == 0.0:
        cs[j] = 1.0
        sn[j] = 0.0
    else:
        cs[j] = a / r
        sn[j] = b / r
    h[j] = r
    h[j + 1] = 0.0
    g[j + 1] = -sn[j] * g[j]
    g[j] = cs[j] * g[j]
    return abs(g[j + 1])
