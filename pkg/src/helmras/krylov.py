"""Right-preconditioned GMRES and flexible GMRES.

Both solvers run Arnoldi with single-pass modified Gram-Schmidt and Givens
rotations, judge convergence on the relative residual of the original system
(right preconditioning keeps the Arnoldi estimate equal to the true residual
in exact arithmetic) and recompute the true residual before reporting
success.  `restart=None` means unrestarted, the default everywhere.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import _kernels

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float
    max_iterations: int
    restart: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restart is not None and self.restart < 1:
            raise ValueError(f"restart must be >= 1 or None, got {self.restart}")


@dataclass
class SolveReport:
    """Outcome of one (F)GMRES run; iterations count Arnoldi steps across cycles."""

    iterations: int
    converged: bool
    relative_residuals: np.ndarray
    final_true_relative_residual: float
    wall_time: float
    # Filled by the deflated subdomain solve: residual of the undeflated system.
    reconstruction_relative_residual: Optional[float] = None
    # Debug payload (last cycle only), populated on request.
    basis: Optional[np.ndarray] = field(default=None, repr=False)
    hessenberg: Optional[np.ndarray] = field(default=None, repr=False)


class _Rows:
    """Row buffer that grows geometrically, then in fixed chunks."""

    def __init__(self, n: int, cap: int = 32):
        self._buf = np.empty((cap, n))
        self.m = 0

    def push(self, v: np.ndarray) -> None:
        if self.m == self._buf.shape[0]:
            extra = self._buf.shape[0] if self._buf.shape[0] < 512 else 128
            self._buf = np.concatenate([self._buf, np.empty((extra, self._buf.shape[1]))])
        self._buf[self.m] = v
        self.m += 1

    def view(self, m: Optional[int] = None) -> np.ndarray:
        return self._buf[: self.m if m is None else m]


def gmres(
    apply_a: Operator,
    apply_m: Optional[Operator],
    b: np.ndarray,
    x0: Optional[np.ndarray],
    cfg: SolverConfig,
    keep_basis: bool = False,
) -> tuple[np.ndarray, SolveReport]:
    """Right-preconditioned GMRES with a fixed linear preconditioner."""
    return _krylov_solve(apply_a, apply_m, b, x0, cfg, flexible=False, keep_basis=keep_basis)


def fgmres(
    apply_a: Operator,
    apply_m: Optional[Operator],
    b: np.ndarray,
    x0: Optional[np.ndarray],
    cfg: SolverConfig,
    keep_basis: bool = False,
) -> tuple[np.ndarray, SolveReport]:
    """Flexible GMRES: the preconditioner may change between iterations."""
    return _krylov_solve(apply_a, apply_m, b, x0, cfg, flexible=True, keep_basis=keep_basis)


def _krylov_solve(apply_a, apply_m, b, x0, cfg, flexible, keep_basis):
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)

    b_norm = float(np.linalg.norm(b))
    scale = b_norm if b_norm > 0.0 else 1.0
    tol_abs = cfg.rel_tol * scale

    r = b - apply_a(x)
    r_norm = float(np.linalg.norm(r))
    history = [r_norm / scale]
    total = 0
    converged = False
    stagnant = 0
    basis = hess = None

    while True:
        if r_norm <= tol_abs:
            converged = True
            break
        if total >= cfg.max_iterations or stagnant >= 2:
            break

        m_cap = cfg.max_iterations - total
        if cfg.restart is not None:
            m_cap = min(m_cap, cfg.restart)
        dx, steps, ests, cyc_basis, cyc_hess = _arnoldi_cycle(
            apply_a, apply_m, r, r_norm, m_cap, tol_abs, flexible, keep_basis
        )
        total += steps
        history.extend(e / scale for e in ests)
        x = x + dx
        if keep_basis:
            basis, hess = cyc_basis, cyc_hess

        # Convergence is always verified on the recomputed residual; a cycle
        # that fails to reduce it (breakdown on a singular operator, say)
        # would loop forever, hence the stagnation counter.
        r = b - apply_a(x)
        new_norm = float(np.linalg.norm(r))
        stagnant = stagnant + 1 if new_norm >= r_norm * (1.0 - 1e-12) else 0
        r_norm = new_norm

    report = SolveReport(
        iterations=total,
        converged=converged,
        relative_residuals=np.asarray(history),
        final_true_relative_residual=r_norm / scale,
        wall_time=time.perf_counter() - t0,
        basis=basis,
        hessenberg=hess,
    )
    return x, report


def _arnoldi_cycle(apply_a, apply_m, r0, r_norm, m_cap, tol_abs, flexible, keep_basis):
    n = r0.shape[0]
    v = _Rows(n)
    v.push(r0 / r_norm)
    z = _Rows(n) if flexible else None

    cap = min(m_cap, 64)
    rmat = np.zeros((cap, cap))
    hraw = np.zeros((cap + 1, cap)) if keep_basis else None
    cs = np.zeros(cap)
    sn = np.zeros(cap)
    g = np.zeros(cap + 1)
    g[0] = r_norm

    ests = []
    steps = 0
    h = np.zeros(m_cap + 2)

    for j in range(m_cap):
        if j == cap:
            cap = min(m_cap, 2 * cap)
            rmat = _grow(rmat, (cap, cap))
            if hraw is not None:
                hraw = _grow(hraw, (cap + 1, cap))
            cs = _pad(cs, cap)
            sn = _pad(sn, cap)
            g = _pad(g, cap + 1)

        zj = v.view()[j] if apply_m is None else apply_m(v.view()[j])
        if flexible:
            z.push(zj)
        w = np.array(apply_a(zj), dtype=float)
        _kernels.mgs_step(v.view(), j + 1, w, h)
        h_next = float(np.linalg.norm(w))
        hcol = h[: j + 2]
        hcol[j + 1] = h_next
        if keep_basis:
            hraw[: j + 2, j] = hcol
        est = _kernels.givens_update(hcol, cs, sn, g, j)
        rmat[: j + 1, j] = hcol[: j + 1]
        steps += 1
        ests.append(est)

        breakdown = h_next == 0.0 or not np.isfinite(h_next)
        if not breakdown:
            v.push(w / h_next)
        if est <= tol_abs or breakdown or j == m_cap - 1:
            break

    s = steps
    while s > 0 and rmat[s - 1, s - 1] == 0.0:
        s -= 1
    if s == 0:
        dx = np.zeros(n)
    else:
        y = scipy.linalg.solve_triangular(rmat[:s, :s], g[:s])
        if flexible:
            dx = z.view(s).T @ y
        else:
            combo = v.view(s).T @ y
            dx = combo if apply_m is None else np.asarray(apply_m(combo), dtype=float)

    basis = hess = None
    if keep_basis:
        basis = v.view().copy()
        hess = hraw[: steps + 1, :steps].copy()
    return dx, steps, ests, basis, hess


def _grow(mat, shape):
    out = np.zeros(shape)
    out[: mat.shape[0], : mat.shape[1]] = mat
    return out


def _pad(a, size):
    out = np.zeros(size)
    out[: a.size] = a
    return out
