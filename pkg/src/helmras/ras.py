"""One-level restricted additive Schwarz preconditioner.

The preconditioner applies z = sum_j R_j^T D_j solve_j(R_j r) where solve_j
is a banded LU, a deflated GMRES or an ILU(0)-preconditioned GMRES on the
local Dirichlet matrix, always from a zero initial guess.  Because the
Boolean ownership masks are disjoint, the scatter order cannot change the
result; subdomains are still processed in ascending id order so that inner
iteration accounting is reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .decomposition import LocalSystem, Partition, extract_local_matrix
from .deflation import DeflationContext, SubdomainTooSmallError, build_context, solve_deflated
from .krylov import SolverConfig, gmres
from .linalg import (
    BandedLU,
    ILU0Factors,
    SingularMatrixError,
    ZeroPivotError,
    banded_factor,
    banded_solve,
    ilu0_apply,
    ilu0_factor,
)

KINDS = ("direct", "deflated", "ilu0")


@dataclass(frozen=True)
class SubdomainStrategy:
    """How each local system is solved: direct LU or an inner GMRES variant."""

    kind: str
    inner_tol: Optional[float] = None
    inner_max_iterations: Optional[int] = None
    inner_restart: Optional[int] = None
    inner_metric: str = "deflated"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}, expected one of {KINDS}")
        if self.kind != "direct":
            if self.inner_tol is None or not 0.0 < self.inner_tol < 1.0:
                raise ValueError(f"iterative strategies need inner_tol in (0, 1), got {self.inner_tol}")
        if self.inner_metric not in ("deflated", "true"):
            raise ValueError(f"unknown inner metric {self.inner_metric!r}")

    @classmethod
    def direct(cls) -> "SubdomainStrategy":
        return cls(kind="direct")

    @classmethod
    def deflated(cls, inner_tol: float, **kw) -> "SubdomainStrategy":
        return cls(kind="deflated", inner_tol=inner_tol, **kw)

    @classmethod
    def ilu0(cls, inner_tol: float, **kw) -> "SubdomainStrategy":
        return cls(kind="ilu0", inner_tol=inner_tol, **kw)


class _DirectSolver:
    iterative = False

    def __init__(self, local: LocalSystem, factor: BandedLU):
        self.local = local
        self.factor = factor

    def solve(self, r):
        return banded_solve(self.factor, r), 0, True


class _DeflatedSolver:
    iterative = True

    def __init__(self, local: LocalSystem, ctx: DeflationContext, cfg: SolverConfig, metric: str):
        self.local = local
        self.ctx = ctx
        self.cfg = cfg
        self.metric = metric

    def solve(self, r):
        z, rep = solve_deflated(self.ctx, self.local.a, r, self.cfg, metric=self.metric)
        return z, rep.iterations, rep.converged


class _Ilu0Solver:
    iterative = True

    def __init__(self, local: LocalSystem, factors: ILU0Factors, cfg: SolverConfig):
        self.local = local
        self.factors = factors
        self.cfg = cfg

    def solve(self, r):
        a = self.local.a
        z, rep = gmres(lambda v: a @ v, lambda v: ilu0_apply(self.factors, v), r, None, self.cfg)
        return z, rep.iterations, rep.converged


class RASPreconditioner:
    """Prepared per-subdomain solvers plus inner-iteration accounting."""

    def __init__(self, partition: Partition, solvers, setup_time: float, fallback_ids):
        self.partition = partition
        self.solvers = solvers
        self.setup_time = setup_time
        self.fallback_ids = tuple(fallback_ids)
        self.total_inner_iterations = 0
        self.total_subdomain_solves = 0
        self.applications = 0
        self.non_converged_solves = 0

    @property
    def average_inner_iterations(self) -> float:
        if self.total_subdomain_solves == 0:
            return 0.0
        return self.total_inner_iterations / self.total_subdomain_solves

    def reset_counters(self) -> None:
        self.total_inner_iterations = 0
        self.total_subdomain_solves = 0
        self.applications = 0
        self.non_converged_solves = 0

    def apply(self, r: np.ndarray, order: Optional[Iterable[int]] = None) -> np.ndarray:
        n = self.partition.n_glob * self.partition.n_glob
        if r.shape[0] != n:
            raise ValueError(f"dimension mismatch: expected {n}, got {r.shape[0]}")
        z = np.zeros(n)
        ids = range(self.partition.N) if order is None else order
        for j in ids:
            sd = self.partition.subdomains[j]
            r_j = r[sd.indices]
            z_j, its, ok = self.solvers[j].solve(r_j)
            z[sd.indices[sd.owned_mask]] = z_j[sd.owned_mask]
            self.total_inner_iterations += its
            self.total_subdomain_solves += 1
            if not ok:
                self.non_converged_solves += 1
        self.applications += 1
        return z


def build_ras(a: sp.csr_matrix, p: Partition, strategy: SubdomainStrategy) -> RASPreconditioner:
    """Extract all local systems and prepare their solvers eagerly."""
    t0 = time.perf_counter()
    solvers = []
    fallbacks = []
    for j in range(p.N):
        local = extract_local_matrix(a, p, j)
        inner_cfg = None
        if strategy.kind != "direct":
            inner_cfg = SolverConfig(
                rel_tol=strategy.inner_tol,
                max_iterations=strategy.inner_max_iterations or 10 * local.a.shape[0],
                restart=strategy.inner_restart,
            )
        try:
            if strategy.kind == "direct":
                solvers.append(_DirectSolver(local, banded_factor(local.a)))
            elif strategy.kind == "deflated":
                if local.nx < 4 or local.ny < 4:
                    # Coarse stencil does not fit; solve this block directly.
                    solvers.append(_DirectSolver(local, banded_factor(local.a)))
                    fallbacks.append(j)
                else:
                    solvers.append(_DeflatedSolver(local, build_context(local), inner_cfg, strategy.inner_metric))
            else:
                solvers.append(_Ilu0Solver(local, ilu0_factor(local.a), inner_cfg))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"subdomain {j}: {exc}") from exc
        except ZeroPivotError as exc:
            raise ZeroPivotError(exc.row, f"subdomain {j}: {exc}") from exc
    return RASPreconditioner(p, solvers, time.perf_counter() - t0, fallbacks)


def apply_ras(m: RASPreconditioner, r: np.ndarray, order: Optional[Iterable[int]] = None) -> np.ndarray:
    return m.apply(r, order=order)
