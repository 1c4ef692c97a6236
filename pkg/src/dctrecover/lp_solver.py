"""Primal-dual interior-point LP solver (Mehrotra predictor-corrector).

The problem is taken in the bounded form of :class:`~.lp_model.LpProblem`.
Inequality rows get a slack ``w = a'v`` carrying the row bounds, so the
working problem is ``min c'u`` s.t. ``[A  -I] u = b``, ``lo <= u <= hi``.
Each Newton step eliminates the slacks and solves the quasidefinite
augmented system

    [ -(D_x + rho)      A'      ] [dx]   [r1]
    [      A        E + delta   ] [dy] = [r2]

with a sparse LDL' factorization.  The ordering (approximate minimum
degree) and the elimination tree are computed once per problem; only the
diagonal changes between iterations.  Small static regularization and
sign-preserving dynamic pivot regularization keep the factorization
stable; iterative refinement against the unregularized matrix recovers
the lost accuracy.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._kernels import get_backend
from .lp_model import LpProblem

__all__ = [
    "SolverSettings",
    "SolveStatus",
    "SolverStats",
    "Solution",
    "VerificationReport",
    "solve",
    "verify_solution",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-7
    max_iterations: int = 200
    threads: int = 1
    backend: str | None = None

    def __post_init__(self):
        if not 0.0 < self.tolerance <= 1e-2:
            raise ValueError("tolerance must lie in (0, 1e-2]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverStats:
    iterations: int = 0
    wall_time: float = 0.0
    matrix_nnz: int = 0
    kkt_nnz: int = 0
    factor_nnz: int = 0
    regularized_pivots: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    backend: str = ""


@dataclass
class Solution:
    values: np.ndarray
    objective: float
    status: SolveStatus
    stats: SolverStats
    row_duals: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


# static regularization and dynamic pivot thresholds
_RHO = 1e-8
_PIVOT_EPS = 1e-13
_PIVOT_DELTA = 2e-7
_STEP_FRACTION = 0.995
_REFINE_STEPS = 10


class _Kkt:
    """Fixed-pattern augmented matrix with a reusable symbolic analysis."""

    def __init__(self, a: sp.csr_matrix, backend):
        self.kern = backend
        m, n = a.shape
        self.n, self.m = n, m
        self.a = a
        self.at = a.T.tocsr()
        size = n + m
        eye_n = sp.identity(n, format="csr")
        eye_m = sp.identity(m, format="csr")
        full = sp.bmat([[eye_n, a.T], [a, eye_m]], format="csc")
        full.sort_indices()
        nnz = full.nnz
        # tag every stored entry so the permuted triangle can be refilled
        values = full.data.copy()
        full.data = np.arange(1, nnz + 1, dtype=np.float64)
        coo = full.tocoo()
        is_diag = coo.row == coo.col
        self.static = np.where(is_diag, 0.0, values)
        self.diag_slot = np.empty(size, dtype=np.intp)
        self.diag_slot[coo.row[is_diag]] = (coo.data[is_diag] - 1).astype(np.intp)

        perm = backend.amd(size, full.indptr.astype(np.intp), full.indices.astype(np.intp))
        self.perm = np.asarray(perm, dtype=np.intp)
        upper = sp.triu(full[self.perm][:, self.perm], format="csc")
        upper.sort_indices()
        self.up_ptr = upper.indptr.astype(np.intp)
        self.up_idx = upper.indices.astype(np.intp)
        self.tags = (upper.data - 1).astype(np.intp)
        self.parent, self.lp = backend.ldl_symbolic(size, self.up_ptr, self.up_idx)
        signs = np.concatenate([-np.ones(n), np.ones(m)])
        self.signs = np.ascontiguousarray(signs[self.perm])
        self.kkt_nnz = int(nnz)
        self.factor_nnz = int(self.lp[-1])
        self.bumped = 0

    def factor(self, dx: np.ndarray, e: np.ndarray):
        """Factor with ``-(dx + rho)`` on the variable block and
        ``e + rho`` on the row block."""
        diag = np.concatenate([-(dx + _RHO), e + _RHO])
        vals = self.static.copy()
        vals[self.diag_slot] = diag
        ux = np.ascontiguousarray(vals[self.tags])
        size = self.n + self.m
        li, lx, d, bumped = self.kern.ldl_numeric(
            size, self.up_ptr, self.up_idx, ux, self.lp, self.parent,
            self.signs, _PIVOT_EPS, _PIVOT_DELTA,
        )
        self.bumped += int(bumped)
        self.li, self.lx, self.d = li, lx, d
        self.dx_exact = dx
        self.e_exact = e
        return np.all(np.isfinite(d))

    def _apply(self, sol: np.ndarray) -> np.ndarray:
        n = self.n
        x, y = sol[:n], sol[n:]
        top = -self.dx_exact * x + self.at @ y
        bot = self.a @ x + self.e_exact * y
        return np.concatenate([top, bot])

    def _raw_solve(self, rhs: np.ndarray) -> np.ndarray:
        b = np.ascontiguousarray(rhs[self.perm])
        self.kern.ldl_solve(b.shape[0], self.lp, self.li, self.lx, self.d, b)
        out = np.empty_like(b)
        out[self.perm] = b
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        sol = self._raw_solve(rhs)
        norm = np.abs(rhs).max(initial=0.0)
        best = np.inf
        for _ in range(_REFINE_STEPS):
            res = rhs - self._apply(sol)
            err = np.abs(res).max(initial=0.0)
            if err <= 1e-14 * (1.0 + norm) or err >= best:
                break
            best = err
            sol = sol + self._raw_solve(res)
        return sol


def _max_step(t: np.ndarray, dt: np.ndarray) -> float:
    neg = dt < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-t[neg] / dt[neg]))


def solve(problem: LpProblem, settings: SolverSettings | None = None) -> Solution:
    """Solve ``problem`` to ``settings.tolerance`` (relative residuals and
    duality gap)."""
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    kern = get_backend(settings.backend)
    backend_name = "compiled" if kern.__name__.endswith("_csparse") else "python"
    stats = SolverStats(backend=backend_name, matrix_nnz=problem.nnz)

    nvar = problem.num_vars
    a_full = problem.matrix()
    a_full.sum_duplicates()
    a_full.eliminate_zeros()
    rl, ru = problem.row_lower, problem.row_upper
    lo_v, hi_v = problem.lower.astype(float), problem.upper.astype(float)

    def finish(status, values, row_duals=None, iters=0):
        stats.iterations = iters
        stats.wall_time = time.perf_counter() - t0
        obj = float(problem.objective @ values) if values is not None else float("nan")
        if values is None:
            values = np.full(nvar, np.nan)
        return Solution(values, obj, status,
                        stats, row_duals if row_duals is not None else np.zeros(problem.num_rows))

    if np.any(lo_v > hi_v) or np.any(rl > ru):
        return finish(SolveStatus.INFEASIBLE, None)

    # fixed variables move to the right-hand side
    fixed = lo_v == hi_v
    free_cols = np.flatnonzero(~fixed)
    fixed_val = np.where(fixed, lo_v, 0.0)
    shift = a_full @ fixed_val
    a = a_full[:, free_cols].tocsr()
    rl = rl - shift
    ru = ru - shift

    # rows without entries must already be satisfied; drop them, along with
    # rows that are unbounded on both sides
    row_nnz = np.diff(a.indptr)
    empty = row_nnz == 0
    if np.any(empty & ((rl > 1e-9 * (1 + np.abs(rl))) | (ru < -1e-9 * (1 + np.abs(ru))))):
        return finish(SolveStatus.INFEASIBLE, None)
    keep_rows = np.flatnonzero(~empty & (np.isfinite(rl) | np.isfinite(ru)))
    a = a[keep_rows]
    rl, ru = rl[keep_rows], ru[keep_rows]
    c = problem.objective[free_cols].astype(float)
    lo_x, hi_x = lo_v[free_cols], hi_v[free_cols]
    n = a.shape[1]
    m = a.shape[0]
    eq = rl == ru
    ineq = ~eq
    beq = np.where(eq, rl, 0.0)
    nw = int(ineq.sum())
    ineq_rows = np.flatnonzero(ineq)

    # working variables u = (x, w)
    lo = np.concatenate([lo_x, rl[ineq]])
    hi = np.concatenate([hi_x, ru[ineq]])
    cu = np.concatenate([c, np.zeros(nw)])
    has_lo = np.isfinite(lo)
    has_hi = np.isfinite(hi)
    lo0 = np.where(has_lo, lo, 0.0)
    hi0 = np.where(has_hi, hi, 0.0)

    kkt = _Kkt(a, kern)
    stats.kkt_nnz = kkt.kkt_nnz
    stats.factor_nnz = kkt.factor_nnz

    def amul(u):
        # [A  -I_ineq] u
        r = a @ u[:n]
        r[ineq_rows] -= u[n:]
        return r

    def atmul(y):
        return np.concatenate([a.T @ y, -y[ineq_rows]])

    # --- starting point ------------------------------------------------------
    ref = np.where(has_lo & has_hi, 0.5 * (lo0 + hi0),
                   np.where(has_lo, lo0 + 1.0, np.where(has_hi, hi0 - 1.0, 0.0)))
    x_ref = ref[:n]
    ok = kkt.factor(np.ones(n), np.where(eq, 0.0, 1.0))
    if ok:
        resid = np.where(eq, beq - a @ x_ref, 0.0)
        step = kkt.solve(np.concatenate([np.zeros(n), resid]))
        x_start = x_ref + step[:n]
    else:
        x_start = x_ref
    u = np.concatenate([x_start, a[ineq_rows] @ x_start])
    rng_ = np.where(has_lo & has_hi, hi0 - lo0, np.inf)
    margin = np.minimum(0.25 * rng_, 1.0)
    u = np.where(has_lo, np.maximum(u, lo0 + margin), u)
    u = np.where(has_hi, np.minimum(u, hi0 - margin), u)
    tl = np.where(has_lo, u - lo0, 1.0)
    tu = np.where(has_hi, hi0 - u, 1.0)
    y = np.zeros(m)
    zl = np.where(has_lo, np.maximum(cu, 0.0) + 1.0, 0.0)
    zu = np.where(has_hi, np.maximum(-cu, 0.0) + 1.0, 0.0)
    n_comp = int(has_lo.sum() + has_hi.sum())

    bnorm = 1.0 + max(np.abs(beq).max(initial=0.0),
                      np.abs(lo0).max(initial=0.0), np.abs(hi0).max(initial=0.0))
    cnorm = 1.0 + np.abs(cu).max(initial=0.0)
    tol = settings.tolerance
    status = SolveStatus.ITERATION_LIMIT
    it = 0

    def dual_objective():
        return float(beq @ y + lo0 @ zl - hi0 @ zu)

    for it in range(settings.max_iterations + 1):
        rp = beq - amul(u)
        rd = cu - atmul(y) - zl + zu
        pobj = float(cu @ u)
        dobj = dual_objective()
        pres = np.abs(rp).max(initial=0.0) / bnorm
        dres = np.abs(rd).max(initial=0.0) / cnorm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        stats.primal_residual, stats.dual_residual, stats.gap = pres, dres, gap
        log.debug("it %3d pobj %.9e dobj %.9e pres %.2e dres %.2e gap %.2e",
                  it, pobj, dobj, pres, dres, gap)
        if not (np.isfinite(pobj) and np.isfinite(dobj)):
            status = SolveStatus.NUMERICAL_FAILURE
            break
        if pres < tol and dres < tol and gap < tol:
            status = SolveStatus.OPTIMAL
            break
        if it == settings.max_iterations:
            break
        # primal infeasibility shows up as a diverging dual ray
        if pres > tol and dobj > 1e10 * (1.0 + abs(pobj)) and dres < tol:
            status = SolveStatus.INFEASIBLE
            break

        mu = float((tl[has_lo] @ zl[has_lo] + tu[has_hi] @ zu[has_hi]) / max(n_comp, 1))
        dvec = np.where(has_lo, zl / tl, 0.0) + np.where(has_hi, zu / tu, 0.0)
        dx_diag = dvec[:n]
        dw = dvec[n:]
        e = np.zeros(m)
        e[ineq_rows] = 1.0 / dw
        if not kkt.factor(dx_diag, e):
            status = SolveStatus.NUMERICAL_FAILURE
            break

        def direction(r_l, r_u):
            g = rd - np.where(has_lo, r_l / tl, 0.0) + np.where(has_hi, r_u / tu, 0.0)
            rhs2 = rp.copy()
            rhs2[ineq_rows] -= g[n:] / dw
            sol = kkt.solve(np.concatenate([g[:n], rhs2]))
            dxv, dy = sol[:n], sol[n:]
            dwv = -(g[n:] + dy[ineq_rows]) / dw
            du = np.concatenate([dxv, dwv])
            dzl = np.where(has_lo, (r_l - zl * du) / tl, 0.0)
            dzu = np.where(has_hi, (r_u + zu * du) / tu, 0.0)
            return du, dy, dzl, dzu

        # predictor
        du, dy, dzl, dzu = direction(-tl * zl, -tu * zu)
        ap = min(1.0, _max_step(tl[has_lo], du[has_lo]), _max_step(tu[has_hi], -du[has_hi]))
        ad = min(1.0, _max_step(zl[has_lo], dzl[has_lo]), _max_step(zu[has_hi], dzu[has_hi]))
        mu_aff = float(
            ((tl + ap * du)[has_lo] @ (zl + ad * dzl)[has_lo]
             + (tu - ap * du)[has_hi] @ (zu + ad * dzu)[has_hi]) / max(n_comp, 1)
        )
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        r_l = sigma * mu - tl * zl - du * dzl
        r_u = sigma * mu - tu * zu + du * dzu
        du, dy, dzl, dzu = direction(r_l, r_u)
        ap = min(1.0, _STEP_FRACTION * _max_step(tl[has_lo], du[has_lo]),
                 _STEP_FRACTION * _max_step(tu[has_hi], -du[has_hi]))
        ad = min(1.0, _STEP_FRACTION * _max_step(zl[has_lo], dzl[has_lo]),
                 _STEP_FRACTION * _max_step(zu[has_hi], dzu[has_hi]))
        if not (np.isfinite(ap) and np.isfinite(ad)):
            status = SolveStatus.NUMERICAL_FAILURE
            break
        u = u + ap * du
        tl = np.where(has_lo, tl + ap * du, 1.0)
        tu = np.where(has_hi, tu - ap * du, 1.0)
        y = y + ad * dy
        zl = zl + ad * dzl
        zu = zu + ad * dzu
        if ap < 1e-12 and ad < 1e-12:
            status = SolveStatus.NUMERICAL_FAILURE
            break

    stats.regularized_pivots = kkt.bumped
    values = fixed_val.copy()
    values[free_cols] = u[:n]
    duals = np.zeros(problem.num_rows)
    duals[keep_rows] = y
    return finish(status, values, duals, iters=it)


@dataclass
class VerificationReport:
    max_row_violation: float
    max_bound_violation: float
    objective: float
    relative_row_violation: float
    tolerance: float

    @property
    def feasible(self) -> bool:
        return self.relative_row_violation <= self.tolerance and self.max_bound_violation <= 0.0 + (
            self.tolerance * self.scale
        )

    scale: float = 1.0


def verify_solution(problem: LpProblem, values, tolerance: float = 1e-7) -> VerificationReport:
    """Recompute constraint and bound violations and the objective from the
    raw variable values, independently of the solver's own bookkeeping."""
    values = np.asarray(values, dtype=np.float64)
    act = np.zeros(problem.num_rows)
    np.add.at(act, problem.rows, problem.vals * values[problem.cols])
    over = np.maximum(act - problem.row_upper, 0.0)
    under = np.maximum(problem.row_lower - act, 0.0)
    row_viol = float(np.max(np.maximum(over, under), initial=0.0))
    bviol = float(
        np.max(np.maximum(problem.lower - values, values - problem.upper), initial=0.0)
    )
    bviol = max(bviol, 0.0)
    finite = np.concatenate([
        problem.row_lower[np.isfinite(problem.row_lower)],
        problem.row_upper[np.isfinite(problem.row_upper)],
        problem.lower[np.isfinite(problem.lower)],
        problem.upper[np.isfinite(problem.upper)],
    ])
    scale = 1.0 + float(np.abs(finite).max(initial=0.0))
    return VerificationReport(
        max_row_violation=row_viol,
        max_bound_violation=bviol,
        objective=float(problem.objective @ values),
        relative_row_violation=row_viol / scale,
        tolerance=tolerance,
        scale=scale,
    )
