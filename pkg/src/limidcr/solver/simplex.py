"""Dense bounded-variable primal simplex.

Maximizes ``c @ x`` subject to ``A x (<=, =, >=) b`` and finite box bounds.
Nonbasic variables sit at one of their bounds, so bound constraints never
become tableau rows. Phase one minimizes the sum of artificial variables;
phase two keeps them pinned at zero. Dantzig pricing is used until a run of
degenerate pivots is seen, then Bland's rule takes over until progress
resumes.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import SolverError

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
STALL_LIMIT = 30

_SENSE = {"<=": -1, "=": 0, ">=": 1}


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass
class LpProblem:
    A: np.ndarray
    sense: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    b: np.ndarray
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_constraints(cls, n: int, constraints: Sequence, objective: Mapping[int, float], lo=None, hi=None):
        """Build from objects with ``coefficients``, ``relation`` and ``rhs``."""
        A = np.zeros((len(constraints), n))
        for i, con in enumerate(constraints):
            for j, v in con.coefficients.items():
                A[i, j] = v
        sense = np.array([_SENSE[con.relation] for con in constraints], dtype=int)
        b = np.array([con.rhs for con in constraints], dtype=float)
        c = np.zeros(n)
        for j, v in objective.items():
            c[j] = v
        lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)
        hi = np.ones(n) if hi is None else np.asarray(hi, dtype=float)
        return cls(A, sense, b, c, lo, hi)

    def with_bounds(self, lo, hi) -> LpProblem:
        return LpProblem(self.A, self.sense, self.b, self.c, np.asarray(lo, float), np.asarray(hi, float))

    def violation(self, x) -> float:
        """Largest violation of any row or bound by ``x``."""
        worst = max(float(np.max(self.lo - x, initial=0.0)), float(np.max(x - self.hi, initial=0.0)))
        if len(self.b):
            r = self.A @ x - self.b
            worst = max(
                worst,
                float(np.max(np.where(self.sense == 0, np.abs(r), 0.0))),
                float(np.max(np.where(self.sense < 0, r, 0.0))),
                float(np.max(np.where(self.sense > 0, -r, 0.0))),
            )
        return worst


@dataclass
class LpSolution:
    status: LpStatus
    values: np.ndarray | None = None
    objective: float = float("-inf")
    iterations: int = 0


class _Tableau:
    def __init__(self, M, b, lo, hi, basis, x, max_iter):
        self.M, self.b = M, b
        self.lo, self.hi = lo, hi
        self.basis = basis
        self.x = x  # every column; basic entries refreshed by sync()
        self.max_iter = max_iter
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.M)
            nonbasic = np.ones(self.M.shape[1], bool)
            nonbasic[self.basis] = False
            self.xB = np.linalg.solve(B, self.b - self.M[:, nonbasic] @ self.x[nonbasic])
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis") from exc
        self.T[np.abs(self.T) < 1e-13] = 0.0

    def sync(self):
        self.x[self.basis] = self.xB
        return self.x

    def run(self, cost, blocked):
        """Optimize ``cost`` from the current basis; ``blocked`` columns never enter."""
        d = cost - cost[self.basis] @ self.T
        in_basis = np.zeros(len(cost), bool)
        in_basis[self.basis] = True
        bland = False
        stalled = 0
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError(f"simplex iteration limit {self.max_iter} reached")
            movable = ~in_basis & ~blocked & (self.hi - self.lo > PIVOT_TOL)
            at_lo = self.x <= self.lo + PIVOT_TOL
            gain = np.where(movable & at_lo, d, 0.0)
            gain = np.where(movable & ~at_lo, -d, gain)
            candidates = np.flatnonzero(gain > COST_TOL)
            if candidates.size == 0:
                return
            j = int(candidates[0]) if bland else int(candidates[np.argmax(gain[candidates])])
            direction = 1.0 if at_lo[j] else -1.0
            col = self.T[:, j]
            alpha = direction * col
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                limit = np.full(len(alpha), np.inf)
                down = alpha > PIVOT_TOL
                up = alpha < -PIVOT_TOL
                limit[down] = (self.xB[down] - lb[down]) / alpha[down]
                limit[up] = (ub[up] - self.xB[up]) / -alpha[up]
            limit = np.maximum(limit, 0.0)
            flip = self.hi[j] - self.lo[j]
            theta = float(limit.min()) if limit.size else np.inf
            self.iterations += 1
            if flip <= theta:
                theta = flip
                if not np.isfinite(theta):
                    raise SolverError("LP is unbounded")
                self.xB -= theta * alpha
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                stalled = 0
                bland = False
                continue
            ties = np.flatnonzero(limit <= theta + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = self.basis[r]
            self.xB -= theta * alpha
            entering_value = self.x[j] + direction * theta
            self.x[leaving] = lb[r] if alpha[r] > 0 else ub[r]
            pivot_row = self.T[r] / col[r]
            self.T -= np.outer(col, pivot_row)
            self.T[r] = pivot_row
            d = d - d[j] * pivot_row
            self.xB[r] = entering_value
            self.basis[r] = j
            in_basis[leaving] = False
            in_basis[j] = True
            self.xB = np.clip(self.xB, self.lo[self.basis], self.hi[self.basis])
            if theta < 1e-12:
                stalled += 1
                if stalled > STALL_LIMIT:
                    bland = True
            else:
                stalled = 0
                bland = False


def solve_lp(lp: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve the LP; the optimum is a basic (vertex) solution."""
    lo, hi = np.asarray(lp.lo, float), np.asarray(lp.hi, float)
    n = len(lp.c)
    if np.any(lo > hi + 1e-12) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return LpSolution(LpStatus.INFEASIBLE)

    # Fixed columns are substituted out before the tableau is built.
    fixed = hi - lo <= 1e-12
    free = np.flatnonzero(~fixed)
    x_full = np.where(fixed, lo, 0.0)
    A = lp.A[:, free]
    b = lp.b - lp.A[:, fixed] @ lo[fixed]
    keep = np.any(np.abs(A) > 0, axis=1)
    for i in np.flatnonzero(~keep):
        s = lp.sense[i]
        if (s == 0 and abs(b[i]) > FEAS_TOL) or (s < 0 and b[i] < -FEAS_TOL) or (s > 0 and b[i] > FEAS_TOL):
            return LpSolution(LpStatus.INFEASIBLE)
    A, b, sense = A[keep], b[keep], lp.sense[keep]
    m, k = A.shape
    flo, fhi = lo[free], hi[free]

    if m == 0:
        c = lp.c[free]
        x_full[free] = np.where(c > 0, fhi, flo)
        return LpSolution(LpStatus.OPTIMAL, x_full, float(lp.c @ x_full))

    resid = b - A @ flo
    slack_rows = np.flatnonzero(sense != 0)
    n_slack = len(slack_rows)
    S = np.zeros((m, n_slack))
    S[slack_rows, np.arange(n_slack)] = np.where(sense[slack_rows] < 0, 1.0, -1.0)
    basis = np.empty(m, dtype=int)
    art_rows = []
    slack_of_row = {int(r): i for i, r in enumerate(slack_rows)}
    for i in range(m):
        if i in slack_of_row and resid[i] * S[i, slack_of_row[i]] >= 0:
            basis[i] = k + slack_of_row[i]
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    R = np.zeros((m, n_art))
    for a, i in enumerate(art_rows):
        R[i, a] = 1.0 if resid[i] >= 0 else -1.0
        basis[i] = k + n_slack + a
    M = np.hstack([A, S, R])
    N = M.shape[1]
    lo_all = np.concatenate([flo, np.zeros(n_slack + n_art)])
    hi_all = np.concatenate([fhi, np.full(n_slack, np.inf), np.full(n_art, np.inf)])
    x = lo_all.copy()
    tab = _Tableau(M, b, lo_all, hi_all, basis, x, max_iter or 50 * (m + N) + 1000)

    artificial = np.zeros(N, bool)
    artificial[k + n_slack:] = True
    if n_art:
        tab.run(np.where(artificial, -1.0, 0.0), np.zeros(N, bool))
        tab.sync()
        scale = max(1.0, float(np.max(np.abs(b))))
        if float(tab.x[artificial].sum()) > 1e-8 * scale:
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations)
        tab.hi[artificial] = 0.0
        tab.xB = np.clip(tab.xB, tab.lo[tab.basis], tab.hi[tab.basis])
        tab.x[artificial & (tab.x > 0)] = 0.0

    cost = np.concatenate([lp.c[free], np.zeros(n_slack + n_art)])
    for attempt in range(2):
        tab.run(cost, artificial)
        x_full[free] = tab.sync()[:k]
        if lp.violation(x_full) <= FEAS_TOL:
            return LpSolution(LpStatus.OPTIMAL, x_full.copy(), float(lp.c @ x_full), tab.iterations)
        tab.refactor()
    raise SolverError(f"LP solution violates constraints by {lp.violation(x_full):.3g} after refactorization")
