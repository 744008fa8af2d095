"""LP relaxations through scipy's HiGHS interface, behind the ``solve_lp`` contract."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from ..errors import SolverError
from .simplex import LpProblem, LpSolution, LpStatus


class HighsLp:
    """Caches the sparse row blocks of one LP so only bounds change between calls."""

    def __init__(self, lp: LpProblem):
        self.lp = lp
        s = lp.sense
        ub_rows = np.vstack([lp.A[s < 0], -lp.A[s > 0]])
        self.A_ub = csr_matrix(ub_rows) if ub_rows.shape[0] else None
        self.b_ub = np.concatenate([lp.b[s < 0], -lp.b[s > 0]]) if ub_rows.shape[0] else None
        self.A_eq = csr_matrix(lp.A[s == 0]) if np.any(s == 0) else None
        self.b_eq = lp.b[s == 0] if np.any(s == 0) else None

    def __call__(self, lp: LpProblem) -> LpSolution:
        res = linprog(
            -lp.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=np.column_stack([lp.lo, lp.hi]), method="highs",
        )
        if res.status == 2:
            return LpSolution(LpStatus.INFEASIBLE)
        if res.status != 0:
            raise SolverError(f"HiGHS failed: {res.message}")
        x = np.clip(res.x, lp.lo, lp.hi)
        return LpSolution(LpStatus.OPTIMAL, x, float(lp.c @ x), int(res.nit))
