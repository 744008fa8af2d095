from .bnb import LOG_HEADER, BnbEvent, SearchOrder, SolveOptions, SolveResult, SolveStatus, WarmStart, branch_and_bound
from .pipeline import solve_meu
from .simplex import LpProblem, LpSolution, LpStatus, solve_lp
from .spu import spu

__all__ = [
    "LOG_HEADER", "BnbEvent", "LpProblem", "LpSolution", "LpStatus", "SearchOrder", "SolveOptions", "SolveResult",
    "SolveStatus", "WarmStart", "branch_and_bound", "solve_lp", "solve_meu", "spu",
]
