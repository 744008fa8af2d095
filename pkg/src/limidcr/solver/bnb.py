"""Anytime branch-and-bound over the policy and vertex binaries.

The incumbent value (LB) only grows and the best open bound (UB) only
shrinks, so stopping early still returns a strategy together with a
guaranteed relative gap. All values here live on the normalized scale; the
optional ``info`` maps the reported numbers back to utility units.
"""

from __future__ import annotations

import heapq
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..credal import StrategySelection
from ..model import NormalizationInfo, Strategy, denormalize_eu
from ..reform import MilpProblem, Product, extract_selection, round_groups
from .highs import HighsLp
from .simplex import LpProblem, LpStatus, solve_lp

PRUNE_TOL = 1e-9
INT_TOL = 1e-6


class SearchOrder(str, Enum):
    BEST_BOUND = "best-bound"
    DEPTH_FIRST = "depth-first"


class WarmStart(str, Enum):
    SPU = "spu"
    NONE = "none"


class SolveStatus(str, Enum):
    PROVEN = "Proven"
    STOPPED = "Stopped"


@dataclass
class SolveOptions:
    time_limit: float | None = None
    node_limit: int | None = None
    gap_tolerance: float = 0.0
    search: SearchOrder = SearchOrder.BEST_BOUND
    warm_start: WarmStart = WarmStart.SPU
    lp_backend: str = "highs"
    spu_max_sweeps: int = 100

    def __post_init__(self):
        if self.gap_tolerance < 0:
            raise ValueError("gap_tolerance must be >= 0")
        self.search = SearchOrder(self.search)
        self.warm_start = WarmStart(self.warm_start)
        if self.lp_backend not in ("highs", "simplex"):
            raise ValueError(f"unknown LP backend {self.lp_backend!r}")


@dataclass(frozen=True)
class BnbEvent:
    time: float
    node: int
    lp_bound: float
    lb: float
    ub: float
    gap: float

    def tsv(self) -> str:
        return f"{self.time:.6f}\t{self.node}\t{self.lp_bound:.12g}\t{self.lb:.12g}\t{self.ub:.12g}\t{self.gap:.12g}"


LOG_HEADER = "time\tnode\tlp_bound\tlb\tub\tgap_percent"


@dataclass
class SolveResult:
    strategy: Strategy
    eu: float
    upper_bound: float
    gap_percent: float
    nodes_evaluated: int
    status: SolveStatus
    lb_normalized: float = math.nan
    ub_normalized: float = math.nan
    selection: StrategySelection | None = None
    events: list[BnbEvent] = field(default_factory=list)


def gap_percent(lb: float, ub: float) -> float:
    if not math.isfinite(lb) or not math.isfinite(ub):
        return math.inf
    return max(0.0, 100.0 * (ub - lb) / max(abs(ub), 1e-12))


@dataclass
class _Node:
    id: int
    bound: float
    lo: np.ndarray
    hi: np.ndarray
    x: np.ndarray


def assignment_from_selection(milp: MilpProblem, selection: StrategySelection) -> np.ndarray:
    x = np.zeros(len(milp.variables))
    for i, (d, j, a) in milp.strategy_map.items():
        x[i] = float(np.asarray(selection.decisions[d])[j, a])
    for i, (v, j, k) in milp.vertex_map.items():
        x[i] = 1.0 if selection.vertices[v][j] == k else 0.0
    return x


def branch_and_bound(
    milp: MilpProblem,
    options: SolveOptions | None = None,
    incumbent0: tuple[StrategySelection | Strategy, float] | None = None,
    *,
    evaluate: Callable[[StrategySelection], float] | None = None,
    info: NormalizationInfo | None = None,
    on_event: Callable[[BnbEvent], None] | None = None,
) -> SolveResult:
    """Maximize the MILP objective.

    ``evaluate`` gives the exact objective of an integral selection; when
    omitted the LP with every binary fixed is solved instead. With every
    binary fixed the linearized program has a unique feasible point, so both
    agree.
    """
    options = options or SolveOptions()
    start = time.perf_counter()
    n = len(milp.variables)
    base = LpProblem.from_constraints(n, milp.constraints, milp.objective)
    lp_solve = HighsLp(base) if options.lp_backend == "highs" else solve_lp
    binaries = np.array(milp.binaries, dtype=int)
    group_of = {i: g for g in milp.groups for i in g}
    products_of: dict[int, list[int]] = {}
    for v in milp.variables:
        if isinstance(v.kind, Product):
            products_of.setdefault(v.kind.b, []).append(v.index)

    scale = (lambda z: denormalize_eu(z, info)) if info else (lambda z: z)
    cache: dict[bytes, float] = {}
    events: list[BnbEvent] = []
    nodes = 0
    counter = 0
    lb, best = -math.inf, None
    ub = math.inf

    def exact(x) -> float:
        key = np.round(x[binaries]).astype(np.int8).tobytes()
        if key not in cache:
            sel = extract_selection(milp, x)
            if evaluate is not None:
                cache[key] = float(evaluate(sel))
            else:
                lo, hi = base.lo.copy(), base.hi.copy()
                lo[binaries] = hi[binaries] = np.round(x[binaries])
                sol = lp_solve(base.with_bounds(lo, hi))
                cache[key] = sol.objective if sol.status is LpStatus.OPTIMAL else -math.inf
        return cache[key]

    def offer(x, value):
        nonlocal lb, best
        if value > lb:
            lb, best = value, np.round(x).copy()

    def log(node_id, bound):
        nonlocal ub
        ev = BnbEvent(time.perf_counter() - start, node_id, bound, lb, max(ub, lb), gap_percent(lb, max(ub, lb)))
        events.append(ev)
        if on_event:
            on_event(ev)

    def propagate(lo, hi, j, val):
        lo[j] = hi[j] = val
        group = group_of.get(j, [j])
        if val == 1:
            for i in group:
                if i != j:
                    lo[i] = hi[i] = 0.0
        else:
            free = [i for i in group if hi[i] > lo[i]]
            if not free and not any(lo[i] == 1 for i in group):
                return False
            if len(free) == 1 and not any(lo[i] == 1 for i in group):
                lo[free[0]] = hi[free[0]] = 1.0
        for i in group:
            if hi[i] == 0.0:
                for y in products_of.get(i, ()):
                    hi[y] = 0.0
        return True

    if incumbent0 is not None:
        sel, value = incumbent0
        if isinstance(sel, Strategy):
            sel = StrategySelection.from_strategy(sel)
        offer(assignment_from_selection(milp, sel), float(value))

    open_nodes: list = []

    def push(node):
        if options.search is SearchOrder.BEST_BOUND:
            heapq.heappush(open_nodes, (-node.bound, node.id, node))
        else:
            open_nodes.append((None, node.id, node))

    def evaluate_node(lo, hi):
        nonlocal nodes, counter, ub
        nodes += 1
        node_id = counter
        counter += 1
        if np.all(lo[binaries] == hi[binaries]):
            x = lo.copy()
            value = exact(x)
            offer(x, value)
            log(node_id, value)
            return None
        sol = lp_solve(base.with_bounds(lo, hi))
        if sol.status is not LpStatus.OPTIMAL:
            log(node_id, -math.inf)
            return None
        rounded = round_groups(milp, sol.values)
        offer(rounded, exact(rounded))
        if node_id == 0:
            ub = sol.objective
        log(node_id, sol.objective)
        return _Node(node_id, sol.objective, lo, hi, sol.values)

    root = evaluate_node(base.lo.copy(), base.hi.copy())
    if root is not None:
        ub = max(root.bound, lb)
        push(root)
    status = SolveStatus.PROVEN
    while True:
        bounds = [entry[2].bound for entry in open_nodes]
        ub = min(ub, max(max(bounds, default=-math.inf), lb))
        if not open_nodes:
            ub = lb
            break
        if best is not None and gap_percent(lb, ub) <= options.gap_tolerance:
            break
        if options.node_limit is not None and nodes >= options.node_limit:
            status = SolveStatus.STOPPED
            break
        if options.time_limit is not None and time.perf_counter() - start >= options.time_limit:
            status = SolveStatus.STOPPED
            break
        if options.search is SearchOrder.BEST_BOUND:
            node = heapq.heappop(open_nodes)[2]
        else:
            node = open_nodes.pop()[2]
        if node.bound <= lb + PRUNE_TOL:
            continue
        x = node.x
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        if np.all(frac <= INT_TOL):
            offer(x, exact(x))
            log(node.id, node.bound)
            continue
        j = int(binaries[np.argmin(np.where(frac > INT_TOL, np.abs(x[binaries] - 0.5), np.inf))])
        first, second = (1.0, 0.0) if x[j] >= 0.5 else (0.0, 1.0)
        children = []
        for val in (first, second):
            lo, hi = node.lo.copy(), node.hi.copy()
            if not propagate(lo, hi, j, val):
                continue
            child = evaluate_node(lo, hi)
            if child is not None and child.bound > lb + PRUNE_TOL:
                children.append(child)
        # Depth-first pops the child nearer the LP value first.
        for child in reversed(children) if options.search is SearchOrder.DEPTH_FIRST else children:
            push(child)

    if best is None:
        raise RuntimeError("branch-and-bound finished without a feasible strategy")
    ub = max(ub, lb)
    sel = extract_selection(milp, best)
    gap = 0.0 if status is SolveStatus.PROVEN and not open_nodes else gap_percent(lb, ub)
    log(-1, ub)
    return SolveResult(
        strategy=Strategy.from_tables(sel.decisions),
        eu=scale(lb),
        upper_bound=scale(ub),
        gap_percent=gap,
        nodes_evaluated=nodes,
        status=status,
        lb_normalized=lb,
        ub_normalized=ub,
        selection=sel,
        events=events,
    )
