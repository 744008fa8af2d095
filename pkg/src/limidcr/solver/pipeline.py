"""End-to-end strategy selection: normalize, translate, reformulate, search."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence

from ..credal import MarginalEvaluator, StrategySelection, limid_to_credal
from ..errors import TrivialDiagramError
from ..model import EuEvaluator, InfluenceDiagram, Strategy, normalize_eu, normalize_utilities, require_valid
from ..reform import build_milp
from .bnb import BnbEvent, SolveOptions, SolveResult, SolveStatus, WarmStart, branch_and_bound
from .spu import spu


def solve_meu(
    diagram: InfluenceDiagram,
    options: SolveOptions | None = None,
    *,
    credal_sets: Mapping[int, Sequence] | None = None,
    on_event: Callable[[BnbEvent], None] | None = None,
) -> SolveResult:
    """Maximum expected utility strategy with an upper bound on the optimum.

    ``credal_sets`` turns the listed chance nodes into credal nodes given by
    vertex lists; the search then also picks one vertex per parent
    configuration (the most favourable precise network).
    """
    options = options or SolveOptions()
    require_valid(diagram)
    try:
        normalized, info = normalize_utilities(diagram)
    except TrivialDiagramError as exc:
        eu = exc.utility_count * exc.value
        return SolveResult(Strategy.first(diagram), eu, eu, 0.0, 0, SolveStatus.PROVEN, 0.0, 0.0)

    net = limid_to_credal(normalized, credal_sets)
    milp = build_milp(net)
    evaluator = MarginalEvaluator(net)

    incumbent = None
    if options.warm_start is WarmStart.SPU and not credal_sets:
        strategy, eu = spu(diagram, max_sweeps=options.spu_max_sweeps, evaluator=EuEvaluator(diagram))
        incumbent = (StrategySelection.from_strategy(strategy), normalize_eu(eu, info))
    return branch_and_bound(milp, options, incumbent, evaluate=evaluator, info=info, on_event=on_event)
