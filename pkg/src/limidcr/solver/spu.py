"""Single policy updating: coordinate ascent over one policy entry at a time."""

from __future__ import annotations

from ..errors import ContractError
from ..model import EuEvaluator, InfluenceDiagram, Strategy


def spu(
    diagram: InfluenceDiagram,
    init: Strategy | None = None,
    max_sweeps: int = 100,
    history: list[float] | None = None,
    evaluator: EuEvaluator | None = None,
) -> tuple[Strategy, float]:
    """Local search from a pure strategy.

    A sweep visits decisions in id order and, for each parent configuration,
    switches to the alternative with the largest expected utility given
    everything else. Only strict improvements switch; ties keep the current
    alternative. Stops after a sweep without changes or ``max_sweeps`` sweeps.
    ``history`` receives the expected utility before the first update and
    after every single update.
    """
    init = init or Strategy.first(diagram)
    if not init.is_pure():
        raise ContractError("SPU needs a pure initial strategy")
    evaluator = evaluator or EuEvaluator(diagram)
    choices = {d: list(c) for d, c in init.choices().items()}
    current = evaluator.pure(choices)
    if history is not None:
        history.append(current)
    for _ in range(max_sweeps):
        changed = False
        for d in diagram.decisions:
            for j in range(diagram.n_configs(d)):
                keep = choices[d][j]
                best_alt, best_eu = keep, current
                for a in range(diagram.nodes[d].domain_size):
                    if a == keep:
                        continue
                    choices[d][j] = a
                    eu = evaluator.pure(choices)
                    if eu > best_eu + 1e-12:
                        best_alt, best_eu = a, eu
                choices[d][j] = best_alt
                if best_alt != keep:
                    changed = True
                    current = best_eu
                if history is not None:
                    history.append(current)
        if not changed:
            break
    return Strategy.pure(diagram, choices), current
