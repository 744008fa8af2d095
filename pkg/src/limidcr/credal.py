"""Credal networks and the translation of a normalized diagram into one.

Utility nodes become binary query nodes whose probability of the first
category equals the normalized utility; decision nodes become nodes with a
vacuous credal set. The sum of the query marginals of any precise network
selected from the translated one is the normalized expected utility of the
matching strategy.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import graph
from .errors import ContractError
from .factor import Factor, eliminate_all, min_degree_order
from .model import TOL, InfluenceDiagram, NodeKind, Strategy


@dataclass(frozen=True, eq=False)
class Precise:
    table: np.ndarray  # (parent configurations, categories)


@dataclass(frozen=True)
class FreeDecision:
    domain_size: int


@dataclass(frozen=True, eq=False)
class VertexList:
    vertices: tuple[np.ndarray, ...]  # per parent configuration: (vertices, categories)


@dataclass(frozen=True, eq=False)
class CredalNode:
    id: int
    name: str
    parents: tuple[int, ...]
    domain_size: int
    spec: Precise | FreeDecision | VertexList


@dataclass(eq=False)
class CredalNetwork:
    nodes: list[CredalNode]
    queries: list[tuple[int, int]] = field(default_factory=list)

    @property
    def parents(self) -> dict[int, tuple[int, ...]]:
        return {n.id: n.parents for n in self.nodes}

    def parent_sizes(self, node_id: int) -> tuple[int, ...]:
        return tuple(self.nodes[p].domain_size for p in self.nodes[node_id].parents)

    def n_configs(self, node_id: int) -> int:
        return int(np.prod(self.parent_sizes(node_id), dtype=int))

    def config_index(self, node_id: int, values: Sequence[int]) -> int:
        sizes = self.parent_sizes(node_id)
        return int(np.ravel_multi_index(tuple(values), sizes)) if sizes else 0

    def free_decisions(self) -> list[int]:
        return [n.id for n in self.nodes if isinstance(n.spec, FreeDecision)]

    def vertex_nodes(self) -> list[int]:
        return [n.id for n in self.nodes if isinstance(n.spec, VertexList)]


@dataclass(eq=False)
class StrategySelection:
    """A precise choice inside every credal set of the network."""

    decisions: dict[int, np.ndarray] = field(default_factory=dict)
    vertices: dict[int, tuple[int, ...]] = field(default_factory=dict)

    @classmethod
    def from_strategy(cls, strategy: Strategy, vertices: Mapping[int, Sequence[int]] | None = None):
        return cls(
            {d: p.table for d, p in strategy.policies.items()},
            {k: tuple(v) for k, v in (vertices or {}).items()},
        )


def limid_to_credal(normalized: InfluenceDiagram, credal_sets: Mapping[int, Sequence] | None = None) -> CredalNetwork:
    """Translate a diagram whose utilities already lie in [0, 1].

    ``credal_sets`` optionally replaces the CPT of chance nodes by a list of
    vertex distributions per parent configuration.
    """
    credal_sets = dict(credal_sets or {})
    nodes = []
    queries = []
    for node in normalized.nodes:
        if node.kind is NodeKind.CHANCE:
            if node.id in credal_sets:
                verts = tuple(np.atleast_2d(np.asarray(v, dtype=float)) for v in credal_sets[node.id])
                if len(verts) != normalized.n_configs(node.id):
                    raise ContractError(f"{node.name}: need one vertex list per parent configuration")
                for v in verts:
                    if v.shape[0] < 1 or v.shape[1] != node.domain_size or np.any(np.abs(v.sum(axis=1) - 1) > TOL):
                        raise ContractError(f"{node.name}: vertices must be distributions over {node.domain_size} categories")
                spec = VertexList(verts)
            else:
                spec = Precise(normalized.cpt_table(node.id))
            nodes.append(CredalNode(node.id, node.name, node.parents, node.domain_size, spec))
        elif node.kind is NodeKind.DECISION:
            nodes.append(CredalNode(node.id, node.name, node.parents, node.domain_size, FreeDecision(node.domain_size)))
        else:
            values = normalized.utilities[node.id]
            if np.any(values < -TOL) or np.any(values > 1 + TOL):
                raise ContractError(f"{node.name}: utility outside [0,1]; normalize the diagram first")
            p = np.clip(values, 0.0, 1.0)
            nodes.append(CredalNode(node.id, node.name, node.parents, 2, Precise(np.column_stack([p, 1.0 - p]))))
            queries.append((node.id, 0))
    return CredalNetwork(nodes, queries)


def relevant_ancestors(net: CredalNetwork, query: int) -> set[int]:
    return graph.ancestors(net.parents, [query]) | {query}


def node_table(net: CredalNetwork, node_id: int, selection: StrategySelection) -> np.ndarray:
    """The precise ``(configurations, categories)`` table chosen by ``selection``."""
    node = net.nodes[node_id]
    spec = node.spec
    if isinstance(spec, Precise):
        return spec.table
    if isinstance(spec, FreeDecision):
        if node_id not in selection.decisions:
            raise ContractError(f"selection does not cover decision node {node.name}")
        return np.asarray(selection.decisions[node_id], dtype=float).reshape(net.n_configs(node_id), node.domain_size)
    if node_id not in selection.vertices:
        raise ContractError(f"selection does not cover credal node {node.name}")
    picks = selection.vertices[node_id]
    return np.array([spec.vertices[j][k] for j, k in enumerate(picks)])


class MarginalEvaluator:
    """Sum of query marginals with cached elimination plans.

    Each query only depends on the free nodes among its ancestors, so its
    marginal is memoised on the choices made at those nodes.
    """

    def __init__(self, net: CredalNetwork):
        self.net = net
        self._plans = []
        for q, category in net.queries:
            anc = graph.ancestors(net.parents, [q])
            fixed, free = [], []
            for v in sorted(anc):
                if isinstance(net.nodes[v].spec, Precise):
                    fixed.append(self._factor(v, net.nodes[v].spec.table))
                else:
                    free.append(v)
            column = net.nodes[q].spec.table[:, category]
            fixed.append(Factor(net.nodes[q].parents, column.reshape(net.parent_sizes(q))))
            scopes = [f.scope for f in fixed] + [net.nodes[v].parents + (v,) for v in free]
            self._plans.append((q, fixed, free, min_degree_order(scopes, sorted(anc))))
        self._memo: dict = {}

    def _factor(self, v, table):
        node = self.net.nodes[v]
        return Factor(node.parents + (v,), np.asarray(table, dtype=float).reshape(self.net.parent_sizes(v) + (node.domain_size,)))

    def _key(self, v, selection):
        if isinstance(self.net.nodes[v].spec, FreeDecision):
            return np.asarray(selection.decisions[v], dtype=float).tobytes()
        return tuple(selection.vertices[v])

    def marginals(self, selection: StrategySelection) -> dict[int, float]:
        out = {}
        for q, fixed, free, order in self._plans:
            key = (q,) + tuple(self._key(v, selection) for v in free)
            val = self._memo.get(key)
            if val is None:
                factors = fixed + [self._factor(v, node_table(self.net, v, selection)) for v in free]
                val = eliminate_all(factors, order)
                self._memo[key] = val
            out[q] = val
        return out

    def __call__(self, selection: StrategySelection) -> float:
        for v in self.net.free_decisions():
            if v not in selection.decisions:
                raise ContractError(f"selection does not cover decision node {self.net.nodes[v].name}")
        for v in self.net.vertex_nodes():
            if v not in selection.vertices:
                raise ContractError(f"selection does not cover credal node {self.net.nodes[v].name}")
        return float(sum(self.marginals(selection).values()))


def sum_marginals(net: CredalNetwork, selection: StrategySelection) -> float:
    """Sum over queries of the marginal probability of the query category."""
    return MarginalEvaluator(net)(selection)
