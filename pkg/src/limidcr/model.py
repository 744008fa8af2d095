"""Limited memory influence diagrams: representation and exact evaluation.

Tables are stored flat. A chance node's CPT is laid out row-major over the
parent configurations (parents in declared order, last parent fastest) with
the node's own category varying fastest inside a row. Utility tables and
policies use the same parent-configuration indexing.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import graph
from .errors import ContractError, InvalidDiagramError, SizeLimitError, TrivialDiagramError
from .factor import Factor, eliminate_all, min_degree_order

TOL = 1e-9
NAIVE_CAP = 2**24
STRATEGY_CAP = 2**20


class NodeKind(str, Enum):
    CHANCE = "chance"
    DECISION = "decision"
    UTILITY = "utility"


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    kind: NodeKind
    parents: tuple[int, ...] = ()
    domain_size: int | None = None


@dataclass(eq=False)
class InfluenceDiagram:
    nodes: list[Node]
    cpts: dict[int, np.ndarray] = field(default_factory=dict)
    utilities: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.cpts = {k: np.asarray(v, dtype=float) for k, v in self.cpts.items()}
        self.utilities = {k: np.asarray(v, dtype=float) for k, v in self.utilities.items()}
        self._by_name = {n.name: n for n in self.nodes}

    def __eq__(self, other):
        if not isinstance(other, InfluenceDiagram):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.cpts.keys() == other.cpts.keys()
            and self.utilities.keys() == other.utilities.keys()
            and all(np.array_equal(self.cpts[k], other.cpts[k]) for k in self.cpts)
            and all(np.array_equal(self.utilities[k], other.utilities[k]) for k in self.utilities)
        )

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def by_name(self, name: str) -> Node:
        return self._by_name[name]

    def ids(self, kind: NodeKind) -> list[int]:
        return [n.id for n in self.nodes if n.kind is kind]

    @property
    def chance(self) -> list[int]:
        return self.ids(NodeKind.CHANCE)

    @property
    def decisions(self) -> list[int]:
        return self.ids(NodeKind.DECISION)

    @property
    def utility_nodes(self) -> list[int]:
        return self.ids(NodeKind.UTILITY)

    @property
    def parents(self) -> dict[int, tuple[int, ...]]:
        return {n.id: n.parents for n in self.nodes}

    def parent_sizes(self, node_id: int) -> tuple[int, ...]:
        return tuple(self.nodes[p].domain_size or 0 for p in self.nodes[node_id].parents)

    def n_configs(self, node_id: int) -> int:
        return math.prod(self.parent_sizes(node_id))

    def cpt_table(self, node_id: int) -> np.ndarray:
        """CPT as a ``(parent configurations, categories)`` matrix."""
        return self.cpts[node_id].reshape(self.n_configs(node_id), self.nodes[node_id].domain_size)

    def parent_config(self, node_id: int, index: int) -> tuple[int, ...]:
        sizes = self.parent_sizes(node_id)
        return tuple(int(v) for v in np.unravel_index(index, sizes)) if sizes else ()

    def config_index(self, node_id: int, values: Sequence[int]) -> int:
        sizes = self.parent_sizes(node_id)
        return int(np.ravel_multi_index(tuple(values), sizes)) if sizes else 0

    def utility_bounds(self) -> tuple[float, float]:
        values = np.concatenate([t.ravel() for t in self.utilities.values()]) if self.utilities else np.zeros(0)
        if values.size == 0:
            return 0.0, 0.0
        return float(values.min()), float(values.max())


class DiagramBuilder:
    """Incremental construction by node name; ids follow insertion order."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._cpts: dict[int, np.ndarray] = {}
        self._utils: dict[int, np.ndarray] = {}
        self._ids: dict[str, int] = {}

    def _add(self, name, kind, parents, domain):
        if name in self._ids:
            raise ValueError(f"duplicate node name {name!r}")
        node = Node(len(self._nodes), name, kind, tuple(self._ids[p] for p in parents), domain)
        self._nodes.append(node)
        self._ids[name] = node.id
        return node.id

    def chance(self, name: str, parents: Sequence[str], cpt, domain: int = 2) -> int:
        nid = self._add(name, NodeKind.CHANCE, parents, domain)
        self._cpts[nid] = np.asarray(cpt, dtype=float).ravel()
        return nid

    def decision(self, name: str, parents: Sequence[str] = (), domain: int = 2) -> int:
        return self._add(name, NodeKind.DECISION, parents, domain)

    def utility(self, name: str, parents: Sequence[str], values) -> int:
        nid = self._add(name, NodeKind.UTILITY, parents, None)
        self._utils[nid] = np.asarray(values, dtype=float).ravel()
        return nid

    def build(self) -> InfluenceDiagram:
        return InfluenceDiagram(list(self._nodes), dict(self._cpts), dict(self._utils))


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    node: str | None
    message: str

    def __str__(self):
        return f"{self.node}: {self.message}" if self.node is not None else self.message


def validate_diagram(diagram: InfluenceDiagram) -> list[Violation]:
    """List every structural or numeric rule the diagram breaks."""
    out: list[Violation] = []
    nodes = diagram.nodes
    n = len(nodes)
    for i, node in enumerate(nodes):
        if node.id != i:
            out.append(Violation("id", node.name, f"id {node.id} at position {i}"))
    if any(node.id != i for i, node in enumerate(nodes)):
        return out
    seen = set()
    for node in nodes:
        if node.name in seen:
            out.append(Violation("duplicate-name", node.name, "duplicate node name"))
        seen.add(node.name)
    structural_ok = True
    for node in nodes:
        for p in node.parents:
            if not 0 <= p < n:
                out.append(Violation("parent", node.name, f"unknown parent id {p}"))
                structural_ok = False
            elif nodes[p].kind is NodeKind.UTILITY:
                out.append(Violation("utility-children", nodes[p].name, "utility node has children"))
        if len(set(node.parents)) != len(node.parents):
            out.append(Violation("parent", node.name, "repeated parent"))
        if node.kind is NodeKind.UTILITY:
            if node.domain_size is not None:
                out.append(Violation("domain", node.name, "utility node has a domain"))
        elif node.domain_size is None or node.domain_size < 2:
            out.append(Violation("domain", node.name, f"domain size {node.domain_size} < 2"))
            structural_ok = False
    if not structural_ok:
        return out
    cycle = graph.find_cycle(diagram.parents)
    if cycle:
        names = " -> ".join(nodes[v].name for v in cycle)
        out.append(Violation("cycle", None, f"directed cycle {names}"))

    for node in nodes:
        size = diagram.n_configs(node.id)
        if node.kind is NodeKind.CHANCE:
            if node.id not in diagram.cpts:
                out.append(Violation("missing-cpt", node.name, "chance node without CPT"))
                continue
            cpt = diagram.cpts[node.id]
            if cpt.size != size * node.domain_size:
                out.append(Violation("size", node.name, f"CPT has {cpt.size} entries, expected {size * node.domain_size}"))
                continue
            if np.any(cpt < 0) or np.any(cpt > 1) or not np.all(np.isfinite(cpt)):
                out.append(Violation("range", node.name, "CPT entry outside [0,1]"))
            for j, row in enumerate(cpt.reshape(size, node.domain_size)):
                s = float(row.sum())
                if abs(s - 1.0) > TOL:
                    out.append(Violation("row-sum", node.name, f"row {j} sum {s:g} != 1"))
        elif node.id in diagram.cpts:
            out.append(Violation("extra-cpt", node.name, f"{node.kind.value} node has a CPT"))
        if node.kind is NodeKind.UTILITY:
            if node.id not in diagram.utilities:
                out.append(Violation("missing-utility", node.name, "utility node without table"))
                continue
            table = diagram.utilities[node.id]
            if table.size != size:
                out.append(Violation("size", node.name, f"utility table has {table.size} entries, expected {size}"))
            if not np.all(np.isfinite(table)):
                out.append(Violation("range", node.name, "non-finite utility"))
        elif node.id in diagram.utilities:
            out.append(Violation("extra-utility", node.name, f"{node.kind.value} node has a utility table"))
    return out


def require_valid(diagram: InfluenceDiagram) -> None:
    violations = validate_diagram(diagram)
    if violations:
        raise InvalidDiagramError(violations)


# -- strategies ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Policy:
    decision: int
    table: np.ndarray  # (parent configurations, alternatives)

    def is_pure(self) -> bool:
        return bool(np.all((self.table == 0) | (self.table == 1)))

    def choices(self) -> tuple[int, ...]:
        if not self.is_pure():
            raise ContractError(f"policy for node {self.decision} is not pure")
        return tuple(int(i) for i in self.table.argmax(axis=1))


@dataclass(frozen=True, eq=False)
class Strategy:
    policies: dict[int, Policy]

    @classmethod
    def pure(cls, diagram: InfluenceDiagram, choices: Mapping[int, Sequence[int]]) -> Strategy:
        policies = {}
        for d in diagram.decisions:
            k = diagram.nodes[d].domain_size
            picks = list(choices[d])
            table = np.zeros((diagram.n_configs(d), k))
            table[np.arange(len(picks)), picks] = 1.0
            policies[d] = Policy(d, table)
        return cls(policies)

    @classmethod
    def first(cls, diagram: InfluenceDiagram) -> Strategy:
        """Pure strategy choosing alternative 0 everywhere."""
        return cls.pure(diagram, {d: [0] * diagram.n_configs(d) for d in diagram.decisions})

    @classmethod
    def from_tables(cls, tables: Mapping[int, np.ndarray]) -> Strategy:
        return cls({d: Policy(d, np.asarray(t, dtype=float)) for d, t in tables.items()})

    def choices(self) -> dict[int, tuple[int, ...]]:
        return {d: p.choices() for d, p in sorted(self.policies.items())}

    def encoding(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.choices().values())

    def is_pure(self) -> bool:
        return all(p.is_pure() for p in self.policies.values())

    def __eq__(self, other):
        if not isinstance(other, Strategy):
            return NotImplemented
        return self.policies.keys() == other.policies.keys() and all(
            np.array_equal(p.table, other.policies[d].table) for d, p in self.policies.items()
        )


def check_strategy(diagram: InfluenceDiagram, strategy: Strategy) -> None:
    if set(strategy.policies) != set(diagram.decisions):
        raise ContractError("strategy must hold exactly one policy per decision node")
    for d, policy in strategy.policies.items():
        shape = (diagram.n_configs(d), diagram.nodes[d].domain_size)
        if policy.table.shape != shape:
            raise ContractError(f"policy for {diagram.nodes[d].name} has shape {policy.table.shape}, expected {shape}")
        if np.any(policy.table < -TOL) or np.any(np.abs(policy.table.sum(axis=1) - 1) > TOL):
            raise ContractError(f"policy for {diagram.nodes[d].name} is not a distribution per parent configuration")


def count_pure_strategies(diagram: InfluenceDiagram) -> int:
    return math.prod(diagram.nodes[d].domain_size ** diagram.n_configs(d) for d in diagram.decisions)


def enumerate_pure_strategies(diagram: InfluenceDiagram) -> Iterator[dict[int, tuple[int, ...]]]:
    """Pure strategies as choice maps, in lexicographic order of their encoding."""
    slots = [(d, j) for d in diagram.decisions for j in range(diagram.n_configs(d))]
    ranges = [range(diagram.nodes[d].domain_size) for d, _ in slots]
    for combo in itertools.product(*ranges):
        choices: dict[int, list[int]] = {d: [] for d in diagram.decisions}
        for (d, _), a in zip(slots, combo):
            choices[d].append(a)
        yield {d: tuple(v) for d, v in choices.items()}


# -- expected utility ---------------------------------------------------------


def expected_utility_naive(diagram: InfluenceDiagram, strategy: Strategy, cap: int = NAIVE_CAP) -> float:
    """Expected utility by summing over every joint configuration of chance and decision nodes."""
    require_valid(diagram)
    check_strategy(diagram, strategy)
    xs = [n for n in diagram.nodes if n.kind is not NodeKind.UTILITY]
    total_configs = math.prod(n.domain_size for n in xs)
    if total_configs > cap:
        raise SizeLimitError(f"{total_configs} joint configurations exceed the cap of {cap}")
    pos = {n.id: i for i, n in enumerate(xs)}

    def row(node, x):
        return diagram.config_index(node.id, [x[pos[p]] for p in node.parents])

    total = 0.0
    for x in itertools.product(*(range(n.domain_size) for n in xs)):
        prob = 1.0
        for node in xs:
            if node.kind is NodeKind.CHANCE:
                prob *= diagram.cpt_table(node.id)[row(node, x), x[pos[node.id]]]
            else:
                prob *= strategy.policies[node.id].table[row(node, x), x[pos[node.id]]]
            if prob == 0.0:
                break
        if prob == 0.0:
            continue
        util = sum(diagram.utilities[u][row(diagram.nodes[u], x)] for u in diagram.utility_nodes)
        total += prob * util
    return total


class EuEvaluator:
    """Variable-elimination expected utility with per-diagram caching.

    Elimination orders and chance-node factors are built once; a strategy only
    contributes its policy factors. Each utility node is evaluated on its own
    ancestral subgraph.
    """

    def __init__(self, diagram: InfluenceDiagram):
        require_valid(diagram)
        self.diagram = diagram
        parents = diagram.parents
        self._plans = []
        for u in diagram.utility_nodes:
            anc = graph.ancestors(parents, [u])
            chance = []
            decisions = sorted(v for v in anc if diagram.nodes[v].kind is NodeKind.DECISION)
            for v in sorted(anc):
                if diagram.nodes[v].kind is NodeKind.CHANCE:
                    chance.append(self._factor(v, diagram.cpts[v]))
            util = Factor(diagram.nodes[u].parents, diagram.utilities[u].reshape(diagram.parent_sizes(u)))
            scopes = [f.scope for f in chance] + [diagram.nodes[d].parents + (d,) for d in decisions] + [util.scope]
            order = min_degree_order(scopes, sorted(anc))
            self._plans.append((u, chance + [util], decisions, order))
        self._memo: dict = {}

    def _factor(self, v, flat):
        d = self.diagram
        return Factor(d.nodes[v].parents + (v,), np.asarray(flat, dtype=float).reshape(d.parent_sizes(v) + (d.nodes[v].domain_size,)))

    def relevant_decisions(self) -> dict[int, list[int]]:
        return {u: decisions for u, _, decisions, _ in self._plans}

    def utility_terms(self, strategy: Strategy) -> dict[int, float]:
        out = {}
        for u, fixed, decisions, order in self._plans:
            policy = [self._factor(d, strategy.policies[d].table) for d in decisions]
            out[u] = eliminate_all(fixed + policy, order)
        return out

    def __call__(self, strategy: Strategy) -> float:
        check_strategy(self.diagram, strategy)
        return float(sum(self.utility_terms(strategy).values()))

    def pure(self, choices: Mapping[int, Sequence[int]]) -> float:
        """EU of a pure strategy, memoised per utility node on its relevant decisions."""
        total = 0.0
        for u, fixed, decisions, order in self._plans:
            key = (u,) + tuple(tuple(choices[d]) for d in decisions)
            val = self._memo.get(key)
            if val is None:
                policy = []
                for d in decisions:
                    k = self.diagram.nodes[d].domain_size
                    table = np.zeros((self.diagram.n_configs(d), k))
                    table[np.arange(table.shape[0]), list(choices[d])] = 1.0
                    policy.append(self._factor(d, table))
                val = eliminate_all(fixed + policy, order)
                self._memo[key] = val
            total += val
        return total


def expected_utility(diagram: InfluenceDiagram, strategy: Strategy) -> float:
    return EuEvaluator(diagram)(strategy)


def brute_force_meu(diagram: InfluenceDiagram, cap: int = STRATEGY_CAP) -> tuple[Strategy, float]:
    """Best pure strategy by exhaustive enumeration.

    Ties keep the lexicographically smallest encoding, which is the first one
    visited.
    """
    count = count_pure_strategies(diagram)
    if count > cap:
        raise SizeLimitError(f"{count} pure strategies exceed the cap of {cap}")
    evaluator = EuEvaluator(diagram)
    best, best_eu = None, -math.inf
    for choices in enumerate_pure_strategies(diagram):
        eu = evaluator.pure(choices)
        if eu > best_eu + 1e-12:
            best, best_eu = choices, eu
    return Strategy.pure(diagram, best), float(best_eu)


# -- utility normalisation ----------------------------------------------------


@dataclass(frozen=True)
class NormalizationInfo:
    f_lo: float
    f_hi: float
    utility_count: int


def normalize_utilities(diagram: InfluenceDiagram) -> tuple[InfluenceDiagram, NormalizationInfo]:
    """Map every utility entry affinely into [0, 1] using the global extremes."""
    f_lo, f_hi = diagram.utility_bounds()
    count = len(diagram.utility_nodes)
    if count == 0 or f_lo == f_hi:
        raise TrivialDiagramError(f_lo, count)
    span = f_hi - f_lo
    utilities = {u: (t - f_lo) / span for u, t in diagram.utilities.items()}
    return InfluenceDiagram(list(diagram.nodes), dict(diagram.cpts), utilities), NormalizationInfo(f_lo, f_hi, count)


def normalize_eu(eu: float, info: NormalizationInfo) -> float:
    return (eu - info.utility_count * info.f_lo) / (info.f_hi - info.f_lo)


def denormalize_eu(eu_normalized: float, info: NormalizationInfo) -> float:
    return eu_normalized * (info.f_hi - info.f_lo) + info.utility_count * info.f_lo
