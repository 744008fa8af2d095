"""From a credal network to a 0/1 mixed integer linear program.

For every query node a symbolic top-down pass walks a precedence ordering of
its ancestors. The pass keeps a context (the processed variables the query
still depends on) and, for each configuration of that context, writes

    term(context) = sum_x  p(x | parents) * term(context + x)

where ``p(x | parents)`` is a number for precise nodes, a 0/1 variable for
decision nodes, and a 0/1 mixture of vertices for credal chance nodes. Once
the context holds all parents of the query the term is a stored number.
The only nonlinear monomials are binary times continuous products, which
``linearize`` replaces by an auxiliary variable and four inequalities.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import graph
from .credal import CredalNetwork, FreeDecision, Precise, StrategySelection, VertexList, relevant_ancestors
from .errors import ContractError, InvalidAssignmentError
from .model import Strategy

INTEGRALITY_TOL = 1e-6


@dataclass(frozen=True)
class PrecedenceOrdering:
    query: int
    sequence: tuple[int, ...]


@dataclass(frozen=True)
class PolicyBinary:
    decision: int
    config: int
    alternative: int


@dataclass(frozen=True)
class VertexBinary:
    node: int
    config: int
    vertex: int


@dataclass(frozen=True)
class Term:
    """Conditional query probability ``p(query | context)``; context is sorted by node id."""

    query: int
    context: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Product:
    b: int
    t: int


@dataclass(frozen=True)
class MilpVariable:
    index: int
    kind: PolicyBinary | VertexBinary | Term | Product
    name: str

    @property
    def binary(self) -> bool:
        return isinstance(self.kind, (PolicyBinary, VertexBinary))


@dataclass
class LinearConstraint:
    coefficients: dict[int, float]
    relation: str  # "=", "<=" or ">="
    rhs: float
    kind: str = "definition"


@dataclass
class BilinearEquality:
    query: int
    lhs: int
    # (coefficient, variable indices); () is a constant, (i,) linear, (b, t) bilinear
    monomials: list[tuple[float, tuple[int, ...]]]


@dataclass
class BilinearProgram:
    net: CredalNetwork
    variables: list[MilpVariable]
    equalities: list[BilinearEquality]
    objective_terms: list[int]
    groups: list[list[int]]
    widths: dict[int, list[int]] = field(default_factory=dict)


@dataclass
class MilpProblem:
    net: CredalNetwork
    variables: list[MilpVariable]
    constraints: list[LinearConstraint]
    objective: dict[int, float]
    strategy_map: dict[int, tuple[int, int, int]]
    vertex_map: dict[int, tuple[int, int, int]]
    groups: list[list[int]]

    @property
    def binaries(self) -> list[int]:
        return [v.index for v in self.variables if v.binary]

    def census(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for c in self.constraints:
            counts[c.kind] = counts.get(c.kind, 0) + 1
        return counts


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


# -- orderings -----------------------------------------------------------------


def reduce_context(parents: Mapping[int, Sequence[int]], query: int, candidate) -> tuple[int, ...]:
    """Drop context variables d-separated from the query by the remaining ones.

    Variables are tested smallest id first and the scan restarts after every
    removal, so each removal is justified by the set that remains.
    """
    ctx = set(candidate)
    changed = True
    while changed:
        changed = False
        for v in sorted(ctx):
            if graph.d_separated(parents, v, query, ctx - {v}):
                ctx.discard(v)
                changed = True
                break
    return tuple(sorted(ctx))


def validate_ordering(net: CredalNetwork, ordering: PrecedenceOrdering) -> None:
    query, seq = ordering.query, list(ordering.sequence)
    relevant = relevant_ancestors(net, query)
    if not seq or seq[-1] != query:
        raise ContractError(f"ordering for query {query} must end with the query")
    if len(set(seq)) != len(seq) or set(seq) != relevant:
        raise ContractError(f"ordering for query {query} must list exactly its ancestors and itself")
    seen = set()
    for v in seq:
        missing = [p for p in net.nodes[v].parents if p not in seen]
        if missing:
            raise ContractError(
                f"ordering for query {query} places {net.nodes[v].name} before its parent {net.nodes[missing[0]].name}"
            )
        seen.add(v)


def choose_precedence_ordering(net: CredalNetwork, query: int) -> PrecedenceOrdering:
    """Greedy topological order keeping the context as small as possible."""
    parents = net.parents
    relevant = relevant_ancestors(net, query)
    todo = relevant - {query}
    done: set[int] = set()
    ctx: tuple[int, ...] = ()
    seq = []
    while todo:
        ready = [v for v in todo if all(p in done for p in parents[v])]
        best = None
        for v in sorted(ready):
            new_ctx = reduce_context(parents, query, set(ctx) | {v})
            if best is None or len(new_ctx) < len(best[1]):
                best = (v, new_ctx)
        v, ctx = best
        seq.append(v)
        done.add(v)
        todo.discard(v)
    seq.append(query)
    return PrecedenceOrdering(query, tuple(seq))


# -- symbolic generation --------------------------------------------------------


def _binaries(net: CredalNetwork):
    variables: list[MilpVariable] = []
    policy: dict[tuple[int, int, int], int] = {}
    vertex: dict[tuple[int, int, int], int] = {}
    groups = []
    for node in net.nodes:
        if isinstance(node.spec, FreeDecision):
            for j in range(net.n_configs(node.id)):
                group = []
                for a in range(node.domain_size):
                    idx = len(variables)
                    variables.append(MilpVariable(idx, PolicyBinary(node.id, j, a), f"b_{_safe(node.name)}_j{j}_a{a}"))
                    policy[node.id, j, a] = idx
                    group.append(idx)
                groups.append(group)
    for node in net.nodes:
        if isinstance(node.spec, VertexList):
            for j, verts in enumerate(node.spec.vertices):
                group = []
                for k in range(verts.shape[0]):
                    idx = len(variables)
                    variables.append(MilpVariable(idx, VertexBinary(node.id, j, k), f"v_{_safe(node.name)}_j{j}_k{k}"))
                    vertex[node.id, j, k] = idx
                    group.append(idx)
                groups.append(group)
    return variables, policy, vertex, groups


def generate_bilinear(net: CredalNetwork, orderings: Mapping[int, PrecedenceOrdering] | None = None) -> BilinearProgram:
    orderings = dict(orderings or {})
    for q, _ in net.queries:
        if q not in orderings:
            orderings[q] = choose_precedence_ordering(net, q)
        validate_ordering(net, orderings[q])

    parents = net.parents
    variables, policy, vertex, groups = _binaries(net)
    equalities: list[BilinearEquality] = []
    objective = []
    widths = {}

    for query, category in net.queries:
        qnode = net.nodes[query]
        qtable = qnode.spec.table
        qparents = set(qnode.parents)
        terms: dict[Term, int] = {}

        def term_var(key: Term) -> int:
            if key not in terms:
                idx = len(variables)
                variables.append(MilpVariable(idx, key, f"t_q{query}_{len(terms)}"))
                terms[key] = idx
            return terms[key]

        def stored(values: dict[int, int]) -> float:
            return float(qtable[net.config_index(query, [values[p] for p in qnode.parents]), category])

        top = term_var(Term(query, ()))
        objective.append(top)
        seq = orderings[query].sequence[:-1]
        if not seq:
            equalities.append(BilinearEquality(query, top, [(stored({}), ())]))
            widths[query] = []
            continue

        ctx: tuple[int, ...] = ()
        widths[query] = []
        for step, x in enumerate(seq):
            xnode = net.nodes[x]
            new_ctx = reduce_context(parents, query, set(ctx) | {x})
            last = step == len(seq) - 1
            if last != qparents.issubset(new_ctx):
                raise ContractError(f"context {new_ctx} after {xnode.name} is inconsistent with query parents")
            if not set(xnode.parents).issubset(ctx):
                raise ContractError(f"parents of {xnode.name} are not in the context when it is processed")
            widths[query].append(len(new_ctx))
            for config in itertools.product(*(range(net.nodes[v].domain_size) for v in ctx)):
                values = dict(zip(ctx, config))
                lhs = terms[Term(query, tuple(zip(ctx, config)))] if ctx else top
                row = net.config_index(x, [values[p] for p in xnode.parents])
                acc: dict[tuple[int, ...], float] = {}

                def add(coef, vars_):
                    if coef != 0.0:
                        acc[vars_] = acc.get(vars_, 0.0) + coef

                for xv in range(xnode.domain_size):
                    nv = dict(values)
                    nv[x] = xv
                    if last:
                        nxt_const, nxt_var = stored(nv), None
                    else:
                        nxt_const, nxt_var = None, term_var(Term(query, tuple((v, nv[v]) for v in new_ctx)))
                    spec = xnode.spec
                    if isinstance(spec, Precise):
                        p = float(spec.table[row, xv])
                        if nxt_var is None:
                            add(p * nxt_const, ())
                        else:
                            add(p, (nxt_var,))
                    elif isinstance(spec, FreeDecision):
                        b = policy[x, row, xv]
                        if nxt_var is None:
                            add(nxt_const, (b,))
                        else:
                            add(1.0, (b, nxt_var))
                    else:
                        for k, q in enumerate(spec.vertices[row][:, xv]):
                            b = vertex[x, row, k]
                            if nxt_var is None:
                                add(float(q) * nxt_const, (b,))
                            else:
                                add(float(q), (b, nxt_var))
                equalities.append(BilinearEquality(query, lhs, [(c, v) for v, c in sorted(acc.items())]))
            ctx = new_ctx
    return BilinearProgram(net, variables, equalities, objective, groups, widths)


# -- linearization -----------------------------------------------------------------


def linearize(program: BilinearProgram) -> MilpProblem:
    """Replace each binary times continuous product by a fresh bounded variable."""
    variables = list(program.variables)
    products: dict[tuple[int, int], int] = {}
    constraints: list[LinearConstraint] = []
    link: list[LinearConstraint] = []

    def product_var(b, t):
        if (b, t) not in products:
            idx = len(variables)
            variables.append(MilpVariable(idx, Product(b, t), f"y_{idx}"))
            products[b, t] = idx
            link.append(LinearConstraint({idx: 1.0, b: -1.0}, "<=", 0.0, "linearization"))
            link.append(LinearConstraint({idx: 1.0, t: -1.0, b: -1.0}, ">=", -1.0, "linearization"))
            link.append(LinearConstraint({idx: 1.0, t: -1.0}, "<=", 0.0, "linearization"))
        return products[b, t]

    for eq in program.equalities:
        coefs = {eq.lhs: 1.0}
        rhs = 0.0
        for c, vars_ in eq.monomials:
            if len(vars_) == 0:
                rhs += c
            elif len(vars_) == 1:
                coefs[vars_[0]] = coefs.get(vars_[0], 0.0) - c
            elif len(vars_) == 2:
                b, t = vars_
                if not variables[b].binary or variables[t].binary:
                    raise ContractError(f"monomial {vars_} is not binary times continuous")
                y = product_var(b, t)
                coefs[y] = coefs.get(y, 0.0) - c
            else:
                raise ContractError(f"monomial of degree {len(vars_)} cannot be linearized")
        constraints.append(LinearConstraint(coefs, "=", rhs, "definition"))
    constraints.extend(link)
    for group in program.groups:
        constraints.append(LinearConstraint({i: 1.0 for i in group}, "=", 1.0, "simplex"))

    strategy_map = {v.index: (v.kind.decision, v.kind.config, v.kind.alternative)
                    for v in variables if isinstance(v.kind, PolicyBinary)}
    vertex_map = {v.index: (v.kind.node, v.kind.config, v.kind.vertex)
                  for v in variables if isinstance(v.kind, VertexBinary)}
    return MilpProblem(
        program.net, variables, constraints, {t: 1.0 for t in program.objective_terms},
        strategy_map, vertex_map, [list(g) for g in program.groups],
    )


def build_milp(net: CredalNetwork, orderings: Mapping[int, PrecedenceOrdering] | None = None) -> MilpProblem:
    return linearize(generate_bilinear(net, orderings))


# -- mapping solutions back ------------------------------------------------------------


def _rounded(milp: MilpProblem, assignment) -> dict[int, int]:
    values = {}
    for i in milp.binaries:
        v = float(assignment[i])
        r = round(v)
        if abs(v - r) > INTEGRALITY_TOL or r not in (0, 1):
            raise InvalidAssignmentError(f"{milp.variables[i].name} = {v:g} is not integral")
        values[i] = int(r)
    for group in milp.groups:
        if sum(values[i] for i in group) != 1:
            names = ", ".join(milp.variables[i].name for i in group)
            raise InvalidAssignmentError(f"exactly one of {names} must be 1")
    return values


def extract_strategy(milp: MilpProblem, assignment) -> Strategy:
    """Pure strategy encoded by the policy binaries of an integral assignment."""
    return Strategy.from_tables(extract_selection(milp, assignment).decisions)


def extract_selection(milp: MilpProblem, assignment) -> StrategySelection:
    values = _rounded(milp, assignment)
    net = milp.net
    tables = {d: np.zeros((net.n_configs(d), net.nodes[d].domain_size)) for d in net.free_decisions()}
    for i, (d, j, a) in milp.strategy_map.items():
        tables[d][j, a] = values[i]
    vertices = {v: [0] * net.n_configs(v) for v in net.vertex_nodes()}
    for i, (v, j, k) in milp.vertex_map.items():
        if values[i]:
            vertices[v][j] = k
    return StrategySelection(tables, {v: tuple(k) for v, k in vertices.items()})


def round_groups(milp: MilpProblem, assignment) -> np.ndarray:
    """Integral assignment of the binaries: argmax inside each simplex group."""
    out = np.array(assignment, dtype=float, copy=True)
    for group in milp.groups:
        vals = [assignment[i] for i in group]
        best = group[int(np.argmax(vals))]
        for i in group:
            out[i] = 1.0 if i == best else 0.0
    return out
