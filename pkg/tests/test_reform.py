import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limidcr.bench import RandomSpec, gen_random_diagram
from limidcr.credal import CredalNetwork, CredalNode, Precise, limid_to_credal
from limidcr.errors import ContractError, InvalidAssignmentError
from limidcr.lpformat import export_lp, parse_lp
from limidcr.model import brute_force_meu, normalize_eu, normalize_utilities
from limidcr.reform import (
    PolicyBinary, PrecedenceOrdering, Product, Term, build_milp, choose_precedence_ordering, extract_selection,
    extract_strategy, generate_bilinear, linearize, reduce_context, round_groups,
)
from limidcr.solver.simplex import LpProblem, LpStatus, solve_lp

# Node ids in the fig1 diagram.
D1, D2, C1, C2, C3, U1, U2, U3 = range(8)
REFERENCE_ORDER = {U1: (D1, U1), U2: (D2, U2), U3: (D2, C2, D1, C1, C3, U3)}


@pytest.fixture
def fig1_net(fig1):
    return limid_to_credal(normalize_utilities(fig1)[0])


def chain_net():
    table = np.array([[0.5, 0.5]])
    cond = np.array([[0.9, 0.1], [0.3, 0.7]])
    return CredalNetwork(
        [CredalNode(0, "A", (), 2, Precise(table)), CredalNode(1, "B", (0,), 2, Precise(cond)),
         CredalNode(2, "Q", (1,), 2, Precise(cond))],
        [(2, 0)],
    )


class TestOrdering:
    def test_heuristic_fig1(self, fig1_net):
        order = choose_precedence_ordering(fig1_net, U3)
        assert order.sequence == (D1, C1, D2, C2, C3, U3)
        assert choose_precedence_ordering(fig1_net, U1).sequence == (D1, U1)

    def test_chain(self):
        assert choose_precedence_ordering(chain_net(), 2).sequence == (0, 1, 2)

    def test_explicit_order_accepted(self, fig1_net):
        orderings = {q: PrecedenceOrdering(q, s) for q, s in REFERENCE_ORDER.items()}
        program = generate_bilinear(fig1_net, orderings)
        assert program.widths[U3] == [1, 1, 2, 2, 1]

    @pytest.mark.parametrize("seq", [(C2, D2, D1, C1, C3, U3), (D2, C2, D1, C1, U3), (D2, C2, D1, C1, U3, C3)])
    def test_bad_order_rejected(self, fig1_net, seq):
        with pytest.raises(ContractError):
            generate_bilinear(fig1_net, {U3: PrecedenceOrdering(U3, seq)})

    def test_d_separation_drops(self, fig1_net):
        parents = fig1_net.parents
        assert reduce_context(parents, U3, {D2, C2, D1, C1}) == (C1, C2)
        assert reduce_context(parents, U3, {C1, C2, C3}) == (C3,)
        assert reduce_context(parents, U3, {D2, D1}) == (D1, D2)


class TestGeneration:
    def test_fig1_census(self, fig1_net):
        orderings = {q: PrecedenceOrdering(q, s) for q, s in REFERENCE_ORDER.items()}
        program = generate_bilinear(fig1_net, orderings)
        per_query = {q: sum(1 for e in program.equalities if e.query == q) for q in (U1, U2, U3)}
        assert per_query == {U1: 1, U2: 1, U3: 13}
        milp = linearize(program)
        assert milp.census() == {"definition": 15, "linearization": 18, "simplex": 2}
        assert len(milp.variables) == 25

    def test_top_level_split_on_d2(self, fig1_net):
        orderings = {q: PrecedenceOrdering(q, s) for q, s in REFERENCE_ORDER.items()}
        program = generate_bilinear(fig1_net, orderings)
        first = next(e for e in program.equalities if e.query == U3)
        assert program.variables[first.lhs].kind == Term(U3, ())
        assert all(len(v) == 2 and isinstance(program.variables[v[0]].kind, PolicyBinary) for _, v in first.monomials)
        assert {program.variables[v[0]].kind.decision for _, v in first.monomials} == {D2}

    def test_root_query_constant(self):
        net = CredalNetwork([CredalNode(0, "U", (), 2, Precise(np.array([[0.3, 0.7]])))], [(0, 0)])
        milp = build_milp(net)
        assert len(milp.constraints) == 1
        con = milp.constraints[0]
        assert con.coefficients == {0: 1.0} and con.relation == "=" and con.rhs == pytest.approx(0.3)

    def test_objective_shape(self, fig1_net):
        milp = build_milp(fig1_net)
        assert sorted(milp.objective.values()) == [1.0, 1.0, 1.0]
        assert all(isinstance(milp.variables[i].kind, Term) and milp.variables[i].kind.context == () for i in milp.objective)

    def test_products_deduplicated_and_linked(self, fig1_net):
        milp = build_milp(fig1_net)
        products = [v for v in milp.variables if isinstance(v.kind, Product)]
        assert len({(v.kind.b, v.kind.t) for v in products}) == len(products)
        links = [c for c in milp.constraints if c.kind == "linearization"]
        assert len(links) == 3 * len(products)
        for v in products:
            assert milp.variables[v.kind.b].binary and not milp.variables[v.kind.t].binary

    def test_deterministic(self, fig1_net):
        assert export_lp(build_milp(fig1_net)) == export_lp(build_milp(fig1_net))


def _slice_bounds(milp, y, b_value, t_value):
    """Smallest and largest y allowed by its linking rows once b and t are fixed."""
    b, t = y.kind.b, y.kind.t
    lo, hi = np.zeros(len(milp.variables)), np.ones(len(milp.variables))
    lo[b] = hi[b] = b_value
    lo[t] = hi[t] = t_value
    rows = [c for c in milp.constraints if c.kind == "linearization" and y.index in c.coefficients]
    lp = LpProblem.from_constraints(len(milp.variables), rows, {y.index: 1.0}, lo, hi)
    high = solve_lp(lp).objective
    low = -solve_lp(LpProblem(lp.A, lp.sense, lp.b, -lp.c, lo, hi)).objective
    return low, high


class TestLinearization:
    @pytest.mark.parametrize("b_value", [0.0, 1.0])
    def test_product_slice(self, fig1_net, b_value):
        milp = build_milp(fig1_net)
        y = next(v for v in milp.variables if isinstance(v.kind, Product))
        for t_value in np.linspace(0.0, 1.0, 11):
            low, high = _slice_bounds(milp, y, b_value, t_value)
            assert low == pytest.approx(b_value * t_value, abs=1e-9)
            assert high == pytest.approx(b_value * t_value, abs=1e-9)

    def test_milp_optimum_is_normalized_meu(self, fig1, fig1_net):
        milp = build_milp(fig1_net)
        _, info = normalize_utilities(fig1)
        _, meu = brute_force_meu(fig1)
        best = -np.inf
        n = len(milp.variables)
        for d1 in (0, 1):
            for d2 in (0, 1):
                lo, hi = np.zeros(n), np.ones(n)
                for i, (d, _, a) in milp.strategy_map.items():
                    lo[i] = hi[i] = float(a == (d1 if d == D1 else d2))
                sol = solve_lp(LpProblem.from_constraints(n, milp.constraints, milp.objective, lo, hi))
                assert sol.status is LpStatus.OPTIMAL
                best = max(best, sol.objective)
        assert best == pytest.approx(normalize_eu(meu, info), abs=1e-9)
        relaxed = solve_lp(LpProblem.from_constraints(n, milp.constraints, milp.objective))
        assert relaxed.objective >= best - 1e-9


class TestExtraction:
    def test_extract(self, fig1_net):
        milp = build_milp(fig1_net)
        x = np.zeros(len(milp.variables))
        for i, (d, _, a) in milp.strategy_map.items():
            x[i] = float(a == 1)
        s = extract_strategy(milp, x)
        assert s.choices() == {D1: (1,), D2: (1,)}

    def test_fractional_rejected(self, fig1_net):
        milp = build_milp(fig1_net)
        x = np.zeros(len(milp.variables))
        group = milp.groups[0]
        x[group[0]], x[group[1]] = 0.4, 0.6
        for g in milp.groups[1:]:
            x[g[0]] = 1.0
        with pytest.raises(InvalidAssignmentError):
            extract_selection(milp, x)

    def test_group_sum_rejected(self, fig1_net):
        milp = build_milp(fig1_net)
        x = np.zeros(len(milp.variables))
        with pytest.raises(InvalidAssignmentError):
            extract_selection(milp, x)

    def test_round_groups(self, fig1_net):
        milp = build_milp(fig1_net)
        x = np.full(len(milp.variables), 0.5)
        x[milp.groups[0][1]] = 0.7
        r = round_groups(milp, x)
        assert [r[i] for i in milp.groups[0]] == [0.0, 1.0]
        assert all(sum(r[i] for i in g) == 1.0 for g in milp.groups)


class TestLpFormat:
    def test_fig1_binaries(self, fig1_net):
        doc = parse_lp(export_lp(build_milp(fig1_net)))
        assert doc["binaries"] == ["b_D1_j0_a0", "b_D1_j0_a1", "b_D2_j0_a0", "b_D2_j0_a1"]

    def test_round_trip(self, fig1_net):
        milp = build_milp(fig1_net)
        text = export_lp(milp)
        doc = parse_lp(text)
        names = [v.name for v in milp.variables]
        assert len(doc["constraints"]) == len(milp.constraints)
        for (_, coefs, rel, rhs), con in zip(doc["constraints"], milp.constraints):
            assert rel == con.relation and rhs == con.rhs
            assert coefs == {names[i]: c for i, c in con.coefficients.items() if c != 0.0}
        assert doc["objective"] == {names[i]: 1.0 for i in milp.objective}
        assert set(doc["bounds"]) == {v.name for v in milp.variables if not v.binary}

    def test_sections_and_charset(self, fig1_net):
        text = export_lp(build_milp(fig1_net))
        heads = [line for line in text.splitlines() if line and not line.startswith((" ", "\\"))]
        assert heads == ["Maximize", "Subject To", "Bounds", "Binaries", "End"]
        for v in build_milp(fig1_net).variables:
            assert all(ch.isalnum() or ch == "_" for ch in v.name)

    def test_empty_problem(self):
        from limidcr.reform import MilpProblem

        empty = MilpProblem(CredalNetwork([]), [], [], {}, {}, {}, [])
        doc = parse_lp(export_lp(empty))
        assert doc == {"objective": {}, "constraints": [], "bounds": {}, "binaries": []}

    def test_names_are_sanitized(self):
        net = CredalNetwork([CredalNode(0, "my node-1", (), 2, Precise(np.array([[0.3, 0.7]])))], [(0, 0)])
        assert "t_q0_0" in export_lp(build_milp(net))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_relaxation_bounds_meu(seed):
    d = gen_random_diagram(RandomSpec(9, 2, seed=seed))
    normalized, info = normalize_utilities(d)
    milp = build_milp(limid_to_credal(normalized))
    sol = solve_lp(LpProblem.from_constraints(len(milp.variables), milp.constraints, milp.objective))
    _, meu = brute_force_meu(d)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective >= normalize_eu(meu, info) - 1e-7
