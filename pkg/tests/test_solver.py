import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from limidcr.bench import RandomSpec, gen_random_diagram
from limidcr.credal import limid_to_credal
from limidcr.errors import ContractError
from limidcr.model import DiagramBuilder, EuEvaluator, Strategy, brute_force_meu, expected_utility, normalize_utilities
from limidcr.reform import LinearConstraint, build_milp
from limidcr.solver import (
    LpProblem, LpStatus, SearchOrder, SolveOptions, SolveStatus, branch_and_bound, solve_lp, solve_meu, spu,
)
from limidcr.solver.bnb import gap_percent
from limidcr.solver.highs import HighsLp

from conftest import make_non_separable, random_pure, small_specs


def lp(constraints, objective, n=1, lo=None, hi=None):
    cons = [LinearConstraint(c, rel, rhs, "definition") for c, rel, rhs in constraints]
    return LpProblem.from_constraints(n, cons, objective, lo, hi)


class TestSimplex:
    def test_single_bound(self):
        sol = solve_lp(lp([({0: 1.0}, "<=", 0.3)], {0: 1.0}))
        assert sol.status is LpStatus.OPTIMAL and sol.values[0] == pytest.approx(0.3)

    def test_infeasible(self):
        assert solve_lp(lp([({0: 1.0}, ">=", 0.6), ({0: 1.0}, "<=", 0.3)], {0: 1.0})).status is LpStatus.INFEASIBLE

    def test_equality_and_fixed_columns(self):
        problem = lp([({0: 1.0, 1: 1.0, 2: 1.0}, "=", 1.0)], {0: 1.0, 1: 2.0, 2: 3.0}, n=3,
                     lo=[0.0, 0.0, 0.0], hi=[1.0, 1.0, 0.0])
        sol = solve_lp(problem)
        assert sol.objective == pytest.approx(2.0) and sol.values.tolist() == pytest.approx([0.0, 1.0, 0.0])

    def test_no_rows(self):
        sol = solve_lp(lp([], {0: -1.0, 1: 2.0}, n=2))
        assert sol.values.tolist() == [0.0, 1.0]

    def test_inverted_bounds(self):
        assert solve_lp(lp([], {0: 1.0}, lo=[0.6], hi=[0.3])).status is LpStatus.INFEASIBLE

    def test_degenerate_cycling_example(self):
        # Beale's example with the box [0, 1]; Dantzig pricing alone cycles on it.
        A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
        problem = LpProblem(A, np.array([-1, -1, -1]), np.array([0.0, 0.0, 1.0]),
                            np.array([0.75, -150.0, 0.02, -6.0]), np.zeros(4), np.ones(4))
        sol = solve_lp(problem)
        ref = linprog(-problem.c, A_ub=A, b_ub=problem.b, bounds=[(0, 1)] * 4, method="highs")
        assert sol.objective == pytest.approx(-ref.fun, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_matches_highs(self, seed):
        rng = np.random.default_rng(seed)
        n, m = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        A = np.round(rng.normal(size=(m, n)), 2) * (rng.random((m, n)) < 0.7)
        sense = rng.integers(-1, 2, size=m)
        b = np.round(rng.normal(size=m), 2)
        c = np.round(rng.normal(size=n), 2)
        lo = np.zeros(n)
        hi = np.where(rng.random(n) < 0.2, 0.0, 1.0)
        problem = LpProblem(A, sense, b, c, lo, hi)
        ours = solve_lp(problem)
        ub = np.vstack([A[sense < 0], -A[sense > 0]])
        ref = linprog(-c, A_ub=ub if len(ub) else None, b_ub=np.concatenate([b[sense < 0], -b[sense > 0]]) if len(ub) else None,
                      A_eq=A[sense == 0] if np.any(sense == 0) else None, b_eq=b[sense == 0] if np.any(sense == 0) else None,
                      bounds=np.column_stack([lo, hi]), method="highs")
        if ref.status == 2:
            assert ours.status is LpStatus.INFEASIBLE
        else:
            assert ours.status is LpStatus.OPTIMAL
            assert ours.objective == pytest.approx(-ref.fun, abs=1e-7)
            assert problem.violation(ours.values) <= 1e-7

    def test_highs_wrapper_agrees(self, fig1):
        milp = build_milp(limid_to_credal(normalize_utilities(fig1)[0]))
        problem = LpProblem.from_constraints(len(milp.variables), milp.constraints, milp.objective)
        assert HighsLp(problem)(problem).objective == pytest.approx(solve_lp(problem).objective, abs=1e-9)


class TestBranchAndBound:
    def test_fig1(self, fig1):
        result = solve_meu(fig1)
        assert result.status is SolveStatus.PROVEN
        assert result.eu == pytest.approx(11.12, abs=1e-9)
        assert result.upper_bound == pytest.approx(result.eu, abs=1e-9)
        assert result.gap_percent == 0.0
        assert result.strategy.choices() == {0: (1,), 1: (1,)}

    @pytest.mark.parametrize("backend", ["highs", "simplex"])
    @pytest.mark.parametrize("search", ["best-bound", "depth-first"])
    @pytest.mark.parametrize("warm", ["spu", "none"])
    def test_random_against_brute(self, small_random, backend, search, warm):
        options = SolveOptions(search=search, warm_start=warm, lp_backend=backend)
        for d in small_random[:6]:
            _, meu = brute_force_meu(d)
            result = solve_meu(d, options)
            assert result.status is SolveStatus.PROVEN
            assert result.eu == pytest.approx(meu, abs=1e-6)
            assert expected_utility(d, result.strategy) == pytest.approx(result.eu, abs=1e-6)

    def test_trivial_diagram(self, trivial):
        result = solve_meu(trivial)
        assert (result.eu, result.status) == (5.0, SolveStatus.PROVEN)
        assert result.strategy.choices() == {0: (1,)}

    def test_constant_utilities(self):
        b = DiagramBuilder()
        b.decision("D")
        b.utility("U1", ["D"], [4.0, 4.0])
        b.utility("U2", [], [4.0])
        result = solve_meu(b.build())
        assert result.eu == 8.0 and result.gap_percent == 0.0 and result.status is SolveStatus.PROVEN

    def test_infinite_gap_returns_warm_start(self, small_random):
        d = small_random[3]
        result = solve_meu(d, SolveOptions(gap_tolerance=math.inf))
        _, spu_eu = spu(d)
        assert result.status is SolveStatus.PROVEN
        assert result.nodes_evaluated == 1
        assert result.eu >= spu_eu - 1e-9
        assert result.eu <= result.upper_bound + 1e-9

    def test_node_limit_stops_with_valid_bounds(self):
        d = gen_random_diagram(RandomSpec(14, 4, seed=11))
        _, meu = brute_force_meu(d)
        result = solve_meu(d, SolveOptions(node_limit=2, warm_start="none"))
        assert result.status is SolveStatus.STOPPED
        assert result.eu <= meu + 1e-9 <= result.upper_bound + 2e-9
        assert result.gap_percent > 0

    def test_event_log_monotone_and_sandwich(self):
        d = gen_random_diagram(RandomSpec(14, 4, seed=11))
        normalized, info = normalize_utilities(d)
        _, meu = brute_force_meu(d)
        meu_n = (meu - info.utility_count * info.f_lo) / (info.f_hi - info.f_lo)
        events = []
        result = solve_meu(d, SolveOptions(warm_start="none"), on_event=events.append)
        assert events == result.events
        real = [e for e in events if math.isfinite(e.lb)]
        assert all(a.lb <= b.lb for a, b in zip(real, real[1:]))
        assert all(a.ub >= b.ub for a, b in zip(events, events[1:]))
        assert all(e.lb <= meu_n + 1e-9 <= e.ub + 2e-9 for e in real)
        assert events[-1].node == -1 and events[-1].gap == 0.0

    def test_gap_definition(self):
        assert gap_percent(0.9, 1.0) == pytest.approx(10.0)
        assert gap_percent(-math.inf, 1.0) == math.inf
        assert gap_percent(1.0, 1.0) == 0.0

    def test_options_validation(self):
        with pytest.raises(ValueError):
            SolveOptions(gap_tolerance=-1.0)
        with pytest.raises(ValueError):
            SolveOptions(lp_backend="cplex")
        assert SolveOptions(search="depth-first").search is SearchOrder.DEPTH_FIRST

    def test_direct_bnb_without_evaluator(self, fig1):
        normalized, info = normalize_utilities(fig1)
        milp = build_milp(limid_to_credal(normalized))
        result = branch_and_bound(milp, SolveOptions(lp_backend="simplex"), info=info)
        assert result.eu == pytest.approx(11.12, abs=1e-9)

    def test_credal_chance_node(self, fig1):
        # Let C1 under D1 = 0 take either its own row or a better one; the search picks the better.
        sets = {2: [[[0.9, 0.1], [0.2, 0.8]], [[0.2, 0.8]]]}
        result = solve_meu(fig1, credal_sets=sets)
        assert result.status is SolveStatus.PROVEN
        assert result.selection.vertices[2] == (1, 0)
        assert result.strategy.choices() == {0: (0,), 1: (1,)}
        assert result.eu == pytest.approx(-5.0 + 40.0 * 0.628, abs=1e-9)


class TestSpu:
    def test_separable_reaches_optimum(self, fig1):
        b = DiagramBuilder()
        b.decision("A")
        b.decision("B", domain=3)
        b.utility("UA", ["A"], [1.0, 3.0])
        b.utility("UB", ["B"], [0.0, 5.0, 2.0])
        d = b.build()
        history = []
        s, eu = spu(d, history=history)
        assert eu == 8.0 and s.choices() == {0: (1,), 1: (1,)}
        assert history == [1.0, 3.0, 8.0, 8.0, 8.0]

    def test_non_separable_gap(self):
        d = make_non_separable()
        s, eu = spu(d)
        _, meu = brute_force_meu(d)
        assert (eu, meu) == (1.0, 2.0)
        assert s.choices() == {0: (0,), 1: (0,)}
        assert solve_meu(d).eu == 2.0

    def test_init_and_sweeps(self):
        d = make_non_separable()
        _, eu = spu(d, init=Strategy.pure(d, {0: [0], 1: [1]}))
        assert eu == 2.0
        _, eu = spu(d, init=Strategy.pure(d, {0: [0], 1: [1]}), max_sweeps=0)
        assert eu == 0.0

    def test_mixed_init_rejected(self, trivial):
        with pytest.raises(ContractError):
            spu(trivial, init=Strategy.from_tables({0: np.array([[0.5, 0.5]])}))

    @pytest.mark.parametrize("spec", small_specs(10, seed0=500))
    def test_monotone_and_dominated(self, spec):
        d = gen_random_diagram(spec)
        rng = np.random.default_rng(spec.seed)
        history = []
        s, eu = spu(d, init=random_pure(d, rng), history=history)
        assert all(b >= a - 1e-12 for a, b in zip(history, history[1:]))
        assert EuEvaluator(d)(s) == pytest.approx(eu, abs=1e-9)
        assert eu <= brute_force_meu(d)[1] + 1e-9

    def test_ebo_default_init(self, ebo):
        s, eu = spu(ebo)
        assert eu == pytest.approx(8.9765625, abs=1e-9)
        taken = {ebo.nodes[d].name for d, c in s.choices().items() if c == (1,)}
        assert taken == {"launch_air_strike", "launch_broadcasting", "capture_bodyguard", "use_special_force"}
