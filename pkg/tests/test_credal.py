import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limidcr.bench import RandomSpec, gen_random_diagram
from limidcr.credal import (
    CredalNetwork, CredalNode, FreeDecision, MarginalEvaluator, Precise, StrategySelection, VertexList,
    limid_to_credal, relevant_ancestors, sum_marginals,
)
from limidcr.errors import ContractError
from limidcr.model import DiagramBuilder, Strategy, brute_force_meu, enumerate_pure_strategies, expected_utility, normalize_utilities

from conftest import random_mixed


def names(net, ids):
    return {net.nodes[i].name for i in ids}


class TestTranslation:
    def test_fig1_layout(self, fig1):
        normalized, _ = normalize_utilities(fig1)
        net = limid_to_credal(normalized)
        assert names(net, [q for q, _ in net.queries]) == {"U1", "U2", "U3"}
        assert all(c == 0 for _, c in net.queries)
        kinds = {n.name: type(n.spec).__name__ for n in net.nodes}
        assert kinds == {"D1": "FreeDecision", "D2": "FreeDecision", "C1": "Precise", "C2": "Precise",
                         "C3": "Precise", "U1": "Precise", "U2": "Precise", "U3": "Precise"}

    def test_query_rows(self):
        b = DiagramBuilder()
        b.decision("D")
        b.utility("U", ["D"], [0.25, 1.0])
        net = limid_to_credal(b.build())
        assert net.nodes[1].spec.table.tolist() == [[0.25, 0.75], [1.0, 0.0]]

    def test_unnormalized_rejected(self, fig1):
        with pytest.raises(ContractError):
            limid_to_credal(fig1)

    def test_relevant_ancestors(self, fig1):
        net = limid_to_credal(normalize_utilities(fig1)[0])
        assert names(net, relevant_ancestors(net, net.nodes[7].id)) == {"D1", "D2", "C1", "C2", "C3", "U3"}
        assert names(net, relevant_ancestors(net, 5)) == {"D1", "U1"}

    def test_vertex_list_checks(self, fig1):
        normalized, _ = normalize_utilities(fig1)
        with pytest.raises(ContractError):
            limid_to_credal(normalized, {2: [[[0.5, 0.5]]]})
        with pytest.raises(ContractError):
            limid_to_credal(normalized, {2: [[[0.5, 0.6]], [[1.0, 0.0]]]})
        net = limid_to_credal(normalized, {2: [[[0.9, 0.1], [0.8, 0.2]], [[0.2, 0.8]]]})
        assert net.vertex_nodes() == [2]


class TestSumMarginals:
    def test_root_query(self):
        net = CredalNetwork([CredalNode(0, "U", (), 2, Precise(np.array([[0.3, 0.7]])))], [(0, 0)])
        assert sum_marginals(net, StrategySelection()) == pytest.approx(0.3)

    def test_fig1_matches_normalized_eu(self, fig1):
        normalized, _ = normalize_utilities(fig1)
        net = limid_to_credal(normalized)
        for choices in enumerate_pure_strategies(fig1):
            s = Strategy.pure(fig1, choices)
            got = sum_marginals(net, StrategySelection.from_strategy(s))
            assert got == pytest.approx(expected_utility(normalized, s), abs=1e-9)

    def test_marginals_in_unit_interval(self, small_random):
        rng = np.random.default_rng(0)
        for d in small_random:
            net = limid_to_credal(normalize_utilities(d)[0])
            ev = MarginalEvaluator(net)
            for _ in range(5):
                sel = StrategySelection.from_strategy(random_mixed(d, rng))
                assert all(-1e-12 <= m <= 1 + 1e-12 for m in ev.marginals(sel).values())

    def test_incomplete_selection_names_node(self, fig1):
        net = limid_to_credal(normalize_utilities(fig1)[0])
        with pytest.raises(ContractError, match="D2"):
            sum_marginals(net, StrategySelection({0: np.array([[1.0, 0.0]])}))

    def test_vertex_selection(self):
        nodes = [
            CredalNode(0, "C", (), 2, VertexList((np.array([[0.2, 0.8], [0.6, 0.4]]),))),
            CredalNode(1, "U", (0,), 2, Precise(np.array([[1.0, 0.0], [0.0, 1.0]]))),
        ]
        net = CredalNetwork(nodes, [(1, 0)])
        assert sum_marginals(net, StrategySelection(vertices={0: (0,)})) == pytest.approx(0.2)
        assert sum_marginals(net, StrategySelection(vertices={0: (1,)})) == pytest.approx(0.6)
        with pytest.raises(ContractError, match="C"):
            sum_marginals(net, StrategySelection())


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_translation_preserves_optimum(seed):
    d = gen_random_diagram(RandomSpec(8, 2, seed=seed))
    normalized, info = normalize_utilities(d)
    net = limid_to_credal(normalized)
    ev = MarginalEvaluator(net)
    best = max(ev(StrategySelection.from_strategy(Strategy.pure(d, c))) for c in enumerate_pure_strategies(d))
    _, meu = brute_force_meu(d)
    assert best == pytest.approx((meu - info.utility_count * info.f_lo) / (info.f_hi - info.f_lo), abs=1e-9)


def test_query_rows_are_distributions(small_random):
    for d in small_random:
        net = limid_to_credal(normalize_utilities(d)[0])
        for q, _ in net.queries:
            rows = net.nodes[q].spec.table
            assert np.all(rows.sum(axis=1) == 1.0)


def test_free_decision_spec(fig1):
    net = limid_to_credal(normalize_utilities(fig1)[0])
    assert net.nodes[0].spec == FreeDecision(2)
    assert net.free_decisions() == [0, 1]
