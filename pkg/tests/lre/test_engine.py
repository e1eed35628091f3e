import numpy as np
import pytest

from utils.core.errors import CriterionNotSupported, DomainError
from utils.game.aggregative import cournot_game
from utils.learning.dynamics import NoiseConfig, absorbed_pattern, find_absorbing, step, warm_up
from utils.learning.rules import ImitateBestMax, ImitateIfBetter, Rule
from utils.learning.state import AbsorbingSet
from utils.lre.engine import compute_lre, enumerate_absorbing, verify_radius_walras
from utils.lre.graph import (
    LOWER_BOUND,
    NASH_SWITCH,
    RULE_SWITCH,
    WALRAS_ENTRY,
    WALRAS_EXIT,
    AggregativeView,
    OligopolyView,
    build_resistances,
    reachable_within,
    to_dot,
)

BR, IM = Rule.BR, Rule.IM


@pytest.fixture(scope="module")
def lre_eta2(quadratic4):
    return compute_lre(quadratic4, 2.0, [ImitateBestMax()], n_jobs=1)


@pytest.fixture(scope="module")
def lre_eta1(quadratic4):
    return compute_lre(quadratic4, 1.0, n_jobs=1)


class TestGraph:
    def test_nodes(self, quadratic4):
        nodes = enumerate_absorbing(quadratic4)
        assert len(nodes) == 92
        assert nodes[0] == AbsorbingSet(BR, 15.0)
        assert nodes[1] == AbsorbingSet(IM, 0.0)

    def test_edge_provenance(self, quadratic4):
        graph = build_resistances(OligopolyView(quadratic4), 2.0)
        walras, nash_br = AbsorbingSet(IM, 18.0), AbsorbingSet(BR, 15.0)
        assert graph.resistance(AbsorbingSet(IM, 17.0), walras) == 1.0
        assert graph.provenance(AbsorbingSet(IM, 17.0), walras) == WALRAS_ENTRY
        assert graph.resistance(walras, nash_br) == 2.0
        assert graph.provenance(walras, nash_br) == WALRAS_EXIT
        assert graph.provenance(AbsorbingSet(IM, 40.0), nash_br) == RULE_SWITCH
        assert graph.provenance(nash_br, AbsorbingSet(IM, 15.0)) == NASH_SWITCH
        # nothing is reachable from q^W with one action mistake
        assert graph.provenance(walras, AbsorbingSet(IM, 17.0)) == LOWER_BOUND
        assert graph.resistance(walras, AbsorbingSet(IM, 17.0)) == 2.0

    def test_lower_bound_outside_closure(self, quadratic4):
        graph = build_resistances(OligopolyView(quadratic4), 1.5)
        walras = AbsorbingSet(IM, 18.0)
        assert graph.resistance(walras, AbsorbingSet(IM, 17.0)) == 2.0
        assert not graph.to_networkx().edges[walras.label, "mon(17,IM)"]["exact"]

    @pytest.mark.parametrize("model_name", ["quadratic4", "toy"])
    def test_nodes_are_absorbing(self, model_name, request):
        model = request.getfixturevalue(model_name)
        rng = np.random.default_rng(17)
        for node in enumerate_absorbing(model):
            start = warm_up((node.quantity,) * model.n, (node.rule,) * model.n, model, memory=3)
            found = find_absorbing(start, model, [ImitateBestMax()], rng, max_periods=0)
            assert found.pattern == node
            assert found.periods == 0
            state = found.state
            for _ in range(10):
                state = step(state, model, [ImitateBestMax()] * model.n, NoiseConfig(), rng)
            assert absorbed_pattern(state, model) == node

    def test_self_edge(self, quadratic4):
        graph = build_resistances(OligopolyView(quadratic4), 2.0)
        with pytest.raises(DomainError):
            graph.resistance(AbsorbingSet(IM, 3.0), AbsorbingSet(IM, 3.0))

    def test_reachable_within(self, quadratic4):
        graph = build_resistances(OligopolyView(quadratic4), 1.0)
        reached = reachable_within(graph, AbsorbingSet(IM, 15.0))
        assert [n.quantity for n in reached] == [float(q) for q in range(0, 61)]
        with pytest.raises(DomainError):
            reachable_within(graph, AbsorbingSet(BR, 15.0))

    def test_networkx_export(self, quadratic4):
        g = build_resistances(OligopolyView(quadratic4), 2.0).to_networkx()
        assert g.number_of_nodes() == 92
        assert g["mon(17,IM)"]["mon(18,IM)"]["exact"]

    def test_eta_below_one(self, quadratic4):
        with pytest.raises(DomainError):
            build_resistances(OligopolyView(quadratic4), 0.5)


class TestLre:
    def test_quadratic4_eta2(self, lre_eta2):
        assert lre_eta2.labels() == ["mon(15,BR)", "mon(18,IM)"]
        assert lre_eta2.min_tree_cost == 92.0
        assert lre_eta2.root_costs["mon(40,IM)"] > 92.0

    @pytest.mark.parametrize("eta", [1.5, 2.0, 5.0])
    def test_lre_constant_in_eta(self, quadratic4, eta):
        result = compute_lre(quadratic4, eta, [ImitateBestMax()], n_jobs=1)
        assert result.labels() == ["mon(15,BR)", "mon(18,IM)"]
        assert result.min_tree_cost == pytest.approx(90.0 + eta)

    def test_witness_trees_span_the_graph(self, lre_eta2):
        for edges in lre_eta2.witness_trees.values():
            assert len(edges) == 91

    def test_quadratic4_eta1(self, lre_eta1):
        assert lre_eta1.min_tree_cost == 91.0
        assert len(lre_eta1.lre_set) == 62
        assert lre_eta1.lre_set[0] == AbsorbingSet(BR, 15.0)
        assert [n.quantity for n in lre_eta1.lre_set[1:]] == [float(q) for q in range(0, 61)]
        assert lre_eta1.bounds == (0.0, pytest.approx(60.0))

    def test_duopoly_eta1(self, duopoly):
        result = compute_lre(duopoly, 1.0, n_jobs=1)
        im = [n.quantity for n in result.lre_set if n.rule == IM]
        assert AbsorbingSet(BR, 22.5) in result.lre_set
        assert im == [22.5 + 0.5 * k for k in range(31)]

    def test_refuses_non_sf_criteria(self, quadratic4):
        with pytest.raises(CriterionNotSupported, match="simulate"):
            compute_lre(quadratic4, 2.0, [ImitateIfBetter()])

    def test_radius_walras(self, quadratic4, duopoly):
        assert verify_radius_walras(quadratic4).passed
        assert verify_radius_walras(duopoly).passed

    def test_dot(self, lre_eta2):
        text = to_dot(lre_eta2.graph, lre_eta2.witness_trees)
        assert text.startswith("digraph resistances {")
        assert '"mon(15,BR)" [shape=box];' in text
        assert "style=bold" in text


class TestAggregativeLre:
    def test_cournot_embedding(self, quadratic4):
        view = AggregativeView(cournot_game(quadratic4), 15.0, 18.0)
        result = compute_lre(view, 2.0, n_jobs=1)
        assert result.labels() == ["mon(15,BR)", "mon(18,IM)"]

    def test_cournot_embedding_eta1(self, quadratic4):
        view = AggregativeView(cournot_game(quadratic4), 15.0, 18.0)
        result = compute_lre(view, 1.0, n_jobs=1)
        labels = result.labels()
        for label in ("mon(15,BR)", "mon(15,IM)", "mon(18,IM)"):
            assert label in labels
        assert np.isfinite(result.min_tree_cost)

    def test_nash_equal_to_ats(self, quadratic4):
        with pytest.raises(DomainError):
            AggregativeView(cournot_game(quadratic4), 15.0, 15.0)
