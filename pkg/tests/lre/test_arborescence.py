import networkx as nx
import numpy as np
import pytest

from utils.core.errors import RootUnreachable
from utils.lre.arborescence import brute_force_arborescence, min_cost_arborescence, tree_cost


def random_costs(rng, size, missing=0.0, integer=True):
    cost = rng.integers(1, 6, size=(size, size)).astype(float) if integer else rng.random((size, size))
    cost[rng.random((size, size)) < missing] = np.inf
    np.fill_diagonal(cost, np.inf)
    return cost


def networkx_total(cost, root):
    # an in-tree toward root is an out-tree from root on the reversed edges
    g = nx.DiGraph()
    N = cost.shape[0]
    g.add_nodes_from(range(N))
    for u in range(N):
        for v in range(N):
            if u != v and u != root and np.isfinite(cost[u, v]):
                g.add_edge(v, u, weight=cost[u, v])
    tree = nx.minimum_spanning_arborescence(g, attr="weight")
    return sum(d["weight"] for _, _, d in tree.edges(data=True))


def is_in_tree(parent, root):
    for v in range(len(parent)):
        seen, node = set(), v
        while node != root:
            if node in seen:
                return False
            seen.add(node)
            node = parent[node]
    return parent[root] == -1


def test_single_node():
    parent, total = min_cost_arborescence(np.array([[np.inf]]), 0)
    assert parent.tolist() == [-1]
    assert total == 0.0


def test_cycle_contraction():
    # 1 and 2 prefer each other; the cheapest way out is through 2
    cost = np.array(
        [
            [np.inf, 9.0, 9.0],
            [5.0, np.inf, 1.0],
            [3.0, 1.0, np.inf],
        ]
    )
    parent, total = min_cost_arborescence(cost, 0)
    assert parent.tolist() == [-1, 2, 0]
    assert total == 4.0


def test_unreachable_root():
    cost = np.array([[np.inf, 1.0], [np.inf, np.inf]])
    with pytest.raises(RootUnreachable):
        min_cost_arborescence(cost, 0)
    with pytest.raises(RootUnreachable):
        brute_force_arborescence(cost, 0)


def test_matches_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(500):
        size = int(rng.integers(2, 6))
        cost = random_costs(rng, size, missing=0.3)
        root = int(rng.integers(size))
        try:
            _, expected = brute_force_arborescence(cost, root)
        except RootUnreachable:
            with pytest.raises(RootUnreachable):
                min_cost_arborescence(cost, root)
            continue
        parent, total = min_cost_arborescence(cost, root)
        assert total == pytest.approx(expected)
        assert is_in_tree(parent, root)
        assert tree_cost(cost, parent) == pytest.approx(total)


def test_matches_networkx():
    rng = np.random.default_rng(7)
    for _ in range(100):
        size = int(rng.integers(2, 9))
        cost = random_costs(rng, size, integer=False)
        root = int(rng.integers(size))
        _, total = min_cost_arborescence(cost, root)
        assert total == pytest.approx(networkx_total(cost, root))
