"""
Minimum-cost in-arborescences (every edge points toward the root)

Chu-Liu/Edmonds contraction on a dense cost matrix. Ties go to the lowest
target index, so the returned tree is deterministic.

The LRE engine needs the best tree for every fixed root. networkx only
offers unrooted spanning arborescences, which would need a reversed copy
of the graph with the root's out-edges cut for each root, and its ties are
not index-stable. It stays the cross-check in the tests.
"""

from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from utils.core.errors import RootUnreachable


def _find_cycle(parent: np.ndarray, root: int) -> Optional[List[int]]:
    N = len(parent)
    state = np.zeros(N, dtype=int)  # 0 unseen, 1 on current walk, 2 done
    for start in range(N):
        if state[start]:
            continue
        walk = []
        v = start
        while v != -1 and state[v] == 0:
            state[v] = 1
            walk.append(v)
            v = parent[v] if v != root else -1
        if v != -1 and state[v] == 1:
            return sorted(walk[walk.index(v) :])
        for u in walk:
            state[u] = 2
    return None


def _solve(cost: np.ndarray, root: int) -> np.ndarray:
    N = cost.shape[0]
    c = cost.astype(float).copy()
    np.fill_diagonal(c, np.inf)
    parent = np.argmin(c, axis=1)
    parent[root] = -1
    best = c[np.arange(N), np.maximum(parent, 0)]
    best[root] = 0.0
    if np.any(~np.isfinite(best)):
        stuck = int(np.nonzero(~np.isfinite(best))[0][0])
        raise RootUnreachable(f"node {stuck} has no finite path to root {root}")

    cycle = _find_cycle(parent, root)
    if cycle is None:
        return parent

    in_cycle = np.zeros(N, dtype=bool)
    in_cycle[cycle] = True
    outside = [v for v in range(N) if not in_cycle[v]]
    new_id = {v: k for k, v in enumerate(outside)}
    hub = len(outside)
    M = hub + 1

    contracted = np.full((M, M), np.inf)
    sub = np.ix_(outside, outside)
    contracted[:hub, :hub] = c[sub]

    # edges into the cycle keep their cost
    into = c[np.ix_(outside, cycle)]
    entry = np.argmin(into, axis=1)
    contracted[:hub, hub] = into[np.arange(hub), entry]

    # edges leaving the cycle are charged relative to the dropped cycle edge
    cyc = np.array(cycle)
    kept = c[cyc, parent[cyc]]
    leave = c[np.ix_(cycle, outside)] - kept[:, None]
    exit_from = np.argmin(leave, axis=0)
    contracted[hub, :hub] = leave[exit_from, np.arange(hub)]

    sub_parent = _solve(contracted, new_id[root])

    result = parent.copy()
    for v in outside:
        p = sub_parent[new_id[v]]
        if p == -1:
            result[v] = -1
        elif p == hub:
            result[v] = cycle[entry[new_id[v]]]
        else:
            result[v] = outside[p]
    w = sub_parent[hub]
    breaker = cycle[exit_from[w]]
    result[breaker] = outside[w]
    return result


def tree_cost(cost: np.ndarray, parent: np.ndarray) -> float:
    return float(sum(cost[v, p] for v, p in enumerate(parent) if p >= 0))


def min_cost_arborescence(cost: np.ndarray, root: int) -> Tuple[np.ndarray, float]:
    """
    Exact minimum in-arborescence rooted at `root`.

    Args:
        cost: Square matrix; cost[u, v] is the price of edge u -> v (inf = absent)
        root: Root index

    Returns:
        (parent, total) where parent[v] is v's successor toward the root and
        parent[root] == -1
    """
    cost = np.asarray(cost, dtype=float)
    if cost.shape[0] == 1:
        return np.array([-1]), 0.0
    parent = _solve(cost, root)
    return parent, tree_cost(cost, parent)


def brute_force_arborescence(cost: np.ndarray, root: int) -> Tuple[np.ndarray, float]:
    """Enumerate every parent assignment; for small graphs only"""
    cost = np.asarray(cost, dtype=float)
    N = cost.shape[0]
    others = [v for v in range(N) if v != root]
    choices = [[u for u in range(N) if u != v and np.isfinite(cost[v, u])] for v in others]
    best: Optional[np.ndarray] = None
    best_cost = np.inf
    for assignment in product(*choices):
        parent = np.full(N, -1)
        parent[others] = assignment
        if _find_cycle(parent, root) is not None:
            continue
        total = tree_cost(cost, parent)
        if total < best_cost:
            best, best_cost = parent, total
    if best is None:
        raise RootUnreachable(f"no spanning in-tree reaches root {root}")
    return best, float(best_cost)
