"""
Long-run equilibrium engine

Solves a minimum in-arborescence for every absorbing set, keeps the roots of
globally minimal trees, certifies that their witness trees use only exactly
known edges, and cross-checks the set against the closed-form answer.
"""

from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from utils.core.config import get_config
from utils.core.errors import AnalyticDiscrepancy, CriterionNotSupported, RootUnreachable
from utils.core.parallel import run_parallel
from utils.core.reports import CheckReport
from utils.game.oligopoly import OligopolyModel, lre_bounds
from utils.learning.rules import RevisionCriterion, Rule
from utils.learning.state import AbsorbingSet
from utils.lre.arborescence import min_cost_arborescence
from utils.lre.graph import (
    AggregativeView,
    GameView,
    OligopolyView,
    TransitionGraph,
    build_resistances,
    enumerate_nodes,
    reachable_within,
)

COST_TOLERANCE = 1e-9


@dataclass
class LreResult:
    eta: float
    lre_set: List[AbsorbingSet]
    min_tree_cost: float
    root_costs: Dict[str, float]
    # edges (source label, target label) of one minimum tree per LRE member
    witness_trees: Dict[str, List[Tuple[str, str]]]
    graph: TransitionGraph
    bounds: Optional[Tuple[float, float]] = None
    guaranteed: List[AbsorbingSet] = field(default_factory=list)
    beyond_guaranteed: List[AbsorbingSet] = field(default_factory=list)

    def labels(self) -> List[str]:
        return [node.label for node in self.lre_set]


def enumerate_absorbing(model: OligopolyModel) -> List[AbsorbingSet]:
    """mon(q^N, BR) followed by mon(q, IM) for every grid q"""
    return enumerate_nodes(OligopolyView(model))


def require_sf(criteria: Optional[Sequence[RevisionCriterion]]) -> None:
    if not criteria:
        return
    offending = sorted({c.kind for c in criteria if not c.satisfies_sf})
    if offending:
        raise CriterionNotSupported(
            f"criteria {', '.join(offending)} violate Survival-of-the-Fittest; "
            "analytic LRE is unavailable, use `simulate` instead"
        )


def _solve_root(cost: np.ndarray, root: int) -> Tuple[Optional[np.ndarray], float]:
    try:
        return min_cost_arborescence(cost, root)
    except RootUnreachable:
        return None, float("inf")


def _tree_edges(graph: TransitionGraph, parent: np.ndarray) -> List[Tuple[str, str]]:
    return [(graph.nodes[v].label, graph.nodes[p].label) for v, p in enumerate(parent) if p >= 0]


def _uses_lower_bound(graph: TransitionGraph, parent: np.ndarray) -> bool:
    return any(not graph.exact[v, p] for v, p in enumerate(parent) if p >= 0)


def _expected_floor(z: int, eta: float) -> float:
    return z - 1.0 if eta == 1 else z - 2.0 + eta


def compute_lre(
    target: Union[OligopolyModel, GameView],
    eta: float,
    criteria: Optional[Sequence[RevisionCriterion]] = None,
    n_jobs: Optional[int] = None,
) -> LreResult:
    """
    LRE by exhaustive minimum-tree search with closed-form cross-checks.

    Args:
        target: Cournot model, or a GameView (e.g. an aggregative embedding)
        eta: Rule-mistake exponent
        criteria: Revision criteria in use; all must satisfy SF
        n_jobs: Workers for the per-root solves

    Returns:
        LreResult with the LRE set, the minimal tree cost and witness trees

    Raises:
        CriterionNotSupported: a criterion violates SF
        AnalyticDiscrepancy: tree search and closed form disagree
    """
    require_sf(criteria)
    view = target if isinstance(target, GameView) else OligopolyView(target)
    graph = build_resistances(view, eta)
    z = graph.z
    logger.info(f"🔄 Solving {z} minimum arborescences (eta={eta})")

    solves = run_parallel(partial(_solve_root, graph.cost), range(z), "arborescence roots", n_jobs=n_jobs, prefer="threads")
    costs = np.array([c for _, c in solves])
    best = float(costs.min())
    if not np.isfinite(best):
        raise AnalyticDiscrepancy("no absorbing set admits a finite tree")

    lre: List[AbsorbingSet] = []
    witnesses: Dict[str, List[Tuple[str, str]]] = {}
    exact_cost = graph.exact_cost()
    for root in np.nonzero(costs <= best + COST_TOLERANCE)[0]:
        root = int(root)
        parent = solves[root][0]
        label = graph.nodes[root].label
        if _uses_lower_bound(graph, parent):
            parent, certified = _solve_root(exact_cost, root)
            if parent is None or certified > best + COST_TOLERANCE:
                logger.error(f"❌ Minimum tree for {label} relies on lower-bounded edges")
                raise AnalyticDiscrepancy(
                    f"minimum tree for {label} is not certified by exact edges",
                    root=label,
                    costs={"tree_search": best, "exact_only": certified},
                )
        lre.append(graph.nodes[root])
        witnesses[label] = _tree_edges(graph, parent)

    floor = _expected_floor(z, eta)
    if abs(best - floor) > COST_TOLERANCE:
        raise AnalyticDiscrepancy(
            f"minimum tree cost {best} differs from the expected floor {floor}",
            root=lre[0].label,
            costs={"tree_search": best, "closed_form": floor},
        )

    result = LreResult(
        eta=eta,
        lre_set=lre,
        min_tree_cost=best,
        root_costs={graph.nodes[k].label: float(costs[k]) for k in range(z)},
        witness_trees=witnesses,
        graph=graph,
    )
    _cross_check(result, view, target)
    logger.info(f"✅ LRE: {len(lre)} absorbing sets at tree cost {best:g}")
    return result


def _discrepancy(expected: List[AbsorbingSet], found: List[AbsorbingSet], costs: Dict[str, float]):
    missing = [n.label for n in expected if n not in found]
    extra = [n.label for n in found if n not in expected]
    root = (missing or extra)[0]
    raise AnalyticDiscrepancy(
        f"tree search and closed form disagree (missing {missing}, extra {extra})",
        root=root,
        costs={"tree_search": costs.get(root), "closed_form": None},
    )


def _cross_check(result: LreResult, view: GameView, target) -> None:
    graph = result.graph
    nash_br = AbsorbingSet(Rule.BR, view.nash)
    nash_im = AbsorbingSet(Rule.IM, view.nash)
    walras_im = AbsorbingSet(Rule.IM, view.walrasian)
    found = result.lre_set

    if result.eta > 1:
        expected = [nash_br, walras_im]
        if sorted(found, key=AbsorbingSet.sort_key) != sorted(expected, key=AbsorbingSet.sort_key):
            _discrepancy(expected, found, result.root_costs)
        result.guaranteed = expected
        return

    # eta == 1: one-mistake chains from mon(q^N, IM)
    surgery = [nash_br] + reachable_within(graph, nash_im)
    if isinstance(view, AggregativeView):
        guaranteed = [nash_br, nash_im, walras_im]
        if any(node not in found for node in guaranteed):
            _discrepancy(guaranteed, found, result.root_costs)
        result.guaranteed = guaranteed
        result.beyond_guaranteed = [node for node in found if node not in guaranteed]
        return

    lo, hi = lre_bounds(view.model)
    tol = get_config().grid_tolerance
    closed_form = [nash_br] + [
        node for node in graph.nodes if node.rule == Rule.IM and lo - tol <= node.quantity <= hi + tol
    ]
    if surgery != closed_form:
        _discrepancy(closed_form, surgery, result.root_costs)
    if found != closed_form:
        _discrepancy(closed_form, found, result.root_costs)
    result.bounds = (lo, hi)
    result.guaranteed = closed_form


def verify_radius_walras(model: OligopolyModel) -> CheckReport:
    """No single mistake leaves mon(q^W, IM), and one mistake reaches it from anywhere"""
    view = OligopolyView(model)
    member = view.advantage_matrix()
    tol = get_config().grid_tolerance
    w = next(k for k, s in enumerate(view.strategies) if abs(s - view.walrasian) <= tol)

    escapes = [view.strategies[k] for k in np.nonzero(member[w])[0] if k != w]
    if escapes:
        return CheckReport(
            "radius_walras", False, counterexample={"from": view.walrasian, "escape_to": escapes[0]}
        )
    blocked = [view.strategies[k] for k in np.nonzero(~member[:, w])[0]]
    if blocked:
        return CheckReport(
            "radius_walras", False, counterexample={"from": blocked[0], "cannot_reach": view.walrasian}
        )
    return CheckReport("radius_walras", True, details={"walrasian": view.walrasian, "grid_points": len(view.strategies)})
