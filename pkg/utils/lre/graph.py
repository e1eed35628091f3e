"""
Resistance graph over the absorbing sets

Nodes are mon(q^N, BR) followed by every mon(q, IM) in ascending q. Edge costs
are the exact one-mistake transitions where those are known and sound lower
bounds elsewhere; each edge carries a provenance tag.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from utils.core.config import get_config
from utils.core.errors import DomainError
from utils.game.aggregative import AggregativeGame
from utils.game.oligopoly import OligopolyModel, compute_benchmarks, delta_row
from utils.learning.rules import Rule
from utils.learning.state import AbsorbingSet

WALRAS_ENTRY = "walras_entry"
ADVANTAGE_ENTRY = "advantage_entry"
WALRAS_EXIT = "walras_exit"
NASH_SWITCH = "nash_switch"
RULE_SWITCH = "rule_switch"
LOWER_BOUND = "lower_bound"


class GameView(ABC):
    """What the resistance graph needs from a game: strategies, benchmarks, one-deviant advantage"""

    strategies: Tuple[float, ...]
    nash: float
    walrasian: float

    @abstractmethod
    def advantage_row(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Payoff advantage of one deviant at each strategy over n-1 agents at s.

        Returns:
            (advantages, tolerances) aligned with `strategies`
        """
        pass

    def advantage_matrix(self) -> np.ndarray:
        """member[i, j] is True when strategy j is in D(strategy i)"""
        rows = []
        for s in self.strategies:
            values, tol = self.advantage_row(s)
            rows.append(values >= -tol)
        return np.array(rows, dtype=bool)


class OligopolyView(GameView):
    def __init__(self, model: OligopolyModel):
        b = compute_benchmarks(model)
        self.model = model
        self.strategies = tuple(float(q) for q in model.quantities)
        self.nash = b.nash
        self.walrasian = b.walrasian

    def advantage_row(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        return delta_row(s, self.model)


class AggregativeView(GameView):
    """Aggregative game with a known Nash strategy and ATS"""

    def __init__(self, game: AggregativeGame, nash: float, ats: float):
        if nash == ats:
            raise DomainError("aggregative LRE analysis needs the Nash strategy to differ from the ATS")
        self.game = game
        self.strategies = tuple(game.strategies)
        self.nash = nash
        self.walrasian = ats

    def advantage_row(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        values, tols = [], []
        for s2 in self.strategies:
            t = self.game.mixed_aggregate(s, s2, 1)
            deviant, incumbent = self.game.payoff(s2, t), self.game.payoff(s, t)
            values.append(deviant - incumbent)
            tols.append(get_config().tie_tolerance * max(1.0, abs(deviant), abs(incumbent)))
        return np.array(values), np.array(tols)


@dataclass
class TransitionGraph:
    nodes: List[AbsorbingSet]
    cost: np.ndarray
    exact: np.ndarray
    tags: Dict[Tuple[int, int], str]
    eta: float
    # IM-to-IM one-mistake reachability, indices into nodes
    one_mistake: nx.DiGraph = field(default_factory=nx.DiGraph)

    @property
    def z(self) -> int:
        return len(self.nodes)

    def index(self, node: AbsorbingSet) -> int:
        return self.nodes.index(node)

    def resistance(self, source: AbsorbingSet, target: AbsorbingSet) -> float:
        if source == target:
            raise DomainError("resistance is undefined on self-edges")
        return float(self.cost[self.index(source), self.index(target)])

    def provenance(self, source: AbsorbingSet, target: AbsorbingSet) -> str:
        return self.tags[(self.index(source), self.index(target))]

    def exact_cost(self) -> np.ndarray:
        """Costs with every lower-bounded edge removed"""
        return np.where(self.exact, self.cost, np.inf)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for node in self.nodes:
            g.add_node(node.label, rule=node.rule.value, quantity=node.quantity)
        for (i, j), tag in self.tags.items():
            g.add_edge(
                self.nodes[i].label,
                self.nodes[j].label,
                cost=float(self.cost[i, j]),
                tag=tag,
                exact=bool(self.exact[i, j]),
            )
        return g


def enumerate_nodes(view: GameView) -> List[AbsorbingSet]:
    return [AbsorbingSet(Rule.BR, view.nash)] + [AbsorbingSet(Rule.IM, s) for s in view.strategies]


def one_mistake_graph(view: GameView, member: Optional[np.ndarray] = None) -> nx.DiGraph:
    """Strategy indices with an edge i -> j whenever j is in D(i) and j != i"""
    member = view.advantage_matrix() if member is None else member
    g = nx.DiGraph()
    g.add_nodes_from(range(len(view.strategies)))
    rows, cols = np.nonzero(member)
    g.add_edges_from((int(i), int(j)) for i, j in zip(rows, cols) if i != j)
    return g


def build_resistances(view: GameView, eta: float) -> TransitionGraph:
    """Assign a cost and provenance to every ordered pair of absorbing sets"""
    if eta < 1:
        raise DomainError(f"eta must be at least 1 (got {eta})")
    nodes = enumerate_nodes(view)
    z = len(nodes)
    S = view.strategies
    member = view.advantage_matrix()
    g1 = one_mistake_graph(view, member)
    closure = {i: nx.descendants(g1, i) for i in g1.nodes}
    tol = get_config().grid_tolerance
    nash_idx = next(k for k, s in enumerate(S) if abs(s - view.nash) <= tol)

    cost = np.full((z, z), np.inf)
    exact = np.zeros((z, z), dtype=bool)
    tags: Dict[Tuple[int, int], str] = {}

    def put(i: int, j: int, value: float, tag: str, is_exact: bool):
        cost[i, j] = value
        exact[i, j] = is_exact
        tags[(i, j)] = tag

    for a in range(len(S)):
        i = a + 1
        for b in range(len(S)):
            if a == b:
                continue
            j = b + 1
            if member[a, b]:
                put(i, j, 1.0, WALRAS_ENTRY if abs(S[b] - view.walrasian) <= tol else ADVANTAGE_ENTRY, True)
            elif b in closure[a]:
                # a single rule mistake might still reach it
                put(i, j, min(2.0, eta), LOWER_BOUND, False)
            else:
                # at least two mistakes, whatever eta is
                put(i, j, 2.0, LOWER_BOUND, False)

        # mon(q, IM) -> mon(q^N, BR): one rule mistake then unperturbed BR convergence
        put(i, 0, eta, WALRAS_EXIT if abs(S[a] - view.walrasian) <= tol else RULE_SWITCH, True)

    for b in range(len(S)):
        j = b + 1
        if b == nash_idx:
            put(0, j, eta, NASH_SWITCH, True)
        else:
            put(0, j, eta + 1.0, ADVANTAGE_ENTRY if member[nash_idx, b] else LOWER_BOUND, bool(member[nash_idx, b]))

    logger.debug(f"Resistance graph: {z} nodes, {int(exact.sum())} exact edges, eta={eta}")
    return TransitionGraph(nodes=nodes, cost=cost, exact=exact, tags=tags, eta=eta, one_mistake=g1)


def to_dot(graph: TransitionGraph, trees: Optional[Dict[str, Sequence[Tuple[str, str]]]] = None) -> str:
    """Graphviz text for the resistance graph; witness-tree edges drawn bold"""
    highlighted: Set[Tuple[str, str]] = set()
    for edges in (trees or {}).values():
        highlighted.update(edges)

    lines = ["digraph resistances {", "  rankdir=LR;"]
    for node in graph.nodes:
        shape = "box" if node.rule == Rule.BR else "ellipse"
        lines.append(f'  "{node.label}" [shape={shape}];')
    for (i, j), tag in sorted(graph.tags.items()):
        src, dst = graph.nodes[i].label, graph.nodes[j].label
        if (src, dst) not in highlighted and not graph.exact[i, j]:
            continue
        style = ", style=bold" if (src, dst) in highlighted else ""
        lines.append(f'  "{src}" -> "{dst}" [label="{graph.cost[i, j]:g} {tag}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def reachable_within(graph: TransitionGraph, start: AbsorbingSet) -> List[AbsorbingSet]:
    """IM nodes reachable from `start` through exact cost-1 edges"""
    if start.rule != Rule.IM:
        raise DomainError("one-mistake reachability is defined between IM nodes")
    origin = graph.index(start) - 1
    found = {origin} | nx.descendants(graph.one_mistake, origin)
    return [graph.nodes[k + 1] for k in sorted(found)]
