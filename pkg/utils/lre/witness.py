"""
Constructive certificates for one-mistake transitions

A witness is an explicit period-by-period script of revision events. Replaying
it checks every non-mistake choice against the exact revision laws, so a
successful replay proves the transition is possible at the claimed cost.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from utils.core.errors import AnalyticDiscrepancy, ConvergenceError, DomainError
from utils.game.oligopoly import (
    OligopolyModel,
    advantage_set,
    best_response,
    compute_benchmarks,
    profit,
)
from utils.learning.dynamics import absorbed_pattern, broadcast_criteria, play, warm_up
from utils.learning.rules import RevisionCriterion, Rule, action_distribution
from utils.learning.state import AbsorbingSet, IndustryState

RULE_INERTIA = "rule_inertia"
ACTION_INERTIA = "action_inertia"


@dataclass(frozen=True)
class FirmEvent:
    rule_opportunity: bool = False
    rule_mistake: bool = False
    new_rule: Optional[Rule] = None
    action_opportunity: bool = False
    action_mistake: bool = False
    new_quantity: Optional[float] = None


Period = Tuple[FirmEvent, ...]


@dataclass
class Witness:
    source: AbsorbingSet
    target: AbsorbingSet
    script: List[Period]
    final: IndustryState
    rule_mistakes: int
    action_mistakes: int
    eta: float

    @property
    def cost(self) -> float:
        return self.eta * self.rule_mistakes + self.action_mistakes

    @property
    def periods(self) -> int:
        return len(self.script)


@dataclass(frozen=True)
class RuleInertiaBound:
    """Quiet periods x before the rule mistake, and the memory that path needs"""

    x: int
    min_memory: int
    q_tilde: float
    payoff_tilde: float
    payoff_walras: float
    payoff_mixed: float


def rule_inertia_threshold(model: OligopolyModel) -> RuleInertiaBound:
    """
    Smallest x such that a lone best-responder, after x quiet periods at q^W,
    out-earns the incumbents' average: f_i > (x pi^W + pi_mixed) / (x + 1).
    """
    b = compute_benchmarks(model)
    w, n = b.walrasian, model.n
    replies = best_response((n - 1) * w, model)
    q_tilde = min(replies, key=lambda q: (abs(q - b.nash), q))
    aggregate = q_tilde + (n - 1) * w
    payoff_tilde = profit(q_tilde, aggregate, model)
    payoff_walras = profit(w, n * w, model)
    payoff_mixed = profit(w, aggregate, model)

    if w in replies or payoff_tilde <= payoff_walras:
        x = 1
    else:
        x = max(1, math.floor((payoff_mixed - payoff_tilde) / (payoff_tilde - payoff_walras)) + 1)
    return RuleInertiaBound(
        x=x,
        min_memory=x + 1,
        q_tilde=q_tilde,
        payoff_tilde=payoff_tilde,
        payoff_walras=payoff_walras,
        payoff_mixed=payoff_mixed,
    )


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _quiet(n: int) -> Period:
    return tuple(FirmEvent() for _ in range(n))


def _apply(
    state: IndustryState,
    period: Period,
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    t: int,
) -> IndustryState:
    last = state.observe()
    rules, quantities, reset = [], [], []
    for i, (firm, event) in enumerate(zip(state.firms, period)):
        rule = firm.rule
        if event.rule_opportunity:
            rule = event.new_rule
            if not event.rule_mistake and criteria[i].distribution(i, last).get(rule, 0.0) <= 0:
                raise AnalyticDiscrepancy(f"period {t}: firm {i} cannot adopt {rule.value} without a mistake")
        q = firm.quantity
        if event.action_opportunity:
            q = event.new_quantity
            if not event.action_mistake and action_distribution(i, rule, last, model).get(q, 0.0) <= 0:
                raise AnalyticDiscrepancy(f"period {t}: firm {i} cannot choose {q} under {rule.value}")
        rules.append(rule)
        quantities.append(q)
        reset.append(event.rule_opportunity)
    return play(state, quantities, rules, reset, model)


def replay(
    state: IndustryState,
    script: Sequence[Period],
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
) -> Tuple[IndustryState, int, int]:
    """Run a script; returns (final state, rule mistakes, action mistakes)"""
    criteria = broadcast_criteria(criteria, model.n)
    rule_mistakes = action_mistakes = 0
    for t, period in enumerate(script):
        if len(period) != model.n:
            raise DomainError(f"period {t} scripts {len(period)} firms, model has {model.n}")
        state = _apply(state, period, model, criteria, t)
        rule_mistakes += sum(e.rule_opportunity and e.rule_mistake for e in period)
        action_mistakes += sum(e.action_opportunity and e.action_mistake for e in period)
    return state, rule_mistakes, action_mistakes


# ---------------------------------------------------------------------------
# path builders
# ---------------------------------------------------------------------------


class _Script:
    """Builds a script while tracking the state it produces"""

    def __init__(self, state: IndustryState, model: OligopolyModel, criteria: Sequence[RevisionCriterion]):
        self.state = state
        self.model = model
        self.criteria = broadcast_criteria(criteria, model.n)
        self.periods: List[Period] = []

    def add(self, period: Period) -> None:
        self.state = _apply(self.state, period, self.model, self.criteria, len(self.periods))
        self.periods.append(period)

    def hold(self, count: int) -> None:
        for _ in range(count):
            self.add(_quiet(self.model.n))

    def converge_best_responses(self, cap: int = 10_000) -> None:
        """One firm per period moves to its best reply closest to q^N"""
        nash = compute_benchmarks(self.model).nash
        n = self.model.n
        for _ in range(cap):
            q = self.state.quantities
            total = sum(q)
            mover = None
            for i in range(n):
                replies = best_response(max(total - q[i], 0.0), self.model)
                if q[i] not in replies:
                    mover = (i, min(replies, key=lambda r: (abs(r - nash), r)))
                    break
            if mover is None:
                break
            period = [FirmEvent() for _ in range(n)]
            period[mover[0]] = FirmEvent(action_opportunity=True, new_quantity=mover[1])
            self.add(tuple(period))
        else:
            raise ConvergenceError(f"best-response convergence exceeded {cap} periods")
        if any(x != nash for x in self.state.quantities):
            raise ConvergenceError(f"best responses settled at {self.state.quantities}, not q^N={nash}")


def _start(node: AbsorbingSet, model: OligopolyModel, memory: int) -> IndustryState:
    return warm_up((node.quantity,) * model.n, (node.rule,) * model.n, model, memory)


def _others_adopt(n: int, rule: Rule) -> Period:
    return (FirmEvent(),) + tuple(
        FirmEvent(rule_opportunity=True, new_rule=rule) for _ in range(n - 1)
    )


def _finish(script: _Script, source: AbsorbingSet, target: AbsorbingSet, eta: float) -> Witness:
    script.hold(script.state.memory)
    reached = absorbed_pattern(script.state, script.model)
    if reached != target:
        raise AnalyticDiscrepancy(f"witness from {source} ended in {reached}, expected {target}")
    final, rule_mistakes, action_mistakes = replay(
        _start(source, script.model, script.state.memory), script.periods, script.model, script.criteria
    )
    return Witness(
        source=source,
        target=target,
        script=script.periods,
        final=final,
        rule_mistakes=rule_mistakes,
        action_mistakes=action_mistakes,
        eta=eta,
    )


def action_mistake_path(
    q: float, q_prime: float, model: OligopolyModel, criteria: Sequence[RevisionCriterion], memory: int, eta: float
) -> Witness:
    """mon(q, IM) -> mon(q', IM) for q' in D(q): one deviant, then everyone imitates"""
    if q_prime == q or q_prime not in advantage_set(q, model).grid_points:
        raise DomainError(f"{q_prime} is not a one-mistake target from {q}")
    n = model.n
    source, target = AbsorbingSet(Rule.IM, q), AbsorbingSet(Rule.IM, q_prime)
    script = _Script(_start(source, model, memory), model, criteria)
    first = [FirmEvent() for _ in range(n)]
    first[0] = FirmEvent(action_opportunity=True, action_mistake=True, new_quantity=q_prime)
    script.add(tuple(first))
    script.add((FirmEvent(),) + tuple(FirmEvent(action_opportunity=True, new_quantity=q_prime) for _ in range(n - 1)))
    return _finish(script, source, target, eta)


def action_inertia_path(
    q: float, model: OligopolyModel, criteria: Sequence[RevisionCriterion], memory: int, eta: float
) -> Witness:
    """mon(q, IM) -> mon(q^N, BR): a silent switch to BR, copied on the fitness tie"""
    n = model.n
    nash = compute_benchmarks(model).nash
    source, target = AbsorbingSet(Rule.IM, q), AbsorbingSet(Rule.BR, nash)
    script = _Script(_start(source, model, memory), model, criteria)
    first = [FirmEvent() for _ in range(n)]
    first[0] = FirmEvent(rule_opportunity=True, rule_mistake=True, new_rule=Rule.BR)
    script.add(tuple(first))
    script.add(_others_adopt(n, Rule.BR))
    script.converge_best_responses()
    return _finish(script, source, target, eta)


def rule_inertia_path(
    model: OligopolyModel, criteria: Sequence[RevisionCriterion], memory: int, eta: float
) -> Witness:
    """mon(q^W, IM) -> mon(q^N, BR): after x quiet periods a lone best-responder out-earns the rest"""
    bound = rule_inertia_threshold(model)
    if memory < bound.min_memory:
        raise DomainError(f"rule-inertia path needs M >= {bound.min_memory} (got {memory})")
    n = model.n
    b = compute_benchmarks(model)
    source, target = AbsorbingSet(Rule.IM, b.walrasian), AbsorbingSet(Rule.BR, b.nash)
    script = _Script(_start(source, model, memory), model, criteria)

    # every firm re-confirms IM so all tenures restart together
    script.add(tuple(FirmEvent(rule_opportunity=True, new_rule=Rule.IM) for _ in range(n)))
    script.hold(bound.x - 1)
    first = [FirmEvent() for _ in range(n)]
    first[0] = FirmEvent(
        rule_opportunity=True,
        rule_mistake=True,
        new_rule=Rule.BR,
        action_opportunity=True,
        new_quantity=bound.q_tilde,
    )
    script.add(tuple(first))
    script.add(_others_adopt(n, Rule.BR))
    script.converge_best_responses()
    return _finish(script, source, target, eta)


def imitation_switch_path(
    model: OligopolyModel, criteria: Sequence[RevisionCriterion], memory: int, eta: float
) -> Witness:
    """mon(q^N, BR) -> mon(q^N, IM): a silent switch to IM, copied on the fitness tie"""
    nash = compute_benchmarks(model).nash
    source, target = AbsorbingSet(Rule.BR, nash), AbsorbingSet(Rule.IM, nash)
    n = model.n
    script = _Script(_start(source, model, memory), model, criteria)
    first = [FirmEvent() for _ in range(n)]
    first[0] = FirmEvent(rule_opportunity=True, rule_mistake=True, new_rule=Rule.IM)
    script.add(tuple(first))
    script.add(_others_adopt(n, Rule.IM))
    return _finish(script, source, target, eta)


def witness_path(
    source: AbsorbingSet,
    target: AbsorbingSet,
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    memory: int,
    eta: float,
    variant: str = ACTION_INERTIA,
) -> Witness:
    """Explicit path realising a cost-1 or cost-eta edge of the resistance graph"""
    nash = compute_benchmarks(model).nash
    walrasian = compute_benchmarks(model).walrasian
    if source.rule == Rule.IM and target.rule == Rule.IM:
        witness = action_mistake_path(source.quantity, target.quantity, model, criteria, memory, eta)
    elif source.rule == Rule.IM and target == AbsorbingSet(Rule.BR, nash):
        if variant == RULE_INERTIA:
            if source.quantity != walrasian:
                raise DomainError("the rule-inertia path starts at mon(q^W, IM)")
            witness = rule_inertia_path(model, criteria, memory, eta)
        else:
            witness = action_inertia_path(source.quantity, model, criteria, memory, eta)
    elif source == AbsorbingSet(Rule.BR, nash) and target == AbsorbingSet(Rule.IM, nash):
        witness = imitation_switch_path(model, criteria, memory, eta)
    else:
        raise DomainError(f"no single-mistake witness from {source} to {target}")
    logger.debug(f"Witness {source} -> {target}: {witness.periods} periods, cost {witness.cost:g}")
    return witness
