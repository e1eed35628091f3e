"""
One-period transition of the rule/action revision process

Within a period every firm first gets a chance to revise its rule (gamma), then a
chance to revise its quantity (theta) under the rule it now holds; the game is
played at the new profile and the history window shifts by one.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from utils.core.config import get_config
from utils.core.errors import ConvergenceError, DomainError
from utils.core.rng import draw_from
from utils.game.oligopoly import OligopolyModel, best_response
from utils.learning.rules import RULES, RevisionCriterion, Rule, action_revise, rule_revise
from utils.learning.state import AbsorbingSet, FirmRecord, IndustryState, MistakeLog

TIMINGS = ("standard", "immediate", "either")


@dataclass(frozen=True)
class NoiseConfig:
    gamma: float = 0.5
    theta: float = 0.5
    epsilon: float = 0.0
    eta: float = 2.0
    # weights over the grid / over (BR, IM); uniform when None
    action_mistake_law: Optional[Tuple[float, ...]] = None
    rule_mistake_law: Optional[Tuple[float, float]] = None
    timing: str = "standard"

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise DomainError(f"gamma must lie in (0, 1) (got {self.gamma})")
        if not 0 < self.theta < 1:
            raise DomainError(f"theta must lie in (0, 1) (got {self.theta})")
        if not 0 <= self.epsilon < 1:
            raise DomainError(f"epsilon must lie in [0, 1) (got {self.epsilon})")
        if self.eta < 1:
            raise DomainError(f"eta must be at least 1 (got {self.eta})")
        for name, law in (("action", self.action_mistake_law), ("rule", self.rule_mistake_law)):
            if law is not None and any(w <= 0 for w in law):
                raise DomainError(f"{name} mistake law must have full support")
        if self.rule_mistake_law is not None and len(self.rule_mistake_law) != len(RULES):
            raise DomainError("rule mistake law needs one weight per rule")
        if self.timing not in TIMINGS:
            raise DomainError(f"unknown revision timing '{self.timing}'")
        if self.timing != "standard":
            raise DomainError(f"revision timing '{self.timing}' is not implemented; use 'standard'")

    @property
    def rule_mistake_prob(self) -> float:
        return self.epsilon**self.eta if self.epsilon > 0 else 0.0

    def with_epsilon(self, epsilon: float) -> "NoiseConfig":
        return NoiseConfig(
            gamma=self.gamma,
            theta=self.theta,
            epsilon=epsilon,
            eta=self.eta,
            action_mistake_law=self.action_mistake_law,
            rule_mistake_law=self.rule_mistake_law,
            timing=self.timing,
        )

    def rule_law(self) -> Dict[Rule, float]:
        weights = self.rule_mistake_law or (1.0,) * len(RULES)
        total = float(sum(weights))
        return {r: w / total for r, w in zip(RULES, weights)}

    def action_law(self, model: OligopolyModel) -> Dict[float, float]:
        g = model.quantities
        weights = self.action_mistake_law or (1.0,) * len(g)
        if len(weights) != len(g):
            raise DomainError(f"action mistake law has {len(weights)} weights for {len(g)} grid points")
        total = float(sum(weights))
        return {float(q): w / total for q, w in zip(g, weights)}


def broadcast_criteria(criteria: Sequence[RevisionCriterion], n: int) -> Tuple[RevisionCriterion, ...]:
    if len(criteria) == 1:
        return tuple(criteria) * n
    if len(criteria) != n:
        raise DomainError(f"need 1 or {n} criteria (got {len(criteria)})")
    return tuple(criteria)


def warm_up(
    quantities: Sequence[float],
    rules: Sequence[Rule],
    model: OligopolyModel,
    memory: int,
    discount: float = 1.0,
) -> IndustryState:
    """Replay the initial profile for M periods so every window is full"""
    if len(quantities) != model.n or len(rules) != model.n:
        raise DomainError(f"initial profile must have {model.n} entries")
    q = tuple(float(x) for x in quantities)
    rules = tuple(Rule(r) for r in rules)
    profits = tuple(float(p) for p in model.profits(q))
    firms = tuple(
        FirmRecord(quantity=qi, rule=ri, tenure=memory, payoffs=(pi,) * memory)
        for qi, ri, pi in zip(q, rules, profits)
    )
    history = tuple((q, rules, (k + 1,) * model.n) for k in range(memory))
    return IndustryState(firms=firms, period=0, history=history, memory=memory, discount=discount)


def random_state(
    model: OligopolyModel,
    memory: int,
    rng: np.random.Generator,
    rules: Optional[Sequence[Rule]] = None,
    discount: float = 1.0,
) -> IndustryState:
    quantities = rng.choice(model.quantities, size=model.n)
    if rules is None:
        rules = [RULES[int(k)] for k in rng.integers(len(RULES), size=model.n)]
    return warm_up(quantities, rules, model, memory, discount)


def step(
    state: IndustryState,
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    noise: NoiseConfig,
    rng: np.random.Generator,
    log: Optional[MistakeLog] = None,
) -> IndustryState:
    last = state.observe()
    n = state.n
    eps = noise.epsilon

    new_rules: List[Rule] = []
    reset: List[bool] = []
    for i, firm in enumerate(state.firms):
        rule = firm.rule
        revised = rng.random() < noise.gamma
        if revised:
            if log is not None:
                log.rule_opportunities += 1
            if eps > 0 and rng.random() < noise.rule_mistake_prob:
                rule = draw_from(noise.rule_law(), rng)
                if log is not None:
                    log.rule_mistakes += 1
            else:
                rule = rule_revise(i, criteria[i], last, rng)
        new_rules.append(rule)
        reset.append(revised)

    new_quantities: List[float] = []
    for i, firm in enumerate(state.firms):
        q = firm.quantity
        if rng.random() < noise.theta:
            if log is not None:
                log.action_opportunities += 1
            if eps > 0 and rng.random() < eps:
                q = draw_from(noise.action_law(model), rng)
                if log is not None:
                    log.action_mistakes += 1
            else:
                q = action_revise(i, new_rules[i], last, model, rng)
        new_quantities.append(float(q))

    return play(state, new_quantities, new_rules, reset, model)


def play(
    state: IndustryState,
    quantities: Sequence[float],
    rules: Sequence[Rule],
    reset: Sequence[bool],
    model: OligopolyModel,
) -> IndustryState:
    """Realise profits at the new profile and advance the clock"""
    M = state.memory
    q = tuple(float(x) for x in quantities)
    profits = model.profits(q)
    firms = tuple(
        FirmRecord(
            quantity=q[i],
            rule=rules[i],
            tenure=(0 if reset[i] else firm.tenure) + 1,
            payoffs=(firm.payoffs + (float(profits[i]),))[-M:],
        )
        for i, firm in enumerate(state.firms)
    )
    entry = (q, tuple(rules), tuple(f.effective_tenure(M) for f in firms))
    return IndustryState(
        firms=firms,
        period=state.period + 1,
        history=(state.history + (entry,))[-M:],
        memory=M,
        discount=state.discount,
    )


def absorbed_pattern(state: IndustryState, model: OligopolyModel) -> Optional[AbsorbingSet]:
    """mon(q, rule) if the (q, rule) profile has been constant and monomorphic for M periods"""
    pattern = state.monomorphic()
    if pattern is None or len(state.history) < state.memory:
        return None
    profile = ((pattern.quantity,) * state.n, (pattern.rule,) * state.n)
    if any((q, r) != profile for q, r, _ in state.history):
        return None
    if pattern.rule == Rule.BR:
        others = (state.n - 1) * pattern.quantity
        if best_response(others, model) != (pattern.quantity,):
            return None
    return pattern


@dataclass(frozen=True)
class Absorption:
    pattern: AbsorbingSet
    periods: int
    state: IndustryState


def find_absorbing(
    state: IndustryState,
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    rng: np.random.Generator,
    noise: Optional[NoiseConfig] = None,
    max_periods: Optional[int] = None,
) -> Absorption:
    """Step the unperturbed chain until it settles in some mon(q, rule)"""
    noise = noise or NoiseConfig()
    if noise.epsilon != 0:
        raise DomainError("find_absorbing runs the unperturbed chain; epsilon must be 0")
    cap = max_periods if max_periods is not None else get_config().absorption_max_periods
    criteria = broadcast_criteria(criteria, model.n)

    for t in range(cap + 1):
        pattern = absorbed_pattern(state, model)
        if pattern is not None:
            return Absorption(pattern=pattern, periods=t, state=state)
        state = step(state, model, criteria, noise, rng)

    logger.error(f"❌ Not absorbed after {cap} periods; last profile {state.quantities} {state.rules}")
    raise ConvergenceError(f"not absorbed within {cap} periods")


def trajectory_rows(state: IndustryState) -> List[Dict[str, object]]:
    """CSV rows for one period: period, firm, quantity, rule, profit, fitness, tenure"""
    fitness = state.fitness
    return [
        {
            "period": state.period,
            "firm": i,
            "quantity": f.quantity,
            "rule": f.rule.value,
            "profit": f.payoffs[-1] if f.payoffs else 0.0,
            "fitness": fitness[i],
            "tenure": f.effective_tenure(state.memory),
        }
        for i, f in enumerate(state.firms)
    ]
