"""
Behavioral rules and rule-revision criteria

A firm's behavioral rule (BR or IM) turns last period's observations into a
quantity; a revision criterion picks the rule itself. Every choice is exposed
as an exact probability law so the simulator, the exact-chain oracle and the
path witnesses all share one definition.
"""

from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.stats import binom

from utils.core.config import tie_tolerance
from utils.core.errors import DomainError
from utils.core.reports import CheckReport
from utils.core.rng import draw_from
from utils.game.oligopoly import OligopolyModel, QuantityGrid, best_response
from utils.game.primitives import LinearDemand, QuadraticCost


class Rule(str, Enum):
    BR = "BR"
    IM = "IM"


RULES: Tuple[Rule, ...] = (Rule.BR, Rule.IM)


@dataclass(frozen=True)
class ObservedPeriod:
    """What every firm sees when revising: last period's play plus fitness"""

    quantities: Tuple[float, ...]
    profits: Tuple[float, ...]
    rules: Tuple[Rule, ...]
    fitness: Tuple[float, ...]
    tenures: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.quantities)

    def validate(self, model: OligopolyModel, memory: int) -> None:
        expected = model.profits(self.quantities)
        for i, (got, want) in enumerate(zip(self.profits, expected)):
            if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                raise DomainError(f"firm {i} profit {got} inconsistent with quantities ({want})")
        if any(not 1 <= t <= memory for t in self.tenures):
            raise DomainError(f"tenures {self.tenures} outside [1, {memory}]")


def argmax_indices(values: Sequence[float]) -> List[int]:
    """Indices attaining the maximum, up to the relative tie tolerance"""
    arr = np.asarray(values, dtype=float)
    top = float(arr.max())
    return [int(i) for i in np.nonzero(arr >= top - tie_tolerance(top))[0]]


def _uniform(outcomes) -> Dict:
    outcomes = list(dict.fromkeys(outcomes))
    return {o: 1.0 / len(outcomes) for o in outcomes}


def _ordered_rules(rules) -> List[Rule]:
    present = set(rules)
    return [r for r in RULES if r in present]


# ---------------------------------------------------------------------------
# action revision
# ---------------------------------------------------------------------------


def action_distribution(
    firm: int, rule: Rule, last: ObservedPeriod, model: OligopolyModel
) -> Dict[float, float]:
    """Exact law of the quantity a firm picks under its (post-revision) rule"""
    if rule == Rule.IM:
        leaders = argmax_indices(last.profits)
        return _uniform(sorted({last.quantities[j] for j in leaders}))
    others = float(sum(last.quantities) - last.quantities[firm])
    return _uniform(best_response(max(others, 0.0), model))


def action_revise(
    firm: int, rule: Rule, last: ObservedPeriod, model: OligopolyModel, rng: np.random.Generator
) -> float:
    return draw_from(action_distribution(firm, rule, last, model), rng)


# ---------------------------------------------------------------------------
# rule-revision criteria
# ---------------------------------------------------------------------------


class RevisionCriterion(ABC):
    """
    Abstract rule-revision criterion.

    Subclasses define the exact law over R for a revising firm; sampling is
    shared so replay with a fixed generator is deterministic.
    """

    kind: str = "criterion"
    satisfies_nb: bool = True
    satisfies_sf: bool = True

    @abstractmethod
    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        """
        Probability of each rule the firm may adopt.

        Args:
            firm: Index of the revising firm
            last: Observations of the previous period

        Returns:
            Mapping rule -> probability (sums to 1)
        """
        pass

    def revise(self, firm: int, last: ObservedPeriod, rng: np.random.Generator) -> Rule:
        return draw_from(self.distribution(firm, last), rng)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class ImitateBestMax(RevisionCriterion):
    """Copy a rule of a firm with maximal fitness, uniform over distinct rules"""

    kind = "imitate_best_max"

    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        leaders = argmax_indices(last.fitness)
        return _uniform(_ordered_rules(last.rules[j] for j in leaders))


class ImitateBestMaxSampling(RevisionCriterion):
    """Imitate-the-best-max within a uniformly drawn sample that contains the firm"""

    kind = "imitate_best_max_sampling"

    def __init__(self, sample_size: int = 2):
        if sample_size < 1:
            raise DomainError(f"sample size must be at least 1 (got {sample_size})")
        self.sample_size = sample_size

    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        n = last.n
        if self.sample_size > n:
            raise DomainError(f"sample size {self.sample_size} exceeds firm count {n}")
        others = [j for j in range(n) if j != firm]
        weight = 1.0 / comb(n - 1, self.sample_size - 1)
        law: Dict[Rule, float] = {}
        for peers in combinations(others, self.sample_size - 1):
            sample = (firm,) + peers
            leaders = argmax_indices([last.fitness[j] for j in sample])
            for rule, p in _uniform(_ordered_rules(last.rules[sample[k]] for k in leaders)).items():
                law[rule] = law.get(rule, 0.0) + weight * p
        return {r: law[r] for r in RULES if r in law}

    def __repr__(self) -> str:
        return f"ImitateBestMaxSampling(sample_size={self.sample_size})"


class Experimental(RevisionCriterion):
    """Copy the rule of a uniformly drawn firm"""

    kind = "experimental"

    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        counts = Counter(last.rules)
        return {r: counts[r] / last.n for r in RULES if counts[r]}


class ImitateIfBetter(RevisionCriterion):
    """Keep the rule when fitness is maximal, else copy a strictly better firm"""

    kind = "imitate_if_better"
    satisfies_sf = False

    def _better_law(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        own = last.fitness[firm]
        tol = tie_tolerance(own)
        better = [j for j in range(last.n) if last.fitness[j] > own + tol]
        if not better:
            return {last.rules[firm]: 1.0}
        counts = Counter(last.rules[j] for j in better)
        return {r: counts[r] / len(better) for r in RULES if counts[r]}

    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        if firm in argmax_indices(last.fitness):
            return {last.rules[firm]: 1.0}
        return self._better_law(firm, last)


class ImitateIfBetterRandomized(ImitateIfBetter):
    """Imitate-if-better where a maximal firm randomizes over the maximal firms' rules"""

    kind = "imitate_if_better_randomized"
    satisfies_sf = True

    def distribution(self, firm: int, last: ObservedPeriod) -> Dict[Rule, float]:
        leaders = argmax_indices(last.fitness)
        if firm in leaders:
            return _uniform(_ordered_rules(last.rules[j] for j in leaders))
        return self._better_law(firm, last)


CRITERIA = {
    ImitateBestMax.kind: ImitateBestMax,
    ImitateBestMaxSampling.kind: ImitateBestMaxSampling,
    Experimental.kind: Experimental,
    ImitateIfBetter.kind: ImitateIfBetter,
    ImitateIfBetterRandomized.kind: ImitateIfBetterRandomized,
}


def make_criterion(kind: str, sample_size: Optional[int] = None) -> RevisionCriterion:
    if kind not in CRITERIA:
        raise DomainError(f"Unsupported criterion: {kind}. Supported: {', '.join(CRITERIA)}")
    if kind == ImitateBestMaxSampling.kind:
        return ImitateBestMaxSampling(sample_size if sample_size is not None else 2)
    return CRITERIA[kind]()


def rule_revise(
    firm: int, criterion: RevisionCriterion, last: ObservedPeriod, rng: np.random.Generator
) -> Rule:
    return criterion.revise(firm, last, rng)


# ---------------------------------------------------------------------------
# No-Birth / Survival-of-the-Fittest checks
# ---------------------------------------------------------------------------


def _fixture_model() -> OligopolyModel:
    return OligopolyModel(
        n=4, demand=LinearDemand(12.0, 1.0), cost=QuadraticCost(), grid=QuantityGrid(1.0, 6)
    )


def random_period(
    model: OligopolyModel, rng: np.random.Generator, memory: int = 3
) -> ObservedPeriod:
    """Random fixture with fitness on {0, 1, 2} so ties are common"""
    n = model.n
    quantities = tuple(float(q) for q in rng.choice(model.quantities, size=n))
    if rng.random() < 0.2:
        rules = (RULES[int(rng.integers(2))],) * n
    else:
        rules = tuple(RULES[int(k)] for k in rng.integers(2, size=n))
    return ObservedPeriod(
        quantities=quantities,
        profits=tuple(float(p) for p in model.profits(quantities)),
        rules=rules,
        fitness=tuple(float(f) for f in rng.integers(3, size=n)),
        tenures=tuple(int(t) for t in rng.integers(1, memory + 1, size=n)),
    )


def check_no_birth(
    criterion: RevisionCriterion,
    trials: int,
    rng: np.random.Generator,
    model: Optional[OligopolyModel] = None,
) -> CheckReport:
    """Every adopted rule must already be in use"""
    model = model or _fixture_model()
    violations = 0
    first = None
    for _ in range(trials):
        last = random_period(model, rng)
        firm = int(rng.integers(last.n))
        in_use = set(last.rules)
        support = {r for r, p in criterion.distribution(firm, last).items() if p > 0}
        drawn = rule_revise(firm, criterion, last, rng)
        if drawn not in in_use or not support <= in_use:
            violations += 1
            if first is None:
                first = {"firm": firm, "rules": [r.value for r in last.rules], "adopted": drawn.value}

    if violations:
        logger.warning(f"⚠️  {criterion!r} violates No-Birth in {violations}/{trials} trials")
    return CheckReport(
        f"no_birth[{criterion.kind}]",
        violations == 0,
        counterexample=first,
        details={"trials": trials, "violations": violations},
    )


def check_survival_of_fittest(
    criterion: RevisionCriterion,
    trials: int,
    rng: np.random.Generator,
    model: Optional[OligopolyModel] = None,
) -> CheckReport:
    """
    Every rule held by a maximal-fitness firm must be adopted with positive probability.

    Each fixture checks the exact support; adoption frequencies are then held
    against a binomial lower bound at per-visit probability 1/(|R| n).
    """
    model = model or _fixture_model()
    visits = Counter()
    adopted = Counter()
    first = None
    for _ in range(trials):
        last = random_period(model, rng)
        firm = int(rng.integers(last.n))
        targets = set(last.rules[j] for j in argmax_indices(last.fitness))
        law = criterion.distribution(firm, last)
        drawn = criterion.revise(firm, last, rng)
        for rule in targets:
            visits[rule] += 1
            adopted[rule] += drawn == rule
        missing = [r for r in targets if law.get(r, 0.0) <= 0]
        if missing and first is None:
            first = {
                "firm": firm,
                "fitness": list(last.fitness),
                "rules": [r.value for r in last.rules],
                "never_adopted": [r.value for r in _ordered_rules(missing)],
            }

    floor = 1.0 / (len(RULES) * model.n)
    frequencies = {}
    low = []
    for rule in RULES:
        if not visits[rule]:
            continue
        bound = float(binom.ppf(1e-6, visits[rule], floor))
        frequencies[rule.value] = adopted[rule] / visits[rule]
        if adopted[rule] < bound:
            low.append(rule.value)

    passed = first is None and not low
    if not passed and criterion.satisfies_sf:
        logger.warning(f"⚠️  {criterion!r} fails Survival-of-the-Fittest")
    return CheckReport(
        f"survival_of_fittest[{criterion.kind}]",
        passed,
        counterexample=first,
        details={"trials": trials, "frequencies": frequencies, "below_bound": low},
        expected_fail=not criterion.satisfies_sf,
    )
