"""Industry state with an M-deep history, and the absorbing-set descriptor"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from utils.core.errors import DomainError
from utils.learning.rules import ObservedPeriod, Rule


def format_quantity(q: float) -> str:
    q = float(q)
    return str(int(q)) if q.is_integer() else repr(q)


@dataclass(frozen=True)
class AbsorbingSet:
    """mon(q, rule): every firm uses `rule` and produces `quantity`"""

    rule: Rule
    quantity: float

    @property
    def label(self) -> str:
        return f"mon({format_quantity(self.quantity)},{self.rule.value})"

    def __str__(self) -> str:
        return self.label

    def sort_key(self) -> Tuple[int, float]:
        # BR node first, IM nodes by ascending quantity
        return (0 if self.rule == Rule.BR else 1, self.quantity)


@dataclass(frozen=True)
class FirmRecord:
    quantity: float
    rule: Rule
    # periods since the last rule revision, unclamped
    tenure: int
    # last M realised profits, oldest first
    payoffs: Tuple[float, ...] = ()

    def effective_tenure(self, memory: int) -> int:
        return min(self.tenure, memory)

    def fitness(self, memory: int, discount: float = 1.0) -> float:
        k = self.effective_tenure(memory)
        if k == 0 or not self.payoffs:
            return 0.0
        window = np.asarray(self.payoffs[-k:], dtype=float)
        if discount == 1.0:
            return float(window.mean())
        weights = discount ** np.arange(k - 1, -1, -1, dtype=float)
        return float(np.dot(weights, window) / weights.sum())


HistoryEntry = Tuple[Tuple[float, ...], Tuple[Rule, ...], Tuple[int, ...]]


@dataclass(frozen=True)
class IndustryState:
    firms: Tuple[FirmRecord, ...]
    period: int
    # last M (quantities, rules, effective tenures) triples, oldest first
    history: Tuple[HistoryEntry, ...]
    memory: int
    discount: float = 1.0

    def __post_init__(self):
        if self.memory < 1:
            raise DomainError(f"memory M must be at least 1 (got {self.memory})")
        if not 0 < self.discount <= 1:
            raise DomainError(f"discount must lie in (0, 1] (got {self.discount})")

    @property
    def n(self) -> int:
        return len(self.firms)

    @property
    def quantities(self) -> Tuple[float, ...]:
        return tuple(f.quantity for f in self.firms)

    @property
    def rules(self) -> Tuple[Rule, ...]:
        return tuple(f.rule for f in self.firms)

    @property
    def effective_tenures(self) -> Tuple[int, ...]:
        return tuple(f.effective_tenure(self.memory) for f in self.firms)

    @property
    def profits(self) -> Tuple[float, ...]:
        return tuple(f.payoffs[-1] if f.payoffs else 0.0 for f in self.firms)

    @property
    def fitness(self) -> Tuple[float, ...]:
        return tuple(f.fitness(self.memory, self.discount) for f in self.firms)

    def observe(self) -> ObservedPeriod:
        return ObservedPeriod(
            quantities=self.quantities,
            profits=self.profits,
            rules=self.rules,
            fitness=self.fitness,
            tenures=self.effective_tenures,
        )

    def monomorphic(self) -> Optional[AbsorbingSet]:
        """Current-period (q, rule) pattern if every firm agrees"""
        first = self.firms[0]
        if all(f.quantity == first.quantity and f.rule == first.rule for f in self.firms):
            return AbsorbingSet(rule=first.rule, quantity=first.quantity)
        return None

    def pattern_key(self) -> str:
        pattern = self.monomorphic()
        return pattern.label if pattern is not None else "other"


@dataclass
class MistakeLog:
    """Counters for noise calibration"""

    rule_opportunities: int = 0
    rule_mistakes: int = 0
    action_opportunities: int = 0
    action_mistakes: int = 0

    def merge(self, other: "MistakeLog") -> "MistakeLog":
        return MistakeLog(
            rule_opportunities=self.rule_opportunities + other.rule_opportunities,
            rule_mistakes=self.rule_mistakes + other.rule_mistakes,
            action_opportunities=self.action_opportunities + other.action_opportunities,
            action_mistakes=self.action_mistakes + other.action_mistakes,
        )

    @property
    def rule_mistake_rate(self) -> float:
        return self.rule_mistakes / self.rule_opportunities if self.rule_opportunities else 0.0

    @property
    def action_mistake_rate(self) -> float:
        return self.action_mistakes / self.action_opportunities if self.action_opportunities else 0.0

    def to_dict(self) -> dict:
        return {
            "rule_opportunities": self.rule_opportunities,
            "rule_mistakes": self.rule_mistakes,
            "action_opportunities": self.action_opportunities,
            "action_mistakes": self.action_mistakes,
        }
