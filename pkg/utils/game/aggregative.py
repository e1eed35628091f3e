"""
Symmetric aggregative games

Payoffs depend on an agent's own strategy and a symmetric, monotone aggregate of
everyone's strategies. Covers strict quasi-submodularity, the aggregate-taking
strategy (ATS), inertial best-response Nash search, and the Cournot embedding.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations_with_replacement
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from utils.core.config import get_config, tie_tolerance
from utils.core.errors import AnalyticDiscrepancy, ConvergenceError, DomainError, NoAtsError
from utils.core.reports import CheckReport
from utils.game.oligopoly import OligopolyModel
from utils.game.primitives import CostFunction, InverseDemand

EXACT_PROFILE_CAP = 1_000_000
SAMPLED_PROFILES = 100_000


def _key(x: float) -> float:
    return round(float(x), 12)


# ---------------------------------------------------------------------------
# aggregators
# ---------------------------------------------------------------------------


class Aggregator(ABC):
    name: str = "aggregator"

    @abstractmethod
    def __call__(self, profile: Sequence[float]) -> float:
        pass


class SumAggregator(Aggregator):
    name = "sum"

    def __call__(self, profile: Sequence[float]) -> float:
        return float(np.sum(profile))


class MeanAggregator(Aggregator):
    name = "mean"

    def __call__(self, profile: Sequence[float]) -> float:
        return float(np.mean(profile))


class TableAggregator(Aggregator):
    """Aggregate looked up by the sorted multiset of strategies"""

    name = "table"

    def __init__(self, rows: Sequence[Tuple[Sequence[float], float]]):
        self._table: Dict[Tuple[float, ...], float] = {
            tuple(sorted(_key(s) for s in profile)): float(value) for profile, value in rows
        }

    def __call__(self, profile: Sequence[float]) -> float:
        key = tuple(sorted(_key(s) for s in profile))
        try:
            return self._table[key]
        except KeyError:
            raise DomainError(f"aggregator table has no entry for profile {key}")


# ---------------------------------------------------------------------------
# payoff kernels
# ---------------------------------------------------------------------------


class PayoffKernel(ABC):
    name: str = "kernel"

    @abstractmethod
    def __call__(self, s: float, t: float) -> float:
        """pi~(s, t)"""
        pass

    def matrix(self, strategies: np.ndarray, aggregates: np.ndarray) -> np.ndarray:
        """P[k, j] = pi~(strategies[k], aggregates[j])"""
        return np.array([[self(float(s), float(t)) for t in aggregates] for s in strategies])


@dataclass(frozen=True)
class CournotKernel(PayoffKernel):
    demand: InverseDemand
    cost: CostFunction
    name: str = field(default="cournot", init=False)

    def __call__(self, s: float, t: float) -> float:
        return float(self.demand.price(t) * s - self.cost.cost(s))

    def matrix(self, strategies: np.ndarray, aggregates: np.ndarray) -> np.ndarray:
        s = np.asarray(strategies, dtype=float)
        return self.demand.price(np.asarray(aggregates, dtype=float))[None, :] * s[:, None] - (
            self.cost.cost(s)[:, None]
        )


@dataclass(frozen=True)
class CommonsKernel(PayoffKernel):
    """pi~(s, t) = s * max(capacity - t, 0)"""

    capacity: float = 1.0
    name: str = field(default="commons", init=False)

    def __call__(self, s: float, t: float) -> float:
        return float(s * max(self.capacity - t, 0.0))

    def matrix(self, strategies: np.ndarray, aggregates: np.ndarray) -> np.ndarray:
        s = np.asarray(strategies, dtype=float)
        return s[:, None] * np.maximum(self.capacity - np.asarray(aggregates, dtype=float), 0.0)[None, :]


class TableKernel(PayoffKernel):
    """Payoffs from [s, t, value] rows"""

    name = "table"

    def __init__(self, rows: Sequence[Sequence[float]]):
        self._table: Dict[Tuple[float, float], float] = {
            (_key(s), _key(t)): float(v) for s, t, v in rows
        }

    def __call__(self, s: float, t: float) -> float:
        try:
            return self._table[(_key(s), _key(t))]
        except KeyError:
            raise DomainError(f"payoff table has no entry for (s={s}, t={t})")


# ---------------------------------------------------------------------------
# game
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AggregativeGame:
    n: int
    strategies: Tuple[float, ...]
    aggregator: Aggregator
    payoff: PayoffKernel

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"aggregative game needs n >= 2 (got {self.n})")
        if not self.strategies:
            raise DomainError("strategy set is empty")
        if any(b <= a for a, b in zip(self.strategies, self.strategies[1:])):
            raise DomainError("strategies must be strictly increasing")

    @property
    def strategy_array(self) -> np.ndarray:
        return np.asarray(self.strategies, dtype=float)

    def aggregate(self, profile: Sequence[float]) -> float:
        return self.aggregator(profile)

    def symmetric_aggregate(self, s: float) -> float:
        return self.aggregator((s,) * self.n)

    def mixed_aggregate(self, base: float, deviant: float, m: int) -> float:
        """Aggregate with m agents at deviant and n - m at base"""
        return self.aggregator((deviant,) * m + (base,) * (self.n - m))

    def profile_count(self) -> int:
        return comb(len(self.strategies) + self.n - 1, self.n)

    @cached_property
    def reachable_aggregates(self) -> np.ndarray:
        """Image of the aggregator over S^n, via sorted multisets when small enough"""
        if self.profile_count() <= EXACT_PROFILE_CAP:
            values = {_key(self.aggregate(p)) for p in combinations_with_replacement(self.strategies, self.n)}
        else:
            logger.info(
                f"🔄 Sampling {SAMPLED_PROFILES} profiles for the aggregate set "
                f"({self.profile_count()} multisets)"
            )
            rng = np.random.default_rng(0)
            draws = rng.choice(self.strategy_array, size=(SAMPLED_PROFILES, self.n))
            values = {_key(self.aggregate(p)) for p in draws}
            values |= {_key(self.symmetric_aggregate(s)) for s in self.strategies}
        return np.array(sorted(values), dtype=float)

    def best_responses(self, profile: Sequence[float], agent: int) -> Tuple[float, ...]:
        """Grid maximizers for one agent holding the others fixed"""
        trial = list(profile)
        values = []
        for s in self.strategies:
            trial[agent] = s
            values.append(self.payoff(s, self.aggregate(trial)))
        values = np.asarray(values)
        top = float(values.max())
        return tuple(
            s for s, v in zip(self.strategies, values) if v >= top - tie_tolerance(top)
        )

    def validate(self) -> None:
        report = verify_aggregator(self)
        if not report.passed:
            raise DomainError(f"aggregator invalid: {report.counterexample}")


def cournot_game(model: OligopolyModel) -> AggregativeGame:
    """Cournot market as an aggregative game: g = sum, pi~(q, Q) = p(Q) q - c(q)"""
    return AggregativeGame(
        n=model.n,
        strategies=tuple(float(q) for q in model.quantities),
        aggregator=SumAggregator(),
        payoff=CournotKernel(model.demand, model.cost),
    )


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def verify_aggregator(game: AggregativeGame, samples: int = 200) -> CheckReport:
    """Symmetry on random permutations; monotonicity exhaustive on small S, else sampled"""
    rng = np.random.default_rng(0)
    S = game.strategy_array

    for _ in range(samples):
        profile = rng.choice(S, size=game.n)
        shuffled = rng.permutation(profile)
        a, b = game.aggregate(profile), game.aggregate(shuffled)
        if abs(a - b) > 1e-12 * max(1.0, abs(a)):
            return CheckReport(
                "aggregator",
                False,
                counterexample={"kind": "symmetry", "profile": profile.tolist(), "permuted": shuffled.tolist()},
            )

    if game.profile_count() <= EXACT_PROFILE_CAP // 10:
        profiles = (np.asarray(p) for p in combinations_with_replacement(game.strategies, game.n))
    else:
        profiles = (np.sort(rng.choice(S, size=game.n)) for _ in range(samples * 50))

    for profile in profiles:
        base = game.aggregate(profile)
        for i in range(game.n):
            k = int(np.searchsorted(S, profile[i]))
            if k + 1 >= len(S):
                continue
            raised = profile.copy()
            raised[i] = S[k + 1]
            if game.aggregate(raised) < base - 1e-12 * max(1.0, abs(base)):
                return CheckReport(
                    "aggregator",
                    False,
                    counterexample={"kind": "monotonicity", "profile": profile.tolist(), "agent": i},
                )
    return CheckReport("aggregator", True)


def verify_quasi_submodularity(game: AggregativeGame) -> CheckReport:
    """
    Strict quasi-submodularity over all s1 < s2 in S and t1 < t2 in T.

    Both implications fail exactly when the payoff difference
    pi~(s2, .) - pi~(s1, .) is <= 0 at some t1 and >= 0 at a later t2.
    """
    S = game.strategy_array
    T = game.reachable_aggregates
    P = game.payoff.matrix(S, T)
    scale = get_config().tie_tolerance * np.maximum(1.0, np.abs(P))

    for i in range(len(S) - 1):
        diff = P[i + 1 :] - P[i]
        tol = np.maximum(scale[i + 1 :], scale[i])
        nonpos = diff <= tol
        nonneg = diff >= -tol
        first_nonpos = np.where(nonpos.any(axis=1), nonpos.argmax(axis=1), len(T))
        last_nonneg = np.where(nonneg.any(axis=1), len(T) - 1 - nonneg[:, ::-1].argmax(axis=1), -1)
        bad = np.nonzero(first_nonpos < last_nonneg)[0]
        if bad.size:
            j = int(bad[0])
            example = {
                "s1": float(S[i]),
                "s2": float(S[i + 1 + j]),
                "t1": float(T[first_nonpos[j]]),
                "t2": float(T[last_nonneg[j]]),
            }
            logger.info(f"Quasi-submodularity violated at {example}")
            return CheckReport("quasi_submodularity", False, counterexample=example)

    return CheckReport(
        "quasi_submodularity",
        True,
        details={"strategies": len(S), "aggregates": len(T)},
    )


@dataclass(frozen=True)
class AtsResult:
    strategy: float
    is_unique: bool
    candidates: Tuple[float, ...]
    certificate: Optional[List[Dict[str, float]]] = None


def compute_ats(game: AggregativeGame, quasi_submodular: Optional[bool] = None) -> AtsResult:
    """s* in argmax_s pi~(s, g(s*, ..., s*)), by exhaustive scan"""
    S = game.strategy_array
    candidates: List[float] = []
    for s in game.strategies:
        t = game.symmetric_aggregate(s)
        values = game.payoff.matrix(S, np.array([t]))[:, 0]
        top = float(values.max())
        own = game.payoff(s, t)
        if own >= top - tie_tolerance(top):
            candidates.append(float(s))

    if not candidates:
        logger.error("❌ No aggregate-taking strategy on the strategy grid")
        raise NoAtsError("no ATS on grid")

    if quasi_submodular is None:
        quasi_submodular = verify_quasi_submodularity(game).passed
    if quasi_submodular and len(candidates) > 1:
        raise AnalyticDiscrepancy(
            f"quasi-submodular game has several ATS candidates {candidates}"
        )

    strategy = candidates[0]
    t = game.symmetric_aggregate(strategy)
    if game.payoff(strategy, t) < max(game.payoff(s, t) for s in game.strategies) - tie_tolerance(
        game.payoff(strategy, t)
    ):
        raise AnalyticDiscrepancy(f"ATS {strategy} failed re-verification")

    logger.debug(f"ATS: {strategy} (candidates {candidates})")
    result = AtsResult(strategy=strategy, is_unique=len(candidates) == 1, candidates=tuple(candidates))
    # relative-advantage margins against every mixed profile
    margins, _ = verify_ats_advantage(game, result)
    return replace(result, certificate=margins)


def verify_ats_advantage(
    game: AggregativeGame, ats: AtsResult
) -> Tuple[List[Dict[str, float]], CheckReport]:
    """Margins pi~(s*, t) - pi~(s', t) with m agents at s' and n - m at s*"""
    s_star = ats.strategy
    rows: List[Dict[str, float]] = []
    worst: Optional[Dict[str, float]] = None
    for s in game.strategies:
        if s == s_star:
            continue
        for m in range(1, game.n):
            t = game.mixed_aggregate(s_star, s, m)
            margin = game.payoff(s_star, t) - game.payoff(s, t)
            row = {"s": float(s), "m": m, "margin": margin}
            rows.append(row)
            if worst is None or margin < worst["margin"]:
                worst = row

    passed = worst is None or worst["margin"] > 1e-9
    report = CheckReport(
        "ats_advantage",
        passed,
        counterexample=None if passed else worst,
        details={"rows": len(rows), "min_margin": None if worst is None else worst["margin"]},
    )
    return rows, report


def aggregative_nash(game: AggregativeGame, max_passes: int = 1000) -> float:
    """
    Symmetric pure Nash strategy by inertial round-robin best response.

    Runs from every symmetric start; an agent keeps its strategy when it is
    already a best response, else moves to the lowest one. All runs must stop
    at the same symmetric profile.
    """
    reached = set()
    for start in game.strategies:
        profile = [start] * game.n
        for _ in range(max_passes):
            changed = False
            for i in range(game.n):
                replies = game.best_responses(profile, i)
                if profile[i] not in replies:
                    profile[i] = replies[0]
                    changed = True
            if not changed:
                break
        else:
            raise ConvergenceError(f"best-response iteration from {start} did not settle")

        if len(set(profile)) != 1:
            raise ConvergenceError(f"best-response iteration from {start} stopped at asymmetric {profile}")
        reached.add(profile[0])

    if len(reached) != 1:
        raise ConvergenceError(f"symmetric Nash equilibrium is not unique: {sorted(reached)}")
    return reached.pop()
