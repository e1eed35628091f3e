"""
Stationary behaviour of the perturbed process

Monte Carlo occupancy estimates over seeded replications, and an exact oracle
that enumerates the reachable state space of a tiny instance, builds the sparse
transition matrix from the same revision laws and solves for the stationary
vector.
"""

from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from utils.core.config import get_config
from utils.core.errors import ConvergenceError, DomainError, StateSpaceTooLarge
from utils.core.parallel import run_parallel
from utils.core.rng import make_stream
from utils.game.oligopoly import OligopolyModel
from utils.learning.dynamics import (
    NoiseConfig,
    broadcast_criteria,
    random_state,
    step,
    trajectory_rows,
    warm_up,
)
from utils.learning.rules import ObservedPeriod, RevisionCriterion, Rule, action_distribution
from utils.learning.state import AbsorbingSet, MistakeLog

BATCHES = 10
GTH_MAX_STATES = 1500
RESIDUAL = 1e-12


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass
class OccupancyTable:
    """Empirical occupancy of mon(q, rule) patterns with standard errors"""

    epsilon: float
    periods: int
    burn_in: int
    replications: int
    # one occupancy dict per replication, or per batch for a single replication
    samples: List[Dict[str, float]]
    mistakes: MistakeLog = field(default_factory=MistakeLog)
    trajectory: List[Dict[str, object]] = field(default_factory=list)

    @property
    def keys(self) -> List[str]:
        return sorted({k for s in self.samples for k in s})

    def _column(self, keys: Iterable[str]) -> np.ndarray:
        keys = set(keys)
        return np.array([sum(v for k, v in s.items() if k in keys) for s in self.samples])

    def mass(self, keys: Iterable[str]) -> Tuple[float, float]:
        """(mean, standard error) of the total occupancy of `keys`"""
        col = self._column(keys)
        se = float(col.std(ddof=1) / np.sqrt(len(col))) if len(col) > 1 else 0.0
        return float(col.mean()), se

    @property
    def occupancy(self) -> Dict[str, float]:
        return {k: self.mass([k])[0] for k in self.keys}

    @property
    def std_error(self) -> Dict[str, float]:
        return {k: self.mass([k])[1] for k in self.keys}

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"epsilon": self.epsilon, "pattern": k, "occupancy": m, "std_error": se}
            for k, (m, se) in ((k, self.mass([k])) for k in self.keys)
        ]


@dataclass(frozen=True)
class _ReplicationTask:
    model: OligopolyModel
    criteria: Tuple[RevisionCriterion, ...]
    noise: NoiseConfig
    periods: int
    burn_in: int
    memory: int
    seed: int
    index: int
    batches: int
    discount: float
    initial: Optional[Tuple[Tuple[float, ...], Tuple[Rule, ...]]]
    record: bool


def _replicate(task: _ReplicationTask):
    rng = make_stream(task.seed, task.index)
    if task.initial is not None:
        state = warm_up(task.initial[0], task.initial[1], task.model, task.memory, task.discount)
    else:
        state = random_state(task.model, task.memory, rng, discount=task.discount)

    for _ in range(task.burn_in):
        state = step(state, task.model, task.criteria, task.noise, rng)

    log = MistakeLog()
    rows: List[Dict[str, object]] = []
    occupancies: List[Dict[str, float]] = []
    size, extra = divmod(task.periods, task.batches)
    for b in range(task.batches):
        length = size + (1 if b < extra else 0)
        counts: Counter = Counter()
        for _ in range(length):
            state = step(state, task.model, task.criteria, task.noise, rng, log)
            counts[state.pattern_key()] += 1
            if task.record:
                rows.extend(trajectory_rows(state))
        occupancies.append({k: v / length for k, v in counts.items()})
    return occupancies, log, rows


def estimate_stationary(
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    noise: NoiseConfig,
    periods: int,
    burn_in: int,
    replications: int,
    seed: int,
    memory: int,
    initial: Optional[Tuple[Sequence[float], Sequence[Rule]]] = None,
    discount: float = 1.0,
    n_jobs: Optional[int] = None,
    record_trajectory: bool = False,
) -> OccupancyTable:
    """
    Long-run occupancy of each mon(q, rule) pattern, averaged over replications.

    Args:
        model: Cournot market
        criteria: One criterion for all firms or one per firm
        noise: Perturbation parameters; epsilon must be positive
        periods: Measured periods per replication
        burn_in: Discarded periods before measurement
        replications: Independent runs, each on its own seeded stream
        seed: Master seed
        memory: Fitness window M
        initial: Optional (quantities, rules) start; uniform random otherwise
        discount: Fitness discount factor in (0, 1]
        n_jobs: joblib workers (defaults to N_JOBS)
        record_trajectory: Keep per-period rows of the first replication

    Returns:
        OccupancyTable; with a single replication the standard errors come
        from batch means
    """
    if noise.epsilon <= 0:
        raise DomainError("estimate_stationary needs epsilon > 0; the unperturbed chain is not irreducible")
    if replications < 1 or periods < 1:
        raise DomainError("replications and periods must be positive")
    batches = 1 if replications > 1 else min(BATCHES, periods)
    crit = broadcast_criteria(criteria, model.n)
    start = None
    if initial is not None:
        start = (tuple(float(q) for q in initial[0]), tuple(Rule(r) for r in initial[1]))

    tasks = [
        _ReplicationTask(
            model=model,
            criteria=crit,
            noise=noise,
            periods=periods,
            burn_in=burn_in,
            memory=memory,
            seed=seed,
            index=r,
            batches=batches,
            discount=discount,
            initial=start,
            record=record_trajectory and r == 0,
        )
        for r in range(replications)
    ]
    logger.info(f"🔄 Simulating {replications} x {periods} periods at epsilon={noise.epsilon}")
    results = run_parallel(_replicate, tasks, "replications", n_jobs=n_jobs)

    samples: List[Dict[str, float]] = []
    log = MistakeLog()
    trajectory: List[Dict[str, object]] = []
    for occupancies, rep_log, rows in results:
        if replications > 1:
            # whole-run occupancy per replication
            merged: Counter = Counter()
            for b in occupancies:
                merged.update(b)
            samples.append({k: v / len(occupancies) for k, v in merged.items()})
        else:
            samples.extend(occupancies)
        log = log.merge(rep_log)
        trajectory.extend(rows)

    table = OccupancyTable(
        epsilon=noise.epsilon,
        periods=periods,
        burn_in=burn_in,
        replications=replications,
        samples=samples,
        mistakes=log,
        trajectory=trajectory,
    )
    logger.info(f"✅ Simulation done: {len(table.keys)} patterns visited")
    return table


# ---------------------------------------------------------------------------
# exact chain
# ---------------------------------------------------------------------------

# (quantity-index history oldest first, current rules, current effective tenures)
StateKey = Tuple[Tuple[Tuple[int, ...], ...], Tuple[Rule, ...], Tuple[int, ...]]


@dataclass
class ExactStationary:
    states: List[StateKey]
    distribution: np.ndarray
    transition: sparse.csr_matrix
    grid: Tuple[float, ...]
    residual: float

    def pattern_of(self, key: StateKey) -> str:
        quantities, rules = key[0][-1], key[1]
        if len(set(quantities)) == 1 and len(set(rules)) == 1:
            return AbsorbingSet(rules[0], self.grid[quantities[0]]).label
        return "other"

    def pattern_mass(self) -> Dict[str, float]:
        mass: Dict[str, float] = {}
        for key, p in zip(self.states, self.distribution):
            label = self.pattern_of(key)
            mass[label] = mass.get(label, 0.0) + float(p)
        return dict(sorted(mass.items()))

    def mass(self, labels: Iterable[str]) -> float:
        labels = set(labels)
        return float(sum(p for k, p in self.pattern_mass().items() if k in labels))


class _ChainBuilder:
    def __init__(
        self,
        model: OligopolyModel,
        criteria: Sequence[RevisionCriterion],
        noise: NoiseConfig,
        memory: int,
        discount: float,
    ):
        self.model = model
        self.criteria = broadcast_criteria(criteria, model.n)
        self.noise = noise
        self.memory = memory
        self.discount = discount
        self.grid = tuple(float(q) for q in model.quantities)
        self.index = {q: k for k, q in enumerate(self.grid)}
        self.action_law = {self.index[q]: p for q, p in noise.action_law(model).items()}
        self._profits: Dict[Tuple[int, ...], Tuple[float, ...]] = {}

    def profits(self, profile: Tuple[int, ...]) -> Tuple[float, ...]:
        if profile not in self._profits:
            q = [self.grid[k] for k in profile]
            self._profits[profile] = tuple(float(p) for p in self.model.profits(q))
        return self._profits[profile]

    def observe(self, key: StateKey) -> ObservedPeriod:
        history, rules, tenures = key
        windows = [self.profits(profile) for profile in history]
        fitness = []
        for i, t in enumerate(tenures):
            recent = np.array([w[i] for w in windows[-t:]])
            if self.discount == 1.0:
                fitness.append(float(recent.mean()))
            else:
                weights = self.discount ** np.arange(t - 1, -1, -1, dtype=float)
                fitness.append(float(np.dot(weights, recent) / weights.sum()))
        return ObservedPeriod(
            quantities=tuple(self.grid[k] for k in history[-1]),
            profits=windows[-1],
            rules=rules,
            fitness=tuple(fitness),
            tenures=tenures,
        )

    def firm_law(self, i: int, key: StateKey, last: ObservedPeriod) -> Dict[Tuple[Rule, bool, int], float]:
        gamma, theta, eps = self.noise.gamma, self.noise.theta, self.noise.epsilon
        mistake = self.noise.rule_mistake_prob
        rule_outcomes: Dict[Tuple[Rule, bool], float] = {(key[1][i], False): 1.0 - gamma}
        for r, p in self.noise.rule_law().items():
            if mistake > 0:
                rule_outcomes[(r, True)] = rule_outcomes.get((r, True), 0.0) + gamma * mistake * p
        for r, p in self.criteria[i].distribution(i, last).items():
            rule_outcomes[(r, True)] = rule_outcomes.get((r, True), 0.0) + gamma * (1 - mistake) * p

        current = key[0][-1][i]
        law: Dict[Tuple[Rule, bool, int], float] = {}

        def add(outcome, p):
            if p > 0:
                law[outcome] = law.get(outcome, 0.0) + p

        for (r, reset), pr in rule_outcomes.items():
            add((r, reset, current), pr * (1 - theta))
            if eps > 0:
                for k, p in self.action_law.items():
                    add((r, reset, k), pr * theta * eps * p)
            for q, p in action_distribution(i, r, last, self.model).items():
                add((r, reset, self.index[q]), pr * theta * (1 - eps) * p)
        return law

    def successors(self, key: StateKey) -> Dict[StateKey, float]:
        last = self.observe(key)
        laws = [list(self.firm_law(i, key, last).items()) for i in range(self.model.n)]
        out: Dict[StateKey, float] = {}
        M = self.memory
        for combo in product(*laws):
            p = 1.0
            for _, pi in combo:
                p *= pi
            profile = tuple(o[2] for o, _ in combo)
            rules = tuple(o[0] for o, _ in combo)
            tenures = tuple(1 if o[1] else min(t + 1, M) for (o, _), t in zip(combo, key[2]))
            nxt = (key[0][1:] + (profile,), rules, tenures)
            out[nxt] = out.get(nxt, 0.0) + p
        return out

    def start_key(self) -> StateKey:
        n, M = self.model.n, self.memory
        zero = self.index[self.grid[0]]
        return (((zero,) * n,) * M, (Rule.IM,) * n, (M,) * n)


def _explore(builder: _ChainBuilder, cap: int) -> Tuple[List[StateKey], sparse.csr_matrix]:
    start = builder.start_key()
    index: Dict[StateKey, int] = {start: 0}
    states: List[StateKey] = [start]
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    queue = deque([start])
    while queue:
        key = queue.popleft()
        src = index[key]
        for nxt, p in builder.successors(key).items():
            if nxt not in index:
                if len(states) >= cap:
                    raise StateSpaceTooLarge(f"state space too large: more than {cap} reachable states")
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            rows.append(src)
            cols.append(index[nxt])
            vals.append(p)
    N = len(states)
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))
    return states, P


def gth_stationary(P: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination on a dense row-stochastic matrix"""
    T = np.array(P, dtype=float)
    N = T.shape[0]
    for k in range(N - 1, 0, -1):
        s = T[k, :k].sum()
        if s <= 0:
            raise ConvergenceError(f"GTH elimination hit a closed class at state {k}")
        T[:k, k] /= s
        T[:k, :k] += np.outer(T[:k, k], T[k, :k])
    pi = np.zeros(N)
    pi[0] = 1.0
    for k in range(1, N):
        pi[k] = pi[:k] @ T[:k, k]
    return pi / pi.sum()


def _sparse_stationary(P: sparse.csr_matrix) -> np.ndarray:
    N = P.shape[0]
    A = (P.T - sparse.identity(N, format="csr")).tolil()
    A[N - 1, :] = np.ones(N)
    b = np.zeros(N)
    b[N - 1] = 1.0
    return np.asarray(spsolve(A.tocsr(), b)).ravel()


def stationary_vector(P: sparse.csr_matrix, max_iter: int = 100_000) -> Tuple[np.ndarray, float]:
    """Direct solve, then power-iteration polish down to the residual target"""
    N = P.shape[0]
    pi = gth_stationary(P.toarray()) if N <= GTH_MAX_STATES else _sparse_stationary(P)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    PT = P.T.tocsr()
    residual = float(np.abs(PT @ pi - pi).sum())
    for _ in range(max_iter):
        if residual < RESIDUAL:
            break
        pi = PT @ pi
        pi /= pi.sum()
        residual = float(np.abs(PT @ pi - pi).sum())
    if residual >= RESIDUAL:
        logger.warning(f"⚠️  Stationary residual {residual:.3e} above {RESIDUAL}")
    return pi, residual


def exact_chain_oracle(
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    noise: NoiseConfig,
    memory: int,
    discount: float = 1.0,
    cap: Optional[int] = None,
) -> ExactStationary:
    """Stationary distribution of the full perturbed chain on a tiny instance"""
    if noise.epsilon <= 0:
        raise DomainError("exact_chain_oracle needs epsilon > 0")
    cap = cap if cap is not None else get_config().exact_chain_state_cap
    builder = _ChainBuilder(model, criteria, noise, memory, discount)
    states, P = _explore(builder, cap)

    sums = np.asarray(P.sum(axis=1)).ravel()
    if np.any(np.abs(sums - 1.0) > 1e-12):
        raise ConvergenceError(f"transition rows do not sum to 1 (worst {np.abs(sums - 1).max():.3e})")

    logger.info(f"🔄 Solving exact chain with {len(states)} states")
    pi, residual = stationary_vector(P)
    return ExactStationary(
        states=states, distribution=pi, transition=P, grid=builder.grid, residual=residual
    )


def unperturbed_recurrent_mass(
    result: ExactStationary,
    model: OligopolyModel,
    criteria: Sequence[RevisionCriterion],
    noise: NoiseConfig,
    memory: int,
    discount: float = 1.0,
) -> Tuple[float, List[str]]:
    """
    Stationary mass outside the recurrent classes of the epsilon = 0 chain,
    plus the patterns those classes occupy.
    """
    builder = _ChainBuilder(model, criteria, noise.with_epsilon(0.0), memory, discount)
    index = {key: k for k, key in enumerate(result.states)}
    rows, cols, vals = [], [], []
    for key, src in index.items():
        for nxt, p in builder.successors(key).items():
            rows.append(src)
            cols.append(index[nxt])
            vals.append(p)
    N = len(result.states)
    P0 = sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))

    count, labels = connected_components(P0, directed=True, connection="strong")
    coo = P0.tocoo()
    leaking = np.zeros(count, dtype=bool)
    leaking[labels[coo.row[labels[coo.row] != labels[coo.col]]]] = True
    recurrent = ~leaking[labels]

    outside = float(result.distribution[~recurrent].sum())
    patterns = sorted({result.pattern_of(result.states[k]) for k in np.nonzero(recurrent)[0]})
    return outside, patterns
