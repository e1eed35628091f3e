"""Turn validated run-config specs into library objects"""

from typing import List, Optional

from utils.core.errors import ConfigError
from utils.game.aggregative import (
    AggregativeGame,
    Aggregator,
    CommonsKernel,
    CournotKernel,
    MeanAggregator,
    PayoffKernel,
    SumAggregator,
    TableAggregator,
    TableKernel,
)
from utils.game.oligopoly import OligopolyModel, QuantityGrid
from utils.game.primitives import (
    CostFunction,
    InverseDemand,
    LinearDemand,
    PowerCost,
    QuadraticCost,
    TableDemand,
)
from utils.learning.dynamics import NoiseConfig
from utils.learning.rules import RevisionCriterion, Rule, make_criterion
from app.models.specs import (
    AggregativeSpec,
    CostSpec,
    CriterionSpec,
    DemandSpec,
    LinearDemandSpec,
    ModelSpec,
    NoiseSpec,
    PowerCostSpec,
    RunConfig,
    TableDemandSpec,
)


def build_demand(spec: DemandSpec) -> InverseDemand:
    if isinstance(spec, LinearDemandSpec):
        return LinearDemand(spec.intercept, spec.slope)
    if isinstance(spec, TableDemandSpec):
        return TableDemand(tuple((float(q), float(p)) for q, p in spec.points))
    raise ConfigError(f"Unknown demand type: {spec}")


def build_cost(spec: CostSpec) -> CostFunction:
    if isinstance(spec, PowerCostSpec):
        return PowerCost(spec.coeff, spec.exponent)
    return QuadraticCost(spec.linear, spec.quadratic)


def build_model(spec: ModelSpec) -> OligopolyModel:
    """Model from its spec; invariants are checked by the caller"""
    return OligopolyModel(
        n=spec.n,
        demand=build_demand(spec.demand),
        cost=build_cost(spec.cost),
        grid=QuantityGrid(spec.grid.step, spec.grid.levels),
    )


def build_noise(spec: NoiseSpec, eta: Optional[float] = None, epsilon: Optional[float] = None) -> NoiseConfig:
    return NoiseConfig(
        gamma=spec.gamma,
        theta=spec.theta,
        epsilon=spec.epsilon if epsilon is None else epsilon,
        eta=spec.eta if eta is None else eta,
        action_mistake_law=tuple(spec.action_mistake_law) if spec.action_mistake_law else None,
        rule_mistake_law=tuple(spec.rule_mistake_law) if spec.rule_mistake_law else None,
        timing=spec.timing,
    )


def build_criteria(specs: List[CriterionSpec]) -> List[RevisionCriterion]:
    return [make_criterion(s.kind, s.sample_size) for s in specs]


def build_initial(config: RunConfig):
    if config.initial is None:
        return None
    return tuple(config.initial.quantities), tuple(Rule(r) for r in config.initial.rules)


def _aggregator(spec: AggregativeSpec) -> Aggregator:
    if spec.aggregator == "sum":
        return SumAggregator()
    if spec.aggregator == "mean":
        return MeanAggregator()
    return TableAggregator(spec.aggregator.rows)


def _kernel(spec: AggregativeSpec, model: Optional[ModelSpec]) -> PayoffKernel:
    payoff = spec.payoff
    if payoff.type == "table":
        return TableKernel(payoff.rows)
    if payoff.type == "commons":
        return CommonsKernel(payoff.capacity)
    # cournot kernel falls back to the market of the run config
    demand = payoff.demand or (model.demand if model else None)
    cost = payoff.cost or (model.cost if model else None)
    if demand is None or cost is None:
        raise ConfigError("cournot payoff needs demand and cost (inline or from model)")
    return CournotKernel(build_demand(demand), build_cost(cost))


def build_game(config: RunConfig) -> AggregativeGame:
    spec = config.aggregative
    return AggregativeGame(
        n=spec.n,
        strategies=tuple(float(s) for s in spec.strategies),
        aggregator=_aggregator(spec),
        payoff=_kernel(spec, config.model),
    )


def require_model(config: RunConfig) -> OligopolyModel:
    if config.model is None:
        raise ConfigError("model required")
    return build_model(config.model)
