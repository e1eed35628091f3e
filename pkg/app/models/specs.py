"""Pydantic models for run configuration files"""

from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.core.errors import ConfigError


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


# ---------------------------------------------------------------------------
# market
# ---------------------------------------------------------------------------


class LinearDemandSpec(StrictModel):
    type: Literal["linear"]
    intercept: float = Field(gt=0)
    slope: float


class TableDemandSpec(StrictModel):
    type: Literal["table"]
    points: List[Tuple[float, float]] = Field(min_length=2)


DemandSpec = Annotated[Union[LinearDemandSpec, TableDemandSpec], Field(discriminator="type")]


class PowerCostSpec(StrictModel):
    type: Literal["power"]
    coeff: float = Field(gt=0)
    exponent: float = Field(ge=1)


class QuadraticCostSpec(StrictModel):
    type: Literal["quadratic"]
    linear: float = Field(0.0, ge=0)
    quadratic: float = Field(0.5, ge=0)


CostSpec = Annotated[Union[PowerCostSpec, QuadraticCostSpec], Field(discriminator="type")]


class GridSpec(StrictModel):
    step: float = Field(gt=0)
    levels: int = Field(ge=1)


class ModelSpec(StrictModel):
    n: int = Field(ge=2)
    demand: DemandSpec
    cost: CostSpec
    grid: GridSpec


# ---------------------------------------------------------------------------
# process
# ---------------------------------------------------------------------------


class NoiseSpec(StrictModel):
    gamma: float = Field(0.5, gt=0, lt=1)
    theta: float = Field(0.5, gt=0, lt=1)
    epsilon: float = Field(0.05, ge=0, lt=1)
    eta: float = Field(2.0, ge=1)
    action_mistake_law: Optional[List[float]] = None
    rule_mistake_law: Optional[List[float]] = Field(None, min_length=2, max_length=2)
    discount: float = Field(1.0, gt=0, le=1)
    timing: Literal["standard", "immediate", "either"] = "standard"


class CriterionSpec(StrictModel):
    kind: Literal[
        "imitate_best_max",
        "imitate_best_max_sampling",
        "experimental",
        "imitate_if_better",
        "imitate_if_better_randomized",
    ]
    sample_size: Optional[int] = Field(None, ge=1)


class InitialSpec(StrictModel):
    quantities: List[float]
    rules: List[Literal["BR", "IM"]]


# ---------------------------------------------------------------------------
# aggregative games
# ---------------------------------------------------------------------------


class TableAggregatorSpec(StrictModel):
    type: Literal["table"]
    rows: List[Tuple[List[float], float]] = Field(min_length=1)


class CournotKernelSpec(StrictModel):
    type: Literal["cournot"]
    demand: Optional[DemandSpec] = None
    cost: Optional[CostSpec] = None


class TableKernelSpec(StrictModel):
    type: Literal["table"]
    rows: List[Tuple[float, float, float]] = Field(min_length=1)


class CommonsKernelSpec(StrictModel):
    type: Literal["commons"]
    capacity: float = Field(1.0, gt=0)


KernelSpec = Annotated[
    Union[CournotKernelSpec, TableKernelSpec, CommonsKernelSpec], Field(discriminator="type")
]


class AggregativeSpec(StrictModel):
    n: int = Field(ge=2)
    strategies: List[float] = Field(min_length=1)
    aggregator: Union[Literal["sum", "mean"], TableAggregatorSpec] = "sum"
    payoff: KernelSpec


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


class RunConfig(StrictModel):
    model: Optional[ModelSpec] = None
    criteria: List[CriterionSpec] = Field(
        default_factory=lambda: [CriterionSpec(kind="imitate_best_max")], min_length=1
    )
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    memory: int = Field(3, ge=1, alias="M")
    periods: int = Field(100_000, ge=1)
    burn_in: int = Field(1_000, ge=0)
    replications: int = Field(4, ge=1)
    seed: int = Field(0, ge=0)
    epsilon_sweep: Optional[List[Annotated[float, Field(gt=0, lt=1)]]] = None
    initial: Optional[InitialSpec] = None
    aggregative: Optional[AggregativeSpec] = None

    @model_validator(mode="after")
    def _check_shapes(self) -> "RunConfig":
        if self.model is None and self.aggregative is None:
            raise ValueError("either model or aggregative is required")
        if self.model is not None:
            n = self.model.n
            if len(self.criteria) not in (1, n):
                raise ValueError(f"criteria must list 1 or {n} entries")
            if self.initial is not None and (
                len(self.initial.quantities) != n or len(self.initial.rules) != n
            ):
                raise ValueError(f"initial profile must have {n} quantities and rules")
            law = self.noise.action_mistake_law
            if law is not None and len(law) != self.model.grid.levels + 1:
                raise ValueError("noise.action_mistake_law needs one weight per grid point")
        return self


def format_validation_error(error: ValidationError) -> str:
    """Dotted field paths, e.g. 'model.n required'"""
    messages = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"] if not str(part).startswith("function-after"))
        if item["type"] == "missing":
            messages.append(f"{path} required")
        elif path:
            messages.append(f"{path}: {item['msg']}")
        else:
            messages.append(item["msg"])
    return "; ".join(messages)


def parse_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e
