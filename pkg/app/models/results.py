"""Pydantic models for emitted command results"""

import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel
from sympy import Rational, nsimplify

from utils.core.reports import CheckReport
from utils.learning.state import AbsorbingSet, format_quantity

MAX_DENOMINATOR = 10_000


class QuantityOut(BaseModel):
    decimal: str
    rational: Optional[str] = None


def rational_text(x: float) -> Optional[str]:
    """Exact fraction for x when one with a small denominator matches to 1e-9"""
    try:
        r = Rational(nsimplify(x, tolerance=1e-9, rational=True))
    except (TypeError, ValueError):
        return None
    if r.q > MAX_DENOMINATOR or abs(float(r) - x) > 1e-9 * max(1.0, abs(x)):
        return None
    return str(r)


def quantity_out(x: float) -> QuantityOut:
    return QuantityOut(decimal=format_quantity(x), rational=rational_text(float(x)))


class NodeOut(BaseModel):
    rule: str
    quantity: QuantityOut
    label: str


class CheckOut(BaseModel):
    name: str
    passed: bool
    expected_fail: bool = False
    counterexample: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = {}


class BenchReport(BaseModel):
    n: int
    nash: QuantityOut
    walrasian: QuantityOut
    collusive: QuantityOut
    collusive_on_grid: bool
    profits: Dict[str, QuantityOut]
    advantage_sets: List[Dict[str, Any]]
    descent: Optional[Dict[str, List[QuantityOut]]] = None
    grid_descent: Optional[Dict[str, List[QuantityOut]]] = None
    bounds: Optional[List[QuantityOut]] = None
    notes: List[str] = []


class LreReport(BaseModel):
    eta: float
    lre: List[NodeOut]
    min_cost: float
    bounds: Optional[List[QuantityOut]] = None
    guaranteed: List[str] = []
    beyond_guaranteed: List[str] = []
    root_costs: Dict[str, Optional[float]]
    witness_trees: Dict[str, List[List[str]]]
    rule_inertia: Optional[Dict[str, Any]] = None


class OccupancyRow(BaseModel):
    epsilon: float
    pattern: str
    occupancy: float
    std_error: float


class SimulationReport(BaseModel):
    periods: int
    burn_in: int
    replications: int
    seed: int
    predicted_lre: List[str] = []
    rows: List[OccupancyRow]
    predicted_mass: Dict[str, List[float]] = {}
    mistakes: Dict[str, Dict[str, int]] = {}


class SuiteReport(BaseModel):
    passed: bool
    checks: List[CheckOut]
    skipped: List[str] = []


class AggregativeReport(BaseModel):
    n: int
    strategies: int
    aggregates: int
    quasi_submodularity: CheckOut
    ats: Optional[QuantityOut] = None
    ats_unique: Optional[bool] = None
    ats_advantage: Optional[CheckOut] = None
    nash: Optional[QuantityOut] = None
    lre: Optional[LreReport] = None
    skipped: List[str] = []


def plain(value: Any) -> Any:
    """Recursively swap numpy scalars and tuples for JSON-native values"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def check_out(report: CheckReport) -> CheckOut:
    return CheckOut(**plain(report.to_dict()))


def node_out(node: AbsorbingSet) -> NodeOut:
    return NodeOut(rule=node.rule.value, quantity=quantity_out(node.quantity), label=node.label)
