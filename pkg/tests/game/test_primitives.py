import numpy as np
import pytest

from utils.core.errors import DomainError
from utils.game.oligopoly import OligopolyModel, QuantityGrid, compute_benchmarks
from utils.game.primitives import (
    CallableCost,
    CallableDemand,
    LinearDemand,
    PowerCost,
    QuadraticCost,
    TableDemand,
)


class TestDemand:
    def test_linear_clamps_at_zero(self):
        demand = LinearDemand(90.0, 1.0)
        assert demand.q_max == 90.0
        assert np.allclose(demand.price([0.0, 60.0, 90.0, 120.0]), [90.0, 30.0, 0.0, 0.0])
        assert np.allclose(demand.slope([10.0, 100.0]), [-1.0, 0.0])

    def test_table_matches_linear(self):
        table = TableDemand(((0.0, 90.0), (90.0, 0.0)))
        linear = LinearDemand(90.0, 1.0)
        Q = np.linspace(0.0, 120.0, 25)
        assert table.q_max == 90.0
        assert np.allclose(table.price(Q), linear.price(Q))
        assert float(table.slope(45.0)) == pytest.approx(-1.0)

    def test_table_concavity(self):
        concave = TableDemand(((0.0, 12.0), (6.0, 9.0), (12.0, 0.0)))
        convex = TableDemand(((0.0, 12.0), (2.0, 4.0), (12.0, 0.0)))
        assert concave.is_weakly_concave(12.0)
        assert not convex.is_weakly_concave(12.0)
        assert convex.is_strictly_decreasing(12.0)

    @pytest.mark.parametrize(
        "points",
        [((0.0, 10.0),), ((0.0, 10.0), (0.0, 5.0)), ((1.0, 10.0), (5.0, 0.0))],
    )
    def test_table_rejects_bad_points(self, points):
        with pytest.raises(DomainError):
            TableDemand(points)

    def test_callable_numeric_slope(self):
        demand = CallableDemand(func=lambda Q: 90.0 - Q, declared_q_max=90.0)
        assert float(demand.price(30.0)) == pytest.approx(60.0)
        assert float(demand.price(95.0)) == 0.0
        assert float(demand.slope(30.0)) == pytest.approx(-1.0, abs=1e-6)
        assert float(demand.slope(100.0)) == 0.0


class TestCost:
    def test_power(self):
        cost = PowerCost(0.5, 2.0)
        assert float(cost.cost(6.0)) == pytest.approx(18.0)
        assert float(cost.marginal(3.0)) == pytest.approx(3.0)

    def test_quadratic(self):
        cost = QuadraticCost(1.0, 0.5)
        assert np.allclose(cost.cost([0.0, 2.0]), [0.0, 4.0])
        assert float(cost.marginal(2.0)) == pytest.approx(3.0)

    @pytest.mark.parametrize("args", [(0.0, 2.0), (1.0, 0.5)])
    def test_power_rejects_degenerate(self, args):
        with pytest.raises(DomainError):
            PowerCost(*args)

    def test_quadratic_rejects_zero(self):
        with pytest.raises(DomainError):
            QuadraticCost(0.0, 0.0)


def test_callable_families_reproduce_benchmarks():
    model = OligopolyModel(
        n=4,
        demand=CallableDemand(func=lambda Q: 90.0 - Q, declared_q_max=90.0, derivative=lambda Q: -1.0),
        cost=CallableCost(func=lambda q: q * q / 2, derivative=lambda q: q),
        grid=QuantityGrid(1.0, 90),
    )
    b = model.validate()
    assert (b.nash, b.walrasian, b.collusive) == (15.0, 18.0, 10.0)
    assert compute_benchmarks(model) is b
