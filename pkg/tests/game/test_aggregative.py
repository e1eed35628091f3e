import pytest

from utils.core.errors import ConvergenceError, DomainError, NoAtsError
from utils.game.aggregative import (
    AggregativeGame,
    CommonsKernel,
    MeanAggregator,
    SumAggregator,
    TableAggregator,
    TableKernel,
    aggregative_nash,
    compute_ats,
    cournot_game,
    verify_aggregator,
    verify_ats_advantage,
    verify_quasi_submodularity,
)


@pytest.fixture
def commons() -> AggregativeGame:
    return AggregativeGame(
        n=2, strategies=(0.0, 0.25, 0.5), aggregator=SumAggregator(), payoff=CommonsKernel(1.0)
    )


@pytest.fixture(scope="module")
def cournot(quadratic4) -> AggregativeGame:
    return cournot_game(quadratic4)


class TestAggregators:
    def test_sum_and_mean(self):
        assert SumAggregator()((1.0, 2.0, 3.0)) == 6.0
        assert MeanAggregator()((1.0, 2.0, 3.0)) == 2.0

    def test_table_is_symmetric(self):
        table = TableAggregator([([0.0, 1.0], 2.0), ([1.0, 1.0], 3.0)])
        assert table((1.0, 0.0)) == table((0.0, 1.0)) == 2.0
        with pytest.raises(DomainError):
            table((0.0, 0.0))

    def test_non_monotone_table_is_flagged(self):
        game = AggregativeGame(
            n=2,
            strategies=(0.0, 1.0),
            aggregator=TableAggregator([([0.0, 0.0], 0.0), ([0.0, 1.0], 2.0), ([1.0, 1.0], 1.0)]),
            payoff=CommonsKernel(),
        )
        report = verify_aggregator(game)
        assert not report.passed
        assert report.counterexample["kind"] == "monotonicity"

    def test_strategies_must_increase(self):
        with pytest.raises(DomainError):
            AggregativeGame(n=2, strategies=(0.5, 0.25), aggregator=SumAggregator(), payoff=CommonsKernel())


class TestCommons:
    def test_reachable_aggregates(self, commons):
        assert commons.reachable_aggregates.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_quasi_submodular(self, commons):
        assert verify_quasi_submodularity(commons).passed

    def test_ats(self, commons):
        ats = compute_ats(commons)
        assert ats.strategy == 0.5
        assert ats.is_unique
        assert [(r["s"], r["m"]) for r in ats.certificate] == [(0.0, 1), (0.25, 1)]
        assert all(r["margin"] > 0 for r in ats.certificate)

    def test_ats_advantage(self, commons):
        rows, report = verify_ats_advantage(commons, compute_ats(commons))
        assert report.passed
        assert len(rows) == 2

    def test_nash_is_not_unique(self, commons):
        # (0.5, 0.25) is an asymmetric equilibrium
        assert commons.best_responses((0.5, 0.25), 0) == (0.25, 0.5)
        with pytest.raises(ConvergenceError):
            aggregative_nash(commons)


class TestCournotEmbedding:
    def test_quasi_submodular(self, cournot):
        assert verify_quasi_submodularity(cournot).passed

    def test_ats_is_walrasian(self, cournot):
        assert compute_ats(cournot).strategy == 18.0

    def test_ats_margins_positive(self, cournot):
        rows, report = verify_ats_advantage(cournot, compute_ats(cournot))
        assert report.passed
        assert all(r["margin"] > 0 for r in rows)
        assert compute_ats(cournot).certificate == rows

    def test_nash(self, cournot):
        assert aggregative_nash(cournot) == 15.0


def test_missing_ats():
    game = AggregativeGame(
        n=2,
        strategies=(0.0, 1.0),
        aggregator=SumAggregator(),
        payoff=TableKernel([[0, 0, 0], [1, 0, 1], [0, 2, 1], [1, 2, 0]]),
    )
    with pytest.raises(NoAtsError):
        compute_ats(game, quasi_submodular=False)
