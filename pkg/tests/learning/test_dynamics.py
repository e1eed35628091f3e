import numpy as np
import pytest
from scipy.stats import binom

from utils.core.errors import ConvergenceError, DomainError
from utils.learning.dynamics import (
    NoiseConfig,
    absorbed_pattern,
    broadcast_criteria,
    find_absorbing,
    play,
    random_state,
    step,
    trajectory_rows,
    warm_up,
)
from utils.learning.rules import ImitateBestMax, Rule, make_criterion
from utils.learning.state import AbsorbingSet, FirmRecord, MistakeLog, format_quantity

BR, IM = Rule.BR, Rule.IM
CRITERIA = [ImitateBestMax()]


class TestNoiseConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 0.0},
            {"theta": 1.0},
            {"epsilon": -0.1},
            {"eta": 0.5},
            {"rule_mistake_law": (1.0, 0.0)},
            {"rule_mistake_law": (1.0, 1.0, 1.0)},
            {"timing": "sometimes"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            NoiseConfig(**kwargs)

    def test_only_standard_timing_runs(self):
        with pytest.raises(DomainError, match="not implemented"):
            NoiseConfig(timing="immediate")

    def test_rule_mistake_scales_with_eta(self):
        noise = NoiseConfig(epsilon=0.1, eta=2.0)
        assert noise.rule_mistake_prob == pytest.approx(0.01)
        assert noise.with_epsilon(0.0).rule_mistake_prob == 0.0
        assert noise.rule_law() == {BR: 0.5, IM: 0.5}

    def test_action_law_length(self, toy):
        with pytest.raises(DomainError):
            NoiseConfig(action_mistake_law=(1.0, 2.0)).action_law(toy)
        law = NoiseConfig().action_law(toy)
        assert len(law) == 7
        assert sum(law.values()) == pytest.approx(1.0)


class TestState:
    def test_fitness_window(self):
        firm = FirmRecord(quantity=1.0, rule=IM, tenure=2, payoffs=(10.0, 4.0, 6.0))
        assert firm.fitness(3) == pytest.approx(5.0)
        # geometric weights favour the latest payoff
        assert firm.fitness(3, discount=0.5) == pytest.approx((0.5 * 4.0 + 6.0) / 1.5)

    def test_tenure_is_clamped(self):
        assert FirmRecord(quantity=1.0, rule=BR, tenure=9).effective_tenure(3) == 3

    def test_labels(self):
        assert AbsorbingSet(BR, 15.0).label == "mon(15,BR)"
        assert format_quantity(22.5) == "22.5"

    def test_mistake_log_merge(self):
        a = MistakeLog(rule_opportunities=10, rule_mistakes=1)
        b = MistakeLog(rule_opportunities=30, rule_mistakes=1, action_opportunities=4, action_mistakes=2)
        merged = a.merge(b)
        assert merged.rule_mistake_rate == pytest.approx(0.05)
        assert merged.action_mistake_rate == pytest.approx(0.5)


class TestTransition:
    def test_warm_up_fills_window(self, quadratic4):
        state = warm_up((15.0,) * 4, (BR,) * 4, quadratic4, memory=3)
        assert len(state.history) == 3
        assert state.effective_tenures == (3, 3, 3, 3)
        assert state.fitness == pytest.approx((337.5,) * 4)
        assert absorbed_pattern(state, quadratic4) == AbsorbingSet(BR, 15.0)

    def test_warm_up_size(self, quadratic4):
        with pytest.raises(DomainError):
            warm_up((15.0,) * 3, (BR,) * 3, quadratic4, memory=3)

    def test_br_off_nash_is_not_absorbing(self, quadratic4):
        state = warm_up((18.0,) * 4, (BR,) * 4, quadratic4, memory=3)
        assert absorbed_pattern(state, quadratic4) is None

    def test_play_resets_tenure(self, quadratic4):
        state = warm_up((15.0,) * 4, (BR,) * 4, quadratic4, memory=3)
        nxt = play(state, (15.0,) * 4, (IM, BR, BR, BR), (True, False, False, False), quadratic4)
        assert nxt.firms[0].tenure == 1
        assert nxt.firms[1].tenure == 4
        assert nxt.effective_tenures == (1, 3, 3, 3)
        assert nxt.period == 1
        assert absorbed_pattern(nxt, quadratic4) is None

    def test_absorbing_state_is_fixed(self, quadratic4, rng):
        state = warm_up((20.0,) * 4, (IM,) * 4, quadratic4, memory=3)
        for _ in range(20):
            state = step(state, quadratic4, broadcast_criteria(CRITERIA, 4), NoiseConfig(), rng)
        assert state.quantities == (20.0,) * 4
        assert state.rules == (IM,) * 4

    def test_mistakes_are_logged(self, quadratic4, rng):
        state = random_state(quadratic4, 3, rng)
        log = MistakeLog()
        noise = NoiseConfig(epsilon=0.3, eta=1.0)
        for _ in range(200):
            state = step(state, quadratic4, broadcast_criteria(CRITERIA, 4), noise, rng, log)
        assert log.rule_opportunities > 0
        assert 0 < log.action_mistake_rate < 1

    def test_mistake_rates_match_noise(self, toy):
        rng = np.random.default_rng(31)
        state = random_state(toy, 3, rng)
        log = MistakeLog()
        noise = NoiseConfig(epsilon=0.2, eta=2.0)
        for _ in range(20_000):
            state = step(state, toy, broadcast_criteria(CRITERIA, 2), noise, rng, log)
        lo, hi = binom.interval(0.999, log.rule_opportunities, 0.2**2.0)
        assert lo <= log.rule_mistakes <= hi
        lo, hi = binom.interval(0.999, log.action_opportunities, 0.2)
        assert lo <= log.action_mistakes <= hi

    def test_payoff_bookkeeping(self, quadratic4, rng):
        state = random_state(quadratic4, 3, rng)
        noise = NoiseConfig(epsilon=0.2, eta=1.0)
        for _ in range(50):
            state = step(state, quadratic4, broadcast_criteria(CRITERIA, 4), noise, rng)
            realised = [quadratic4.profits(q) for q, _, _ in state.history]
            for i, firm in enumerate(state.firms):
                k = firm.effective_tenure(state.memory)
                assert firm.payoffs == pytest.approx(tuple(float(p[i]) for p in realised), abs=1e-9)
                recent = sum(float(p[i]) for p in realised[-k:])
                assert firm.fitness(state.memory) * k == pytest.approx(recent, abs=1e-9)

    def test_criteria_broadcast(self):
        assert len(broadcast_criteria(CRITERIA, 4)) == 4
        with pytest.raises(DomainError):
            broadcast_criteria(CRITERIA * 2, 4)

    def test_trajectory_rows(self, toy):
        state = warm_up((3.0, 4.0), (BR, IM), toy, memory=2)
        rows = trajectory_rows(state)
        assert [r["firm"] for r in rows] == [0, 1]
        assert rows[1]["rule"] == "IM"


class TestAbsorption:
    def test_all_best_reply_reaches_nash(self, quadratic4):
        rng = np.random.default_rng(4)
        periods = []
        for _ in range(200):
            start = random_state(quadratic4, 3, rng, rules=(BR,) * 4)
            found = find_absorbing(start, quadratic4, CRITERIA, rng)
            assert found.pattern == AbsorbingSet(BR, 15.0)
            periods.append(found.periods)
        assert np.median(periods) < 10 * len(quadratic4.quantities)

    @pytest.mark.parametrize("kind", ["imitate_best_max", "experimental", "imitate_if_better_randomized"])
    def test_random_starts_absorb_monomorphic(self, kind, toy):
        rng = np.random.default_rng(5)
        criteria = [make_criterion(kind)]
        for _ in range(25):
            found = find_absorbing(random_state(toy, 2, rng), toy, criteria, rng)
            pattern = found.pattern
            assert pattern.rule == IM or pattern.quantity == 3.0

    def test_rejects_perturbed_chain(self, toy, rng):
        with pytest.raises(DomainError):
            find_absorbing(random_state(toy, 2, rng), toy, CRITERIA, rng, noise=NoiseConfig(epsilon=0.1))

    def test_period_cap(self, quadratic4):
        rng = np.random.default_rng(0)
        start = warm_up((0.0, 30.0, 60.0, 90.0), (BR,) * 4, quadratic4, memory=3)
        with pytest.raises(ConvergenceError):
            find_absorbing(start, quadratic4, CRITERIA, rng, max_periods=0)

    @pytest.mark.slow
    def test_thousand_random_starts(self, quadratic4):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            found = find_absorbing(random_state(quadratic4, 3, rng), quadratic4, CRITERIA, rng)
            assert found.pattern.rule == IM or found.pattern.quantity == 15.0
