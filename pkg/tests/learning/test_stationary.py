import numpy as np
import pytest
from scipy import sparse

from utils.core.errors import DomainError, StateSpaceTooLarge
from utils.learning.dynamics import NoiseConfig
from utils.learning.rules import ImitateBestMax
from utils.learning.stationary import (
    estimate_stationary,
    exact_chain_oracle,
    gth_stationary,
    stationary_vector,
    unperturbed_recurrent_mass,
)

CRITERIA = [ImitateBestMax()]


@pytest.fixture(scope="module")
def toy_exact(toy):
    return exact_chain_oracle(toy, CRITERIA, NoiseConfig(epsilon=0.1, eta=2.0), memory=1)


class TestSolvers:
    def test_gth_two_states(self):
        P = np.array([[0.9, 0.1], [0.5, 0.5]])
        assert gth_stationary(P) == pytest.approx([5 / 6, 1 / 6])

    def test_gth_matches_eigenvector(self):
        rng = np.random.default_rng(8)
        P = rng.random((6, 6))
        P /= P.sum(axis=1, keepdims=True)
        pi = gth_stationary(P)
        assert np.abs(pi @ P - pi).max() < 1e-12

    def test_stationary_vector_residual(self):
        P = sparse.csr_matrix(np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]]))
        pi, residual = stationary_vector(P)
        assert pi == pytest.approx([0.25, 0.5, 0.25])
        assert residual < 1e-12


class TestExactOracle:
    def test_distribution(self, toy_exact):
        # (|G|^n)^M * 2^n * M^n with |G| = 7, n = 2, M = 1
        assert len(toy_exact.states) <= 7**2 * 4
        assert toy_exact.residual < 1e-12
        assert toy_exact.distribution.sum() == pytest.approx(1.0)
        assert sum(toy_exact.pattern_mass().values()) == pytest.approx(1.0)

    def test_rows_are_stochastic(self, toy_exact):
        sums = np.asarray(toy_exact.transition.sum(axis=1)).ravel()
        assert np.abs(sums - 1.0).max() < 1e-12

    def test_state_cap(self, toy):
        with pytest.raises(StateSpaceTooLarge):
            exact_chain_oracle(toy, CRITERIA, NoiseConfig(epsilon=0.1), memory=1, cap=10)

    def test_needs_noise(self, toy):
        with pytest.raises(DomainError):
            exact_chain_oracle(toy, CRITERIA, NoiseConfig(), memory=1)

    def test_recurrent_classes_are_monomorphic(self, toy, toy_exact):
        noise = NoiseConfig(epsilon=0.1, eta=2.0)
        outside, patterns = unperturbed_recurrent_mass(toy_exact, toy, CRITERIA, noise, memory=1)
        assert "other" not in patterns
        assert "mon(3,BR)" in patterns
        assert not any(p.endswith(",BR)") and p != "mon(3,BR)" for p in patterns)
        assert 0.0 <= outside < 1.0

    def test_transient_mass_vanishes(self, toy, toy_exact):
        noisier = NoiseConfig(epsilon=0.2, eta=2.0)
        high = exact_chain_oracle(toy, CRITERIA, noisier, memory=1)
        outside_high, _ = unperturbed_recurrent_mass(high, toy, CRITERIA, noisier, memory=1)
        outside_low, _ = unperturbed_recurrent_mass(toy_exact, toy, CRITERIA, NoiseConfig(epsilon=0.1), memory=1)
        assert outside_low < outside_high


class TestMonteCarlo:
    def run(self, toy, seed, **kwargs):
        return estimate_stationary(
            toy,
            CRITERIA,
            NoiseConfig(epsilon=0.1, eta=2.0),
            periods=kwargs.pop("periods", 2_000),
            burn_in=100,
            replications=kwargs.pop("replications", 2),
            seed=seed,
            memory=1,
            n_jobs=1,
            **kwargs,
        )

    def test_reproducible(self, toy):
        a = self.run(toy, seed=3)
        b = self.run(toy, seed=3)
        assert a.samples == b.samples
        assert a.mistakes == b.mistakes

    def test_occupancy_sums_to_one(self, toy):
        table = self.run(toy, seed=4)
        assert sum(table.occupancy.values()) == pytest.approx(1.0)
        assert {row["pattern"] for row in table.rows()} == set(table.keys)

    def test_single_replication_uses_batches(self, toy):
        table = self.run(toy, seed=5, replications=1)
        assert len(table.samples) == 10
        mean, se = table.mass(table.keys)
        assert mean == pytest.approx(1.0)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_trajectory(self, toy):
        table = self.run(toy, seed=6, periods=50, record_trajectory=True)
        # first replication only, one row per firm per period
        assert len(table.trajectory) == 50 * 2

    def test_rejects_zero_noise(self, toy):
        with pytest.raises(DomainError):
            estimate_stationary(toy, CRITERIA, NoiseConfig(), 100, 0, 1, 0, memory=1)

    def test_agrees_with_exact_chain(self, tiny):
        noise = NoiseConfig(epsilon=0.2, eta=2.0)
        exact = exact_chain_oracle(tiny, CRITERIA, noise, memory=2)
        table = estimate_stationary(
            tiny, CRITERIA, noise, periods=10_000, burn_in=500, replications=10, seed=21, memory=2, n_jobs=1
        )
        for label, target in exact.pattern_mass().items():
            mean, se = table.mass([label])
            # floor covers patterns too rare to be visited
            assert abs(mean - target) <= max(3 * se, 1e-3), label


@pytest.mark.slow
class TestConcentration:
    """Occupancy of mon(3,BR) and mon(4,IM) on the seven-point duopoly as mistakes vanish"""

    LRE = ["mon(3,BR)", "mon(4,IM)"]

    def mass(self, toy, epsilon):
        table = estimate_stationary(
            toy,
            CRITERIA,
            NoiseConfig(gamma=0.5, theta=0.5, epsilon=epsilon, eta=2.0),
            periods=200_000,
            burn_in=1_000,
            replications=4,
            seed=7,
            memory=3,
        )
        return table.mass(self.LRE)

    @pytest.mark.parametrize("epsilon, floor", [(0.05, 0.80), (0.01, 0.95)])
    def test_threshold(self, toy, epsilon, floor):
        mean, se = self.mass(toy, epsilon)
        assert mean + 3 * se >= floor

    def test_rises_as_noise_falls(self, toy):
        masses = [self.mass(toy, eps) for eps in (0.08, 0.04, 0.02)]
        for (low, low_se), (high, high_se) in zip(masses, masses[1:]):
            assert high + 3 * high_se >= low - 3 * low_se
        assert masses[-1][0] > masses[0][0]
