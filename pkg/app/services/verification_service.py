"""Verification service: the pass/fail suite behind `verify`"""

from typing import List, Optional

from loguru import logger

from app.models.results import SuiteReport, check_out
from app.models.specs import RunConfig
from app.services.aggregative_service import AggregativeService
from app.services.builders import build_criteria, build_model, build_noise
from utils.core.config import get_config
from utils.core.errors import CournotError, CriterionNotSupported
from utils.core.reports import CheckReport, all_passed
from utils.core.rng import make_stream
from utils.game.aggregative import compute_ats, cournot_game
from utils.game.oligopoly import (
    OligopolyModel,
    compute_benchmarks,
    verify_delta_properties,
    verify_strategic_substitutes,
    walrasian_advantage_table,
)
from utils.learning.rules import (
    CRITERIA,
    Rule,
    check_no_birth,
    check_survival_of_fittest,
    make_criterion,
)
from utils.learning.state import AbsorbingSet
from utils.learning.stationary import (
    estimate_stationary,
    exact_chain_oracle,
    unperturbed_recurrent_mass,
)
from utils.lre.engine import compute_lre, verify_radius_walras
from utils.lre.graph import OligopolyView, build_resistances
from utils.lre.witness import ACTION_INERTIA, RULE_INERTIA, rule_inertia_threshold, witness_path

CRITERION_TRIALS = 20_000


def state_space_bound(model: OligopolyModel, memory: int) -> int:
    """Upper bound on exact-chain states: profile histories x rules x tenures"""
    n = model.n
    return (len(model.grid) ** n) ** memory * 2**n * memory**n


class VerificationService:
    def __init__(self, config: RunConfig, eta: Optional[float] = None, trials: int = CRITERION_TRIALS):
        self.config = config
        self.eta = config.noise.eta if eta is None else eta
        self.trials = trials
        self.model = build_model(config.model) if config.model else None
        self.criteria = build_criteria(config.criteria)
        self.checks: List[CheckReport] = []
        self.skipped: List[str] = []

    # -- market ---------------------------------------------------------------

    def check_market(self) -> bool:
        """Strategic substitutes and model invariants; False stops the market checks"""
        report = verify_strategic_substitutes(self.model)
        self.checks.append(report)
        if not report.passed:
            return False
        try:
            self.model.validate()
        except CournotError as e:
            self.checks.append(CheckReport("model_invariants", False, counterexample={"error": str(e)}))
            return False
        self.checks.append(CheckReport("model_invariants", True))
        _, walras = walrasian_advantage_table(self.model)
        self.checks.append(walras)
        self.checks.extend(verify_delta_properties(self.model))
        self.checks.append(verify_radius_walras(self.model))
        return True

    def check_criteria(self) -> None:
        for k, kind in enumerate(CRITERIA):
            criterion = make_criterion(kind)
            self.checks.append(check_no_birth(criterion, self.trials, make_stream(self.config.seed, 2 * k)))
            self.checks.append(
                check_survival_of_fittest(criterion, self.trials, make_stream(self.config.seed, 2 * k + 1))
            )

    def check_lre(self) -> None:
        for eta in sorted({1.0, float(self.eta)}):
            name = f"lre_cross_check[eta={eta:g}]"
            try:
                result = compute_lre(self.model, eta, self.criteria)
            except CriterionNotSupported as e:
                self.skipped.append(f"{name}: {e}")
                continue
            except CournotError as e:
                self.checks.append(CheckReport(name, False, counterexample={"error": str(e)}))
                continue
            self.checks.append(
                CheckReport(name, True, details={"lre": result.labels(), "min_cost": result.min_tree_cost})
            )

    def check_witnesses(self) -> None:
        """Replay the explicit paths behind the eta-cost and one-mistake edges"""
        if any(not c.satisfies_sf for c in self.criteria):
            self.skipped.append("witnesses: criteria outside Survival-of-the-Fittest")
            return
        model, memory = self.model, self.config.memory
        b = compute_benchmarks(model)
        graph = build_resistances(OligopolyView(model), self.eta)
        nash_br, nash_im = AbsorbingSet(Rule.BR, b.nash), AbsorbingSet(Rule.IM, b.nash)
        walras_im = AbsorbingSet(Rule.IM, b.walrasian)

        edges = [
            (walras_im, nash_br, ACTION_INERTIA),
            (nash_br, nash_im, ACTION_INERTIA),
            (nash_im, walras_im, ACTION_INERTIA),
        ]
        min_memory = rule_inertia_threshold(model).min_memory
        if memory >= min_memory:
            edges.append((walras_im, nash_br, RULE_INERTIA))
        else:
            self.skipped.append(f"witness[rule_inertia]: needs M >= {min_memory}")

        for source, target, variant in edges:
            name = f"witness[{source.label}->{target.label},{variant}]"
            try:
                witness = witness_path(source, target, model, self.criteria, memory, self.eta, variant=variant)
            except CournotError as e:
                self.checks.append(CheckReport(name, False, counterexample={"error": str(e)}))
                continue
            expected = graph.resistance(source, target)
            matches = abs(witness.cost - expected) <= 1e-9
            self.checks.append(
                CheckReport(
                    name,
                    matches,
                    counterexample=None if matches else {"cost": witness.cost, "edge": expected},
                    details={"periods": witness.periods, "cost": witness.cost},
                )
            )

    def check_oracle(self) -> None:
        """Exact chain against Monte Carlo, on instances small enough to enumerate"""
        c = self.config
        bound = state_space_bound(self.model, c.memory)
        if bound > get_config().exact_chain_state_cap:
            self.skipped.append(f"exact_oracle: up to {bound} states exceeds the cap")
            return
        noise = build_noise(c.noise, eta=self.eta)
        if noise.epsilon <= 0:
            self.skipped.append("exact_oracle: needs noise.epsilon > 0")
            return

        exact = exact_chain_oracle(self.model, self.criteria, noise, c.memory, c.noise.discount)
        _, patterns = unperturbed_recurrent_mass(exact, self.model, self.criteria, noise, c.memory, c.noise.discount)
        self.checks.append(
            CheckReport("recurrent_classes_monomorphic", "other" not in patterns, details={"patterns": patterns})
        )

        table = estimate_stationary(
            self.model,
            self.criteria,
            noise,
            periods=c.periods,
            burn_in=c.burn_in,
            replications=c.replications,
            seed=c.seed,
            memory=c.memory,
            discount=c.noise.discount,
        )
        worst = None
        for label, target in exact.pattern_mass().items():
            mean, se = table.mass([label])
            gap = abs(mean - target)
            if gap > max(3 * se, 1e-3) and (worst is None or gap > worst["gap"]):
                worst = {"pattern": label, "exact": target, "monte_carlo": mean, "std_error": se, "gap": gap}
        self.checks.append(
            CheckReport(
                "oracle_equivalence",
                worst is None,
                counterexample=worst,
                details={"states": len(exact.states), "residual": exact.residual},
            )
        )

    # -- aggregative ----------------------------------------------------------

    def check_aggregative(self) -> None:
        self.checks.extend(AggregativeService(self.config, self.eta).checks())

    def check_cournot_embedding(self) -> None:
        """The ATS of the Cournot embedding is the Walrasian quantity"""
        ats = compute_ats(cournot_game(self.model))
        w = compute_benchmarks(self.model).walrasian
        self.checks.append(
            CheckReport("ats_is_walrasian", ats.strategy == w, details={"ats": ats.strategy, "walrasian": w})
        )

    def run(self) -> SuiteReport:
        self.check_criteria()
        if self.model is not None and self.check_market():
            self.check_lre()
            self.check_witnesses()
            self.check_cournot_embedding()
            self.check_oracle()
        if self.config.aggregative is not None:
            self.check_aggregative()

        passed = all_passed(self.checks)
        failed = [r.name for r in self.checks if not (r.passed or r.expected_fail)]
        if failed:
            logger.error(f"❌ Failed checks: {', '.join(failed)}")
        else:
            logger.info(f"✅ All {len(self.checks)} checks passed")
        return SuiteReport(passed=passed, checks=[check_out(r) for r in self.checks], skipped=self.skipped)
