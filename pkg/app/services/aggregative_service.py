"""Aggregative-game service: quasi-submodularity, ATS, Nash and LRE on the embedding"""

from typing import List, Optional

from loguru import logger

from app.models.results import AggregativeReport, check_out, quantity_out
from app.models.specs import RunConfig
from app.services.analysis_service import lre_report
from app.services.builders import build_game
from utils.core.errors import ConvergenceError, DomainError, NoAtsError
from utils.core.reports import CheckReport
from utils.game.aggregative import (
    AtsResult,
    aggregative_nash,
    compute_ats,
    verify_aggregator,
    verify_ats_advantage,
    verify_quasi_submodularity,
)
from utils.lre.engine import compute_lre
from utils.lre.graph import AggregativeView


class AggregativeService:
    def __init__(self, config: RunConfig, eta: Optional[float] = None):
        if config.aggregative is None:
            raise DomainError("run config has no aggregative section")
        self.config = config
        self.eta = config.noise.eta if eta is None else eta
        self.game = build_game(config)

    def checks(self) -> List[CheckReport]:
        """Aggregator, quasi-submodularity and ATS advantage reports"""
        reports = [verify_aggregator(self.game), verify_quasi_submodularity(self.game)]
        try:
            ats = compute_ats(self.game, quasi_submodular=reports[1].passed)
        except NoAtsError as e:
            reports.append(CheckReport("ats_exists", False, counterexample={"error": str(e)}))
            return reports
        _, advantage = verify_ats_advantage(self.game, ats)
        reports.append(advantage)
        return reports

    def run(self) -> AggregativeReport:
        game = self.game
        aggregator = verify_aggregator(game)
        if not aggregator.passed:
            raise DomainError(f"aggregator invalid: {aggregator.counterexample}")
        qsm = verify_quasi_submodularity(game)
        skipped: List[str] = []

        ats: Optional[AtsResult] = None
        advantage = None
        try:
            ats = compute_ats(game, quasi_submodular=qsm.passed)
            _, advantage = verify_ats_advantage(game, ats)
        except NoAtsError as e:
            skipped.append(f"ats: {e}")

        nash = None
        try:
            nash = aggregative_nash(game)
        except ConvergenceError as e:
            logger.warning(f"⚠️  Nash search failed: {e}")
            skipped.append(f"nash: {e}")

        lre = None
        if ats is None or nash is None:
            skipped.append("lre: needs both a symmetric Nash strategy and an ATS")
        elif nash == ats.strategy:
            skipped.append("lre: Nash strategy coincides with the ATS")
        else:
            result = compute_lre(AggregativeView(game, nash, ats.strategy), self.eta)
            lre = lre_report(result)

        return AggregativeReport(
            n=game.n,
            strategies=len(game.strategies),
            aggregates=len(game.reachable_aggregates),
            quasi_submodularity=check_out(qsm),
            ats=quantity_out(ats.strategy) if ats else None,
            ats_unique=ats.is_unique if ats else None,
            ats_advantage=check_out(advantage) if advantage else None,
            nash=quantity_out(nash) if nash is not None else None,
            lre=lre,
            skipped=skipped,
        )
