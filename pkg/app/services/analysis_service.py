"""Analysis service: long-run equilibria from minimum-cost trees"""

from typing import Optional

from loguru import logger

from app.models.results import LreReport, node_out, plain, quantity_out
from app.models.specs import RunConfig
from app.services.builders import build_criteria, require_model
from utils.lre.engine import LreResult, compute_lre
from utils.lre.graph import to_dot
from utils.lre.witness import rule_inertia_threshold


def lre_report(result: LreResult, rule_inertia: Optional[dict] = None) -> LreReport:
    return LreReport(
        eta=result.eta,
        lre=[node_out(node) for node in result.lre_set],
        min_cost=result.min_tree_cost,
        bounds=[quantity_out(x) for x in result.bounds] if result.bounds else None,
        guaranteed=[node.label for node in result.guaranteed],
        beyond_guaranteed=[node.label for node in result.beyond_guaranteed],
        root_costs=plain(result.root_costs),
        witness_trees={k: [list(e) for e in edges] for k, edges in result.witness_trees.items()},
        rule_inertia=rule_inertia,
    )


class AnalysisService:
    def __init__(self, config: RunConfig, eta: Optional[float] = None):
        self.config = config
        self.eta = config.noise.eta if eta is None else eta
        self.model = require_model(config)
        self.criteria = build_criteria(config.criteria)
        self.result: Optional[LreResult] = None

    def rule_inertia(self) -> dict:
        bound = rule_inertia_threshold(self.model)
        return {
            "x": bound.x,
            "min_memory": bound.min_memory,
            "memory": self.config.memory,
            "path_available": self.config.memory >= bound.min_memory,
            "q_tilde": quantity_out(bound.q_tilde).model_dump(),
        }

    def run(self) -> LreReport:
        self.model.validate()
        self.result = compute_lre(self.model, self.eta, self.criteria)
        logger.info(f"✅ LRE at eta={self.eta:g}: {', '.join(self.result.labels())}")
        return lre_report(self.result, self.rule_inertia())

    def dot(self) -> str:
        if self.result is None:
            self.run()
        return to_dot(self.result.graph, self.result.witness_trees)
