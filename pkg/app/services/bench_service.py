"""Bench service: benchmark quantities, advantage sets, descent chains and LRE bounds"""

from typing import Any, Dict, List

from loguru import logger

from app.models.results import BenchReport, quantity_out
from app.models.specs import RunConfig
from app.services.builders import require_model
from utils.core.errors import ConvergenceError, GridError
from utils.game.oligopoly import (
    advantage_set,
    benchmark_profits,
    descent_sequences,
    grid_descent,
    lre_bounds,
)


class BenchService:
    def __init__(self, config: RunConfig):
        self.config = config
        self.model = require_model(config)

    def advantage_rows(self) -> List[Dict[str, Any]]:
        """D(q) endpoints for every grid quantity"""
        rows = []
        for q in self.model.quantities:
            d = advantage_set(float(q), self.model)
            rows.append(
                {
                    "q": quantity_out(d.q).model_dump(),
                    "lower": quantity_out(d.lower).model_dump(),
                    "upper": quantity_out(d.upper).model_dump(),
                    "grid_points": len(d.grid_points),
                }
            )
        return rows

    def run(self) -> BenchReport:
        model = self.model
        logger.info(f"🔄 Benchmarks for n={model.n}, |grid|={len(model.grid)}")
        b = model.validate()
        notes: List[str] = []

        descent = grid = None
        if model.n >= 3:
            try:
                seq = descent_sequences(model)
                descent = {"a": [quantity_out(x) for x in seq.a], "b": [quantity_out(x) for x in seq.b]}
            except ConvergenceError as e:
                notes.append(f"descent: {e}")
            try:
                seq = grid_descent(model)
                grid = {"a": [quantity_out(x) for x in seq.a], "b": [quantity_out(x) for x in seq.b]}
            except GridError as e:
                notes.append(f"grid descent: {e}")

        bounds = None
        try:
            bounds = [quantity_out(x) for x in lre_bounds(model)]
        except (GridError, ConvergenceError) as e:
            logger.warning(f"⚠️  LRE bounds unavailable: {e}")
            notes.append(f"bounds: {e}")

        if not b.collusive_on_grid:
            notes.append(f"q^C={b.collusive_raw} is off the grid and reported unsnapped")

        return BenchReport(
            n=model.n,
            nash=quantity_out(b.nash),
            walrasian=quantity_out(b.walrasian),
            collusive=quantity_out(b.collusive),
            collusive_on_grid=b.collusive_on_grid,
            profits={k: quantity_out(v) for k, v in benchmark_profits(model).items()},
            advantage_sets=self.advantage_rows(),
            descent=descent,
            grid_descent=grid,
            bounds=bounds,
            notes=notes,
        )
