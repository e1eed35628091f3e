"""Simulation service: Monte Carlo occupancy of absorbing patterns"""

from typing import Dict, List, Optional

from loguru import logger

from app.models.results import OccupancyRow, SimulationReport
from app.models.specs import RunConfig
from app.services.builders import build_criteria, build_initial, build_noise, require_model
from utils.core.errors import ConfigError, CournotError
from utils.learning.stationary import OccupancyTable, estimate_stationary
from utils.lre.engine import compute_lre


class SimulationService:
    def __init__(self, config: RunConfig, epsilon_sweep: Optional[List[float]] = None):
        self.config = config
        self.model = require_model(config)
        self.criteria = build_criteria(config.criteria)
        self.noise = build_noise(config.noise)
        sweep = epsilon_sweep or config.epsilon_sweep
        self.epsilons = list(sweep) if sweep else [config.noise.epsilon]
        if any(e <= 0 for e in self.epsilons):
            raise ConfigError("noise.epsilon: simulate needs epsilon > 0")
        self.trajectory: List[Dict[str, object]] = []

    def predicted_lre(self) -> List[str]:
        """Analytic LRE labels, empty when the analysis does not apply"""
        try:
            return compute_lre(self.model, self.noise.eta, self.criteria).labels()
        except CournotError as e:
            logger.warning(f"⚠️  No analytic prediction: {e}")
            return []

    def simulate(self, epsilon: float, record: bool) -> OccupancyTable:
        c = self.config
        return estimate_stationary(
            self.model,
            self.criteria,
            self.noise.with_epsilon(epsilon),
            periods=c.periods,
            burn_in=c.burn_in,
            replications=c.replications,
            seed=c.seed,
            memory=c.memory,
            initial=build_initial(c),
            discount=c.noise.discount,
            record_trajectory=record,
        )

    def run(self, record_trajectory: bool = False) -> SimulationReport:
        self.model.validate()
        predicted = self.predicted_lre()
        rows: List[OccupancyRow] = []
        predicted_mass: Dict[str, List[float]] = {}
        mistakes: Dict[str, Dict[str, int]] = {}

        for k, epsilon in enumerate(self.epsilons):
            table = self.simulate(epsilon, record_trajectory and k == 0)
            rows.extend(OccupancyRow(**row) for row in table.rows())
            key = f"{epsilon:g}"
            if predicted:
                mean, se = table.mass(predicted)
                predicted_mass[key] = [mean, se]
                logger.info(f"📊 epsilon={key}: predicted LRE occupancy {mean:.4f} (se {se:.4f})")
            mistakes[key] = table.mistakes.to_dict()
            if k == 0:
                self.trajectory = table.trajectory

        return SimulationReport(
            periods=self.config.periods,
            burn_in=self.config.burn_in,
            replications=self.config.replications,
            seed=self.config.seed,
            predicted_lre=predicted,
            rows=rows,
            predicted_mass=predicted_mass,
            mistakes=mistakes,
        )
