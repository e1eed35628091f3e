"""Shared fixtures: the canonical markets and bundled run configs"""

import json
from pathlib import Path

import numpy as np
import pytest

from utils.game.oligopoly import OligopolyModel, QuantityGrid
from utils.game.primitives import LinearDemand, QuadraticCost

CONFIG_DIR = Path(__file__).resolve().parent.parent / "data" / "configs"


def make_model(n: int, intercept: float, step: float, levels: int) -> OligopolyModel:
    return OligopolyModel(
        n=n,
        demand=LinearDemand(intercept, 1.0),
        cost=QuadraticCost(0.0, 0.5),
        grid=QuantityGrid(step, levels),
    )


@pytest.fixture(scope="session")
def quadratic4() -> OligopolyModel:
    """n=4, p = max(90 - Q, 0), c = q^2/2, grid {0, ..., 90}"""
    return make_model(4, 90.0, 1.0, 90)


@pytest.fixture(scope="session")
def duopoly() -> OligopolyModel:
    """n=2 on the half-unit grid: q^N = 22.5, q^W = 30"""
    return make_model(2, 90.0, 0.5, 180)


@pytest.fixture(scope="session")
def toy() -> OligopolyModel:
    """n=2, p = 12 - Q, grid {0, ..., 6}: q^N = 3, q^W = 4"""
    return make_model(2, 12.0, 1.0, 6)


@pytest.fixture(scope="session")
def tiny() -> OligopolyModel:
    """n=2, p = 4 - Q, grid {0, 1, 2}: q^N = 1 on the grid, q^W = 4/3 off it"""
    return make_model(2, 4.0, 1.0, 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def write_config(tmp_path):
    """Write a run-config dict to a temporary JSON file and return its path"""

    def _write(data: dict, name: str = "run.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def quadratic4_config() -> dict:
    return json.loads((CONFIG_DIR / "quadratic4.json").read_text(encoding="utf-8"))
