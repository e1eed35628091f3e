"""Shared dependencies for the commands"""

from functools import lru_cache
from typing import Any, Dict, List, Optional

from loguru import logger

from app.models.specs import RunConfig, parse_run_config
from utils.data.config_loader import RunConfigLoader
from utils.data.result_sink import ResultSink, ResultSinkFactory


@lru_cache()
def get_config_loader() -> RunConfigLoader:
    """Get the run-config loader instance"""
    return RunConfigLoader()


def get_sink(fmt: str = "json", out_dir: Optional[str] = None) -> ResultSink:
    return ResultSinkFactory.create_sink({"format": fmt, "out_dir": out_dir})


def load_run_config(
    path: str,
    seed: Optional[int] = None,
    eta: Optional[float] = None,
    epsilon_sweep: Optional[List[float]] = None,
) -> RunConfig:
    """Read a run config and apply command-line overrides before validation"""
    data: Dict[str, Any] = get_config_loader().load(path)
    if seed is not None:
        data["seed"] = seed
    if eta is not None:
        data.setdefault("noise", {})["eta"] = eta
    if epsilon_sweep:
        data["epsilon_sweep"] = list(epsilon_sweep)
    config = parse_run_config(data)
    logger.debug(f"Run config {path}: seed={config.seed}, M={config.memory}")
    return config
