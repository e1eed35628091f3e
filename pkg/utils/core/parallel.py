"""joblib fan-out for replications and per-root solves"""

from typing import Any, Callable, Iterable, List, Optional

from joblib import Parallel, delayed
from loguru import logger

from utils.core.config import get_config


def run_parallel(
    func: Callable[..., Any],
    items: Iterable[Any],
    name: str,
    n_jobs: Optional[int] = None,
    prefer: str = "processes",
) -> List[Any]:
    """Apply func to every item and return results in item order"""
    items = list(items)
    jobs = n_jobs if n_jobs is not None else get_config().n_jobs
    if jobs == 1 or len(items) <= 1:
        logger.debug(f"Running {name} sequentially ({len(items)} tasks)")
        return [func(item) for item in items]

    logger.debug(f"Running {name} on {jobs} workers ({len(items)} tasks, prefer={prefer})")
    try:
        return Parallel(n_jobs=jobs, prefer=prefer)(delayed(func)(item) for item in items)
    except Exception as e:
        logger.error(f"❌ {name} failed in parallel: {e}")
        raise
