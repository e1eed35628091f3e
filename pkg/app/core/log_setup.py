"""Logging setup"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from utils.core.config import get_config


def setup_logging(level: Optional[str] = None):
    """Setup logging with loguru; stdout is left free for machine-readable results"""
    config = get_config()
    level = level or ("DEBUG" if config.debug else config.log_level)
    logger.remove()

    # Console logging
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | {message}",
    )

    # File logging with rotation
    if config.log_file:
        Path(config.log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            config.log_file,
            rotation="10 MB",
            retention="7 days",
            level=level,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} | {message}",
            compression="zip",
        )

    logger.debug("✅ Logging setup complete")
