"""
Configuration system for the Cournot rule-revision toolkit
Handles environment variables for numerical tolerances, caps and logging
"""

import os
from pathlib import Path
from dotenv import load_dotenv
from loguru import logger


class Config:
    """Process-level configuration (run parameters live in the JSON run config)"""

    def __init__(self):
        # Load environment variables
        self._load_env()

        # Core settings
        self.debug = self._get_bool("DEBUG", False)
        self.log_level = self._get_str("LOG_LEVEL", "INFO")
        self.log_file = self._get_str("LOG_FILE", "")

        # Numerical tolerances
        self.grid_tolerance = self._get_float("GRID_TOLERANCE", 1e-9)
        self.root_tolerance = self._get_float("ROOT_TOLERANCE", 1e-10)
        self.root_max_iter = self._get_int("ROOT_MAX_ITER", 200)
        self.tie_tolerance = self._get_float("TIE_TOLERANCE", 1e-9)

        # Iteration and state caps
        self.exact_chain_state_cap = self._get_int("EXACT_CHAIN_STATE_CAP", 200_000)
        self.descent_max_iter = self._get_int("DESCENT_MAX_ITER", 10_000)
        self.absorption_max_periods = self._get_int("ABSORPTION_MAX_PERIODS", 100_000)

        # joblib workers
        self.n_jobs = self._get_int("N_JOBS", 1)

        # Validate configuration
        self._validate_config()

    def _load_env(self):
        """Load environment variables from .env file"""
        env_path = Path(".env")
        if env_path.exists():
            load_dotenv(env_path)
        else:
            # Try .env.example as fallback
            example_path = Path(".env.example")
            if example_path.exists():
                load_dotenv(example_path)
                logger.debug("Using .env.example - create .env file for custom settings")

    def _get_str(self, key: str, default: str = "") -> str:
        """Get string value from environment"""
        return os.getenv(key, default)

    def _get_bool(self, key: str, default: bool = False) -> bool:
        """Get boolean value from environment"""
        value = os.getenv(key, "").lower()
        return value in ("true", "1", "yes", "on") if value else default

    def _get_int(self, key: str, default: int = 0) -> int:
        """Get integer value from environment"""
        try:
            return int(os.getenv(key, str(default)))
        except ValueError:
            return default

    def _get_float(self, key: str, default: float = 0.0) -> float:
        """Get float value from environment"""
        try:
            return float(os.getenv(key, str(default)))
        except ValueError:
            return default

    def _validate_config(self):
        """Validate configuration settings"""
        for name in ("grid_tolerance", "root_tolerance", "tie_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"Invalid {name.upper()}: must be positive")

        if self.root_max_iter < 1 or self.descent_max_iter < 1:
            raise ValueError("Iteration caps must be at least 1")

        if self.exact_chain_state_cap < 1:
            raise ValueError("EXACT_CHAIN_STATE_CAP must be at least 1")

        if self.n_jobs == 0:
            logger.warning("N_JOBS=0 is not meaningful for joblib - using 1")
            self.n_jobs = 1

    def __str__(self) -> str:
        """String representation (safe for logging)"""
        return f"Config(grid_tol={self.grid_tolerance}, n_jobs={self.n_jobs}, debug={self.debug})"


# Global config instance
config = Config()


# Helper functions for easy access
def get_config() -> Config:
    """Get the global configuration instance"""
    return config


def tie_tolerance(scale: float) -> float:
    """Absolute tolerance for argmax ties at the given payoff magnitude"""
    return config.tie_tolerance * max(1.0, abs(scale))
