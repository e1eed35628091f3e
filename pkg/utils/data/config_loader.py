import json
from pathlib import Path
from typing import Any, Dict, List

from loguru import logger

from utils.core.errors import ConfigError


class RunConfigLoader:
    """Reads run configuration JSON files; validation happens in the app layer"""

    def __init__(self, config_dir: str = "data/configs"):
        self.config_dir = Path(config_dir)
        self._cache: Dict[Path, Dict[str, Any]] = {}

    def load(self, path: str) -> Dict[str, Any]:
        """Load one config file, relative paths falling back to the config directory"""
        file_path = self._resolve(path)
        if file_path not in self._cache:
            try:
                with open(file_path, "r", encoding="utf-8") as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{file_path}: invalid JSON at line {e.lineno}: {e.msg}")
            if not isinstance(data, dict):
                raise ConfigError(f"{file_path}: top level must be a JSON object")
            logger.debug(f"Loaded run config {file_path}")
            self._cache[file_path] = data
        return json.loads(json.dumps(self._cache[file_path]))

    def list_configs(self) -> List[str]:
        """Names of the bundled configs"""
        return sorted(p.name for p in self.config_dir.glob("*.json"))

    def _resolve(self, path: str) -> Path:
        candidate = Path(path)
        if candidate.exists():
            return candidate
        bundled = self.config_dir / candidate.name
        if bundled.exists():
            return bundled
        raise ConfigError(f"config file not found: {path}")
