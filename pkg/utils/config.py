"""
Configuration management module.
Handles experiment settings, advertiser profiles, and solver preferences.
"""

import os
import json
import hashlib
import logging
from typing import Any, Dict, List, Optional

from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


class Config:
    """Configuration manager for allocation runs and experiments."""

    DEFAULT_CONFIG = {
        # Input graph
        'graph': None,
        'directed': False,
        'synthetic': 'preferential',
        'nodes': 300,
        'attach': 2,
        # Advertisers and constraints
        'm': 3,
        'total_seeds': None,
        'exposure_bound': 1,
        'budgets': None,
        'prices': 1.0,
        'seed_caps': None,
        'beta': 0.0,
        'epsilon': 0.1,
        # Influence networks
        'network_mode': 'independent',
        # lambda_v ~ U[0, lambda_max]; 0.3 for dense directed graphs
        'lambda_max': 0.4,
        'uniform_p': None,
        'swap_parameter': 0,
        # Estimation and solving
        'rho_mult': 10,
        'trials': 1000,
        'lp_solver': 'highs',
        # Execution
        'seed': 12345,
        'threads': 1,
        'parallel_backend': 'process',
    }

    def __init__(self, config_path: str = None):
        """Initialize configuration manager."""
        self.config_path = config_path
        self.config: Dict[str, Any] = self.DEFAULT_CONFIG.copy()
        if config_path is not None:
            self.load()

    def load(self) -> None:
        """Load configuration from file."""
        if self.config_path is None or not os.path.exists(self.config_path):
            return
        try:
            with open(self.config_path, 'r') as f:
                loaded_config = json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            raise ConfigurationError(f"cannot read config {self.config_path}: {e}") from e
        if not isinstance(loaded_config, dict):
            raise ConfigurationError(f"config {self.config_path} must hold a JSON object")
        unknown = sorted(set(loaded_config) - set(self.DEFAULT_CONFIG))
        if unknown:
            logger.warning("ignoring unknown config keys: %s", ", ".join(unknown))
        self.config.update({k: v for k, v in loaded_config.items() if k in self.DEFAULT_CONFIG})

    def save(self, path: str = None) -> None:
        """Save configuration to file."""
        path = path or self.config_path
        if path is None:
            raise ConfigurationError("no path to save configuration to")
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(self.config, f, indent=4, sort_keys=True)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value."""
        value = self.config.get(key, default)
        return default if value is None else value

    def get_int(self, key: str, default: int = 0) -> int:
        """Get an integer configuration value."""
        return int(self.get(key, default))

    def get_float(self, key: str, default: float = 0.0) -> float:
        """Get a float configuration value."""
        return float(self.get(key, default))

    def get_bool(self, key: str, default: bool = False) -> bool:
        """Get a boolean configuration value."""
        return bool(self.get(key, default))

    def get_optional_float(self, key: str) -> Optional[float]:
        """Get a float value, or None when unset."""
        value = self.config.get(key)
        return None if value is None else float(value)

    def get_list(self, key: str, length: int, cast=float) -> Optional[List]:
        """Get a list value, broadcasting scalars to the given length."""
        value = self.config.get(key)
        if value is None:
            return None
        if isinstance(value, (list, tuple)):
            if len(value) != length:
                raise ConfigurationError(f"'{key}' has {len(value)} entries, expected {length}")
            return [cast(v) for v in value]
        return [cast(value)] * length

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value."""
        if key not in self.DEFAULT_CONFIG:
            raise ConfigurationError(f"unknown config key '{key}'")
        self.config[key] = value

    def update_from_flags(self, flags: Dict[str, Any]) -> None:
        """Apply command-line overrides (None means not given)."""
        for key, value in flags.items():
            if key in self.DEFAULT_CONFIG and value is not None:
                self.config[key] = value

    def reset(self) -> None:
        """Reset configuration to defaults."""
        self.config = self.DEFAULT_CONFIG.copy()

    def fingerprint(self) -> str:
        """Short hash of the canonical configuration."""
        canonical = json.dumps(self.config, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    def copy(self) -> 'Config':
        """Independent copy with the same values."""
        clone = Config()
        clone.config_path = self.config_path
        clone.config = json.loads(json.dumps(self.config))
        return clone
