"""Loading of the flat JSON experiment configuration"""
import json
import logging
from pathlib import Path
from typing import Any

from suslov_lab.errors import ConfigError
from suslov_lab.models.run_config import RunConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent / "config.json"

# Rigid body and initial velocity of the reference experiment
DEFAULTS: dict[str, Any] = {
    "inertia": [1.0, 0.1, 0.2, 0.1, 1.0, 0.2, 0.2, 0.1, 1.0],
    "omega0": [0.4, 0.5, 0.0],
    "eps": 1e-3,
    "t_final": 10.0,
    "method": "midpoint",
    "output": "trajectory.csv",
    "emit_plots": False,
}


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    """Load configuration from config.json, falling back to built-in defaults"""
    config_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    if config_path.exists():
        try:
            with open(config_path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{config_path} must hold a flat JSON object")
        return {**DEFAULTS, **data}
    if path is not None:
        raise ConfigError(f"config file not found: {config_path}")
    logger.info("no config.json next to the package, using built-in defaults")
    return dict(DEFAULTS)


def build_config(path: str | Path | None = None, **overrides: Any) -> RunConfig:
    """File values, then non-None overrides, validated as a RunConfig"""
    values = load_config(path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_mapping(values)
