import os
import sys
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv
from loguru import logger

from .errors import ConfigError

WORKERS_ENV = "MI_GRAPH_WORKERS"


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        cfg = yaml.safe_load(f)
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return cfg


def env(name: str, default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(name, default)


def default_workers() -> int:
    load_dotenv(override=False)
    raw = env(WORKERS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {workers}")
    return workers


def setup_logging(level: str = "INFO") -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <7} | {message}")


def pick(*values, default=None):
    """First value that is not None (CLI flag, then YAML, then default)."""
    for value in values:
        if value is not None:
            return value
    return default
