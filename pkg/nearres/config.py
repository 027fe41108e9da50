"""
Runtime configuration and logging for nearres.

Settings come from three layers: built-in defaults (which read NEARRES_*
environment variables, optionally loaded from a .env file), then a YAML
or JSON file merged over them, then command-line flags in the CLI.
"""

import os
import logging
from datetime import datetime
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .errors import ConfigError

DEFAULT_CONFIG_FILE = "nearres_config.yaml"


@dataclass
class RuntimeSettings:
    """Process-wide knobs shared by the library and the CLI"""
    threads: int
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    output_dir: str = "reports"
    max_modes: int = 200_000
    reality_tol: float = 1e-12
    divergence_tol: float = 1e-10
    tie_margin: float = 1e-12
    blowup_factor: float = 1e6
    defaults: Dict[str, Dict[str, Any]] = field(default_factory=dict)


def _default_settings() -> Dict[str, Any]:
    load_dotenv()
    return {
        'threads': int(os.environ.get('NEARRES_THREADS') or os.cpu_count() or 1),
        'log_level': os.environ.get('NEARRES_LOG_LEVEL') or 'INFO',
        'log_dir': os.environ.get('NEARRES_LOG_DIR') or None,
        'output_dir': os.environ.get('NEARRES_OUTPUT_DIR') or 'reports',
        'max_modes': int(os.environ.get('NEARRES_MAX_MODES') or 200_000),
        'reality_tol': 1e-12,
        'divergence_tol': 1e-10,
        'tie_margin': 1e-12,
        'blowup_factor': 1e6,
        'defaults': {},
    }


def read_config_file(config_file: str) -> Dict[str, Any]:
    """Parse a YAML (or JSON, which YAML reads) mapping; missing file is an error"""
    config_path = Path(config_file)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_file}")
    with open(config_path, 'r') as f:
        try:
            file_config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {config_file}: {e}") from e
    if file_config is None:
        return {}
    if not isinstance(file_config, dict):
        raise ConfigError(f"{config_file} must hold a mapping at top level")
    return file_config


def load_settings(config_file: Optional[str] = DEFAULT_CONFIG_FILE) -> RuntimeSettings:
    """Load runtime settings, merging the config file over the defaults"""
    default_config = _default_settings()

    if config_file and Path(config_file).exists():
        file_config = read_config_file(config_file)
        for key, value in file_config.items():
            if key not in default_config:
                raise ConfigError(f"unknown setting '{key}' in {config_file}")
            if isinstance(value, dict) and isinstance(default_config[key], dict):
                default_config[key].update(value)
            else:
                default_config[key] = value

    settings = RuntimeSettings(**default_config)
    if settings.threads < 1:
        raise ConfigError("threads must be at least 1")
    if settings.max_modes < 1:
        raise ConfigError("max_modes must be at least 1")
    for name in ('reality_tol', 'divergence_tol', 'tie_margin', 'blowup_factor'):
        try:
            setattr(settings, name, float(getattr(settings, name)))
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {getattr(settings, name)!r}") from None
        if not getattr(settings, name) >= 0:
            raise ConfigError(f"{name} must be nonnegative")
    if not settings.blowup_factor > 1:
        raise ConfigError("blowup_factor must exceed 1")
    return settings


def setup_logging(settings: RuntimeSettings) -> logging.Logger:
    """Configure the package logger with a console and optional file handler"""
    logger = logging.getLogger('nearres')
    level = getattr(logging, str(settings.log_level).upper(), None)
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level: {settings.log_level}")
    logger.setLevel(level)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    if not any(getattr(h, '_nearres_console', False) for h in logger.handlers):
        console_handler = logging.StreamHandler()
        console_handler._nearres_console = True
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
    for handler in logger.handlers:
        if getattr(handler, '_nearres_console', False):
            handler.setLevel(level)

    if settings.log_dir and not any(isinstance(h, logging.FileHandler) for h in logger.handlers):
        log_dir = Path(settings.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(
            log_dir / f"nearres_{datetime.now().strftime('%Y%m%d')}.log"
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
