"""Environment-backed defaults, run-config files and the shared logger.

Precedence for every resolved setting is: command-line flag, then the run-config
file, then the environment (``.env`` included), then the built-in default.
"""
import logging
import os
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml
from dotenv import load_dotenv

from app.core.errors import InputContractError
from app.core.log_loader import apply_log_level, setup_logging

load_dotenv()

setup_logging()

LOGGER = logging.getLogger(os.getenv('APP_NAME', "centerbox"))

DEFAULT_GT_SIDE = 100.0


class Config:
    def __init__(self):
        self.gt_side = float(os.getenv('CENTERBOX_GT_SIDE', DEFAULT_GT_SIDE))
        self.workers = int(os.getenv('CENTERBOX_WORKERS', 1))
        self.seed = int(os.getenv('CENTERBOX_SEED', 0))
        self.match_strategy = os.getenv('CENTERBOX_MATCH_STRATEGY', 'greedy')
        self.quadrature_nodes = int(os.getenv('CENTERBOX_QUADRATURE_NODES', 512))
        self.log_level = os.getenv('LOG_LEVEL', '').upper() or None


def configure_log_level(level: Optional[str]):
    """Console and logger level for the run; None keeps logging_config.yaml as is."""
    if level is None:
        return
    try:
        apply_log_level(LOGGER, level)
    except ValueError:
        LOGGER.warning(f"unknown log level {level!r}, keeping the configured one")


configure_log_level(Config().log_level)


def load_config_file(path: Optional[str | Path]) -> dict[str, Any]:
    """Read a YAML run-config; an absent path yields an empty mapping."""
    if path is None:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise InputContractError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise InputContractError(f"config file {path} is not valid YAML: {exc}")
    if not isinstance(data, dict):
        raise InputContractError(f"config file {path}: top level must be a mapping")
    return data


def resolve_settings(
        defaults: Mapping[str, Any],
        file_section: Optional[Mapping[str, Any]],
        flags: Mapping[str, Any]) -> dict[str, Any]:
    """Merge defaults < config file < flags; ``None`` flags mean "not given"."""
    effective = dict(defaults)
    for key, value in (file_section or {}).items():
        normalized = key.replace('-', '_')
        if normalized not in effective:
            raise InputContractError(f"config file: unknown field '{key}'")
        effective[normalized] = value
    for key, value in flags.items():
        if value is not None:
            effective[key] = value
    return effective
