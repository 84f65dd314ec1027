"""
Settings for lifetraces.

Values come from the process environment (optionally seeded from a .env file
through python-dotenv) and fall back to the defaults below. Command-line flags
override both through Settings.from_env(overrides).
"""

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .exceptions import PatternFormatError

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent
FIXTURES_DIR = BASE_DIR / "fixtures"


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def _env_float(name: str) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    return float(raw)


DEFAULT_MAX_STATES = 2 ** 22
DEFAULT_BUDGET_NODES = 10 ** 8
DEFAULT_ELL_MAX = 8
DEFAULT_K_MAX = 6
DEFAULT_P_MAX = 6

MAX_STATES = _env_int("LIFETRACES_MAX_STATES", DEFAULT_MAX_STATES)
BUDGET_NODES = _env_int("LIFETRACES_BUDGET_NODES", DEFAULT_BUDGET_NODES)
TIME_BUDGET = _env_float("LIFETRACES_TIME_BUDGET")
ELL_MAX = _env_int("LIFETRACES_ELL_MAX", DEFAULT_ELL_MAX)
SWEEP_K_MAX = _env_int("LIFETRACES_SWEEP_K_MAX", DEFAULT_K_MAX)
SWEEP_P_MAX = _env_int("LIFETRACES_SWEEP_P_MAX", DEFAULT_P_MAX)
THREADS = _env_int("LIFETRACES_THREADS", 1)
LOG_LEVEL = os.getenv("LIFETRACES_LOG_LEVEL", "WARNING").upper()
CERT_DIR = os.getenv("LIFETRACES_CERT_DIR", "certificates")


@dataclass(frozen=True)
class Settings:
    """Snapshot of the effective configuration"""

    max_states: int = MAX_STATES
    budget_nodes: int = BUDGET_NODES
    time_budget: Optional[float] = TIME_BUDGET
    ell_max: int = ELL_MAX
    k_max: int = SWEEP_K_MAX
    p_max: int = SWEEP_P_MAX
    threads: int = THREADS
    log_level: str = LOG_LEVEL
    cert_dir: str = CERT_DIR

    @classmethod
    def from_env(cls, overrides: Optional[Dict[str, Any]] = None) -> "Settings":
        """
        Build settings from the environment, then apply non-None overrides

        Args:
            overrides: field name -> value; None values are ignored

        Returns:
            Settings instance
        """
        settings = cls(
            max_states=_env_int("LIFETRACES_MAX_STATES", DEFAULT_MAX_STATES),
            budget_nodes=_env_int("LIFETRACES_BUDGET_NODES", DEFAULT_BUDGET_NODES),
            time_budget=_env_float("LIFETRACES_TIME_BUDGET"),
            ell_max=_env_int("LIFETRACES_ELL_MAX", DEFAULT_ELL_MAX),
            k_max=_env_int("LIFETRACES_SWEEP_K_MAX", DEFAULT_K_MAX),
            p_max=_env_int("LIFETRACES_SWEEP_P_MAX", DEFAULT_P_MAX),
            threads=_env_int("LIFETRACES_THREADS", 1),
            log_level=os.getenv("LIFETRACES_LOG_LEVEL", "WARNING").upper(),
            cert_dir=os.getenv("LIFETRACES_CERT_DIR", "certificates"),
        )
        if overrides:
            settings = replace(settings, **{k: v for k, v in overrides.items() if v is not None})
        return settings


def load_yaml(path) -> Any:
    """Read a YAML (or JSON) document, raising PatternFormatError on bad syntax"""
    try:
        with open(path, "r") as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise PatternFormatError(f"{path}: {e}") from e
