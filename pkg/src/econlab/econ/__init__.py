"""Deterministic agent-based economy: entities, markets, metrics, engine."""

from .config import ConfigError, ExperimentConfig, load_config_file, resolve_config
from .engine import SimulationResult, TickReport, init_economy, run, step_month
from .entities import (
    Bank,
    EconomyState,
    Firm,
    Government,
    Household,
    JobPosting,
    MetricFrame,
    MoneyEvent,
)
from .markets import clear_product_market, match_labor
from .metrics import compute_metrics, gini
from .money import frac, scale
from .registry import (
    LeverRangeError,
    LeverSpec,
    ParameterRegistry,
    UnknownLeverError,
    default_registry,
)

__all__ = [
    "Bank",
    "ConfigError",
    "EconomyState",
    "ExperimentConfig",
    "Firm",
    "Government",
    "Household",
    "JobPosting",
    "LeverRangeError",
    "LeverSpec",
    "MetricFrame",
    "MoneyEvent",
    "ParameterRegistry",
    "SimulationResult",
    "TickReport",
    "UnknownLeverError",
    "clear_product_market",
    "compute_metrics",
    "default_registry",
    "frac",
    "gini",
    "init_economy",
    "load_config_file",
    "match_labor",
    "resolve_config",
    "run",
    "scale",
    "step_month",
]
