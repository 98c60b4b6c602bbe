"""Experiment configuration: parsing, validation and the canonical form.

A configuration is the full set of lever values plus population sizes. Its
canonical serialization (sorted keys, compact separators, normalized value
types) is what gets hashed into a version id by the toolbox.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .registry import ParameterRegistry, default_registry

POPULATION_FIELDS = ("n_households", "n_firms", "n_goods", "skill_dims")
POPULATION_DEFAULTS = {"n_households": 20, "n_firms": 5, "n_goods": 3, "skill_dims": 2}

_TOP_LEVEL_KEYS = {"levers", *POPULATION_FIELDS}
_FILE_ONLY_KEYS = {"horizon", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    levers: dict[str, Any]
    n_households: int
    n_firms: int
    n_goods: int
    skill_dims: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "levers": dict(sorted(self.levers.items())),
            "n_households": self.n_households,
            "n_firms": self.n_firms,
            "n_goods": self.n_goods,
            "skill_dims": self.skill_dims,
        }


def resolve_config(
    raw: dict[str, Any], registry: Optional[ParameterRegistry] = None
) -> ExperimentConfig:
    """Validate a raw config dict against the registry and fill defaults.

    Unknown top-level keys and unknown lever names are rejected; lever values
    are range-checked and type-normalized.
    """
    registry = registry or default_registry()
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    raw_levers = raw.get("levers", {})
    if not isinstance(raw_levers, dict):
        raise ConfigError("'levers' must be an object")
    levers = registry.normalize_levers(raw_levers)

    sizes = {}
    for name in POPULATION_FIELDS:
        value = raw.get(name, POPULATION_DEFAULTS[name])
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        if value < 1:
            raise ConfigError(f"{name} must be ≥ 1")
        sizes[name] = value

    return ExperimentConfig(levers=levers, **sizes)


def load_config_file(
    path: str | Path, registry: Optional[ParameterRegistry] = None
) -> tuple[ExperimentConfig, Optional[int], Optional[int]]:
    """Load a config file; returns (config, horizon, seed).

    horizon and seed are optional run parameters allowed in files for CLI
    convenience; they are not part of the hashed configuration.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    horizon = raw.pop("horizon", None)
    seed = raw.pop("seed", None)
    if horizon is not None and (isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1):
        raise ConfigError("horizon must be an integer ≥ 1")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("seed must be an integer")
    return resolve_config(raw, registry), horizon, seed
