from __future__ import annotations

import json

import pytest

from econlab.econ.config import (
    POPULATION_DEFAULTS,
    ConfigError,
    load_config_file,
    resolve_config,
)
from econlab.econ.registry import (
    LeverRangeError,
    LeverSpec,
    ParameterRegistry,
    UnknownLeverError,
    default_registry,
)


@pytest.fixture
def registry():
    return default_registry()


def test_default_registry_has_six_levers_and_seven_metrics(registry):
    assert len(registry.levers) == 6
    assert len(registry.metrics) == 7
    assert "income_tax_rate" in registry.levers
    assert "innovation_support" in registry.levers
    assert "total_consumption" in registry.metrics


def test_defaults_lie_within_ranges(registry):
    for name, spec in registry.levers.items():
        if spec.range is not None:
            lo, hi = spec.range
            assert lo <= spec.default <= hi, name


def test_normalize_accepts_in_range_fraction(registry):
    assert registry.levers["income_tax_rate"].normalize(0.2) == 0.2


def test_normalize_rejects_out_of_range_value_naming_lever(registry):
    with pytest.raises(LeverRangeError) as excinfo:
        registry.levers["income_tax_rate"].normalize(1.5)
    assert "income_tax_rate" in str(excinfo.value)
    assert excinfo.value.lever == "income_tax_rate"


def test_normalize_boolean_rejects_integers(registry):
    with pytest.raises(LeverRangeError):
        registry.levers["innovation_support"].normalize(1)


def test_normalize_money_rejects_floats(registry):
    with pytest.raises(LeverRangeError):
        registry.levers["transfer_per_household"].normalize(200.5)


def test_normalize_levers_rejects_unknown_name(registry):
    with pytest.raises(UnknownLeverError) as excinfo:
        registry.normalize_levers({"carbon_tax": 0.1})
    assert "carbon_tax" in str(excinfo.value)


def test_duplicate_lever_names_rejected():
    spec = LeverSpec("x", "fraction", (0.0, 1.0), 0.5, "")
    with pytest.raises(ValueError, match="duplicate"):
        ParameterRegistry([spec, spec], metrics={})


def test_default_outside_range_rejected():
    spec = LeverSpec("x", "fraction", (0.0, 1.0), 2.0, "")
    with pytest.raises(ValueError, match="default"):
        ParameterRegistry([spec], metrics={})


def test_registry_to_dict_is_json_ready(registry):
    payload = json.loads(json.dumps(registry.to_dict()))
    assert set(payload) == {"levers", "metrics"}
    assert len(payload["levers"]) == 6


# -- config resolution -------------------------------------------------------


def test_resolve_config_fills_defaults(registry):
    cfg = resolve_config({}, registry)
    assert cfg.n_households == POPULATION_DEFAULTS["n_households"]
    assert cfg.levers == registry.defaults()


def test_resolve_config_rejects_unknown_top_level_key():
    with pytest.raises(ConfigError, match="unknown config keys"):
        resolve_config({"n_banks": 2})


def test_resolve_config_rejects_zero_households():
    with pytest.raises(ConfigError, match="n_households must be ≥ 1"):
        resolve_config({"n_households": 0})


def test_resolve_config_rejects_bool_population_size():
    with pytest.raises(ConfigError, match="n_firms"):
        resolve_config({"n_firms": True})


def test_resolve_config_normalizes_lever_values():
    cfg = resolve_config({"levers": {"income_tax_rate": 0.3}})
    assert cfg.levers["income_tax_rate"] == 0.3


def test_resolve_config_propagates_range_error():
    with pytest.raises(LeverRangeError, match="income_tax_rate"):
        resolve_config({"levers": {"income_tax_rate": 2.0}})


def test_to_dict_sorts_lever_keys():
    cfg = resolve_config({"levers": {"transfer_per_household": 100_00, "income_tax_rate": 0.1}})
    keys = list(cfg.to_dict()["levers"])
    assert keys == sorted(keys)


def test_config_file_splits_run_parameters(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps({"levers": {"income_tax_rate": 0.1}, "n_households": 4, "horizon": 6, "seed": 9})
    )
    cfg, horizon, seed = load_config_file(path)
    assert cfg.n_households == 4
    assert horizon == 6
    assert seed == 9
    assert "horizon" not in cfg.to_dict()


def test_config_file_rejects_bad_horizon(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"horizon": 0}))
    with pytest.raises(ConfigError, match="horizon"):
        load_config_file(path)
