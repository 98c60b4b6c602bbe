"""Catalogue of policy levers and observable metrics.

The registry is the capability boundary of the simulator: a hypothesis or an
experiment configuration may only reference levers and metrics listed here,
and every lever value must fall inside its declared range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


class UnknownLeverError(KeyError):
    def __init__(self, name: str):
        self.lever = name
        super().__init__(f"unknown lever {name!r}")

    def __str__(self) -> str:  # KeyError quotes its arg; keep the message plain
        return f"unknown lever {self.lever!r}"


class LeverRangeError(ValueError):
    def __init__(self, name: str, value: Any, lo: Any, hi: Any):
        self.lever = name
        self.range = (lo, hi)
        super().__init__(f"lever {name!r}: value {value!r} outside range [{lo}, {hi}]")


@dataclass(frozen=True)
class LeverSpec:
    name: str
    kind: str  # boolean | fraction | money | count
    range: tuple[Any, Any] | None  # inclusive bounds; None for boolean
    default: Any
    description: str

    def normalize(self, value: Any) -> Any:
        """Coerce a raw (JSON-borne) value to the lever's canonical type and
        check its range. Raises LeverRangeError on violation."""
        if self.kind == "boolean":
            if not isinstance(value, bool):
                raise LeverRangeError(self.name, value, False, True)
            return value
        if self.kind == "fraction":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise LeverRangeError(self.name, value, *self.range)
            value = float(value)
        elif self.kind in ("money", "count"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise LeverRangeError(self.name, value, *self.range)
        else:
            raise ValueError(f"bad lever kind {self.kind!r}")
        lo, hi = self.range
        if not lo <= value <= hi:
            raise LeverRangeError(self.name, value, lo, hi)
        return value

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "range": list(self.range) if self.range is not None else None,
            "default": self.default,
            "description": self.description,
        }


class ParameterRegistry:
    """Named levers with ranges/defaults plus the observable metric catalogue."""

    def __init__(self, levers: list[LeverSpec], metrics: dict[str, str]):
        self.levers: dict[str, LeverSpec] = {}
        for spec in levers:
            if spec.name in self.levers:
                raise ValueError(f"duplicate lever {spec.name!r}")
            if spec.range is not None:
                lo, hi = spec.range
                if not lo <= spec.default <= hi:
                    raise ValueError(f"lever {spec.name!r}: default outside range")
            self.levers[spec.name] = spec
        self.metrics = dict(metrics)

    def has_lever(self, name: str) -> bool:
        return name in self.levers

    def has_metric(self, name: str) -> bool:
        return name in self.metrics

    def defaults(self) -> dict[str, Any]:
        return {name: spec.default for name, spec in self.levers.items()}

    def normalize_levers(self, values: dict[str, Any]) -> dict[str, Any]:
        """Fill defaults, validate provided values, reject unknown names."""
        out = self.defaults()
        for name, value in values.items():
            if name not in self.levers:
                raise UnknownLeverError(name)
            out[name] = self.levers[name].normalize(value)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "levers": {name: spec.to_dict() for name, spec in sorted(self.levers.items())},
            "metrics": dict(sorted(self.metrics.items())),
        }


METRIC_DESCRIPTIONS = {
    "total_consumption": "Money spent by households on goods during the month (cents).",
    "avg_income": "Mean per-household net income for the month: wages after tax, transfers and deposit interest (cents).",
    "avg_wealth": "Mean household cash plus deposits at month end (cents).",
    "savings_rate": "(total income - total consumption) / total income for the month; 0 when income is 0.",
    "gini_wealth": "Gini coefficient of household wealth (cash plus deposits).",
    "unemployment_rate": "Fraction of households without a job this month.",
    "price_level": "Inventory-weighted mean goods price at month end (cents).",
}


def default_registry() -> ParameterRegistry:
    return ParameterRegistry(
        levers=[
            LeverSpec(
                "income_tax_rate",
                "fraction",
                (0.0, 0.9),
                0.15,
                "Flat tax rate applied to monthly wage income.",
            ),
            LeverSpec(
                "transfer_per_household",
                "money",
                (0, 500_000),
                200_00,
                "Unconditional monthly transfer paid to every household (cents).",
            ),
            LeverSpec(
                "innovation_support",
                "boolean",
                None,
                False,
                "When on, the government pays each firm a monthly subsidy and firm "
                "productivity compounds at productivity_growth_rate.",
            ),
            LeverSpec(
                "subsidy_per_firm",
                "money",
                (0, 1_000_000),
                500_00,
                "Monthly subsidy paid to each firm while innovation_support is on (cents).",
            ),
            LeverSpec(
                "productivity_growth_rate",
                "fraction",
                (0.0, 0.05),
                0.01,
                "Monthly multiplicative productivity growth while innovation_support is on.",
            ),
            LeverSpec(
                "monthly_deposit_rate",
                "fraction",
                (0.0, 0.02),
                0.0025,
                "Monthly interest rate minted onto household bank deposits.",
            ),
        ],
        metrics=METRIC_DESCRIPTIONS,
    )
