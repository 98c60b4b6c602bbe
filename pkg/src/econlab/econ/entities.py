"""Domain entities of the closed-loop economy.

Four entity types (households, firms, government, bank) plus the world state
that ties them together. Everything here is plain serializable data; the
monthly dynamics live in engine.py and markets.py.

Money fields are integer cents throughout (see money.py).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Optional

EVENT_KINDS = ("wage", "purchase", "tax", "transfer", "subsidy", "interest_mint")


@dataclass
class Household:
    id: int
    skills: list[float]
    cash: int
    deposits: int
    employment: Optional[tuple[int, int]]  # (firm_id, wage per month)
    preferences: list[float]  # weight per good id, sums to 1
    consumption_propensity: float
    last_income: int = 0
    last_consumption: int = 0

    def __post_init__(self) -> None:
        if self.cash < 0 or self.deposits < 0:
            raise ValueError(f"household {self.id}: negative cash or deposits")
        if self.preferences and abs(sum(self.preferences) - 1.0) > 1e-9:
            raise ValueError(f"household {self.id}: preference weights must sum to 1")
        if not 0.0 <= self.consumption_propensity <= 1.0:
            raise ValueError(f"household {self.id}: consumption_propensity out of [0,1]")

    @property
    def wealth(self) -> int:
        return self.cash + self.deposits

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "skills": self.skills,
            "cash": self.cash,
            "deposits": self.deposits,
            "employment": list(self.employment) if self.employment else None,
            "preferences": self.preferences,
            "consumption_propensity": self.consumption_propensity,
            "last_income": self.last_income,
            "last_consumption": self.last_consumption,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Household":
        emp = d.get("employment")
        return cls(
            id=d["id"],
            skills=list(d["skills"]),
            cash=d["cash"],
            deposits=d["deposits"],
            employment=(emp[0], emp[1]) if emp else None,
            preferences=list(d["preferences"]),
            consumption_propensity=d["consumption_propensity"],
            last_income=d.get("last_income", 0),
            last_consumption=d.get("last_consumption", 0),
        )


@dataclass
class JobPosting:
    firm_id: int
    requirements: list[float]  # minimum skill per dimension, each in [0,1]
    wage_offer: int
    slots: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "firm_id": self.firm_id,
            "requirements": self.requirements,
            "wage_offer": self.wage_offer,
            "slots": self.slots,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "JobPosting":
        return cls(d["firm_id"], list(d["requirements"]), d["wage_offer"], d["slots"])


@dataclass
class Firm:
    id: int
    good_id: int
    price: int  # cents per unit
    inventory: int  # whole units
    cash: int
    productivity: float  # units per worker per month
    requirements: list[float]
    wage_offer: int
    postings: list[JobPosting] = field(default_factory=list)
    employees: list[int] = field(default_factory=list)  # household ids under contract this month
    last_sales_units: int = 0
    last_unfilled_slots: int = 0
    months_fully_staffed: int = 0

    def __post_init__(self) -> None:
        if self.price <= 0:
            raise ValueError(f"firm {self.id}: price must be positive")
        if self.inventory < 0:
            raise ValueError(f"firm {self.id}: negative inventory")
        if self.productivity <= 0:
            raise ValueError(f"firm {self.id}: productivity must be positive")
        if self.cash < 0:
            raise ValueError(f"firm {self.id}: negative cash")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "good_id": self.good_id,
            "price": self.price,
            "inventory": self.inventory,
            "cash": self.cash,
            "productivity": self.productivity,
            "requirements": self.requirements,
            "wage_offer": self.wage_offer,
            "postings": [p.to_dict() for p in self.postings],
            "employees": list(self.employees),
            "last_sales_units": self.last_sales_units,
            "last_unfilled_slots": self.last_unfilled_slots,
            "months_fully_staffed": self.months_fully_staffed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Firm":
        return cls(
            id=d["id"],
            good_id=d["good_id"],
            price=d["price"],
            inventory=d["inventory"],
            cash=d["cash"],
            productivity=d["productivity"],
            requirements=list(d["requirements"]),
            wage_offer=d["wage_offer"],
            postings=[JobPosting.from_dict(p) for p in d.get("postings", [])],
            employees=list(d.get("employees", [])),
            last_sales_units=d.get("last_sales_units", 0),
            last_unfilled_slots=d.get("last_unfilled_slots", 0),
            months_fully_staffed=d.get("months_fully_staffed", 0),
        )


@dataclass
class Government:
    balance: int  # may go negative (deficit)
    income_tax_rate: float
    transfer_per_household: int
    innovation_support: bool
    subsidy_per_firm: int
    productivity_growth_rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.income_tax_rate < 1.0:
            raise ValueError("income_tax_rate out of [0,1)")
        if self.subsidy_per_firm < 0:
            raise ValueError("subsidy_per_firm must be >= 0")
        if self.productivity_growth_rate < 0:
            raise ValueError("productivity_growth_rate must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "balance": self.balance,
            "income_tax_rate": self.income_tax_rate,
            "transfer_per_household": self.transfer_per_household,
            "innovation_support": self.innovation_support,
            "subsidy_per_firm": self.subsidy_per_firm,
            "productivity_growth_rate": self.productivity_growth_rate,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Government":
        return cls(**d)


@dataclass
class Bank:
    reserves: int
    deposit_ledger: dict[int, int]  # household id -> deposits
    monthly_deposit_rate: float
    minted_interest_cumulative: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "reserves": self.reserves,
            # JSON object keys are strings; keep them sorted by numeric id
            "deposit_ledger": {str(k): v for k, v in sorted(self.deposit_ledger.items())},
            "monthly_deposit_rate": self.monthly_deposit_rate,
            "minted_interest_cumulative": self.minted_interest_cumulative,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Bank":
        return cls(
            reserves=d["reserves"],
            deposit_ledger={int(k): v for k, v in d["deposit_ledger"].items()},
            monthly_deposit_rate=d["monthly_deposit_rate"],
            minted_interest_cumulative=d.get("minted_interest_cumulative", 0),
        )


@dataclass
class MoneyEvent:
    kind: str
    src: str
    dst: str
    amount: int

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.amount < 0:
            raise ValueError("event amount must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "from": self.src, "to": self.dst, "amount": self.amount}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MoneyEvent":
        return cls(kind=d["kind"], src=d["from"], dst=d["to"], amount=d["amount"])


@dataclass
class MetricFrame:
    tick: int
    total_consumption: int  # cents spent on goods this month
    avg_income: float  # mean per-household net income this month, cents
    avg_wealth: float  # mean cash + deposits, cents
    savings_rate: float
    gini_wealth: float
    unemployment_rate: float
    price_level: float  # inventory-weighted mean price, cents

    def to_dict(self) -> dict[str, Any]:
        return {
            "tick": self.tick,
            "total_consumption": self.total_consumption,
            "avg_income": self.avg_income,
            "avg_wealth": self.avg_wealth,
            "savings_rate": self.savings_rate,
            "gini_wealth": self.gini_wealth,
            "unemployment_rate": self.unemployment_rate,
            "price_level": self.price_level,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricFrame":
        return cls(**d)


@dataclass
class EconomyState:
    tick: int
    households: list[Household]
    firms: list[Firm]
    government: Government
    bank: Bank
    rng: random.Random
    ledger: list[MoneyEvent] = field(default_factory=list)
    initial_total: int = 0

    def total_money(self) -> int:
        """Sum of all cash-like balances. Household deposits are held inside
        bank reserves, so they are not double-counted here."""
        return (
            sum(h.cash for h in self.households)
            + sum(f.cash for f in self.firms)
            + self.government.balance
            + self.bank.reserves
        )

    def conservation_holds(self) -> bool:
        return self.total_money() == self.initial_total + self.bank.minted_interest_cumulative

    def to_dict(self) -> dict[str, Any]:
        return {
            "tick": self.tick,
            "households": [h.to_dict() for h in self.households],
            "firms": [f.to_dict() for f in self.firms],
            "government": self.government.to_dict(),
            "bank": self.bank.to_dict(),
            "rng_state": _rng_state_to_jsonable(self.rng.getstate()),
            "ledger": [e.to_dict() for e in self.ledger],
            "initial_total": self.initial_total,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EconomyState":
        rng = random.Random()
        rng.setstate(_rng_state_from_jsonable(d["rng_state"]))
        return cls(
            tick=d["tick"],
            households=[Household.from_dict(h) for h in d["households"]],
            firms=[Firm.from_dict(f) for f in d["firms"]],
            government=Government.from_dict(d["government"]),
            bank=Bank.from_dict(d["bank"]),
            rng=rng,
            ledger=[MoneyEvent.from_dict(e) for e in d.get("ledger", [])],
            initial_total=d.get("initial_total", 0),
        )


def _rng_state_to_jsonable(state: tuple) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_jsonable(data: list) -> tuple:
    version, internal, gauss = data
    return (version, tuple(internal), gauss)
