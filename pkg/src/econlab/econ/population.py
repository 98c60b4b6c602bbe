"""Seeded synthetic population generator.

Households get uniform skills, log-uniform cash and deposits, and preference
weights from normalized exponential draws. Firms get round-robin goods,
uniform prices, productivity, hiring requirements and wage offers. The draw
order is fixed so a (config, seed) pair always produces the same world.
"""

from __future__ import annotations

import math
import random

from .config import ExperimentConfig
from .entities import Bank, Firm, Government, Household

# a worker's monthly output (productivity x price) straddles the wage range,
# so firm viability depends on the draw and hiring stays price-sensitive
CASH_RANGE = (500_00, 5_000_00)
DEPOSIT_RANGE = (50_00, 3_000_00)
FIRM_CASH_RANGE = (3_000_00, 12_000_00)
PRICE_RANGE = (80_00, 120_00)
PRODUCTIVITY_RANGE = (8.0, 16.0)
WAGE_RANGE = (700_00, 1_100_00)
REQUIREMENT_MAX = 0.5
INITIAL_PROPENSITY = 0.8


def _log_uniform_cents(rng: random.Random, lo: int, hi: int) -> int:
    return int(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def generate_households(config: ExperimentConfig, rng: random.Random) -> list[Household]:
    households = []
    for hid in range(config.n_households):
        skills = [rng.random() for _ in range(config.skill_dims)]
        cash = _log_uniform_cents(rng, *CASH_RANGE)
        deposits = _log_uniform_cents(rng, *DEPOSIT_RANGE)
        weights = [rng.expovariate(1.0) for _ in range(config.n_goods)]
        total = sum(weights)
        preferences = [w / total for w in weights]
        # normalized floats can miss 1.0 by an ulp; pin the residual on the last weight
        preferences[-1] += 1.0 - sum(preferences)
        households.append(
            Household(
                id=hid,
                skills=skills,
                cash=cash,
                deposits=deposits,
                employment=None,
                preferences=preferences,
                consumption_propensity=INITIAL_PROPENSITY,
            )
        )
    return households


def generate_firms(config: ExperimentConfig, rng: random.Random) -> list[Firm]:
    firms = []
    for fid in range(config.n_firms):
        productivity = rng.uniform(*PRODUCTIVITY_RANGE)
        firms.append(
            Firm(
                id=fid,
                good_id=fid % config.n_goods,
                price=rng.randint(*PRICE_RANGE),
                # seed one worker-month of output as starting stock and as
                # phantom last-month sales so firms post slots from month 1
                inventory=2 * int(productivity),
                cash=_log_uniform_cents(rng, *FIRM_CASH_RANGE),
                productivity=productivity,
                requirements=[rng.uniform(0.0, REQUIREMENT_MAX) for _ in range(config.skill_dims)],
                wage_offer=rng.randint(*WAGE_RANGE),
                last_sales_units=int(productivity),
            )
        )
    return firms


def generate_world(
    config: ExperimentConfig, rng: random.Random
) -> tuple[list[Household], list[Firm], Government, Bank]:
    households = generate_households(config, rng)
    firms = generate_firms(config, rng)
    levers = config.levers
    government = Government(
        balance=0,
        income_tax_rate=levers["income_tax_rate"],
        transfer_per_household=levers["transfer_per_household"],
        innovation_support=levers["innovation_support"],
        subsidy_per_firm=levers["subsidy_per_firm"],
        productivity_growth_rate=levers["productivity_growth_rate"],
    )
    bank = Bank(
        reserves=sum(h.deposits for h in households),
        deposit_ledger={h.id: h.deposits for h in households},
        monthly_deposit_rate=levers["monthly_deposit_rate"],
    )
    return households, firms, government, bank
