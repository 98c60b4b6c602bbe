"""Monthly simulation loop.

Each tick runs a fixed phase order so income lands before consumption:
firm price/wage/posting updates, labor matching, production, wage payout,
government (tax, transfers, optional innovation subsidy), deposit interest,
product market, metrics. All money flows are integer cents; the loop checks
money conservation after every tick.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Optional

from ..behavior import DecisionContext, LogFn, RuleBasedAgents
from .config import ExperimentConfig, resolve_config
from .entities import EconomyState, JobPosting, MetricFrame, MoneyEvent
from .markets import clear_product_market, match_labor
from .metrics import compute_metrics
from .money import frac, scale
from .population import generate_world
from .registry import default_registry

OVERSTOCK_MONTHS = 3
# months of wage bill a firm keeps in reserve per posted slot; cash beyond
# that is treated as expansion capacity and turned into extra postings
EXPANSION_BUFFER_MONTHS = 4


@dataclass
class TickReport:
    tick: int
    events: list[MoneyEvent]
    metrics: MetricFrame

    def to_dict(self) -> dict[str, Any]:
        return {
            "tick": self.tick,
            "events": [e.to_dict() for e in self.events],
            "metrics": self.metrics.to_dict(),
        }


@dataclass
class SimulationResult:
    config: ExperimentConfig
    seed: int
    horizon: int
    frames: list[MetricFrame]
    final_state: EconomyState
    ledger: list[MoneyEvent]

    def metric_series(self) -> dict[str, list[float]]:
        series: dict[str, list[float]] = {}
        for name in (
            "total_consumption",
            "avg_income",
            "avg_wealth",
            "savings_rate",
            "gini_wealth",
            "unemployment_rate",
            "price_level",
        ):
            series[name] = [getattr(f, name) for f in self.frames]
        return series

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "horizon": self.horizon,
            "metrics": self.metric_series(),
            "ledger": [e.to_dict() for e in self.ledger],
            "final_state": self.final_state.to_dict(),
        }


def init_economy(config: ExperimentConfig | dict, seed: int) -> EconomyState:
    if not isinstance(config, ExperimentConfig):
        config = resolve_config(config, default_registry())
    rng = random.Random(seed)
    households, firms, government, bank = generate_world(config, rng)
    state = EconomyState(
        tick=0,
        households=households,
        firms=firms,
        government=government,
        bank=bank,
        rng=rng,
        ledger=[],
        initial_total=0,
    )
    state.initial_total = state.total_money()
    return state


def _household_ctx(hh, signals) -> DecisionContext:
    return DecisionContext(
        agent_kind="household",
        agent={
            "id": hh.id,
            "cash": hh.cash,
            "deposits": hh.deposits,
            "last_income": hh.last_income,
            "last_consumption": hh.last_consumption,
            "employed": hh.employment is not None,
        },
        signals=signals,
    )


def _firm_ctx(firm, signals) -> DecisionContext:
    return DecisionContext(
        agent_kind="firm",
        agent={
            "id": firm.id,
            "good_id": firm.good_id,
            "price": firm.price,
            "inventory": firm.inventory,
            "cash": firm.cash,
            "wage_offer": firm.wage_offer,
            "last_sales_units": firm.last_sales_units,
            "last_unfilled_slots": firm.last_unfilled_slots,
            "months_fully_staffed": firm.months_fully_staffed,
        },
        signals=signals,
    )


def step_month(
    state: EconomyState,
    agents=None,
    log: Optional[LogFn] = None,
) -> tuple[EconomyState, TickReport]:
    if agents is None:
        agents = RuleBasedAgents()
    events: list[MoneyEvent] = []
    pre = compute_metrics(state)
    signals = {
        "price_level": pre.price_level,
        "unemployment_rate": pre.unemployment_rate,
    }

    # phase 1: firms adjust price/wage and post jobs; households pick propensity
    postings: list[JobPosting] = []
    posted_slots: dict[int, int] = {}
    for firm in state.firms:
        sold_out = firm.inventory == 0 and firm.last_sales_units > 0
        overstocked = firm.inventory > OVERSTOCK_MONTHS * max(firm.last_sales_units, 1)
        if sold_out:
            firm.price = max(1, firm.price * 21 // 20)
        elif overstocked:
            firm.price = max(1, firm.price * 19 // 20)

        decision = agents.decide(_firm_ctx(firm, signals), log)
        firm.wage_offer = max(1, scale(firm.wage_offer, decision.wage_offer_multiplier))
        firm.price = max(1, scale(firm.price, decision.price_multiplier))

        if firm.last_sales_units > 0:
            desired = math.ceil(firm.last_sales_units / firm.productivity)
        else:
            desired = 1
        if sold_out:
            desired += 1
        elif overstocked:
            desired = max(desired - 1, 0)
        expansion = firm.cash // (EXPANSION_BUFFER_MONTHS * firm.wage_offer)
        slots = max(0, min(max(desired, expansion), firm.cash // firm.wage_offer))
        posted_slots[firm.id] = slots
        if slots > 0:
            postings.append(
                JobPosting(
                    firm_id=firm.id,
                    requirements=list(firm.requirements),
                    wage_offer=firm.wage_offer,
                    slots=slots,
                )
            )

    for hh in state.households:
        decision = agents.decide(_household_ctx(hh, signals), log)
        if decision.consumption_propensity is not None:
            hh.consumption_propensity = decision.consumption_propensity

    # phase 2: one-month contracts, rematched from scratch
    for hh in state.households:
        hh.employment = None
    for firm in state.firms:
        firm.employees = []
    firms_by_id = {f.id: f for f in state.firms}
    households_by_id = {h.id: h for h in state.households}
    matches = match_labor(state.households, postings, state.rng)
    filled: dict[int, int] = {}
    for hh_id, firm_id, wage in matches:
        households_by_id[hh_id].employment = (firm_id, wage)
        firms_by_id[firm_id].employees.append(hh_id)
        filled[firm_id] = filled.get(firm_id, 0) + 1
    for firm in state.firms:
        slots = posted_slots.get(firm.id, 0)
        got = filled.get(firm.id, 0)
        firm.last_unfilled_slots = slots - got
        if slots > 0:
            firm.months_fully_staffed = firm.months_fully_staffed + 1 if got == slots else 0

    # phase 3: production
    for firm in state.firms:
        firm.inventory += math.floor(firm.productivity * len(firm.employees))

    # phase 4: wages (gross; taxed in phase 5)
    wages_paid: dict[int, int] = {}
    for hh in state.households:
        hh.last_income = 0
    for firm in state.firms:
        for hh_id in sorted(firm.employees):
            wage = households_by_id[hh_id].employment[1]
            firm.cash -= wage
            households_by_id[hh_id].cash += wage
            wages_paid[hh_id] = wages_paid.get(hh_id, 0) + wage
            events.append(MoneyEvent("wage", f"firm:{firm.id}", f"household:{hh_id}", wage))

    # phase 5: government
    gov = state.government
    for hh in state.households:
        gross = wages_paid.get(hh.id, 0)
        if gross > 0:
            tax = frac(gross, gov.income_tax_rate)
            hh.cash -= tax
            gov.balance += tax
            hh.last_income += gross - tax
            if tax > 0:
                events.append(MoneyEvent("tax", f"household:{hh.id}", "government", tax))
    if gov.transfer_per_household > 0:
        for hh in state.households:
            hh.cash += gov.transfer_per_household
            gov.balance -= gov.transfer_per_household
            hh.last_income += gov.transfer_per_household
            events.append(
                MoneyEvent(
                    "transfer", "government", f"household:{hh.id}", gov.transfer_per_household
                )
            )
    if gov.innovation_support:
        for firm in state.firms:
            if gov.subsidy_per_firm > 0:
                firm.cash += gov.subsidy_per_firm
                gov.balance -= gov.subsidy_per_firm
                events.append(
                    MoneyEvent("subsidy", "government", f"firm:{firm.id}", gov.subsidy_per_firm)
                )
            firm.productivity *= 1.0 + gov.productivity_growth_rate

    # phase 6: deposit interest is minted, the only money creation
    bank = state.bank
    for hh in state.households:
        balance = bank.deposit_ledger.get(hh.id, 0)
        interest = frac(balance, bank.monthly_deposit_rate)
        if interest > 0:
            bank.deposit_ledger[hh.id] = balance + interest
            hh.deposits = balance + interest
            bank.reserves += interest
            bank.minted_interest_cumulative += interest
            hh.last_income += interest
            events.append(MoneyEvent("interest_mint", "bank", f"household:{hh.id}", interest))

    # phase 7: product market
    for firm in state.firms:
        firm.last_sales_units = 0
    events.extend(clear_product_market(state.households, state.firms))

    # phase 8: metrics
    state.tick += 1
    frame = compute_metrics(state)
    state.ledger.extend(events)
    if not state.conservation_holds():
        raise RuntimeError(f"money conservation violated at tick {state.tick}")
    return state, TickReport(tick=state.tick, events=events, metrics=frame)


def run(
    config: ExperimentConfig | dict,
    seed: int,
    horizon: int,
    agents=None,
    log: Optional[LogFn] = None,
) -> SimulationResult:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not isinstance(config, ExperimentConfig):
        config = resolve_config(config, default_registry())
    state = init_economy(config, seed)
    if agents is None:
        agents = RuleBasedAgents()
    frames: list[MetricFrame] = []
    for _ in range(horizon):
        _, report = step_month(state, agents, log)
        frames.append(report.metrics)
    return SimulationResult(
        config=config,
        seed=seed,
        horizon=horizon,
        frames=frames,
        final_state=state,
        ledger=state.ledger,
    )
