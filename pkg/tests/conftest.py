from __future__ import annotations

import random

import pytest

from econlab.econ.entities import Bank, EconomyState, Firm, Government, Household


def make_household(
    id=0,
    skills=(0.9, 0.9),
    cash=1_000_00,
    deposits=0,
    preferences=(1.0,),
    propensity=0.8,
    **kw,
):
    return Household(
        id=id,
        skills=list(skills),
        cash=cash,
        deposits=deposits,
        employment=None,
        preferences=list(preferences),
        consumption_propensity=propensity,
        **kw,
    )


def make_firm(
    id=0,
    good_id=0,
    price=10_00,
    inventory=100,
    cash=50_000_00,
    productivity=10.0,
    requirements=(0.0, 0.0),
    wage_offer=1_000_00,
    **kw,
):
    return Firm(
        id=id,
        good_id=good_id,
        price=price,
        inventory=inventory,
        cash=cash,
        productivity=productivity,
        requirements=list(requirements),
        wage_offer=wage_offer,
        **kw,
    )


def make_state(households, firms, government=None, bank=None, seed=0):
    gov = government if government is not None else Government(
        income_tax_rate=0.0,
        transfer_per_household=0,
        innovation_support=False,
        subsidy_per_firm=0,
        productivity_growth_rate=0.0,
        balance=0,
    )
    bk = bank if bank is not None else Bank(
        monthly_deposit_rate=0.0,
        reserves=sum(h.deposits for h in households),
        deposit_ledger={h.id: h.deposits for h in households if h.deposits},
    )
    state = EconomyState(
        tick=0,
        households=households,
        firms=firms,
        government=gov,
        bank=bk,
        rng=random.Random(seed),
    )
    state.initial_total = state.total_money()
    return state


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    return str(d)
