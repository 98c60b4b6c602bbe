"""Labor and product market clearing.

Both markets resolve deterministically: ties are broken by explicit sort keys,
never by iteration order of a dict or set.
"""

from __future__ import annotations

import random

from .entities import Firm, Household, JobPosting, MoneyEvent
from .money import frac

Match = tuple[int, int, int]  # household id, firm id, wage in cents


def match_labor(
    households: list[Household],
    postings: list[JobPosting],
    rng: random.Random,
) -> list[Match]:
    """Assign unemployed households to posted slots.

    Postings are served in wage-descending order (firm id ascending on ties);
    within a posting, eligible candidates are taken in household-id order.
    A household fills at most one slot, and only if every skill dimension
    meets the posting's requirement. `rng` is part of the signature for
    providers that want stochastic matching; the default rule draws nothing.
    """
    matches: list[Match] = []
    taken: set[int] = set()
    ordered = sorted(postings, key=lambda p: (-p.wage_offer, p.firm_id))
    for posting in ordered:
        filled = 0
        for hh in households:
            if filled >= posting.slots:
                break
            if hh.id in taken or hh.employment is not None:
                continue
            if all(s >= r for s, r in zip(hh.skills, posting.requirements)):
                matches.append((hh.id, posting.firm_id, posting.wage_offer))
                taken.add(hh.id)
                filled += 1
    return matches


def clear_product_market(
    households: list[Household],
    firms: list[Firm],
) -> list[MoneyEvent]:
    """Let each household spend its consumption budget across goods.

    Budget = propensity x cash, split over goods by preference weight.
    Within a good, cheaper sellers trade first (firm id breaks ties).
    Mutates household cash / last_consumption and firm cash / inventory /
    last_sales_units in place; returns the purchase events.
    """
    events: list[MoneyEvent] = []
    sellers_by_good: dict[int, list[Firm]] = {}
    for firm in firms:
        sellers_by_good.setdefault(firm.good_id, []).append(firm)
    for good in sellers_by_good:
        sellers_by_good[good].sort(key=lambda f: (f.price, f.id))

    for hh in sorted(households, key=lambda h: h.id):
        budget = frac(hh.cash, hh.consumption_propensity)
        remaining = budget
        spent = 0
        for good, weight in enumerate(hh.preferences):
            # per-good shares are rounded independently, so cap by the
            # remaining budget to keep the cash floor at zero
            alloc = min(frac(budget, weight), remaining)
            for firm in sellers_by_good.get(good, ()):
                if alloc < firm.price or firm.inventory <= 0:
                    continue
                qty = min(alloc // firm.price, firm.inventory)
                cost = qty * firm.price
                firm.inventory -= qty
                firm.cash += cost
                firm.last_sales_units += qty
                alloc -= cost
                remaining -= cost
                spent += cost
                events.append(MoneyEvent("purchase", f"household:{hh.id}", f"firm:{firm.id}", cost))
        hh.cash -= spent
        hh.last_consumption = spent
    return events
