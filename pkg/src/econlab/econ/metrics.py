"""Aggregate observables computed at the end of each tick."""

from __future__ import annotations

from .entities import EconomyState, MetricFrame


def gini(values: list[float]) -> float:
    """Mean-absolute-difference Gini coefficient.

    Equivalent to sum(|xi - xj|) / (2 n^2 mean) but O(n log n) via the
    sorted-rank identity. All-zero input returns 0 by convention.
    """
    if not values:
        raise ValueError("gini requires a non-empty list")
    if any(v < 0 for v in values):
        raise ValueError("gini requires non-negative values")
    n = len(values)
    total = sum(values)
    if total == 0:
        return 0.0
    ordered = sorted(values)
    # sum over pairs of |xi - xj| == 2 * sum_i ((2i - n + 1) * x_(i))
    weighted = sum((2 * i - n + 1) * v for i, v in enumerate(ordered))
    return weighted / (n * total)


def compute_metrics(state: EconomyState) -> MetricFrame:
    hh = state.households
    n = len(hh)
    incomes = [h.last_income for h in hh]
    consumptions = [h.last_consumption for h in hh]
    wealths = [float(h.wealth) for h in hh]
    total_income = sum(incomes)
    total_consumption = sum(consumptions)

    savings_rate = (
        (total_income - total_consumption) / total_income if total_income > 0 else 0.0
    )
    unemployment = sum(1 for h in hh if h.employment is None) / n if n else 1.0

    firms = state.firms
    if not firms:
        price_level = 0.0
    else:
        stock = sum(f.inventory for f in firms)
        if stock > 0:
            price_level = sum(f.price * f.inventory for f in firms) / stock
        else:
            price_level = sum(f.price for f in firms) / len(firms)

    return MetricFrame(
        tick=state.tick,
        total_consumption=total_consumption,
        avg_income=total_income / n if n else 0.0,
        avg_wealth=sum(wealths) / n if n else 0.0,
        savings_rate=savings_rate,
        gini_wealth=gini(wealths) if wealths else 0.0,
        unemployment_rate=unemployment,
        price_level=price_level,
    )
