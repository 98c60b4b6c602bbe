"""Per-agent decision providers.

Each tick the simulator asks a provider for a household's consumption
propensity or a firm's wage/price adjustment. Two providers ship here: a
deterministic rule of thumb, and an adapter that prompts an external
text-generation callable and parses its reply, falling back to the rule when
the reply is garbage or the call fails.
"""

from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

PROPENSITY_RANGE = (0.3, 0.95)
MULTIPLIER_RANGE = (0.5, 2.0)
BUFFER_MONTHS_CAP = 6.0
# deposits are expressed in months of a fixed reference wage, not the
# household's own income; tying the buffer to realized income would make
# spending propensity fall as income rises, coupling the two metrics
REFERENCE_MONTHLY_INCOME = 1_000_00
TIMEOUT_ENV = "ECON_PROVIDER_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 10_000

LogFn = Callable[[str, str, str], None]  # (level, category, message)


class DecisionParseError(ValueError):
    pass


@dataclass(frozen=True)
class DecisionContext:
    """Serializable snapshot handed to a provider. Carries no RNG state."""

    agent_kind: str  # "household" | "firm"
    agent: dict[str, Any]
    signals: dict[str, float]

    def __post_init__(self):
        if self.agent_kind not in ("household", "firm"):
            raise ValueError(f"unknown agent kind {self.agent_kind!r}")


@dataclass(frozen=True)
class Decision:
    consumption_propensity: Optional[float] = None
    wage_offer_multiplier: float = 1.0
    price_multiplier: float = 1.0


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def clamp_decision(decision: Decision, log: Optional[LogFn] = None) -> Decision:
    """Force every field into its sanctioned range, warning on each clip."""

    def clip(name, value, lo, hi):
        if value is None:
            return None
        clipped = _clamp(value, lo, hi)
        if clipped != value and log is not None:
            log("warn", "behavior", f"clamped {name} from {value} to {clipped}")
        return clipped

    return Decision(
        consumption_propensity=clip(
            "consumption_propensity", decision.consumption_propensity, *PROPENSITY_RANGE
        ),
        wage_offer_multiplier=clip(
            "wage_offer_multiplier", decision.wage_offer_multiplier, *MULTIPLIER_RANGE
        ),
        price_multiplier=clip("price_multiplier", decision.price_multiplier, *MULTIPLIER_RANGE),
    )


def decide_rule_based(ctx: DecisionContext) -> Decision:
    """Deterministic stand-in for reasoning agents.

    Households spend less the more months of income they hold in deposits.
    Firms nudge the wage up 2% after a month with unfilled slots and down 2%
    after three fully staffed months.
    """
    if ctx.agent_kind == "household":
        deposits = ctx.agent.get("deposits", 0)
        buffer_months = min(deposits / REFERENCE_MONTHLY_INCOME, BUFFER_MONTHS_CAP)
        propensity = _clamp(0.95 - 0.05 * buffer_months, *PROPENSITY_RANGE)
        return Decision(consumption_propensity=propensity)
    if ctx.agent.get("last_unfilled_slots", 0) > 0:
        wage_mult = 1.02
    elif ctx.agent.get("months_fully_staffed", 0) >= 3:
        wage_mult = 0.98
    else:
        wage_mult = 1.0
    return Decision(wage_offer_multiplier=wage_mult, price_multiplier=1.0)


def parse_decision(text: str, agent_kind: str) -> Decision:
    """Parse `KEY=float` lines; later lines override earlier ones.

    Households must supply PROPENSITY; firms must supply WAGE_MULT or
    PRICE_MULT. Anything else raises DecisionParseError.
    """
    found: dict[str, float] = {}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in ("PROPENSITY", "WAGE_MULT", "PRICE_MULT"):
            continue
        try:
            parsed = float(value.strip())
        except ValueError:
            continue
        if not math.isfinite(parsed):
            continue
        found[key] = parsed

    if agent_kind == "household":
        if "PROPENSITY" not in found:
            raise DecisionParseError("no PROPENSITY=<float> line in reply")
        return Decision(consumption_propensity=found["PROPENSITY"])
    if "WAGE_MULT" not in found and "PRICE_MULT" not in found:
        raise DecisionParseError("no WAGE_MULT or PRICE_MULT line in reply")
    return Decision(
        wage_offer_multiplier=found.get("WAGE_MULT", 1.0),
        price_multiplier=found.get("PRICE_MULT", 1.0),
    )


def default_template(ctx: DecisionContext) -> str:
    if ctx.agent_kind == "household":
        return (
            "You manage a household budget. Monthly income {income} cents, deposits "
            "{deposits} cents, economy-wide unemployment {unemployment:.2f}, price level "
            "{price:.0f}. Reply with one line: PROPENSITY=<fraction of cash to spend>."
        ).format(
            income=ctx.agent.get("last_income", 0),
            deposits=ctx.agent.get("deposits", 0),
            unemployment=ctx.signals.get("unemployment_rate", 0.0),
            price=ctx.signals.get("price_level", 0.0),
        )
    return (
        "You run a firm. Last month you sold {sales} units, had {unfilled} unfilled "
        "job slots, and the price level is {price:.0f}. Reply with lines "
        "WAGE_MULT=<x> and/or PRICE_MULT=<x>."
    ).format(
        sales=ctx.agent.get("last_sales_units", 0),
        unfilled=ctx.agent.get("last_unfilled_slots", 0),
        price=ctx.signals.get("price_level", 0.0),
    )


def _provider_timeout_s() -> float:
    raw = os.environ.get(TIMEOUT_ENV, "")
    try:
        ms = int(raw)
    except ValueError:
        ms = DEFAULT_TIMEOUT_MS
    if ms <= 0:
        ms = DEFAULT_TIMEOUT_MS
    return ms / 1000.0


_timeout_pool = ThreadPoolExecutor(max_workers=8, thread_name_prefix="provider-call")


def call_with_timeout(provider: Callable[[str], str], prompt: str) -> str:
    """Invoke a provider with the ECON_PROVIDER_TIMEOUT_MS deadline applied."""
    future = _timeout_pool.submit(provider, prompt)
    return future.result(timeout=_provider_timeout_s())


def decide_via_provider(
    ctx: DecisionContext,
    provider: Callable[[str], str],
    template: Callable[[DecisionContext], str] = default_template,
    log: Optional[LogFn] = None,
) -> Decision:
    """Ask an external provider; fall back to the rule on any failure.

    A hung provider is cut off after ECON_PROVIDER_TIMEOUT_MS milliseconds.
    Failures never abort the run; they are logged and the rule-based decision
    is used so the seeded trajectory stays comparable.
    """
    prompt = template(ctx)
    try:
        reply = call_with_timeout(provider, prompt)
    except FutureTimeout:
        if log is not None:
            log("warn", "behavior", "provider timed out; using rule-based fallback")
        return decide_rule_based(ctx)
    except Exception as exc:
        if log is not None:
            log("warn", "behavior", f"provider transport failure ({exc}); using rule-based fallback")
        return decide_rule_based(ctx)
    try:
        decision = parse_decision(reply, ctx.agent_kind)
    except DecisionParseError as exc:
        if log is not None:
            log("warn", "behavior", f"unparseable provider reply ({exc}); using rule-based fallback")
        return decide_rule_based(ctx)
    return clamp_decision(decision, log)


class ScriptedProvider:
    """Replays canned replies, one per line of a UTF-8 text file (or list).

    Thread-safe; replies are consumed in order and the script must not run
    dry mid-run.
    """

    def __init__(self, replies: list[str]):
        self._replies = list(replies)
        self._pos = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "ScriptedProvider":
        # literal \n in a line stands for a newline inside one reply
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n").replace("\\n", "\n") for line in fh])

    def __call__(self, prompt: str) -> str:
        with self._lock:
            if self._pos >= len(self._replies):
                raise RuntimeError("scripted provider ran out of replies")
            reply = self._replies[self._pos]
            self._pos += 1
        return reply


@dataclass
class RuleBasedAgents:
    """Engine-facing bundle: every decision comes from decide_rule_based."""

    def decide(self, ctx: DecisionContext, log: Optional[LogFn] = None) -> Decision:
        return decide_rule_based(ctx)


@dataclass
class ProviderAgents:
    """Engine-facing bundle that routes every decision through a provider."""

    provider: Callable[[str], str]
    template: Callable[[DecisionContext], str] = default_template
    fallbacks: int = field(default=0)

    def decide(self, ctx: DecisionContext, log: Optional[LogFn] = None) -> Decision:
        def counting_log(level, category, message):
            if "fallback" in message:
                self.fallbacks += 1
            if log is not None:
                log(level, category, message)

        return decide_via_provider(ctx, self.provider, self.template, counting_log)
