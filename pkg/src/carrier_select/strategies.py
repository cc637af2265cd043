"""Decision callbacks: the built-in selection rules, the optimal oracle and the runner.

A strategy is ``fn(scan, ctx) -> target | None | Decision``. It sees only the
guard-filtered scan plus whatever the context exposes (profiles, predictor,
billing plans); returning None or the current network means stay.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping

from .model import RAT, BillingPlan, Metric, Scenario, ScanResult
from .predictor import CarrierPredictor
from .profiles import ProfileStore

log = logging.getLogger(__name__)

RADIO_ONLY_4G_FLOOR = -120.0
MIN_LATENCY_RSS_FLOOR = -100.0
# higher rank = better service
TRAFFIC_CLASS_RANK = {"Conversational": 3, "Streaming": 2, "Interactive": 1, "Background": 0}


class Action(str, Enum):
    STAY = "STAY"
    SWITCH = "SWITCH"


@dataclass(frozen=True)
class Decision:
    action: Action
    target: str | None = None
    reason: str = ""
    decided_on_partial: bool = False

    def __post_init__(self):
        if (self.action is Action.SWITCH) != (self.target is not None):
            raise ValueError("SWITCH needs a target; STAY must not carry one")


class MissingPlanError(KeyError):
    pass


@dataclass
class StrategyContext:
    scenario: Scenario
    metric: Metric = Metric.LATENCY
    profiles: ProfileStore = field(default_factory=ProfileStore)
    predictor: CarrierPredictor | None = None
    billing: Mapping[str, BillingPlan] = field(default_factory=dict)
    current: str | None = None
    time: float = 0.0
    errors: list[tuple[float, str]] = field(default_factory=list)


Strategy = Callable[[ScanResult, StrategyContext], Any]


def _candidates(scan: ScanResult) -> list[tuple[str, float, Any]]:
    """(network_id, rss, NetworkScan) for every network with an available cell."""
    return [(n.network_id, n.rss, n) for n in scan.networks if n.rss is not None]


# --------------------------------------------------------------------------
# selection rules


def strategy_radio_only(scan: ScanResult, floor_4g: float = RADIO_ONLY_4G_FLOOR) -> str | None:
    """Strongest 4G above the floor if any; else the strongest 3G.

    If nothing 3G is available either, the strongest network of any kind.
    """
    cands = _candidates(scan)
    strong_4g = [c for c in cands if c[2].rat is RAT.RAT_4G and c[1] > floor_4g]
    pool = strong_4g or [c for c in cands if c[2].rat is RAT.RAT_3G] or cands
    if not pool:
        return None
    return min(pool, key=lambda c: (-c[1], c[0]))[0]


def qos_rank_key(profiles: ProfileStore, network: str) -> tuple:
    prof = profiles.profile(network)
    if "traffic_class" not in prof:
        return (1, 0, 0, 0.0, network)  # missing profile sorts last
    return (
        0,
        -TRAFFIC_CLASS_RANK.get(prof["traffic_class"], -1),
        prof.get("delay_class", 99),
        -float(prof.get("max_dl_rate", 0.0)),
        network,
    )


def strategy_profile_only(scan: ScanResult, profiles: ProfileStore) -> str | None:
    """Highest QoS: traffic class, then lower delay class, then higher max DL rate."""
    cands = _candidates(scan)
    if not cands:
        return None
    return min(cands, key=lambda c: qos_rank_key(profiles, c[0]))[0]


def strategy_min_billing(scan: ScanResult, plans: Mapping[str, BillingPlan]) -> str | None:
    """Cheapest per-unit price at current usage; plans are keyed by carrier (plmn)."""
    cands = _candidates(scan)
    priced = [(plans[c[2].plmn].unit_price(), c[0]) for c in cands if c[2].plmn in plans]
    if cands and not priced:
        raise MissingPlanError("MISSING_PLAN: " + ", ".join(sorted({c[2].plmn for c in cands})))
    return min(priced)[1] if priced else None


def strategy_min_latency(scan: ScanResult, predictor: CarrierPredictor | None,
                         floor: float = MIN_LATENCY_RSS_FLOOR) -> str | None:
    """Lowest predicted latency among networks whose RSS clears the floor."""
    if predictor is None or not predictor.ready:
        return None
    best = None
    for nid, rss, ns in _candidates(scan):
        if not rss > floor:
            continue
        key = (predictor.predict(nid, rss, ns.best_entry().cell_id), nid)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def strategy_tree(scan: ScanResult, predictor: CarrierPredictor | None) -> str | None:
    """Best predicted value of the predictor's metric over all available networks."""
    if predictor is None or not predictor.ready:
        return None
    sign = -1.0 if predictor.metric.higher_is_better else 1.0
    best = None
    for nid, rss, ns in _candidates(scan):
        key = (sign * predictor.predict(nid, rss, ns.best_entry().cell_id), nid)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def oracle_optimal(scenario: Scenario, t: float, metric: Metric) -> str | None:
    """Ground-truth best network at ``t`` among those with an accessible cell."""
    best = None
    sign = -1.0 if metric.higher_is_better else 1.0
    for net in scenario.networks:
        cell = scenario.best_cell(net.network_id, t, accessible=True)
        if cell is None:
            continue
        v = scenario.performance.value(net, metric, scenario.rss(cell.cell_id, t))
        key = (sign * v, net.network_id)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


# --------------------------------------------------------------------------
# registry


def _complete_only(fn: Callable[[ScanResult, StrategyContext], str | None]) -> Strategy:
    def wrapped(scan: ScanResult, ctx: StrategyContext):
        return None if scan.partial else fn(scan, ctx)
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


@dataclass(frozen=True)
class StrategySpec:
    name: str
    stack: str  # "monitored", "baseline" or "optimal"
    fn: Strategy | None = None


BUILTINS: dict[str, StrategySpec] = {
    "baseline": StrategySpec("baseline", "baseline"),
    "optimal": StrategySpec("optimal", "optimal"),
    "radio-only": StrategySpec("radio-only", "monitored",
                               _complete_only(lambda s, c: strategy_radio_only(s))),
    "profile-only": StrategySpec("profile-only", "monitored",
                                 _complete_only(lambda s, c: strategy_profile_only(s, c.profiles))),
    "min-latency": StrategySpec("min-latency", "monitored",
                                _complete_only(lambda s, c: strategy_min_latency(s, c.predictor))),
    "tree": StrategySpec("tree", "monitored",
                         _complete_only(lambda s, c: strategy_tree(s, c.predictor))),
    "min-billing": StrategySpec("min-billing", "monitored",
                                _complete_only(lambda s, c: strategy_min_billing(s, c.billing))),
    "stay": StrategySpec("stay", "monitored", lambda s, c: None),
}


class UnknownStrategyError(KeyError):
    pass


def get_strategy(name: str) -> StrategySpec:
    try:
        return BUILTINS[name]
    except KeyError:
        raise UnknownStrategyError(f"UNKNOWN_STRATEGY: {name}") from None


def run_strategy(strategy: Strategy, scan: ScanResult, ctx: StrategyContext) -> Decision:
    """Invoke the callback once and normalise its answer into a :class:`Decision`."""
    try:
        out = strategy(scan, ctx)
    except Exception as exc:  # a user callback must never take the run down
        log.warning("strategy raised: %s", exc)
        ctx.errors.append((ctx.time, f"STRATEGY_EXCEPTION: {exc!r}"))
        return Decision(Action.STAY, reason="STRATEGY_EXCEPTION", decided_on_partial=scan.partial)
    if isinstance(out, Decision):
        target = out.target if out.action is Action.SWITCH else None
        reason = out.reason
    else:
        target, reason = out, ""
    if target is None or target == ctx.current:
        return Decision(Action.STAY, reason=reason or "stay", decided_on_partial=scan.partial)
    if target not in scan:
        ctx.errors.append((ctx.time, f"STRATEGY_EXCEPTION: target {target} not in scan"))
        return Decision(Action.STAY, reason="STRATEGY_EXCEPTION", decided_on_partial=scan.partial)
    return Decision(Action.SWITCH, target, reason or "switch", scan.partial)
