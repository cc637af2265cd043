"""Performance prediction from radio quality plus a carrier's profiled configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable

from .envsim import registration_events
from .model import HistoryRecord, Metric, QosProfile, Scenario, SibConfig
from .profiles import ProfileStore
from .regtree import Feature, RegressionTree, TreeParams

FEATURES: tuple[Feature, ...] = (
    Feature("rss"),
    Feature("traffic_class", categorical=True),
    Feature("delay_class"),
    Feature("max_dl_rate"),
    Feature("max_ul_rate"),
    Feature("dl_gbr"),
    Feature("ul_gbr"),
    Feature("tdd_config", categorical=True),
    Feature("paging_cycle"),
    Feature("handoff_priority"),
    Feature("handoff_threshold"),
)
PROFILE_FEATURES = tuple(f.name for f in FEATURES[1:])

_q, _s = QosProfile(), SibConfig()
DEFAULTS: dict[str, Any] = {
    "traffic_class": _q.traffic_class, "delay_class": _q.delay_class,
    "max_dl_rate": _q.max_dl_rate, "max_ul_rate": _q.max_ul_rate,
    "dl_gbr": _q.dl_gbr, "ul_gbr": _q.ul_gbr,
    "tdd_config": _s.tdd_config, "paging_cycle": _s.paging_cycle,
    "handoff_priority": _s.reselection_priority, "handoff_threshold": _s.reselection_threshold,
}


@dataclass(frozen=True)
class TrainingSample:
    features: tuple
    label: float
    network: str
    timestamp: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.label):
            raise ValueError("label must be finite")
        if len(self.features) != len(FEATURES):
            raise ValueError(f"expected {len(FEATURES)} features")


def seed_profiles(profiles: ProfileStore, history: Iterable[HistoryRecord], scenario: Scenario,
                  *, t: float = 0.0) -> list[str]:
    """Replay the registration signalling of each past record; returns the cell per record."""
    cells = [h.cell or scenario.cells_of(h.network)[0].cell_id for h in history]
    for cell_id in dict.fromkeys(cells):
        profiles.extend(registration_events(t, scenario.cell(cell_id), scenario))
    return cells


class CarrierPredictor:
    """Online tree over (rss, profile fields) for one metric."""

    def __init__(self, metric: Metric, profiles: ProfileStore | None = None, *,
                 params: TreeParams = TreeParams(), rebuild_every: int = 32, use_cache: bool = True):
        self.metric = metric
        self.profiles = profiles if profiles is not None else ProfileStore()
        self.tree = RegressionTree(FEATURES, params, rebuild_every, PROFILE_FEATURES)
        self.use_cache = use_cache
        self.samples: list[TrainingSample] = []

    def assignment(self, network: str, cell: str | None = None) -> tuple:
        prof = self.profiles.profile(network, cell)
        return tuple(prof.get(f, DEFAULTS[f]) for f in PROFILE_FEATURES)

    def features(self, network: str, rss: float, cell: str | None = None) -> tuple:
        return (float(rss),) + self.assignment(network, cell)

    def observe(self, network: str, rss: float, label: float, t: float = 0.0,
                cell: str | None = None) -> TrainingSample:
        s = TrainingSample(self.features(network, rss, cell), float(label), network, t)
        self.samples.append(s)
        self.tree.update(s.features, s.label)
        return s

    def train(self, samples: Iterable[TrainingSample]) -> "CarrierPredictor":
        self.samples = list(samples)
        self.tree.fit([s.features for s in self.samples], [s.label for s in self.samples])
        return self

    @property
    def ready(self) -> bool:
        return self.tree.root is not None

    def predict(self, network: str, rss: float, cell: str | None = None) -> float | None:
        if not self.ready:
            return None
        x = self.features(network, rss, cell)
        key = x[1:] if self.use_cache else None
        return self.tree.predict(x, profile_key=key)

    def warm_up(self, history: Iterable[HistoryRecord], scenario: Scenario, *,
                t: float = 0.0) -> int:
        """Seed profiles and the tree from past registrations; returns samples added."""
        history = list(history)
        cells = seed_profiles(self.profiles, history, scenario, t=t)
        new = []
        for h, cell_id in zip(history, cells):
            label = h.latency if self.metric is Metric.LATENCY else h.throughput
            if label is not None:
                new.append(TrainingSample(self.features(h.network, h.rss, cell_id), float(label),
                                          h.network, t))
        if new:
            self.train(self.samples + new)
        return len(new)
