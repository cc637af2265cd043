"""Per-cell heterogeneity profiles aggregated from signalling events."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .envsim import CellularEvent, EventKind

QOS_FIELDS = ("traffic_class", "delay_class", "max_dl_rate", "max_ul_rate", "dl_gbr", "ul_gbr")
RADIO_FIELDS = ("tdd_config", "paging_cycle", "handoff_priority", "handoff_threshold")
SERVICE_FIELDS = ("voice_over_ps",)
PROFILE_FIELDS = QOS_FIELDS + RADIO_FIELDS + SERVICE_FIELDS

EVENT_FIELDS: dict[EventKind, tuple[str, ...]] = {
    EventKind.EPS_PDP_SETUP: QOS_FIELDS,
    EventKind.RRC_RECONFIG: RADIO_FIELDS,
    EventKind.LOCATION_UPDATE: SERVICE_FIELDS,
}

CSV_COLUMNS = ("network", "cell", "field", "value", "count", "total", "probability")


@dataclass(frozen=True)
class FieldStat:
    value: Any
    count: int
    total: int

    @property
    def probability(self) -> float:
        return self.count / self.total if self.total else 0.0


def _modal(counts: dict[Any, int]) -> FieldStat | None:
    if not counts:
        return None
    best_v, best_c = None, -1
    for v, c in counts.items():  # insertion order = first seen
        if c > best_c:
            best_v, best_c = v, c
    return FieldStat(best_v, best_c, sum(counts.values()))


class ProfileStore:
    """Occurrence counts per (network, cell, field, value).

    Lookups fall back from the cell to the network-wide aggregate, so a cell never
    visited still gets its carrier's usual configuration.
    """

    def __init__(self):
        self._cell: dict[tuple[str, str], dict[str, dict[Any, int]]] = defaultdict(
            lambda: defaultdict(dict))
        self._net: dict[str, dict[str, dict[Any, int]]] = defaultdict(lambda: defaultdict(dict))
        self.version = 0

    def update(self, event: CellularEvent) -> "ProfileStore":
        fields = EVENT_FIELDS.get(event.kind)
        if fields is None:
            return self
        p = event.payload
        for f in fields:
            self.add(p["network"], p["cell"], f, p[f])
        return self

    def add(self, network: str, cell: str, field: str, value: Any, count: int = 1) -> None:
        if field not in PROFILE_FIELDS:
            raise KeyError(field)
        for counts in (self._cell[(network, cell)][field], self._net[network][field]):
            counts[value] = counts.get(value, 0) + count
        self.version += 1

    def extend(self, events: Iterable[CellularEvent]) -> "ProfileStore":
        for ev in events:
            self.update(ev)
        return self

    # -- queries -----------------------------------------------------------
    def has(self, network: str) -> bool:
        return network in self._net

    def networks(self) -> list[str]:
        return sorted(self._net)

    def cells(self) -> list[tuple[str, str]]:
        return sorted(self._cell)

    def stat(self, network: str, field: str, cell: str | None = None) -> FieldStat | None:
        if cell is not None and (network, cell) in self._cell:
            s = _modal(self._cell[(network, cell)].get(field, {}))
            if s is not None:
                return s
        if network in self._net:
            return _modal(self._net[network].get(field, {}))
        return None

    def modal(self, network: str, field: str, cell: str | None = None, default: Any = None) -> Any:
        s = self.stat(network, field, cell)
        return default if s is None else s.value

    def profile(self, network: str, cell: str | None = None) -> dict[str, Any]:
        out = {}
        for f in PROFILE_FIELDS:
            s = self.stat(network, f, cell)
            if s is not None:
                out[f] = s.value
        return out

    # -- table import/export ----------------------------------------------
    def rows(self) -> list[dict[str, Any]]:
        out = []
        for (net, cell) in self.cells():
            per_field = self._cell[(net, cell)]
            for f in PROFILE_FIELDS:
                counts = per_field.get(f)
                if not counts:
                    continue
                total = sum(counts.values())
                for v, c in counts.items():
                    out.append({"network": net, "cell": cell, "field": f, "value": v,
                                "count": c, "total": total, "probability": c / total})
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows():
                w.writerow([r["network"], r["cell"], r["field"], json.dumps(r["value"]),
                            r["count"], r["total"], f"{r['probability']:.6f}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ProfileStore":
        store = cls()
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                store.add(r["network"], r["cell"], r["field"], json.loads(r["value"]), int(r["count"]))
        return store
