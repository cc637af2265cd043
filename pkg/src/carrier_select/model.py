"""Domain types shared across the simulator, scenario parsing and validation."""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

DEFAULT_SERVICE_FLOOR = -140.0
UNAVAILABLE = None  # rss placeholder for cells that could not be decoded


class RAT(str, Enum):
    RAT_4G = "4G"
    RAT_3G = "3G"


class Direction(str, Enum):
    UPLINK = "UPLINK"
    DOWNLINK = "DOWNLINK"


class Metric(str, Enum):
    LATENCY = "latency"
    THROUGHPUT = "throughput"

    @property
    def higher_is_better(self) -> bool:
        return self is Metric.THROUGHPUT


def interp(points: Sequence[tuple[float, float]], x: float) -> float:
    """Piecewise-linear interpolation over sorted ``(x, y)`` points, clamped at both ends."""
    if x <= points[0][0]:
        return points[0][1]
    if x >= points[-1][0]:
        return points[-1][1]
    i = bisect_right([p[0] for p in points], x)
    (x0, y0), (x1, y1) = points[i - 1], points[i]
    if x == x0:
        return y0
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class SibConfig:
    barred: bool = False
    paging_cycle: float = 1.28
    on_duration: float | None = None  # defaults to 10% of the cycle
    reselection_priority: int = 0
    reselection_threshold: float = -120.0
    voice_over_ps: bool = True
    tdd_config: str = "N/A"
    # [start, end) windows in which barring is switched on, on top of ``barred``
    barred_intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.on_duration is None:
            object.__setattr__(self, "on_duration", 0.1 * self.paging_cycle)
        object.__setattr__(
            self, "barred_intervals", tuple(tuple(w) for w in self.barred_intervals)
        )

    def barred_at(self, t: float) -> bool:
        return self.barred or any(a <= t < b for a, b in self.barred_intervals)


@dataclass(frozen=True)
class QosProfile:
    traffic_class: str = "Background"
    delay_class: int = 4
    max_dl_rate: float = 0.0
    max_ul_rate: float = 0.0
    dl_gbr: float = 0.0  # 0 means best effort
    ul_gbr: float = 0.0


@dataclass(frozen=True)
class Cell:
    cell_id: str
    network: str
    band: str
    scan_time: float
    attach_time: float
    sib: SibConfig = field(default_factory=SibConfig)


@dataclass(frozen=True)
class CarrierNetwork:
    network_id: str
    plmn: str
    rat: RAT
    cells: tuple[str, ...]
    qos: QosProfile = field(default_factory=QosProfile)


@dataclass(frozen=True)
class Flow:
    arrival_time: float
    direction: Direction
    duration: float


@dataclass(frozen=True)
class RadioTrace:
    points: Mapping[str, tuple[tuple[float, float], ...]]

    def rss_at(self, cell_id: str, t: float) -> float:
        return rss_at(self, cell_id, t)

    @property
    def end_time(self) -> float:
        return max((pts[-1][0] for pts in self.points.values() if pts), default=0.0)


class UnknownCellError(KeyError):
    pass


def rss_at(trace: RadioTrace, cell_id: str, t: float) -> float:
    """RSS of ``cell_id`` at time ``t`` by linear interpolation, clamped outside the breakpoints."""
    try:
        pts = trace.points[cell_id]
    except KeyError:
        raise UnknownCellError(cell_id) from None
    return interp(pts, t)


@dataclass(frozen=True)
class PerformanceModel:
    """Ground-truth metric curves over RSS.

    ``curves`` is keyed by network id, or by ``"class:<traffic class>"`` to share
    one curve among every network with that QoS traffic class. Network keys win.
    """

    curves: Mapping[str, Mapping[str, tuple[tuple[float, float], ...]]]
    outage_latency: float = 1000.0

    def curve_for(self, network: CarrierNetwork, metric: Metric):
        for key in (network.network_id, "class:" + network.qos.traffic_class):
            per_metric = self.curves.get(key)
            if per_metric and metric.value in per_metric:
                return per_metric[metric.value]
        return None

    def value(self, network: CarrierNetwork, metric: Metric, rss: float | None) -> float:
        if rss is None:
            return self.outage_value(metric)
        return interp(self.curve_for(network, metric), rss)

    def outage_value(self, metric: Metric) -> float:
        return self.outage_latency if metric is Metric.LATENCY else 0.0


@dataclass(frozen=True)
class ServiceRequirements:
    needs_voice: bool = False
    needs_data: bool = True

    def __post_init__(self):
        if not (self.needs_voice or self.needs_data):
            raise ValueError("at least one of needs_voice/needs_data must be set")


@dataclass(frozen=True)
class BillingTier:
    upto_gb: float  # cumulative usage bound; math.inf for the last tier
    price_per_gb: float


@dataclass(frozen=True)
class BillingPlan:
    tiers: tuple[BillingTier, ...]
    usage_gb: float = 0.0

    def __post_init__(self):
        bounds = [t.upto_gb for t in self.tiers]
        if not bounds or any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ValueError("billing tiers must be non-empty with increasing volumes")

    def unit_price(self, usage_gb: float | None = None) -> float:
        u = self.usage_gb if usage_gb is None else usage_gb
        for tier in self.tiers:
            if u < tier.upto_gb:
                return tier.price_per_gb
        return self.tiers[-1].price_per_gb


@dataclass(frozen=True)
class HistoryRecord:
    """One past observation while registered on ``network`` (profiling warm-up)."""

    network: str
    rss: float
    cell: str | None = None
    latency: float | None = None
    throughput: float | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    networks: tuple[CarrierNetwork, ...]
    cells: tuple[Cell, ...]
    trace: RadioTrace
    performance: PerformanceModel
    plmn_priority_list: tuple[str, ...]
    workload: tuple[Flow, ...] = ()
    initial_registration: str | None = None
    platform_overhead: float = 0.0
    seed: int = 0
    service_floor: float = DEFAULT_SERVICE_FLOOR
    horizon: float | None = None
    requirements: ServiceRequirements = field(default_factory=ServiceRequirements)
    monitor_networks: tuple[str, ...] | None = None
    inactivity_tail: float = 0.0
    attach_failure_prob: float = 0.0
    billing: Mapping[str, BillingPlan] = field(default_factory=dict)
    history: tuple[HistoryRecord, ...] = ()

    @cached_property
    def network_map(self) -> dict[str, CarrierNetwork]:
        return {n.network_id: n for n in self.networks}

    @cached_property
    def cell_map(self) -> dict[str, Cell]:
        return {c.cell_id: c for c in self.cells}

    @property
    def end_time(self) -> float:
        return self.horizon if self.horizon is not None else self.trace.end_time

    def network(self, network_id: str) -> CarrierNetwork:
        return self.network_map[network_id]

    def cell(self, cell_id: str) -> Cell:
        return self.cell_map[cell_id]

    @cached_property
    def _scan_orders(self) -> dict[str, list[Cell]]:
        return {
            n.network_id: sorted((self.cell_map[c] for c in n.cells), key=lambda c: (c.band, c.cell_id))
            for n in self.networks
        }

    def cells_of(self, network_id: str) -> list[Cell]:
        """Cells of a network in scan order: band, then cell id."""
        return list(self._scan_orders[network_id])

    def rss(self, cell_id: str, t: float) -> float:
        return self.trace.rss_at(cell_id, t)

    def is_available(self, cell_id: str, t: float) -> bool:
        return self.rss(cell_id, t) >= self.service_floor

    def best_cell(self, network_id: str, t: float, *, accessible: bool = False) -> Cell | None:
        """Strongest available cell of a network at ``t``; ties by cell id."""
        best = None
        for cell in self.cells_of(network_id):
            if not self.is_available(cell.cell_id, t):
                continue
            if accessible and cell.sib.barred_at(t):
                continue
            key = (-self.rss(cell.cell_id, t), cell.cell_id)
            if best is None or key < best[0]:
                best = (key, cell)
        return None if best is None else best[1]

    def network_rss(self, network_id: str, t: float) -> float | None:
        cell = self.best_cell(network_id, t)
        return None if cell is None else self.rss(cell.cell_id, t)

    @property
    def requested_networks(self) -> tuple[str, ...]:
        return self.monitor_networks or self.plmn_priority_list


class SwitchKind(str, Enum):
    BASELINE = "BASELINE"
    DIRECT = "DIRECT"
    INTRA_RAT = "INTRA_RAT"


@dataclass(frozen=True)
class SwitchRecord:
    t_start: float
    t_end: float
    from_network: str | None
    to_network: str | None  # None when the device never re-registered
    kind: SwitchKind
    n_t: int
    scan_cost: float
    attach_cost: float
    platform_overhead: float = 0.0

    @property
    def disruption(self) -> float:
        return self.t_end - self.t_start

    def to_record(self) -> dict[str, Any]:
        return {
            "t_start": self.t_start, "t_end": self.t_end,
            "from_network": self.from_network, "to_network": self.to_network,
            "kind": self.kind.value, "n_t": self.n_t, "scan_cost": self.scan_cost,
            "attach_cost": self.attach_cost, "platform_overhead": self.platform_overhead,
        }


# --------------------------------------------------------------------------
# scan results (shared by monitor, switch executor, fault guard, strategies)


@dataclass(frozen=True)
class ScanEntry:
    cell_id: str
    rss: float | None  # None = UNAVAILABLE
    sib: SibConfig | None  # snapshot as broadcast; None when not decodable
    barred: bool
    completed_at: float

    @property
    def available(self) -> bool:
        return self.rss is not None


@dataclass(frozen=True)
class NetworkScan:
    network_id: str
    plmn: str
    rat: RAT
    entries: tuple[ScanEntry, ...]
    complete: bool = True

    @property
    def available_entries(self) -> list[ScanEntry]:
        return [e for e in self.entries if e.available]

    @property
    def rss(self) -> float | None:
        vals = [e.rss for e in self.entries if e.available]
        return max(vals) if vals else None

    def best_entry(self) -> ScanEntry | None:
        avail = self.available_entries
        if not avail:
            return None
        return min(avail, key=lambda e: (-e.rss, e.cell_id))


@dataclass(frozen=True)
class ScanResult:
    networks: tuple[NetworkScan, ...]
    partial: bool = False
    time: float = 0.0

    @cached_property
    def by_id(self) -> dict[str, NetworkScan]:
        return {n.network_id: n for n in self.networks}

    def __contains__(self, network_id: str) -> bool:
        return network_id in self.by_id

    def __getitem__(self, network_id: str) -> NetworkScan:
        return self.by_id[network_id]

    def __len__(self) -> int:
        return len(self.networks)

    def network_ids(self) -> list[str]:
        return [n.network_id for n in self.networks]

    def cells_scanned(self) -> int:
        return sum(len(n.entries) for n in self.networks)

    def only(self, network_ids: Iterable[str]) -> "ScanResult":
        keep = set(network_ids)
        return ScanResult(
            tuple(n for n in self.networks if n.network_id in keep), self.partial, self.time
        )


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    entity: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.entity}: {self.message}"


class ScenarioError(ValueError):
    def __init__(self, errors: list[Violation]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


def scenario_errors(s: Scenario) -> list[Violation]:
    errs: list[Violation] = []
    add = lambda code, ent, msg: errs.append(Violation(code, str(ent), msg))  # noqa: E731

    if not s.networks:
        add("EMPTY_NETWORK", "scenario", "scenario declares no networks")
    seen: set[str] = set()
    for n in s.networks:
        if n.network_id in seen:
            add("DUPLICATE_ID", n.network_id, "network id used more than once")
        seen.add(n.network_id)
        if not n.cells:
            add("EMPTY_NETWORK", n.network_id, "network has no cells")
    seen_cells: set[str] = set()
    for c in s.cells:
        if c.cell_id in seen_cells:
            add("DUPLICATE_ID", c.cell_id, "cell id used more than once")
        seen_cells.add(c.cell_id)
        if c.network not in seen:
            add("DANGLING_REFERENCE", c.cell_id, f"unknown network {c.network!r}")
        if not c.scan_time > 0:
            add("INVALID_VALUE", c.cell_id, "scan_time must be > 0")
        if not c.attach_time >= 0:
            add("INVALID_VALUE", c.cell_id, "attach_time must be >= 0")
        if not (c.sib.paging_cycle > 0 and 0 < c.sib.on_duration < c.sib.paging_cycle):
            add("INVALID_VALUE", c.cell_id, "need 0 < on_duration < paging_cycle")
    owner: dict[str, str] = {}
    for n in s.networks:
        for cid in n.cells:
            if cid not in seen_cells:
                add("DANGLING_REFERENCE", n.network_id, f"unknown cell {cid!r}")
            elif cid in owner and owner[cid] != n.network_id:
                add("DUPLICATE_ID", cid, "cell listed by more than one network")
            owner.setdefault(cid, n.network_id)
    for c in s.cells:
        if c.network in seen and owner.get(c.cell_id) not in (None, c.network):
            add("DANGLING_REFERENCE", c.cell_id, "cell network disagrees with network cell list")
        elif c.network in seen and c.cell_id not in owner:
            add("DANGLING_REFERENCE", c.cell_id, f"not listed in network {c.network!r}")

    for cid, pts in s.trace.points.items():
        if cid not in seen_cells:
            add("DANGLING_REFERENCE", cid, "trace for unknown cell")
        if not pts:
            add("NON_MONOTONE_TRACE", cid, "trace has no breakpoints")
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t1 > t0:
                add("NON_MONOTONE_TRACE", cid, f"breakpoint times {t0} then {t1}")
                break
    for c in s.cells:
        if c.cell_id not in s.trace.points:
            add("DANGLING_REFERENCE", c.cell_id, "cell has no radio trace")

    if s.initial_registration is not None and s.initial_registration not in seen:
        add("DANGLING_REFERENCE", "device", f"unknown initial network {s.initial_registration!r}")
    prio = list(s.plmn_priority_list)
    if len(set(prio)) != len(prio):
        add("DUPLICATE_ID", "baseline", "plmn_priority_list repeats a network")
    for nid in prio:
        if nid not in seen:
            add("DANGLING_REFERENCE", "baseline", f"priority list names unknown network {nid!r}")
    for nid in seen - set(prio):
        add("DANGLING_REFERENCE", "baseline", f"priority list misses network {nid!r}")
    for nid in s.monitor_networks or ():
        if nid not in seen:
            add("DANGLING_REFERENCE", "device", f"monitor list names unknown network {nid!r}")

    net_keys = {n.network_id for n in s.networks}
    for key, per_metric in s.performance.curves.items():
        if not key.startswith("class:") and key not in net_keys:
            add("DANGLING_REFERENCE", "performance", f"curve for unknown network {key!r}")
        for metric, pts in per_metric.items():
            if metric not in {m.value for m in Metric}:
                add("INVALID_VALUE", "performance", f"unknown metric {metric!r}")
            if not pts or any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                add("NON_MONOTONE_TRACE", f"performance/{key}/{metric}", "rss points must increase")
    for n in s.networks:
        for m in Metric:
            if s.performance.curve_for(n, m) is None:
                add("DANGLING_REFERENCE", n.network_id, f"no {m.value} performance curve")

    for i, f in enumerate(s.workload):
        if not (f.arrival_time >= 0 and f.duration > 0):
            add("INVALID_VALUE", f"workload[{i}]", "need arrival_time >= 0 and duration > 0")
    for h in s.history:
        if h.network not in seen:
            add("DANGLING_REFERENCE", "history", f"unknown network {h.network!r}")
        elif h.cell is not None and owner.get(h.cell) != h.network:
            add("DANGLING_REFERENCE", "history", f"cell {h.cell!r} not in {h.network!r}")
    if s.platform_overhead < 0:
        add("INVALID_VALUE", "device", "platform_overhead must be >= 0")
    if not 0 <= s.attach_failure_prob <= 1:
        add("INVALID_VALUE", "device", "attach_failure_prob must be in [0, 1]")
    if s.end_time <= 0:
        add("INVALID_VALUE", "scenario", "horizon must be > 0")
    return errs


def validate_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged if every invariant holds, else raise :class:`ScenarioError`."""
    errs = scenario_errors(s)
    if errs:
        raise ScenarioError(errs)
    return s


# --------------------------------------------------------------------------
# file format


def _pairs(seq) -> tuple[tuple[float, float], ...]:
    return tuple((float(a), float(b)) for a, b in seq)


def scenario_from_dict(d: Mapping[str, Any]) -> Scenario:
    """Build a :class:`Scenario` from its key/value tree. Structural errors raise ScenarioError."""
    try:
        networks = tuple(
            CarrierNetwork(
                network_id=str(n["network_id"]),
                plmn=str(n["plmn"]),
                rat=RAT(n["rat"]),
                cells=tuple(n.get("cells", ())),
                qos=QosProfile(**n.get("qos", {})),
            )
            for n in d.get("networks", ())
        )
        cells = tuple(
            Cell(
                cell_id=str(c["cell_id"]),
                network=str(c["network"]),
                band=str(c.get("band", "")),
                scan_time=float(c["scan_time"]),
                attach_time=float(c.get("attach_time", 0.0)),
                sib=SibConfig(**c.get("sib", {})),
            )
            for c in d.get("cells", ())
        )
        trace = RadioTrace({str(k): _pairs(v) for k, v in d.get("trace", {}).items()})
        perf = d.get("performance", {})
        performance = PerformanceModel(
            curves={
                str(k): {str(m): _pairs(p) for m, p in v.items()}
                for k, v in perf.get("curves", {}).items()
            },
            outage_latency=float(perf.get("outage_latency", 1000.0)),
        )
        workload = tuple(
            Flow(float(f["arrival_time"]), Direction(f["direction"]), float(f["duration"]))
            for f in d.get("workload", ())
        )
        device = d.get("device", {})
        baseline = d.get("baseline", {})
        billing = {
            str(plmn): BillingPlan(
                tuple(BillingTier(float(t[0]), float(t[1])) for t in plan["tiers"]),
                float(plan.get("usage_gb", 0.0)),
            )
            for plmn, plan in d.get("billing", {}).items()
        }
        history = tuple(HistoryRecord(**h) for h in d.get("history", ()))
        mon = device.get("monitor_networks")
        return Scenario(
            name=str(d.get("name", "scenario")),
            networks=networks,
            cells=cells,
            trace=trace,
            performance=performance,
            plmn_priority_list=tuple(baseline.get("plmn_priority_list", ())),
            workload=workload,
            initial_registration=device.get("initial_registration"),
            platform_overhead=float(device.get("platform_overhead", 0.0)),
            seed=int(d.get("seed", 0)),
            service_floor=float(d.get("service_floor", DEFAULT_SERVICE_FLOOR)),
            horizon=None if d.get("horizon") is None else float(d["horizon"]),
            requirements=ServiceRequirements(
                needs_voice=bool(device.get("needs_voice", False)),
                needs_data=bool(device.get("needs_data", True)),
            ),
            monitor_networks=None if mon is None else tuple(mon),
            inactivity_tail=float(device.get("inactivity_tail", 0.0)),
            attach_failure_prob=float(device.get("attach_failure_prob", 0.0)),
            billing=billing,
            history=history,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError([Violation("MALFORMED", "scenario", repr(exc))]) from exc


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    def sib(c: SibConfig):
        return {
            "barred": c.barred,
            "paging_cycle": c.paging_cycle,
            "on_duration": c.on_duration,
            "reselection_priority": c.reselection_priority,
            "reselection_threshold": c.reselection_threshold,
            "voice_over_ps": c.voice_over_ps,
            "tdd_config": c.tdd_config,
            "barred_intervals": [list(w) for w in c.barred_intervals],
        }

    def hist(h: HistoryRecord):
        out = {"network": h.network, "rss": h.rss}
        for k in ("cell", "latency", "throughput"):
            if getattr(h, k) is not None:
                out[k] = getattr(h, k)
        return out

    return {
        "name": s.name,
        "seed": s.seed,
        "horizon": s.horizon,
        "service_floor": s.service_floor,
        "networks": [
            {
                "network_id": n.network_id,
                "plmn": n.plmn,
                "rat": n.rat.value,
                "cells": list(n.cells),
                "qos": vars(n.qos).copy(),
            }
            for n in s.networks
        ],
        "cells": [
            {
                "cell_id": c.cell_id,
                "network": c.network,
                "band": c.band,
                "scan_time": c.scan_time,
                "attach_time": c.attach_time,
                "sib": sib(c.sib),
            }
            for c in s.cells
        ],
        "trace": {k: [list(p) for p in v] for k, v in s.trace.points.items()},
        "workload": [
            {"arrival_time": f.arrival_time, "direction": f.direction.value, "duration": f.duration}
            for f in s.workload
        ],
        "performance": {
            "outage_latency": s.performance.outage_latency,
            "curves": {
                k: {m: [list(p) for p in pts] for m, pts in v.items()}
                for k, v in s.performance.curves.items()
            },
        },
        "baseline": {"plmn_priority_list": list(s.plmn_priority_list)},
        "device": {
            "initial_registration": s.initial_registration,
            "platform_overhead": s.platform_overhead,
            "needs_voice": s.requirements.needs_voice,
            "needs_data": s.requirements.needs_data,
            "monitor_networks": None if s.monitor_networks is None else list(s.monitor_networks),
            "inactivity_tail": s.inactivity_tail,
            "attach_failure_prob": s.attach_failure_prob,
        },
        "billing": {
            plmn: {
                "tiers": [[_num(t.upto_gb), t.price_per_gb] for t in plan.tiers],
                "usage_gb": plan.usage_gb,
            }
            for plmn, plan in s.billing.items()
        },
        "history": [hist(h) for h in s.history],
    }


BUNDLED_DIR = Path(__file__).with_name("scenarios")


def bundled_names() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.json"))


def resolve_scenario_path(path: str | Path) -> Path:
    """A file path, or the bare name of a bundled scenario (e.g. ``switch_timing``)."""
    p = Path(path)
    if not p.exists() and (BUNDLED_DIR / f"{p.name}.json").exists() and p.suffix == "":
        return BUNDLED_DIR / f"{p.name}.json"
    return p


def load_scenario_dict(path: str | Path) -> dict[str, Any]:
    path = resolve_scenario_path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(text)
    return json.loads(text)


def load_scenario(path: str | Path, *, validate: bool = True) -> Scenario:
    s = scenario_from_dict(load_scenario_dict(path))
    return validate_scenario(s) if validate else s


def dump_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1, sort_keys=True) + "\n")
