"""Discrete-event model of the network side: DRX/paging, traffic delivery, attach, reselection."""

from __future__ import annotations

import heapq
import itertools
import json
import math
import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Sequence

from .model import (
    Cell,
    Direction,
    Flow,
    Scenario,
    SibConfig,
    SwitchKind,
    SwitchRecord,
)

EPS = 1e-12


class RrcMode(str, Enum):
    AWAKE = "AWAKE"
    SLEEP = "SLEEP"
    OFF_FREQUENCY = "OFF_FREQUENCY"


class EventKind(str, Enum):
    PAGING = "PAGING"
    RADIO_MEAS = "RADIO_MEAS"
    RRC_SIB1 = "RRC_SIB1"
    RRC_SIB_RESEL = "RRC_SIB_RESEL"
    RRC_RECONFIG = "RRC_RECONFIG"
    EPS_PDP_SETUP = "EPS_PDP_SETUP"
    LOCATION_UPDATE = "LOCATION_UPDATE"
    ATTACH_ACCEPT = "ATTACH_ACCEPT"
    DETACH = "DETACH"
    OUT_OF_SERVICE = "OUT_OF_SERVICE"


PAYLOAD_FIELDS: dict[EventKind, tuple[str, ...]] = {
    EventKind.PAGING: ("cell", "data_pending"),
    EventKind.RADIO_MEAS: ("cell", "network", "rss"),
    EventKind.RRC_SIB1: ("cell", "network", "plmn", "barred"),
    EventKind.RRC_SIB_RESEL: ("cell", "network", "reselection_priority", "reselection_threshold"),
    EventKind.RRC_RECONFIG: (
        "cell", "network", "tdd_config", "paging_cycle", "handoff_priority", "handoff_threshold",
    ),
    EventKind.EPS_PDP_SETUP: (
        "cell", "network", "traffic_class", "delay_class",
        "max_dl_rate", "max_ul_rate", "dl_gbr", "ul_gbr",
    ),
    EventKind.LOCATION_UPDATE: ("cell", "network", "voice_over_ps"),
    EventKind.ATTACH_ACCEPT: ("cell", "network"),
    EventKind.DETACH: ("network", "reason"),
    EventKind.OUT_OF_SERVICE: ("network", "cell"),
}


@dataclass(frozen=True)
class CellularEvent:
    time: float
    kind: EventKind
    payload: Mapping[str, Any]

    def __post_init__(self):
        want = PAYLOAD_FIELDS[self.kind]
        if set(self.payload) != set(want):
            raise ValueError(f"{self.kind.value} payload needs exactly {want}, got {sorted(self.payload)}")

    def to_record(self) -> dict[str, Any]:
        return {
            "time": self.time,
            "kind": self.kind.value,
            "payload": {k: self.payload[k] for k in PAYLOAD_FIELDS[self.kind]},
        }


def registration_events(t: float, cell: Cell, scenario: Scenario) -> list[CellularEvent]:
    """Signalling seen when (re)attaching to ``cell``: attach accept, session QoS, radio config, LU."""
    net = scenario.network(cell.network)
    q, sib = net.qos, cell.sib
    base = {"cell": cell.cell_id, "network": net.network_id}
    return [
        CellularEvent(t, EventKind.ATTACH_ACCEPT, dict(base)),
        CellularEvent(t, EventKind.EPS_PDP_SETUP, {
            **base, "traffic_class": q.traffic_class, "delay_class": q.delay_class,
            "max_dl_rate": q.max_dl_rate, "max_ul_rate": q.max_ul_rate,
            "dl_gbr": q.dl_gbr, "ul_gbr": q.ul_gbr,
        }),
        CellularEvent(t, EventKind.RRC_RECONFIG, {
            **base, "tdd_config": sib.tdd_config, "paging_cycle": sib.paging_cycle,
            "handoff_priority": sib.reselection_priority,
            "handoff_threshold": sib.reselection_threshold,
        }),
        CellularEvent(t, EventKind.LOCATION_UPDATE, {**base, "voice_over_ps": sib.voice_over_ps}),
    ]


@dataclass
class DeviceState:
    registered: str | None = None
    serving_cell: str | None = None
    rrc_mode: RrcMode = RrcMode.AWAKE
    active_uplink: bool = False
    clock: float = 0.0


class DeliveryStatus(str, Enum):
    DELIVERED = "DELIVERED"
    DELAYED = "DELAYED"
    LOST = "LOST"


@dataclass(frozen=True)
class DeliveryRecord:
    flow: int
    direction: Direction
    status: DeliveryStatus
    delay: float = 0.0
    cause: str | None = None  # "monitoring" or "unregistered" when not DELIVERED
    delivered_at: float | None = None

    def __post_init__(self):
        if self.status is DeliveryStatus.DELIVERED and self.delay != 0:
            raise ValueError("DELIVERED implies zero delay")
        if self.status is DeliveryStatus.DELAYED and not self.delay > 0:
            raise ValueError("DELAYED implies positive delay")


# --------------------------------------------------------------------------
# DRX cycle model: each cycle of length paging_cycle opens with on_duration AWAKE


def _cycle_index(sib: SibConfig, t: float) -> int:
    c = sib.paging_cycle
    k = math.floor(t / c)
    while (k + 1) * c <= t:
        k += 1
    while k * c > t:
        k -= 1
    return k


def in_on_duration(sib: SibConfig, t: float) -> bool:
    k = _cycle_index(sib, t)
    return t < k * sib.paging_cycle + sib.on_duration


def next_paging_occasion(sib: SibConfig, t: float) -> float:
    """First cycle start at or after ``t``."""
    k = _cycle_index(sib, t)
    start = k * sib.paging_cycle
    return start if start == t else (k + 1) * sib.paging_cycle


def paging_schedule(sib: SibConfig, from_t: float) -> tuple[float, float]:
    """Earliest SLEEP interval ``[start, end)`` at or after ``from_t``."""
    k = _cycle_index(sib, from_t)
    c = sib.paging_cycle
    sleep_start = k * c + sib.on_duration
    return (max(sleep_start, from_t), (k + 1) * c)


def sleep_windows(sib: SibConfig, from_t: float):
    """Endless iterator of SLEEP windows starting with the one containing/after ``from_t``."""
    start, end = paging_schedule(sib, from_t)
    k = _cycle_index(sib, start)
    yield start, end
    while True:
        k += 1
        yield k * sib.paging_cycle + sib.on_duration, (k + 1) * sib.paging_cycle


# --------------------------------------------------------------------------
# network-controlled reselection


def network_reselection(
    serving: Cell,
    candidates: Iterable[Cell],
    measurements: Mapping[str, float | None],
    service_floor: float,
) -> str | None:
    """Cell the network would move the device to, or None to stay.

    Triggered when the serving RSS falls below the serving cell's reselection
    threshold. A candidate qualifies when its RSS is at or above both the service
    floor and its own threshold; the highest priority wins, then strongest RSS,
    then cell id.
    """
    rss = measurements.get(serving.cell_id)
    if rss is not None and rss >= serving.sib.reselection_threshold:
        return None
    best = None
    for c in candidates:
        if c.cell_id == serving.cell_id:
            continue
        r = measurements.get(c.cell_id)
        if r is None or r < service_floor or r < c.sib.reselection_threshold:
            continue
        key = (-c.sib.reselection_priority, -r, c.cell_id)
        if best is None or key < best[0]:
            best = (key, c.cell_id)
    return None if best is None else best[1]


# --------------------------------------------------------------------------
# device timeline and traffic delivery


@dataclass
class Segment:
    start: float
    end: float | None
    network: str
    cell: str


@dataclass
class Timeline:
    """Registration segments (per serving cell) and off-frequency intervals, all half-open."""

    registrations: list[Segment] = field(default_factory=list)
    off_frequency: list[list[float | None]] = field(default_factory=list)
    version: int = 0
    _reg_starts: list[float] = field(default_factory=list, repr=False)
    _off_starts: list[float] = field(default_factory=list, repr=False)

    def begin_registration(self, t: float, network: str, cell: str) -> None:
        self.end_registration(t)
        self.registrations.append(Segment(t, None, network, cell))
        self._reg_starts.append(t)
        self.version += 1

    def end_registration(self, t: float) -> None:
        if self.registrations and self.registrations[-1].end is None:
            seg = self.registrations[-1]
            if seg.start == t:
                self.registrations.pop()
                self._reg_starts.pop()
            else:
                seg.end = t
            self.version += 1

    def begin_off_frequency(self, t: float) -> None:
        if self.off_frequency and self.off_frequency[-1][1] == t:
            self.off_frequency[-1][1] = None
        else:
            self.off_frequency.append([t, None])
            self._off_starts.append(t)
        self.version += 1

    def end_off_frequency(self, t: float) -> None:
        if self.off_frequency and self.off_frequency[-1][1] is None:
            if self.off_frequency[-1][0] == t:
                self.off_frequency.pop()
                self._off_starts.pop()
            else:
                self.off_frequency[-1][1] = t
            self.version += 1

    def segment_at(self, t: float) -> Segment | None:
        i = bisect_right(self._reg_starts, t) - 1
        if i < 0:
            return None
        seg = self.registrations[i]
        return seg if seg.end is None or t < seg.end else None

    def off_interval_at(self, t: float):
        i = bisect_right(self._off_starts, t) - 1
        if i < 0:
            return None
        s, e = self.off_frequency[i]
        return (s, e) if e is None or t < e else None

    def next_registration(self, t: float) -> float | None:
        i = bisect_left(self._reg_starts, t)
        return self._reg_starts[i] if i < len(self._reg_starts) else None

    def unregistered_time(self, start: float, end: float) -> float:
        covered = 0.0
        for seg in self.registrations:
            a = max(seg.start, start)
            b = min(end if seg.end is None else seg.end, end)
            if b > a:
                covered += b - a
        return (end - start) - covered

    def reachable_from(self, t: float) -> tuple[float | None, str | None]:
        """First time >= t the device is registered and on-frequency, plus the first obstacle."""
        cause = None
        for _ in range(10_000):
            off = self.off_interval_at(t)
            if off is not None:
                cause = cause or "monitoring"
                if off[1] is None:
                    return None, cause
                t = off[1]
                continue
            if self.segment_at(t) is None:
                cause = cause or "unregistered"
                nxt = self.next_registration(t)
                if nxt is None:
                    return None, cause
                t = nxt
                continue
            return t, cause
        raise RuntimeError("timeline did not settle")


def deliver_traffic(
    workload: Sequence[Flow],
    timeline: Timeline,
    sib_of: Callable[[str], SibConfig],
    horizon: float,
    tail: float = 0.0,
    only: Iterable[int] | None = None,
) -> list[DeliveryRecord]:
    """Delivery outcome of each flow against the device timeline.

    A downlink flow is noticed at arrival when the device is awake (on-duration or
    busy with traffic), else at the next paging occasion. Whatever keeps the device
    unreachable past that moment (off-frequency or unregistered) delays it; the
    delay is measured from that moment. Never reachable again within the horizon
    means LOST.
    """
    idx = sorted(only if only is not None else range(len(workload)),
                 key=lambda i: (workload[i].arrival_time, i))
    busy: list[tuple[float, float]] = []
    out: list[DeliveryRecord] = []
    for i in idx:
        f = workload[i]
        a = f.arrival_time
        p = a
        seg = timeline.segment_at(a)
        if f.direction is Direction.DOWNLINK and seg is not None:
            sib = sib_of(seg.cell)
            awake = in_on_duration(sib, a) or any(s <= a < e for s, e in busy)
            if not awake:
                p = next_paging_occasion(sib, a)
        t, cause = timeline.reachable_from(p)
        if t is None or (t > p and t > horizon):
            out.append(DeliveryRecord(i, f.direction, DeliveryStatus.LOST, 0.0, cause))
            continue
        if t > p:
            out.append(DeliveryRecord(i, f.direction, DeliveryStatus.DELAYED, t - p, cause, t))
        else:
            out.append(DeliveryRecord(i, f.direction, DeliveryStatus.DELIVERED, 0.0, None, t))
        busy.append((t, t + f.duration + tail))
    return sorted(out, key=lambda r: r.flow)


# --------------------------------------------------------------------------
# engine


class ClockRegressionError(RuntimeError):
    pass


class AttachError(RuntimeError):
    def __init__(self, code: str, cell: str):
        self.code = code
        self.cell = cell
        super().__init__(f"{code}: {cell}")


@dataclass
class Transition:
    """An in-flight registration change (switch or handoff)."""

    target: str | None
    kind: SwitchKind
    start: float
    from_network: str | None
    n_t: int = 0
    scan_cost: float = 0.0
    attach_cost: float = 0.0
    platform_overhead: float = 0.0


@dataclass(order=True)
class _Queued:
    time: float
    seq: int
    handler: Callable = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)


class Engine:
    """Single-run event loop. Handlers are ``fn(engine, **payload)``; ties run in insertion order."""

    def __init__(self, scenario: Scenario, *, tick: float = 1.0, disruption_logging: bool = True):
        if not tick > 0:
            raise ValueError("tick interval must be > 0")
        self.scenario = scenario
        self.tick = tick
        self.horizon = scenario.end_time
        self.clock = 0.0
        self.device = DeviceState()
        self.timeline = Timeline()
        self.log: list[CellularEvent] = []
        self.switch_log: list[SwitchRecord] = []
        self.transition: Transition | None = None
        self.rng = random.Random(scenario.seed)
        self.listeners: list[Callable[[CellularEvent], None]] = []
        self.tick_hooks: list[Callable[["Engine", float], None]] = []
        self.uplink_hooks: list[Callable[["Engine", Flow], None]] = []
        self.deregister_hooks: list[Callable[["Engine"], None]] = []
        self._queue: list[_Queued] = []
        self._seq = itertools.count()
        self._cancelled: set[int] = set()
        self._paging_gen = 0
        self._emitted: list[CellularEvent] = []
        self._arrived = 0
        self._busy_cache: tuple | None = None
        self._uplink_end = -math.inf
        self.finished = False

    # -- queue -----------------------------------------------------------
    def schedule(self, t: float, handler: Callable, **payload) -> int:
        if t < self.clock:
            raise ClockRegressionError(f"event at {t} before clock {self.clock}")
        seq = next(self._seq)
        heapq.heappush(self._queue, _Queued(t, seq, handler, payload))
        return seq

    def cancel(self, token: int | None) -> None:
        if token is not None:
            self._cancelled.add(token)

    def peek_time(self) -> float | None:
        while self._queue and self._queue[0].seq in self._cancelled:
            heapq.heappop(self._queue)
        return self._queue[0].time if self._queue else None

    def step(self) -> list[CellularEvent]:
        """Process exactly one queued event and return the cellular events it emitted."""
        if self.peek_time() is None:
            return []
        item = heapq.heappop(self._queue)
        if item.time < self.clock:
            raise ClockRegressionError(f"event at {item.time} before clock {self.clock}")
        self.clock = self.device.clock = item.time
        self._emitted = []
        item.handler(self, **item.payload)
        self._refresh_mode()
        return self._emitted

    def run(self, until: float | None = None) -> None:
        until = self.horizon if until is None else until
        while True:
            t = self.peek_time()
            if t is None or t > until:
                break
            self.step()
        self.clock = self.device.clock = max(self.clock, until)

    def emit(self, kind: EventKind, **payload) -> CellularEvent:
        ev = CellularEvent(self.clock, kind, payload)
        self.log.append(ev)
        self._emitted.append(ev)
        for fn in list(self.listeners):
            fn(ev)
        return ev

    # -- setup -----------------------------------------------------------
    def start(self) -> None:
        s = self.scenario
        for i, f in enumerate(s.workload):
            if f.arrival_time <= self.horizon:
                self.schedule(f.arrival_time, Engine._flow_arrival, index=i)
        if s.initial_registration is not None:
            cell = s.best_cell(s.initial_registration, 0.0)
            if cell is None:
                cell = s.cells_of(s.initial_registration)[0]
            self.register(cell.cell_id)
        self.schedule(0.0, Engine._tick_handler)

    # -- device operations -------------------------------------------------
    def sib(self, cell_id: str) -> SibConfig:
        return self.scenario.cell(cell_id).sib

    def register(self, cell_id: str) -> None:
        cell = self.scenario.cell(cell_id)
        self.device.registered = cell.network
        self.device.serving_cell = cell_id
        self.timeline.begin_registration(self.clock, cell.network, cell_id)
        for ev in registration_events(self.clock, cell, self.scenario):
            self.log.append(ev)
            self._emitted.append(ev)
            for fn in list(self.listeners):
                fn(ev)
        self._restart_paging()

    def deregister(self, reason: str) -> None:
        net = self.device.registered
        if net is None:
            return
        self.end_off_frequency()
        self.timeline.end_registration(self.clock)
        self.device.registered = None
        self.device.serving_cell = None
        self._paging_gen += 1
        if reason != "out_of_service":
            self.emit(EventKind.DETACH, network=net, reason=reason)
        for fn in list(self.deregister_hooks):
            fn(self)

    def set_serving_cell(self, cell_id: str) -> None:
        """Idle-mode move between cells of the registered network (no disruption)."""
        cell = self.scenario.cell(cell_id)
        self.device.serving_cell = cell_id
        self.timeline.begin_registration(self.clock, cell.network, cell_id)
        sib = cell.sib
        self.emit(EventKind.RRC_RECONFIG, cell=cell_id, network=cell.network,
                  tdd_config=sib.tdd_config, paging_cycle=sib.paging_cycle,
                  handoff_priority=sib.reselection_priority,
                  handoff_threshold=sib.reselection_threshold)
        self._restart_paging()

    def attach(self, cell_id: str, *, inter_carrier: bool = True,
               on_done: Callable[["Engine", bool, float], None] | None = None) -> float:
        """Start attaching to ``cell_id``; returns the attach duration.

        The device registers when the attach completes; ``on_done(engine, ok, duration)``
        fires then. Detach is free, so the caller deregisters before attaching.
        """
        cell = self.scenario.cell(cell_id)
        if cell.sib.barred_at(self.clock):
            raise AttachError("CELL_BARRED", cell_id)
        if not self.scenario.is_available(cell_id, self.clock):
            raise AttachError("CELL_UNAVAILABLE", cell_id)
        duration = cell.attach_time + (self.scenario.platform_overhead if inter_carrier else 0.0)
        p = self.scenario.attach_failure_prob
        fail = p > 0 and self.rng.random() < p
        self.schedule(self.clock + duration, Engine._attach_done,
                      cell_id=cell_id, fail=fail, duration=duration, on_done=on_done)
        return duration

    def _attach_done(self, cell_id: str, fail: bool, duration: float, on_done) -> None:
        if not fail:
            self.register(cell_id)
        if on_done is not None:
            on_done(self, not fail, duration)

    def begin_off_frequency(self) -> None:
        if self.device.registered is not None:
            self.timeline.begin_off_frequency(self.clock)

    def end_off_frequency(self) -> None:
        self.timeline.end_off_frequency(self.clock)

    @property
    def off_frequency(self) -> bool:
        return self.timeline.off_interval_at(self.clock) is not None

    @property
    def chosen_network(self) -> str | None:
        if self.transition is not None:
            return self.transition.target
        return self.device.registered

    def finish_transition(self, to_network: str | None) -> SwitchRecord:
        tr = self.transition
        rec = SwitchRecord(
            t_start=tr.start, t_end=self.clock, from_network=tr.from_network,
            to_network=to_network, kind=tr.kind, n_t=tr.n_t, scan_cost=tr.scan_cost,
            attach_cost=tr.attach_cost, platform_overhead=tr.platform_overhead,
        )
        self.switch_log.append(rec)
        self.transition = None
        return rec

    # -- traffic ---------------------------------------------------------
    def deliveries(self, upto: float | None = None) -> list[DeliveryRecord]:
        s = self.scenario
        only = None if upto is None else [
            i for i, f in enumerate(s.workload) if f.arrival_time <= upto
        ]
        return deliver_traffic(s.workload, self.timeline, self.sib, self.horizon,
                               s.inactivity_tail, only)

    def busy_intervals(self) -> list[tuple[float, float]]:
        """Activity intervals of flows already known to the device at the current clock."""
        key = (self.timeline.version, self._arrived, self.clock)
        if self._busy_cache and self._busy_cache[0] == key:
            return self._busy_cache[1]
        s = self.scenario
        out = []
        for r in self.deliveries(upto=self.clock):
            if r.delivered_at is not None and r.delivered_at <= self.clock:
                f = s.workload[r.flow]
                out.append((r.delivered_at, r.delivered_at + f.duration + s.inactivity_tail))
        self._busy_cache = (key, out)
        return out

    def is_busy(self, t: float | None = None) -> bool:
        t = self.clock if t is None else t
        return any(a <= t < b for a, b in self.busy_intervals())

    def _flow_arrival(self, index: int) -> None:
        self._arrived += 1
        f = self.scenario.workload[index]
        if f.direction is Direction.UPLINK:
            self._uplink_end = max(self._uplink_end, self.clock + f.duration)
            for fn in list(self.uplink_hooks):
                fn(self, f)

    def _refresh_mode(self) -> None:
        d = self.device
        d.active_uplink = self.clock < self._uplink_end
        if self.off_frequency:
            d.rrc_mode = RrcMode.OFF_FREQUENCY
        elif d.serving_cell is None:
            d.rrc_mode = RrcMode.AWAKE
        elif self.is_busy() or in_on_duration(self.sib(d.serving_cell), self.clock):
            d.rrc_mode = RrcMode.AWAKE
        else:
            d.rrc_mode = RrcMode.SLEEP

    # -- paging cycle ----------------------------------------------------
    def _restart_paging(self) -> None:
        self._paging_gen += 1
        sib = self.sib(self.device.serving_cell)
        if in_on_duration(sib, self.clock):
            k = _cycle_index(sib, self.clock)
            self.schedule(k * sib.paging_cycle + sib.on_duration, Engine._paging,
                          gen=self._paging_gen, k=k)
        else:
            self.schedule(next_paging_occasion(sib, self.clock), Engine._wake,
                          gen=self._paging_gen)

    def _wake(self, gen: int) -> None:
        if gen != self._paging_gen or self.clock >= self.horizon:
            return
        sib = self.sib(self.device.serving_cell)
        k = _cycle_index(sib, self.clock)
        self.schedule(k * sib.paging_cycle + sib.on_duration, Engine._paging, gen=gen, k=k)

    def _paging(self, gen: int, k: int) -> None:
        if gen != self._paging_gen:
            return
        sib = self.sib(self.device.serving_cell)
        if not self.off_frequency:
            self.emit(EventKind.PAGING, cell=self.device.serving_cell, data_pending=self.is_busy())
        nxt = (k + 1) * sib.paging_cycle
        if nxt < self.horizon:
            self.schedule(nxt, Engine._wake, gen=gen)

    # -- periodic network-side measurement -----------------------------------
    def _tick_handler(self) -> None:
        t = self.clock
        if self.device.registered is not None and self.transition is None and not self.off_frequency:
            self.network_measurement()
        for fn in list(self.tick_hooks):
            fn(self, t)
        nxt = t + self.tick
        if nxt < self.horizon:
            self.schedule(nxt, Engine._tick_handler)

    def network_measurement(self) -> None:
        s, t = self.scenario, self.clock
        net = self.device.registered
        best = s.best_cell(net, t)
        plmn = s.network(net).plmn
        others = [c for n in s.networks if n.plmn == plmn and n.network_id != net
                  for c in s.cells_of(n.network_id)]
        meas = {c.cell_id: s.rss(c.cell_id, t) for c in others}
        if best is None:
            # serving network lost: fall back to any usable same-carrier cell first
            usable = [c for c in others if meas[c.cell_id] >= s.service_floor
                      and not c.sib.barred_at(t)]
            if usable:
                target = min(usable, key=lambda c: (-c.sib.reselection_priority,
                                                    -meas[c.cell_id], c.cell_id))
                self.intra_carrier_handoff(target.cell_id)
            else:
                self.out_of_service()
            return
        if best.cell_id != self.device.serving_cell:
            self.set_serving_cell(best.cell_id)
        rss = s.rss(best.cell_id, t)
        self.emit(EventKind.RADIO_MEAS, cell=best.cell_id, network=net, rss=rss)
        meas[best.cell_id] = rss
        target = network_reselection(best, others, meas, s.service_floor)
        if target is not None and not s.cell(target).sib.barred_at(t):
            self.intra_carrier_handoff(target)

    def intra_carrier_handoff(self, cell_id: str) -> None:
        """Network-initiated move to another RAT of the same carrier: one attach, no scan."""
        from_net = self.device.registered
        cell = self.scenario.cell(cell_id)
        self.deregister("handoff")
        self.transition = Transition(cell.network, SwitchKind.INTRA_RAT, self.clock, from_net)
        duration = self.attach(cell_id, inter_carrier=False, on_done=Engine._handoff_done)
        self.transition.attach_cost = duration

    def _handoff_done(self, ok: bool, duration: float) -> None:
        if ok:
            self.finish_transition(self.device.registered)
        else:
            net = self.transition.target
            self.finish_transition(None)
            self._declare_oos(net, None)

    def out_of_service(self) -> None:
        net, cell = self.device.registered, self.device.serving_cell
        self.deregister("out_of_service")
        self._declare_oos(net, cell)

    def _declare_oos(self, net: str | None, cell: str | None) -> None:
        self.emit(EventKind.OUT_OF_SERVICE, network=net, cell=cell)

    # -- export ----------------------------------------------------------
    def event_log_lines(self) -> list[str]:
        return [json.dumps(ev.to_record(), separators=(",", ":")) for ev in self.log]
