"""Active monitoring of user-chosen networks while registered.

Scans only the requested networks (minimal search), packs cell scans into DRX
sleep windows that carry no traffic (disruption avoidance), and hands partial
results to a decision callback as each network completes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .envsim import EPS, Engine, EventKind, sleep_windows
from .model import Cell, Flow, Scenario, ScanEntry, ScanResult, SibConfig
from .switching import build_scan, scan_entry


class UnknownNetworkError(KeyError):
    pass


class NoSleepWindowError(RuntimeError):
    """No traffic-free sleep time left before the horizon; the scan is deferred."""

    def __init__(self, plan: "ScanPlan"):
        self.plan = plan
        super().__init__("NO_SLEEP_WINDOW")


class MonitorReentryError(RuntimeError):
    pass


@dataclass(frozen=True)
class MonitorRequest:
    requested_networks: tuple[str, ...]
    disruption_avoidance: bool = True

    def __post_init__(self):
        nets = tuple(self.requested_networks)
        object.__setattr__(self, "requested_networks", nets)
        if not nets:
            raise ValueError("monitor request needs at least one network")
        if len(set(nets)) != len(nets):
            raise ValueError("duplicate network in monitor request")


@dataclass
class ScanPlan:
    """Cells in scan order, each with the [start, end) slots assigned to it so far."""

    cells: tuple[Cell, ...]
    networks: tuple[str, ...]
    slots: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    @property
    def entries(self) -> list[tuple[str, list[tuple[float, float]]]]:
        return [(c.cell_id, list(self.slots.get(c.cell_id, []))) for c in self.cells]

    def assigned(self, cell_id: str) -> float:
        return math.fsum(e - s for s, e in self.slots.get(cell_id, []))

    def remaining(self, cell: Cell) -> float:
        return max(0.0, cell.scan_time - self.assigned(cell.cell_id))

    def done(self, scanned: Iterable[str]) -> bool:
        """Termination condition: every cell of every requested network scanned."""
        have = set(scanned)
        return all(c.cell_id in have for c in self.cells)

    @property
    def total_scan_time(self) -> float:
        return math.fsum(c.scan_time for c in self.cells)


def minimal_search_filter(request: MonitorRequest, scenario: Scenario) -> ScanPlan:
    """Plan skeleton covering exactly the requested networks' cells, request order then band."""
    unknown = [n for n in request.requested_networks if n not in scenario.network_map]
    if unknown:
        raise UnknownNetworkError(", ".join(unknown))
    cells = tuple(c for nid in request.requested_networks for c in scenario.cells_of(nid))
    return ScanPlan(cells, request.requested_networks)


def _merge(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for s, e in sorted(intervals):
        if e <= s:
            continue
        if out and s <= out[-1][1]:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return [(s, e) for s, e in out]


def free_windows(sib: SibConfig, busy: Sequence[tuple[float, float]], from_t: float,
                 until: float = math.inf) -> Iterator[tuple[float, float]]:
    """Sleep windows from ``from_t`` with traffic-busy time cut out, clipped to ``until``."""
    blocks = _merge(busy)
    for s, e in sleep_windows(sib, from_t):
        if s >= until:
            return
        e = min(e, until)
        for bs, be in blocks:
            if be <= s or bs >= e:
                continue
            if bs > s:
                yield s, bs
            s = max(s, be)
            if s >= e:
                break
        if e > s:
            yield s, e


def schedule_scan_slots(plan: ScanPlan, sib: SibConfig, busy: Sequence[tuple[float, float]],
                        from_t: float, *, until: float = math.inf) -> ScanPlan:
    """Greedy-earliest packing of every cell's scan time into free sleep time.

    A scan that outlasts its window resumes in the next free window with the time
    still owed. Raises :class:`NoSleepWindowError` when no free sleep time exists
    before ``until`` at all; cells that only partly fit keep the slots they got.
    """
    out = ScanPlan(plan.cells, plan.networks, {k: list(v) for k, v in plan.slots.items()})
    pending = [c for c in plan.cells if out.remaining(c) > EPS]
    if not pending:
        return out
    windows = free_windows(sib, busy, from_t, until)
    cur = next(windows, None)
    if cur is None:
        raise NoSleepWindowError(out)
    for cell in pending:
        need = out.remaining(cell)
        while need > EPS and cur is not None:
            s, e = cur
            end = min(e, s + need)
            out.slots.setdefault(cell.cell_id, []).append((s, end))
            need -= end - s
            cur = (end, e) if e - end > EPS else next(windows, None)
        if cur is None:
            break
    return out


# --------------------------------------------------------------------------
# online execution on the engine

Callback = Callable[[ScanResult], object]


class MonitorRound:
    """One pass over a plan, executed slot by slot on the engine.

    With avoidance on, only the next slot is planned, from the traffic known at the
    current clock, and it is re-checked when it is due; an uplink burst cuts a
    running slot short. With avoidance off the whole plan runs back to back as a
    single off-frequency stretch.
    """

    def __init__(self, engine: Engine, request: MonitorRequest, callback: Callback | None = None,
                 on_finish: Callable[["MonitorRound"], None] | None = None):
        self.engine = engine
        self.request = request
        self.callback = callback
        self.on_finish = on_finish
        self.plan = minimal_search_filter(request, engine.scenario)
        self.entries: dict[str, list[ScanEntry]] = {}
        self.idx = 0
        self.owed = self.plan.cells[0].scan_time if self.plan.cells else 0.0
        self.slot: tuple[float, float] | None = None
        self.token: int | None = None
        self.log: list[dict] = []
        self.slot_times: list[float] = []
        self.cells_done: list[Cell] = []
        self.results: list[ScanResult] = []
        self.finished = False
        self.deferred = False
        self.cancelled = False
        self.in_callback = False
        self.final_call = False
        self.started_at = engine.clock
        self.contiguous = False

    # -- lifecycle ---------------------------------------------------------
    def start(self) -> "MonitorRound":
        eng = self.engine
        eng.uplink_hooks.append(self._on_uplink)
        eng.deregister_hooks.append(self._on_deregister)
        if not self.plan.cells:
            self._finish()
        elif self.avoiding:
            self._plan_next()
        else:
            self.contiguous = True
            eng.begin_off_frequency()
            self._run_contiguous()
        return self

    @property
    def avoiding(self) -> bool:
        return self.request.disruption_avoidance and self.engine.device.registered is not None

    @property
    def result(self) -> ScanResult | None:
        return self.results[-1] if self.results else None

    @property
    def scan_elapsed(self) -> float:
        return math.fsum(self.slot_times)

    @property
    def cells_scanned(self) -> int:
        return len(self.cells_done)

    @property
    def scan_time(self) -> float:
        """Radio time spent measuring completed cells (excludes any interrupted partial slot)."""
        return math.fsum(c.scan_time for c in self.cells_done)

    def cancel(self) -> None:
        if self.finished:
            return
        self.cancelled = True
        self.engine.cancel(self.token)
        if self.slot is not None:
            self._close_slot(self.engine.clock)
        self._finish()

    def _finish(self) -> None:
        if self.finished:
            return
        self.finished = True
        self.engine.cancel(self.token)
        self.token = None
        if self.contiguous or self.slot is not None:
            self.engine.end_off_frequency()
        self.slot = None
        for hooks, fn in ((self.engine.uplink_hooks, self._on_uplink),
                          (self.engine.deregister_hooks, self._on_deregister)):
            if fn in hooks:
                hooks.remove(fn)
        if self.on_finish is not None:
            self.on_finish(self)

    # -- contiguous mode ---------------------------------------------------
    def _run_contiguous(self) -> None:
        t = self.engine.clock
        end = t + self.owed
        if end > self.engine.horizon:
            self._finish()
            return
        self.slot = (t, end)
        self.token = self.engine.schedule(end, lambda e: self._contiguous_step())

    def _contiguous_step(self) -> None:
        s, e = self.slot
        self.log.append({"type": "slot", "cell": self.plan.cells[self.idx].cell_id,
                         "start": s, "end": e, "elapsed": e - s})
        self.slot_times.append(e - s)
        self.slot = None
        self.owed = 0.0
        self._cell_complete()
        if not self.finished:
            self._run_contiguous()

    # -- sleep-window mode -------------------------------------------------
    def _busy(self) -> list[tuple[float, float]]:
        eng = self.engine
        busy = list(eng.busy_intervals())
        if eng.device.active_uplink or eng._uplink_end > eng.clock:
            busy.append((eng.clock, eng._uplink_end))
        return busy

    def _next_free(self) -> tuple[float, float] | None:
        eng = self.engine
        sib = eng.sib(eng.device.serving_cell)
        return next(free_windows(sib, self._busy(), eng.clock, eng.horizon), None)

    def _plan_next(self) -> None:
        if not self.avoiding:
            # lost registration mid-round without a hook firing; nothing safe to do
            self._finish()
            return
        win = self._next_free()
        if win is None:
            self.deferred = True
            self._finish()
            return
        self.token = self.engine.schedule(win[0], lambda e: self._slot_start())

    def _slot_start(self) -> None:
        self.token = None
        win = self._next_free()
        if win is None:
            self.deferred = True
            self._finish()
            return
        s, e = win
        now = self.engine.clock
        if s > now + EPS:
            self.token = self.engine.schedule(s, lambda e_: self._slot_start())
            return
        end = min(e, now + self.owed)
        self.slot = (now, end)
        self.engine.begin_off_frequency()
        self.token = self.engine.schedule(end, lambda e_: self._slot_end())

    def _close_slot(self, t: float) -> None:
        s, _ = self.slot
        self.engine.end_off_frequency()
        elapsed = t - s
        self.log.append({"type": "slot", "cell": self.plan.cells[self.idx].cell_id,
                         "start": s, "end": t, "elapsed": elapsed})
        self.slot_times.append(elapsed)
        self.owed -= elapsed
        self.slot = None

    def _slot_end(self) -> None:
        self.token = None
        self._close_slot(self.engine.clock)
        if self.owed <= EPS:
            self.owed = 0.0
            self._cell_complete()
        if not self.finished:
            self._plan_next()

    def _on_uplink(self, engine: Engine, flow: Flow) -> None:
        if self.finished or self.contiguous:
            return
        if self.slot is not None:
            engine.cancel(self.token)
            self._close_slot(engine.clock)
        else:
            engine.cancel(self.token)
        self.token = None
        self._plan_next()

    def _on_deregister(self, engine: Engine) -> None:
        if not self.in_callback:
            self.cancel()

    # -- results -----------------------------------------------------------
    def _cell_complete(self) -> None:
        eng = self.engine
        cell = self.plan.cells[self.idx]
        entry = scan_entry(eng.scenario, cell, eng.clock)
        self.entries.setdefault(cell.network, []).append(entry)
        self.cells_done.append(cell)
        if entry.available:
            net = eng.scenario.network(cell.network)
            eng.emit(EventKind.RADIO_MEAS, cell=cell.cell_id, network=net.network_id, rss=entry.rss)
            eng.emit(EventKind.RRC_SIB1, cell=cell.cell_id, network=net.network_id,
                     plmn=net.plmn, barred=entry.barred)
            eng.emit(EventKind.RRC_SIB_RESEL, cell=cell.cell_id, network=net.network_id,
                     reselection_priority=cell.sib.reselection_priority,
                     reselection_threshold=cell.sib.reselection_threshold)
        self.idx += 1
        last_of_net = self.idx == len(self.plan.cells) or self.plan.cells[self.idx].network != cell.network
        if self.idx < len(self.plan.cells):
            self.owed = self.plan.cells[self.idx].scan_time
        if last_of_net:
            self._deliver()
        if not self.finished and self.idx == len(self.plan.cells):
            # closing call with the complete result, after the per-network ones
            self.final_call = True
            self._invoke(self.results[-1])
            self.final_call = False
            if not self.finished:
                self._finish()

    def _deliver(self) -> None:
        eng = self.engine
        done = [n for n in self.plan.networks if n in self.entries
                and len(self.entries[n]) == len(eng.scenario.network(n).cells)]
        partial = len(done) < len(self.plan.networks)
        scan = build_scan(eng.scenario, {n: self.entries[n] for n in done}, self.plan.networks,
                          partial=partial, t=eng.clock)
        self.results.append(scan)
        self._invoke(scan)

    def _invoke(self, scan: ScanResult) -> None:
        eng = self.engine
        self.log.append({"type": "callback", "time": eng.clock, "partial": scan.partial,
                         "networks": scan.network_ids(), "final": self.final_call})
        if self.callback is None:
            return
        active = getattr(eng, "_monitor_callback_active", False)
        eng._monitor_callback_active = True
        self.in_callback = True
        try:
            self.callback(scan)
        finally:
            self.in_callback = False
            eng._monitor_callback_active = active
        if eng.transition is not None or eng.device.registered is None:
            # a switch was committed: drop the rest of the plan
            self.cancel()


def monitor(request: MonitorRequest, engine: Engine, callback: Callback | None = None,
            on_finish: Callable[[MonitorRound], None] | None = None) -> MonitorRound:
    """Start a monitoring round on ``engine``; results arrive through ``callback``."""
    if getattr(engine, "_monitor_callback_active", False):
        raise MonitorReentryError("monitor() called from inside a decision callback")
    return MonitorRound(engine, request, callback, on_finish).start()


def run_monitor(scenario: Scenario, request: MonitorRequest, callback: Callback | None = None,
                *, at: float = 0.0) -> tuple[ScanResult | None, MonitorRound, Engine]:
    """Convenience: start an engine, begin one round at ``at`` and run it to completion."""
    eng = Engine(scenario)
    eng.start()
    holder: dict[str, MonitorRound] = {}

    def begin(e: Engine) -> None:
        holder["round"] = monitor(request, e, callback)

    eng.schedule(at, begin)
    while eng.peek_time() is not None and ("round" not in holder or not holder["round"].finished):
        eng.step()
    rnd = holder["round"]
    return rnd.result, rnd, eng
