"""Legacy PLMN selection (the baseline) and the direct inter-carrier switch.

Switch time model for the direct path: the target network's cells are scanned
once, then the device attaches, so the disruption is
``sum(scan_time of target cells) + attach_time + platform_overhead``. Detach is free.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .envsim import AttachError, CellularEvent, DeviceState, Engine, EventKind, Transition
from .model import (
    Cell,
    NetworkScan,
    Scenario,
    ScanEntry,
    ScanResult,
    SwitchKind,
    SwitchRecord,
)

log = logging.getLogger(__name__)


class TargetNotScannedError(RuntimeError):
    pass


class SwitchInProgressError(RuntimeError):
    pass


class AttachFailedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SwitchTiming:
    n_t: int
    scan_cost: float  # sum of per-cell scan times actually paid
    t_attach: float
    platform_overhead: float = 0.0

    @property
    def T_t(self) -> float:
        return self.scan_cost / self.n_t if self.n_t else 0.0

    @property
    def t_switch_min(self) -> float:
        return self.t_attach

    @property
    def t_switch(self) -> float:
        return self.scan_cost + self.t_attach + self.platform_overhead


def baseline_trigger(device: DeviceState, event: CellularEvent) -> bool:
    """Legacy selection starts only once the serving network has failed."""
    return event.kind is EventKind.OUT_OF_SERVICE


def scan_order(scenario: Scenario, network_ids: Iterable[str]) -> list[Cell]:
    return [c for nid in network_ids for c in scenario.cells_of(nid)]


def measure_cells(scenario: Scenario, cells: Sequence[Cell], t0: float):
    """Scan ``cells`` back to back from ``t0``; each reading is taken when its scan completes."""
    per_net: dict[str, list[ScanEntry]] = {}
    t = t0
    times = []
    for cell in cells:
        times.append(cell.scan_time)
        t = t0 + math.fsum(times)
        per_net.setdefault(cell.network, []).append(scan_entry(scenario, cell, t))
    return per_net, math.fsum(times)


def scan_entry(scenario: Scenario, cell: Cell, t: float) -> ScanEntry:
    rss = scenario.rss(cell.cell_id, t)
    if rss < scenario.service_floor:
        return ScanEntry(cell.cell_id, None, None, False, t)
    return ScanEntry(cell.cell_id, rss, cell.sib, cell.sib.barred_at(t), t)


def build_scan(scenario: Scenario, per_net: dict[str, list[ScanEntry]], order: Iterable[str],
               *, partial: bool = False, t: float = 0.0, incomplete: Iterable[str] = ()) -> ScanResult:
    open_nets = set(incomplete)
    nets = []
    for nid in order:
        if nid in per_net:
            n = scenario.network(nid)
            nets.append(NetworkScan(nid, n.plmn, n.rat, tuple(per_net[nid]), nid not in open_nets))
    return ScanResult(tuple(nets), partial, t)


def exhaustive_scan(scenario: Scenario, t0: float = 0.0,
                    priority: Sequence[str] | None = None) -> tuple[ScanResult, float]:
    """Scan every cell of every network: priority-list order, then band order."""
    order = list(priority or scenario.plmn_priority_list)
    order += [n.network_id for n in scenario.networks if n.network_id not in order]
    per_net, elapsed = measure_cells(scenario, scan_order(scenario, order), t0)
    return build_scan(scenario, per_net, order, t=t0 + elapsed), elapsed


def preference_select(scan: ScanResult, priority: Sequence[str]) -> str | None:
    """Highest-priority network with at least one available, unbarred cell."""
    for nid in priority:
        if nid in scan and any(e.available and not e.barred for e in scan[nid].entries):
            return nid
    return None


def attach_candidate(scan: NetworkScan) -> ScanEntry | None:
    usable = [e for e in scan.entries if e.available and not e.barred]
    return min(usable, key=lambda e: (-e.rss, e.cell_id)) if usable else None


def hard_switch_timing(scenario: Scenario, target_cell: str, scan_elapsed: float,
                       cells_scanned: int) -> SwitchTiming:
    cell = scenario.cell(target_cell)
    return SwitchTiming(cells_scanned, scan_elapsed, cell.attach_time, scenario.platform_overhead)


def direct_switch_timing(scenario: Scenario, target: str, attach_cell: str | None = None,
                         *, inter_carrier: bool = True) -> SwitchTiming:
    cells = scenario.cells_of(target)
    cell = scenario.cell(attach_cell) if attach_cell else cells[0]
    return SwitchTiming(
        n_t=len(cells),
        scan_cost=math.fsum(c.scan_time for c in cells),
        t_attach=cell.attach_time,
        platform_overhead=scenario.platform_overhead if inter_carrier else 0.0,
    )


class SwitchExecutor:
    """Runs both switch paths on an :class:`Engine`.

    Loss of service always falls back to legacy PLMN selection, whichever strategy
    is in charge; :meth:`direct_switch` is the user-triggered path.
    """

    def __init__(self, engine: Engine, priority: Sequence[str] | None = None):
        self.engine = engine
        self.priority = list(priority or engine.scenario.plmn_priority_list)
        self.rejected: list[tuple[float, str, str]] = []
        self.last_timing: SwitchTiming | None = None
        engine.listeners.append(self._on_event)

    def _on_event(self, ev: CellularEvent) -> None:
        if baseline_trigger(self.engine.device, ev) and self.engine.transition is None:
            self.engine.schedule(self.engine.clock, self._start_selection)

    # -- legacy PLMN selection ----------------------------------------------
    def start_selection(self, from_network: str | None = None) -> None:
        eng = self.engine
        eng.transition = Transition(None, SwitchKind.BASELINE, eng.clock, from_network)
        self._scan_pass()

    def _start_selection(self, engine: Engine) -> None:
        if engine.transition is None and engine.device.registered is None:
            lost = next((ev.payload["network"] for ev in reversed(engine.log)
                         if ev.kind is EventKind.OUT_OF_SERVICE), None)
            self.start_selection(lost)

    def _scan_pass(self) -> None:
        eng = self.engine
        if eng.clock >= eng.horizon:
            return
        scan, elapsed = exhaustive_scan(eng.scenario, eng.clock, self.priority)
        tr = eng.transition
        tr.n_t += scan.cells_scanned()
        tr.scan_cost += elapsed
        eng.schedule(eng.clock + elapsed, lambda e: self._after_scan(scan, list(self.priority)))

    def _after_scan(self, scan: ScanResult, remaining: list[str]) -> None:
        eng = self.engine
        while remaining:
            target = preference_select(scan, remaining)
            if target is None:
                break
            remaining = remaining[remaining.index(target) + 1:]
            entry = attach_candidate(scan[target])
            try:
                inter = self._inter_carrier(target)
                eng.attach(
                    entry.cell_id, inter_carrier=inter,
                    on_done=lambda e, ok, d, c=entry.cell_id, rem=remaining, sc=scan:
                    self._after_attach(ok, c, d, sc, rem),
                )
            except AttachError as exc:
                log.debug("selection attach refused: %s", exc)
                continue
            eng.transition.target = target
            return
        # nothing usable: keep searching
        self._scan_pass()

    def _after_attach(self, ok: bool, cell_id: str, duration: float, scan: ScanResult,
                      remaining: list[str]) -> None:
        eng = self.engine
        base = eng.scenario.cell(cell_id).attach_time
        eng.transition.attach_cost += base
        eng.transition.platform_overhead += duration - base
        if ok:
            eng.finish_transition(eng.device.registered)
            return
        eng.transition.target = None
        self._after_scan(scan, remaining)

    def _inter_carrier(self, target: str) -> bool:
        tr = self.engine.transition
        if tr is None or tr.from_network is None:
            return True
        s = self.engine.scenario
        return s.network(tr.from_network).plmn != s.network(target).plmn

    # -- direct switch ------------------------------------------------------
    def direct_switch(self, target: str, latest_scan: ScanResult | None, *,
                      check: bool = True) -> SwitchTiming:
        """Switch straight to ``target`` after re-scanning only its cells.

        ``check=False`` skips the scanned-target rule; only the oracle stack uses it.
        """
        eng = self.engine
        if eng.transition is not None:
            raise SwitchInProgressError(target)
        if check and (latest_scan is None or target not in latest_scan or latest_scan[target].rss is None):
            self.rejected.append((eng.clock, target, "TARGET_NOT_SCANNED"))
            raise TargetNotScannedError(target)
        s = eng.scenario
        from_net = eng.device.registered
        inter = from_net is None or s.network(from_net).plmn != s.network(target).plmn
        eng.deregister("switch")
        cells = s.cells_of(target)
        scan_cost = math.fsum(c.scan_time for c in cells)
        eng.transition = Transition(target, SwitchKind.DIRECT, eng.clock, from_net,
                                    n_t=len(cells), scan_cost=scan_cost)
        eng.schedule(eng.clock + scan_cost, lambda e: self._direct_attach(target, inter))
        timing = direct_switch_timing(s, target, inter_carrier=inter)
        self.last_timing = timing
        return timing

    def _direct_attach(self, target: str, inter: bool) -> None:
        eng = self.engine
        cell = eng.scenario.best_cell(target, eng.clock, accessible=True)
        if cell is not None:
            try:
                eng.attach(cell.cell_id, inter_carrier=inter,
                           on_done=lambda e, ok, d, c=cell.cell_id: self._direct_attach_done(e, ok, c, d))
                return
            except AttachError:
                pass
        self._direct_failed()

    def _direct_attach_done(self, engine: Engine, ok: bool, cell_id: str, duration: float) -> None:
        tr = engine.transition
        tr.attach_cost = engine.scenario.cell(cell_id).attach_time
        tr.platform_overhead = duration - tr.attach_cost
        if ok:
            engine.finish_transition(engine.device.registered)
        else:
            self._direct_failed()

    def _direct_failed(self) -> None:
        eng = self.engine
        from_net = eng.transition.from_network
        eng.finish_transition(None)
        self.start_selection(from_net)


def switch_log_records(records: Iterable[SwitchRecord]) -> list[dict]:
    return [r.to_record() for r in records]
