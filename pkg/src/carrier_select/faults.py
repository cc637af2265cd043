"""Screens monitoring results for switch targets that would misbehave after the switch.

Three hazards: every usable cell is access-barred; voice is needed but the target
4G network relies on a 3G fallback that is not around; or the target's own
reselection rules would immediately push the device to another network.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .envsim import network_reselection
from .model import RAT, Cell, NetworkScan, ScanResult, ServiceRequirements, SibConfig
from .profiles import ProfileStore


class Verdict(str, Enum):
    ALLOWED = "ALLOWED"
    BARRED = "BARRED"
    INCOMPLETE_SERVICE = "INCOMPLETE_SERVICE"
    MOBILITY_CONFLICT = "MOBILITY_CONFLICT"


@dataclass(frozen=True)
class FaultVerdict:
    network_id: str
    verdict: Verdict
    detail: str | None = None  # final network for MOBILITY_CONFLICT
    warning: str | None = None  # e.g. MISSING_PROFILE, MISSING_SIB
    time: float = 0.0

    @property
    def allowed(self) -> bool:
        return self.verdict is Verdict.ALLOWED

    def to_record(self) -> dict:
        return {"time": self.time, "network": self.network_id,
                "verdict": self.verdict.value, "detail": self.detail}


class GuardRejection(RuntimeError):
    def __init__(self, target: str, reason: str):
        self.target = target
        self.reason = reason
        super().__init__(f"{reason}: {target}")


def check_forbidden(ns: NetworkScan) -> FaultVerdict:
    """BARRED when no available cell is open for access.

    A cell whose SIB1 could not be read counts as barred. A network with no
    available cell at all is also BARRED: there is nothing to attach to.
    """
    avail = ns.available_entries
    missing = any(e.sib is None for e in avail)
    open_cells = [e for e in avail if e.sib is not None and not e.barred]
    verdict = Verdict.ALLOWED if open_cells else Verdict.BARRED
    return FaultVerdict(ns.network_id, verdict, warning="MISSING_SIB" if missing else None)


def check_service_completeness(ns: NetworkScan, profiles: ProfileStore, scan: ScanResult,
                               req: ServiceRequirements) -> FaultVerdict:
    if not req.needs_voice or ns.rat is not RAT.RAT_4G:
        return FaultVerdict(ns.network_id, Verdict.ALLOWED)
    best = ns.best_entry()
    vops = profiles.modal(ns.network_id, "voice_over_ps", best.cell_id if best else None)
    if vops is None:
        return FaultVerdict(ns.network_id, Verdict.ALLOWED, warning="MISSING_PROFILE")
    if vops:
        return FaultVerdict(ns.network_id, Verdict.ALLOWED)
    fallback = any(
        n.plmn == ns.plmn and n.rat is RAT.RAT_3G and n.available_entries for n in scan.networks
    )
    return FaultVerdict(ns.network_id, Verdict.ALLOWED if fallback else Verdict.INCOMPLETE_SERVICE)


def _resel_cell(profiles: ProfileStore, network: str, entry, fallback_sib: SibConfig | None) -> Cell | None:
    thr = profiles.modal(network, "handoff_threshold", entry.cell_id)
    pri = profiles.modal(network, "handoff_priority", entry.cell_id)
    if thr is None or pri is None:
        if fallback_sib is None:
            return None
        thr = fallback_sib.reselection_threshold if thr is None else thr
        pri = fallback_sib.reselection_priority if pri is None else pri
    sib = SibConfig(reselection_priority=int(pri), reselection_threshold=float(thr))
    return Cell(entry.cell_id, network, "", 1.0, 0.0, sib)


def check_mobility_coordination(ns: NetworkScan, scan: ScanResult, profiles: ProfileStore,
                                service_floor: float = -140.0) -> FaultVerdict:
    """Would the carrier hand the device on as soon as it lands on ``ns``?

    The serving side uses the profiled threshold and priority (learned from
    reconfiguration messages); same-carrier alternatives use their profile when
    known, else the reselection parameters they broadcast during the scan.
    """
    best = ns.best_entry()
    if best is None:
        return FaultVerdict(ns.network_id, Verdict.ALLOWED)
    serving = _resel_cell(profiles, ns.network_id, best, None)
    if serving is None:
        return FaultVerdict(ns.network_id, Verdict.ALLOWED, warning="MISSING_PROFILE")
    cands, meas, owner = [], {best.cell_id: best.rss}, {}
    for other in scan.networks:
        if other.plmn != ns.plmn or other.network_id == ns.network_id:
            continue
        for e in other.available_entries:
            c = _resel_cell(profiles, other.network_id, e, e.sib)
            if c is not None:
                cands.append(c)
                meas[c.cell_id] = e.rss
                owner[c.cell_id] = other.network_id
    target = network_reselection(serving, cands, meas, service_floor)
    if target is not None and owner.get(target, ns.network_id) != ns.network_id:
        return FaultVerdict(ns.network_id, Verdict.MOBILITY_CONFLICT, detail=owner[target])
    return FaultVerdict(ns.network_id, Verdict.ALLOWED)


def evaluate(scan: ScanResult, profiles: ProfileStore, req: ServiceRequirements, *,
             current: str | None = None, service_floor: float = -140.0,
             t: float = 0.0) -> list[FaultVerdict]:
    """One verdict per network in the scan; the first failing check decides."""
    out = []
    for ns in scan.networks:
        if ns.network_id == current:
            out.append(FaultVerdict(ns.network_id, Verdict.ALLOWED, time=t))
            continue
        warnings = []
        final = None
        for v in (check_forbidden(ns),
                  check_service_completeness(ns, profiles, scan, req),
                  check_mobility_coordination(ns, scan, profiles, service_floor)):
            if v.warning:
                warnings.append(v.warning)
            if not v.allowed:
                final = v
                break
        final = final or FaultVerdict(ns.network_id, Verdict.ALLOWED)
        out.append(FaultVerdict(final.network_id, final.verdict, final.detail,
                                ",".join(warnings) or None, t))
    return out


def filter_candidates(scan: ScanResult, profiles: ProfileStore, req: ServiceRequirements, *,
                      current: str | None = None, service_floor: float = -140.0,
                      t: float = 0.0) -> tuple[ScanResult, list[FaultVerdict]]:
    verdicts = evaluate(scan, profiles, req, current=current, service_floor=service_floor, t=t)
    keep = [v.network_id for v in verdicts if v.allowed]
    return scan.only(keep), [v for v in verdicts if not v.allowed]


class FaultGuard:
    """Stateful wrapper used during a run: filters each scan, then vets SwitchTo targets."""

    def __init__(self, profiles: ProfileStore, req: ServiceRequirements,
                 service_floor: float = -140.0):
        self.profiles = profiles
        self.req = req
        self.service_floor = service_floor
        self.latest: ScanResult | None = None
        self.log: list[FaultVerdict] = []
        self.warnings: list[FaultVerdict] = []

    def filter(self, scan: ScanResult, current: str | None, t: float) -> ScanResult:
        verdicts = evaluate(scan, self.profiles, self.req, current=current,
                            service_floor=self.service_floor, t=t)
        # On a partial scan exclusions are provisional (a 3G fallback may still
        # show up), so they filter the candidates but only complete scans are logged.
        if not scan.partial:
            self.log.extend(v for v in verdicts if not v.allowed)
            self.warnings.extend(v for v in verdicts if v.warning)
        self.latest = scan.only(v.network_id for v in verdicts if v.allowed)
        return self.latest

    def check_switch(self, target: str) -> None:
        if self.latest is None or target not in self.latest:
            raise GuardRejection(target, "TARGET_NOT_ALLOWED")

    def records(self) -> list[dict]:
        return [v.to_record() for v in self.log]
