"""Scenario constructors for the bundled scenarios, the experiment scripts and the tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .model import (
    RAT,
    Cell,
    CarrierNetwork,
    Direction,
    Flow,
    HistoryRecord,
    Metric,
    PerformanceModel,
    QosProfile,
    RadioTrace,
    Scenario,
    ServiceRequirements,
    SibConfig,
    validate_scenario,
)

Curve = tuple[tuple[float, float], ...]

LAT_INTERACTIVE: Curve = ((-140, 400), (-120, 150), (-100, 60), (-80, 40), (-60, 35))
LAT_BACKGROUND: Curve = ((-140, 500), (-120, 220), (-100, 110), (-80, 90), (-60, 85))
LAT_3G: Curve = ((-140, 700), (-120, 320), (-100, 170), (-80, 120), (-60, 110))
THR_INTERACTIVE: Curve = ((-140, 0.5), (-120, 5), (-100, 20), (-80, 40), (-60, 45))
THR_BACKGROUND: Curve = ((-140, 0.3), (-120, 3), (-100, 12), (-80, 25), (-60, 28))
THR_3G: Curve = ((-140, 0.1), (-120, 1), (-100, 3), (-80, 6), (-60, 7))

CLASS_CURVES = {
    "class:Interactive": {"latency": LAT_INTERACTIVE, "throughput": THR_INTERACTIVE},
    "class:Background": {"latency": LAT_BACKGROUND, "throughput": THR_BACKGROUND},
}

QOS_T = QosProfile("Interactive", 1, 256.0, 25.0)
QOS_S = QosProfile("Background", 4, 200.0, 20.0)
DEAD = -160.0  # comfortably below the default service floor


@dataclass
class NetSpec:
    network_id: str
    plmn: str
    rat: RAT
    n_cells: int = 1
    scan_time: float | Sequence[float] = 0.4
    attach_time: float = 2.6
    band: str = "B1"
    qos: QosProfile = field(default_factory=QosProfile)
    sib: SibConfig = field(default_factory=SibConfig)

    def cell_ids(self) -> list[str]:
        return [f"{self.network_id}/c{i}" for i in range(self.n_cells)]

    def build(self) -> tuple[CarrierNetwork, list[Cell]]:
        ids = self.cell_ids()
        times = ([self.scan_time] * self.n_cells if isinstance(self.scan_time, (int, float))
                 else list(self.scan_time))
        cells = [Cell(cid, self.network_id, self.band, float(st), self.attach_time, self.sib)
                 for cid, st in zip(ids, times)]
        return CarrierNetwork(self.network_id, self.plmn, self.rat, tuple(ids), self.qos), cells


def assemble(name: str, specs: Sequence[NetSpec], trace: dict[str, Sequence[tuple[float, float]]],
             *, curves: dict | None = None, priority: Sequence[str] | None = None,
             default_rss: Sequence[tuple[float, float]] = ((0.0, DEAD),), **kw) -> Scenario:
    """Build and validate a scenario; cells missing from ``trace`` get ``default_rss``."""
    nets, cells = [], []
    for s in specs:
        n, cs = s.build()
        nets.append(n)
        cells.extend(cs)
    points = {c.cell_id: tuple(tuple(map(float, p)) for p in trace.get(c.cell_id, trace.get(c.network, default_rss)))
              for c in cells}
    perf = PerformanceModel(curves if curves is not None else dict(CLASS_CURVES))
    return validate_scenario(Scenario(
        name=name, networks=tuple(nets), cells=tuple(cells), trace=RadioTrace(points),
        performance=perf,
        plmn_priority_list=tuple(priority or [s.network_id for s in specs]), **kw,
    ))


def history_grid(scenario: Scenario, networks: Sequence[str], rss_values: Sequence[float]) -> tuple[HistoryRecord, ...]:
    """Past observations of both metrics on each network over a grid of RSS values."""
    out = []
    for nid in networks:
        net = scenario.network(nid)
        cell = scenario.cells_of(nid)[0].cell_id
        for r in rss_values:
            out.append(HistoryRecord(nid, float(r), cell,
                                     scenario.performance.value(net, Metric.LATENCY, r),
                                     scenario.performance.value(net, Metric.THROUGHPUT, r)))
    return tuple(out)


# --------------------------------------------------------------------------
# switch timing: 36 cells over four carriers, the device's carrier fails at t=11


def switch_timing(platform_overhead: float = 0.0) -> Scenario:
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 1, qos=QOS_T, band="B2"),
        NetSpec("T-3G", "T", RAT.RAT_3G, 9, qos=QOS_T, band="B4"),
        NetSpec("S-4G", "S", RAT.RAT_4G, 6, qos=QOS_S, band="B25"),
        NetSpec("S-3G", "S", RAT.RAT_3G, 6, qos=QOS_S, band="B26"),
        NetSpec("A-4G", "A", RAT.RAT_4G, 8, band="B17"),
        NetSpec("V-4G", "V", RAT.RAT_4G, 6, band="B13"),
    ]
    trace = {
        "T-4G": ((0, -90), (40, -90)),
        "S-4G/c0": ((0, -100), (10, -100), (11, -150), (40, -150)),
    }
    return assemble("switch_timing", specs, trace, initial_registration="S-4G",
                    monitor_networks=("T-4G", "S-4G"), platform_overhead=platform_overhead,
                    horizon=40.0)


# --------------------------------------------------------------------------
# two-segment trace: weak-but-alive serving carrier, then a same-carrier 3G handoff


TWO_SEGMENT_WINDOW = (60.0, 120.0)


def two_segment() -> Scenario:
    t_sib = SibConfig(reselection_threshold=-120.0, reselection_priority=0)
    t3_sib = SibConfig(reselection_threshold=-120.0, reselection_priority=1)
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 1, qos=QOS_T, sib=t_sib, band="B2"),
        NetSpec("T-3G", "T", RAT.RAT_3G, 1, qos=QOS_T, sib=t3_sib, band="B4"),
        NetSpec("S-4G", "S", RAT.RAT_4G, 1, qos=QOS_S, band="B25"),
        NetSpec("S-3G", "S", RAT.RAT_3G, 1, qos=QOS_S, band="B26"),
    ]
    trace = {
        "T-4G": ((0, -126), (58, -128), (60, -135), (120, -136)),
        "T-3G": ((0, DEAD), (58, DEAD), (60, -100), (120, -100)),
        "S-4G": ((0, -85), (120, -82)),
        "S-3G": ((0, -110), (120, -110)),
    }
    curves = dict(CLASS_CURVES)
    for nid in ("T-3G", "S-3G"):
        curves[nid] = {"latency": LAT_3G, "throughput": THR_3G}
    s = assemble("two_segment", specs, trace, curves=curves, initial_registration="T-4G",
                 horizon=120.0, priority=("T-4G", "T-3G", "S-4G", "S-3G"))
    from dataclasses import replace
    return validate_scenario(replace(
        s, history=history_grid(s, [n.network_id for n in s.networks], range(-135, -74, 5))))


# --------------------------------------------------------------------------
# minimal search: four carriers, two requested, each holding the same cell mix

MIX = (0.3, 0.4, 0.5, 0.6, 0.7, 0.9)


def minimal_search() -> Scenario:
    specs = [NetSpec(f"{c}-4G", c, RAT.RAT_4G, len(MIX), scan_time=MIX, band="B1")
             for c in ("T", "S", "A", "V")]
    trace = {n.network_id: ((0, -95), (30, -95)) for n in specs[:2]}
    trace.update({n.network_id: ((0, -105), (30, -105)) for n in specs[2:]})
    return assemble("minimal_search", specs, trace, initial_registration="T-4G",
                    monitor_networks=("T-4G", "S-4G"), horizon=30.0)


# --------------------------------------------------------------------------
# strategy benchmark: latency depends on rss and on the carrier's traffic class

# (T-4G, S-4G) rss per 60 s segment
BENCH_SEGMENTS = (
    (-95, -85), (-125, -90), (-105, -95), (-118, -88),
    (-92, -84), (-128, -96), (-102, -90), (-121, -92),
)


def benchmark(segment: float = 60.0) -> Scenario:
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 1, scan_time=0.3, qos=QOS_T, band="B2",
                sib=SibConfig(paging_cycle=1.28, reselection_threshold=-140.0)),
        NetSpec("T-3G", "T", RAT.RAT_3G, 1, scan_time=0.3, band="B4",
                qos=QosProfile("Interactive", 2, 42.0, 5.7),
                sib=SibConfig(paging_cycle=2.56, reselection_threshold=-140.0)),
        NetSpec("S-4G", "S", RAT.RAT_4G, 1, scan_time=0.3, qos=QOS_S, band="B25",
                sib=SibConfig(paging_cycle=1.28, tdd_config="TDD-2", reselection_threshold=-140.0)),
        NetSpec("S-3G", "S", RAT.RAT_3G, 1, scan_time=0.3, band="B26",
                qos=QosProfile("Background", 4, 14.7, 5.4),
                sib=SibConfig(paging_cycle=2.56, reselection_threshold=-140.0)),
    ]
    ramp = 2.0
    t4, s4 = [], []
    for k, (a, b) in enumerate(BENCH_SEGMENTS):
        t0 = k * segment
        t4 += [(t0 + (ramp if k else 0.0), a), (t0 + segment, a)]
        s4 += [(t0 + (ramp if k else 0.0), b), (t0 + segment, b)]
    horizon = segment * len(BENCH_SEGMENTS)
    trace = {
        "T-4G": tuple(t4), "S-4G": tuple(s4),
        "T-3G": ((0, -122), (horizon, -122)), "S-3G": ((0, -124), (horizon, -124)),
    }
    s = assemble("benchmark", specs, trace, initial_registration="T-4G", horizon=horizon)
    from dataclasses import replace
    return validate_scenario(replace(
        s, history=history_grid(s, [n.network_id for n in s.networks], range(-135, -79, 3))))


# --------------------------------------------------------------------------
# fault scenarios; each has a control that differs in one field


def fault_barred(control: bool = False) -> Scenario:
    window = () if control else ((0.0, 600.0),)
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 2, qos=QOS_T, sib=SibConfig(barred_intervals=window)),
        NetSpec("S-4G", "S", RAT.RAT_4G, 1, qos=QOS_S),
    ]
    trace = {"T-4G": ((0, -85), (20, -85)), "S-4G": ((0, -100), (20, -100))}
    return assemble("fault_barred" + ("_control" if control else ""), specs, trace,
                    initial_registration="S-4G", horizon=20.0)


def _profiled(s: Scenario) -> Scenario:
    from dataclasses import replace
    return validate_scenario(replace(
        s, history=tuple(HistoryRecord(n.network_id, -90.0) for n in s.networks)))


def fault_csfb(control: bool = False) -> Scenario:
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 1, qos=QOS_T, sib=SibConfig(voice_over_ps=False)),
        NetSpec("T-3G", "T", RAT.RAT_3G, 1, qos=QOS_T),
        NetSpec("S-4G", "S", RAT.RAT_4G, 1, qos=QOS_S, sib=SibConfig(voice_over_ps=True)),
    ]
    trace = {
        "T-4G": ((0, -85), (20, -85)),
        "T-3G": ((0, -100), (20, -100)) if control else ((0, DEAD), (20, DEAD)),
        "S-4G": ((0, -100), (20, -100)),
    }
    return _profiled(assemble("fault_csfb" + ("_control" if control else ""), specs, trace,
                              initial_registration="S-4G", horizon=20.0,
                              requirements=ServiceRequirements(needs_voice=True)))


def fault_mobility(control: bool = False) -> Scenario:
    specs = [
        NetSpec("T-4G", "T", RAT.RAT_4G, 1, qos=QOS_T,
                sib=SibConfig(reselection_threshold=-120.0, reselection_priority=0)),
        NetSpec("T-3G", "T", RAT.RAT_3G, 1, qos=QOS_T,
                sib=SibConfig(reselection_threshold=-120.0, reselection_priority=1)),
        NetSpec("S-4G", "S", RAT.RAT_4G, 1, qos=QOS_S),
    ]
    trace = {
        "T-4G": ((0, -90), (20, -90)) if control else ((0, -125), (20, -125)),
        "T-3G": ((0, -95), (20, -95)),
        "S-4G": ((0, -100), (20, -100)),
    }
    return _profiled(assemble("fault_mobility" + ("_control" if control else ""), specs, trace,
                              initial_registration="S-4G", horizon=20.0))


FAULT_BUILDERS = {"barred": fault_barred, "csfb": fault_csfb, "mobility": fault_mobility}


def bundled() -> dict[str, Scenario]:
    out = {
        "switch_timing": switch_timing(),
        "two_segment": two_segment(),
        "minimal_search": minimal_search(),
        "benchmark": benchmark(),
    }
    for kind, fn in FAULT_BUILDERS.items():
        for control in (False, True):
            s = fn(control)
            out[s.name] = s
    return out


# --------------------------------------------------------------------------
# randomized monitoring scenarios (non-disruption property)


def random_monitoring_scenario(rng: random.Random, horizon: float = 20.0) -> Scenario:
    """Serving network always in good coverage, 1-3 other networks to scan, random traffic."""
    cycle = rng.choice((0.32, 0.64, 1.28, 2.56))
    sib = SibConfig(paging_cycle=cycle, on_duration=cycle * rng.uniform(0.05, 0.3),
                    reselection_threshold=-140.0)
    specs = [NetSpec("S-4G", "S", RAT.RAT_4G, rng.randint(1, 2), sib=sib, qos=QOS_S)]
    for i in range(rng.randint(1, 3)):
        n = rng.randint(1, 4)
        specs.append(NetSpec(f"N{i}-4G", f"N{i}", RAT.RAT_4G, n,
                             scan_time=[round(rng.uniform(0.05, 1.5), 3) for _ in range(n)]))
    trace = {"S-4G": ((0, -80), (horizon, -80))}
    for s in specs[1:]:
        trace[s.network_id] = ((0, rng.uniform(-130, -70)), (horizon, rng.uniform(-130, -70)))
    flows = []
    for _ in range(rng.randint(2, 14)):
        flows.append(Flow(round(rng.uniform(0, horizon), 3),
                          rng.choice((Direction.DOWNLINK, Direction.DOWNLINK, Direction.UPLINK)),
                          round(rng.uniform(0.05, 2.0), 3)))
    flows.sort(key=lambda f: f.arrival_time)
    return assemble(f"random-{rng.random():.12f}", specs, trace, initial_registration="S-4G",
                    workload=tuple(flows), horizon=horizon,
                    inactivity_tail=rng.choice((0.0, 0.0, round(rng.uniform(0, 0.5), 3))),
                    seed=rng.randrange(2**31))
