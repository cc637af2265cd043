import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from carrier_select.builders import NetSpec, assemble, switch_timing
from carrier_select.envsim import CellularEvent, DeviceState, Engine, EventKind
from carrier_select.harness import Simulation
from carrier_select.model import RAT, SwitchKind
from carrier_select.switching import (
    SwitchExecutor,
    SwitchInProgressError,
    TargetNotScannedError,
    baseline_trigger,
    direct_switch_timing,
    exhaustive_scan,
    preference_select,
)


def _device():
    return DeviceState(registered="T-4G", serving_cell="T-4G/c0")


CELL = {"cell": "T-4G/c0", "network": "T-4G"}


@pytest.mark.parametrize("kind,payload,expected", [
    (EventKind.RADIO_MEAS, {**CELL, "rss": -130.0}, False),
    (EventKind.RADIO_MEAS, {**CELL, "rss": -80.0}, False),
    (EventKind.PAGING, {"cell": "T-4G/c0", "data_pending": False}, False),
    (EventKind.OUT_OF_SERVICE, CELL, True),
])
def test_baseline_trigger(kind, payload, expected):
    assert baseline_trigger(_device(), CellularEvent(1.0, kind, payload)) is expected


def four_carriers(counts=(10, 12, 8, 6), rss=-90.0):
    specs = [NetSpec(f"{c}-4G", c, RAT.RAT_4G, n) for c, n in zip("TSAV", counts)]
    return assemble("four", specs, {s.network_id: ((0, rss),) for s in specs}, horizon=60.0)


def test_exhaustive_scan_36_cells():
    s = four_carriers()
    scan, elapsed = exhaustive_scan(s)
    assert elapsed == pytest.approx(14.4, abs=1e-12)
    assert scan.cells_scanned() == 36


def test_exhaustive_scan_single_cell():
    s = four_carriers(counts=(1,))
    _, elapsed = exhaustive_scan(s)
    assert elapsed == 0.4


def test_exhaustive_scan_all_unavailable_still_costs_time():
    s = four_carriers(rss=-150.0)
    scan, elapsed = exhaustive_scan(s)
    assert elapsed == pytest.approx(14.4)
    assert scan.cells_scanned() == 36
    assert all(not e.available for n in scan.networks for e in n.entries)


def test_exhaustive_scan_order_priority_then_band():
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 1, band="B9"), NetSpec("S-4G", "S", RAT.RAT_4G, 1, band="B1"),
             NetSpec("S-3G", "S", RAT.RAT_3G, 1, band="B0")]
    s = assemble("o", specs, {n.network_id: ((0, -90),) for n in specs}, priority=("S-4G", "T-4G", "S-3G"), horizon=5.0)
    scan, _ = exhaustive_scan(s)
    assert scan.network_ids() == ["S-4G", "T-4G", "S-3G"]


def test_preference_select():
    s = four_carriers(counts=(1, 1))
    scan, _ = exhaustive_scan(s)
    assert preference_select(scan, ["T-4G", "S-4G"]) == "T-4G"
    s2 = assemble("x", [NetSpec("T-4G", "T", RAT.RAT_4G, 1), NetSpec("S-4G", "S", RAT.RAT_4G, 1)],
                  {"T-4G": ((0, -150),), "S-4G": ((0, -90),)}, horizon=5.0)
    scan2, _ = exhaustive_scan(s2)
    assert preference_select(scan2, ["T-4G", "S-4G"]) == "S-4G"
    scan3, _ = exhaustive_scan(four_carriers(counts=(1, 1), rss=-150.0))
    assert preference_select(scan3, ["T-4G", "S-4G"]) is None


def test_hard_switch_17_seconds():
    sim = Simulation(switch_timing(), "baseline")
    sim.run()
    (rec,) = sim.switch_records()
    assert rec["kind"] == "BASELINE" and rec["to_network"] == "T-4G"
    assert rec["n_t"] == 36
    assert rec["t_end"] - rec["t_start"] == pytest.approx(17.0, abs=1e-9)


def test_hard_switch_single_network_environment():
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 1)]
    s = assemble("one", specs, {"T-4G": ((0, -90), (5.9, -90), (6, -150), (6.05, -90), (30, -90))},
                 initial_registration="T-4G", horizon=30.0)
    sim = Simulation(s, "baseline")
    sim.run()
    rec = sim.switch_records()[0]
    assert rec["t_end"] - rec["t_start"] == pytest.approx(3.0, abs=1e-9)


def test_failed_attach_moves_on_to_next_candidate():
    # T-4G is lost at 5 s; A and S remain. Search for a seed whose first attach fails.
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 1), NetSpec("A-4G", "A", RAT.RAT_4G, 1),
             NetSpec("S-4G", "S", RAT.RAT_4G, 1)]
    base = assemble("retry", specs, {"T-4G": ((0, -90), (4, -90), (5, -150)),
                                     "A-4G": ((0, -90),), "S-4G": ((0, -90),)},
                    initial_registration="T-4G", horizon=40.0, attach_failure_prob=0.5)
    for seed in range(200):
        sim = Simulation(replace(base, seed=seed), "baseline")
        sim.run()
        rec = sim.switch_records()[0]
        if rec["to_network"] == "S-4G" and math.isclose(rec["attach_cost"], 5.2):
            break
    else:
        pytest.fail("no seed produced a single failed attach")
    # one scan pass (3 cells), two attaches: A-4G failed, then S-4G
    assert rec["n_t"] == 3 and rec["scan_cost"] == pytest.approx(1.2)
    assert rec["t_end"] - rec["t_start"] == pytest.approx(1.2 + 5.2)


def test_direct_switch_timing_breakdown():
    t = direct_switch_timing(switch_timing(), "T-4G")
    assert (t.n_t, t.T_t, t.t_attach) == (1, 0.4, 2.6)
    assert t.t_switch == pytest.approx(3.0, abs=1e-12) and t.t_switch_min == 2.6
    t2 = direct_switch_timing(switch_timing(platform_overhead=7.3), "T-4G")
    assert t2.t_switch == pytest.approx(10.3, abs=1e-12)


def _engine_with_scan(s):
    eng = Engine(s)
    eng.start()
    ex = SwitchExecutor(eng)
    scan, _ = exhaustive_scan(s)
    return eng, ex, scan


def test_direct_switch_on_engine_matches_timing():
    s = switch_timing(platform_overhead=7.3)
    eng, ex, scan = _engine_with_scan(s)
    ex.direct_switch("T-4G", scan.only(["T-4G"]))
    eng.run(until=20.0)
    rec = eng.switch_log[0]
    assert rec.kind is SwitchKind.DIRECT and rec.to_network == "T-4G"
    assert abs((rec.t_end - rec.t_start) - 10.3) <= 1e-9
    assert eng.device.registered == "T-4G"


def test_direct_switch_rejects_unscanned_target():
    s = switch_timing()
    eng, ex, scan = _engine_with_scan(s)
    with pytest.raises(TargetNotScannedError):
        ex.direct_switch("T-4G", scan.only(["S-4G"]))
    assert eng.device.registered == "S-4G" and eng.transition is None
    assert ex.rejected[0][1:] == ("T-4G", "TARGET_NOT_SCANNED")


def test_overlapping_switch_rejected():
    s = switch_timing()
    eng, ex, scan = _engine_with_scan(s)
    ex.direct_switch("T-4G", scan)
    with pytest.raises(SwitchInProgressError):
        ex.direct_switch("A-4G", scan)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=1, max_size=5),
       st.lists(st.floats(0.05, 1.5), min_size=12, max_size=12), st.floats(0.5, 5.0))
def test_direct_never_slower_than_hard(counts, times, attach):
    specs = [NetSpec(f"N{i}", f"P{i}", RAT.RAT_4G, n, scan_time=times[:n], attach_time=attach)
             for i, n in enumerate(counts)]
    s = assemble("dom", specs, {sp.network_id: ((0, -90),) for sp in specs}, horizon=5.0)
    _, elapsed = exhaustive_scan(s)
    target = specs[0].network_id
    direct = direct_switch_timing(s, target).t_switch
    hard = elapsed + attach
    if len(counts) == 1:
        assert direct == pytest.approx(hard, abs=1e-12)
    else:
        assert direct < hard
    assert direct - attach >= 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_baseline_never_leaves_a_working_carrier(seed):
    rng = random.Random(seed)
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 1), NetSpec("T-3G", "T", RAT.RAT_3G, 1),
             NetSpec("S-4G", "S", RAT.RAT_4G, 1)]
    trace = {n.network_id: tuple((float(t), rng.uniform(-160, -60)) for t in range(0, 61, 10))
             for n in specs}
    s = assemble("weak-serving", specs, trace, initial_registration="T-4G", horizon=60.0)
    sim = Simulation(s, "baseline")
    sim.run()
    # inter-carrier moves happen only via legacy selection after a loss of service
    oos = [e.time for e in sim.engine.log if e.kind is EventKind.OUT_OF_SERVICE]
    for rec in sim.switch_records():
        if rec["kind"] == "INTRA_RAT":
            continue
        assert rec["kind"] == "BASELINE"
        assert any(t <= rec["t_start"] for t in oos)
