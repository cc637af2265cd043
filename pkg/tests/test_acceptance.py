"""The ten acceptance criteria, each at its stated tolerance and runtime limit.

Every criterion prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary). Run directly with ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cart_oracle import oracle_train, query_points, random_dataset  # noqa: E402
from conftest import ACCEPTANCE_LINES  # noqa: E402

from carrier_select.builders import TWO_SEGMENT_WINDOW, random_monitoring_scenario  # noqa: E402
from carrier_select.envsim import DeliveryStatus, Engine  # noqa: E402
from carrier_select.faults import Verdict, evaluate  # noqa: E402
from carrier_select.harness import RunConfig, Simulation, export_report, run_scenario  # noqa: E402
from carrier_select.model import Direction, SwitchKind, bundled_names, load_scenario  # noqa: E402
from carrier_select.monitor import MonitorRequest, run_monitor  # noqa: E402
from carrier_select.predictor import FEATURES, PROFILE_FEATURES  # noqa: E402
from carrier_select.regtree import Feature, RegressionTree, TreeParams, tree_train  # noqa: E402
from carrier_select.strategies import BUILTINS  # noqa: E402
from carrier_select.switching import SwitchExecutor, exhaustive_scan  # noqa: E402


def check(num: int, title: str, limit: float, body) -> None:
    """Run ``body`` (returns a detail string, raises AssertionError on a miss) under a time limit."""
    start = time.perf_counter()
    detail, ok = "", True
    try:
        detail = body()
    except AssertionError as exc:
        ok, detail = False, str(exc).splitlines()[0] if str(exc) else "assertion failed"
    elapsed = time.perf_counter() - start
    if ok and elapsed >= limit:
        ok, detail = False, f"{detail}; too slow"
    line = f"{'PASS' if ok else 'FAIL'} C{num} {title}: {detail} ({elapsed:.2f}s < {limit:g}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _direct_disruption(scenario) -> tuple[float, float]:
    eng = Engine(scenario)
    eng.start()
    scan, _ = exhaustive_scan(scenario)
    SwitchExecutor(eng).direct_switch("T-4G", scan.only(["T-4G"]))
    eng.run(until=scenario.horizon)
    (rec,) = [r for r in eng.switch_log if r.kind is SwitchKind.DIRECT]
    return rec.t_end - rec.t_start, rec.attach_cost


# -- 1 ----------------------------------------------------------------------

def _c1():
    s = load_scenario("switch_timing")
    direct, _ = _direct_disruption(s)
    assert abs(direct - 3.0) <= 1e-9, f"direct switch {direct!r} != 3.0"
    sim = Simulation(s, "baseline")
    sim.run()
    (rec,) = [r for r in sim.switch_records() if r["kind"] == "BASELINE"]
    hard = rec["t_end"] - rec["t_start"]
    assert rec["n_t"] == 36, f"{rec['n_t']} cells scanned"
    assert abs(hard - 17.0) <= 1e-9, f"hard switch {hard}"
    assert abs(hard - 17.3) / 17.3 <= 0.05, f"hard switch {hard} not within 5% of 17.3"
    return f"direct {direct:.9f} s, baseline {hard:.2f} s over 36 cells ({abs(hard - 17.3) / 17.3:.1%} from 17.3 s)"


def test_c1_switch_timing():
    check(1, "switch timing", 1.0, _c1)


# -- 2 ----------------------------------------------------------------------

def _downlink_hits(avoidance: bool, seed: int) -> tuple[int, int, int]:
    s = random_monitoring_scenario(random.Random(seed))
    sim = Simulation(s, "stay", disruption_avoidance=avoidance)
    sim.run()
    bad = sum(1 for r in sim.engine.deliveries()
              if r.direction is Direction.DOWNLINK and r.status is not DeliveryStatus.DELIVERED)
    delayed = sum(1 for r in sim.engine.deliveries()
                  if r.direction is Direction.DOWNLINK and r.status is DeliveryStatus.DELAYED)
    return bad, delayed, sum(r.cells_scanned for r in sim.rounds)


def _c2():
    n = 1000
    bad_total, scanned = 0, 0
    for seed in range(n):
        bad, _, cells = _downlink_hits(True, seed)
        bad_total += bad
        scanned += cells
    assert scanned > 0, "no monitoring happened"
    assert bad_total == 0, f"{bad_total} DELAYED/LOST downlink records with avoidance"
    delayed_scenarios = sum(1 for seed in range(n) if _downlink_hits(False, seed)[1] > 0)
    assert delayed_scenarios >= 1, "no DELAYED record without avoidance"
    return (f"{n} scenarios, {scanned} cells scanned, 0 disrupted downlinks with avoidance; "
            f"{delayed_scenarios} scenarios with DELAYED downlinks without it")


def test_c2_non_disruption():
    check(2, "non-disruption", 30.0, _c2)


# -- 3 ----------------------------------------------------------------------

def _c3():
    s = load_scenario("minimal_search")
    _, rnd, _ = run_monitor(s, MonitorRequest(s.requested_networks))
    full, full_time = exhaustive_scan(s)
    cell_saving = 1 - rnd.cells_scanned / full.cells_scanned()
    time_saving = 1 - rnd.scan_time / full_time
    assert len(s.networks) == 4 and len(s.requested_networks) == 2
    assert cell_saving >= 0.5, f"cell saving {cell_saving:.3f}"
    assert time_saving >= 0.5, f"time saving {time_saving:.3f}"
    return (f"{rnd.cells_scanned} vs {full.cells_scanned()} cells ({cell_saving:.0%}), "
            f"{rnd.scan_time:.2f} vs {full_time:.2f} s ({time_saving:.0%})")


def test_c3_minimal_search():
    check(3, "minimal search", 1.0, _c3)


# -- 4 ----------------------------------------------------------------------

def _c4():
    queries, worst = 0, 0.0
    for seed in range(100):
        rng = random.Random(1000 + seed)
        X, y, cat = random_dataset(rng, max_samples=200, max_features=6)
        params = TreeParams()
        root = tree_train(X, y, [Feature(f"f{i}", c) for i, c in enumerate(cat)], params)
        ref = oracle_train(X, y, cat, min_leaf=params.min_samples_leaf, max_depth=params.max_depth,
                           min_decrease=params.min_impurity_decrease)
        for q in query_points(rng, X, cat):
            node = root
            while not node.is_leaf:
                node = node.left if node.split.goes_left(q) else node.right
            diff = abs(node.value - ref.predict(q))
            worst = max(worst, diff)
            assert diff <= 1e-9, f"dataset {seed}: {node.value} vs oracle {ref.predict(q)}"
            queries += 1
    return f"100 datasets, {queries} queries, max |diff| {worst:.1e}"


def test_c4_cart_oracle():
    check(4, "CART oracle equivalence", 60.0, _c4)


# -- 5 ----------------------------------------------------------------------

def _c5():
    rng = random.Random(5)
    feats = list(FEATURES)
    assignments = []
    for _ in range(12):
        assignments.append((rng.choice(["Interactive", "Background", "Streaming"]), rng.randint(1, 4),
                            rng.choice([150.0, 256.0, 42.0]), rng.choice([50.0, 5.7]), 0.0, 0.0,
                            rng.choice(["FDD", "TDD-2"]), rng.choice([0.32, 1.28, 2.56]),
                            rng.randint(0, 2), rng.choice([-120.0, -140.0])))
    X, y = [], []
    for _ in range(400):
        a = rng.choice(assignments)
        rss = rng.uniform(-135, -70)
        X.append((rss, *a))
        y.append((-rss) * (0.6 if a[0] == "Interactive" else 1.2) + 8 * a[1] + 20 * a[7] + rng.gauss(0, 2))
    plain = RegressionTree(feats).fit(X, y)
    cached = RegressionTree(feats, profile_features=PROFILE_FEATURES).fit(X, y)
    for _ in range(10_000):
        a = rng.choice(assignments)
        q = (rng.uniform(-145, -60), *a)
        u, c = plain.predict(q), cached.predict(q, profile_key=a)
        assert u == c, f"cached {c} != uncached {u} at {q}"
    assert cached.tests < plain.tests, f"cached {cached.tests} tests vs {plain.tests}"
    return f"10000 identical predictions, node tests {cached.tests} cached vs {plain.tests} uncached"


def test_c5_cache_transparency():
    check(5, "cache transparency", 10.0, _c5)


# -- 6 ----------------------------------------------------------------------

FAULTS = {"fault_barred": Verdict.BARRED, "fault_csfb": Verdict.INCOMPLETE_SERVICE,
          "fault_mobility": Verdict.MOBILITY_CONFLICT}


def _c6():
    parts = []
    for name, verdict in FAULTS.items():
        for control in (False, True):
            s = load_scenario(name + ("_control" if control else ""))
            sim = Simulation(s, "radio-only")
            sim.run()
            scan, _ = exhaustive_scan(s, 1.0)
            excluded = {v.network_id: v.verdict for v in
                        evaluate(scan, sim.profiles, s.requirements, current=s.initial_registration)
                        if not v.allowed and scan[v.network_id].rss is not None}
            logged = sim.guard.records()
            landed = [r["to_network"] for r in sim.switch_records()]
            if control:
                assert not excluded and not logged, f"{s.name} excluded {excluded or logged}"
                assert "T-4G" in landed, f"{s.name}: control never moved to T-4G"
            else:
                assert excluded == {"T-4G": verdict}, f"{s.name}: {excluded}"
                assert any(r["network"] == "T-4G" and r["verdict"] == verdict.value for r in logged)
                assert "T-4G" not in landed, f"{s.name}: switched onto the faulty network"
        parts.append(f"{name} excludes T-4G ({verdict.value})")
    return "; ".join(parts) + "; controls exclude nothing"


def test_c6_fault_guard():
    check(6, "fault-guard soundness", 5.0, _c6)


# -- 7 ----------------------------------------------------------------------

def _c7():
    s = load_scenario("two_segment")
    lo, hi = TWO_SEGMENT_WINDOW
    base = run_scenario(RunConfig(s, "baseline"))
    seg = [(t, i) for t, i in zip(base.times, base.I) if lo <= t < hi]
    assert base.disruption["inter_carrier_switches"] == 0, "baseline switched carrier"
    assert all(i == "T-3G" for _, i in seg), f"baseline in segment: {sorted({i for _, i in seg})}"
    t_mid = (lo + hi) / 2
    assert s.network_rss("S-4G", t_mid) > s.network_rss("T-3G", t_mid), "S-4G not stronger"
    lat = run_scenario(RunConfig(s, "min-latency"))
    seg_l = [i for t, i in zip(lat.times, lat.I) if lo <= t < hi]
    assert all(i == "S-4G" for i in seg_l), f"min-latency in segment: {sorted(set(seg_l))}"
    return (f"baseline: 0 inter-carrier switches, T-3G over stronger S-4G in [{lo:g},{hi:g}); "
            f"min-latency: S-4G")


def test_c7_p1_p3():
    check(7, "weak serving and same-carrier fallback", 5.0, _c7)


# -- 8 ----------------------------------------------------------------------

def _c8():
    s = load_scenario("benchmark")
    hits = {name: run_scenario(RunConfig(s, name)).hit_ratio
            for name in ("tree", "radio-only", "profile-only")}
    assert hits["tree"] > hits["radio-only"], f"{hits}"
    assert hits["tree"] > hits["profile-only"], f"{hits}"
    assert hits["tree"] >= 0.85, f"tree {hits['tree']:.3f} < 0.85"
    return ", ".join(f"{k} {v:.3f}" for k, v in hits.items())


def test_c8_strategy_ordering():
    check(8, "strategy ordering", 30.0, _c8)


# -- 9 ----------------------------------------------------------------------

def _c9(tmp: Path):
    names = bundled_names()
    for name in names:
        rep = run_scenario(RunConfig(name, "optimal"))
        assert rep.hit_ratio == 1.0 and rep.gamma_plus_median == 0.0, \
            f"{name}: hit {rep.hit_ratio}, median {rep.gamma_plus_median}"
        assert all(g == 0.0 for g in rep.gamma if g is not None)
    runs = 0
    for name in names:
        for strategy in BUILTINS:
            blobs = []
            for k in range(2):
                rep = run_scenario(RunConfig(name, strategy, seed=7))
                blobs.append(export_report(rep, "json", tmp / f"{k}.json").read_bytes())
            assert blobs[0] == blobs[1], f"{name}/{strategy} reports differ"
            runs += 1
    return f"optimal hit 1.0 / median 0 on {len(names)} scenarios; {runs} byte-identical report pairs"


def test_c9_oracle_and_determinism(tmp_path):
    check(9, "oracle and determinism", 10.0, lambda: _c9(tmp_path))


# -- 10 ---------------------------------------------------------------------

def _c10():
    s = load_scenario("switch_timing")
    s = replace(s, platform_overhead=7.3)
    total, attach = _direct_disruption(s)
    assert abs(total - 10.3) <= 1e-9, f"disruption {total}"
    beyond_attach = (total - attach) / total
    overhead_share = s.platform_overhead / total
    assert beyond_attach > 0.70, f"{beyond_attach:.3f}"
    assert overhead_share > 0.70, f"{overhead_share:.3f}"
    return (f"disruption {total:.1f} s, minus attach {total - attach:.1f} s ({beyond_attach:.1%}); "
            f"overhead alone {overhead_share:.1%}")


def test_c10_lower_bound_gap():
    check(10, "lower-bound gap", 1.0, _c10)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
