import math

import pytest

from carrier_select.builders import benchmark
from carrier_select.model import HistoryRecord, Metric
from carrier_select.predictor import (
    DEFAULTS,
    FEATURES,
    PROFILE_FEATURES,
    CarrierPredictor,
    TrainingSample,
    seed_profiles,
)
from carrier_select.profiles import ProfileStore


def test_untrained_predictor_returns_none():
    assert CarrierPredictor(Metric.LATENCY).predict("T-4G", -90.0) is None


def test_missing_profile_uses_defaults():
    p = CarrierPredictor(Metric.LATENCY)
    assert p.assignment("X-4G") == tuple(DEFAULTS[f] for f in PROFILE_FEATURES)


def test_sample_validation():
    good = (0.0,) * len(FEATURES)
    with pytest.raises(ValueError):
        TrainingSample(good, math.nan, "T-4G")
    with pytest.raises(ValueError):
        TrainingSample(good[:-1], 1.0, "T-4G")


def test_seed_profiles_once_per_cell():
    s = benchmark()
    store = ProfileStore()
    cells = seed_profiles(store, [HistoryRecord("T-4G", -90.0), HistoryRecord("T-4G", -100.0)], s)
    assert cells == ["T-4G/c0", "T-4G/c0"]
    assert store.stat("T-4G", "traffic_class").total == 1


def test_warm_up_learns_the_benchmark_history():
    s = benchmark()
    p = CarrierPredictor(Metric.LATENCY)
    n = p.warm_up(s.history, s)
    assert n == len(s.history) and p.ready
    for h in s.history[:20]:
        assert p.predict(h.network, h.rss, h.cell) == pytest.approx(h.latency, rel=0.25)


def test_profile_separates_carriers_at_equal_rss():
    s = benchmark()
    p = CarrierPredictor(Metric.LATENCY)
    p.warm_up(s.history, s)
    assert p.assignment("T-4G") != p.assignment("S-4G")
    perf = s.performance
    truth = {n: perf.value(s.network(n), Metric.LATENCY, -100.0) for n in ("T-4G", "S-4G")}
    pt, ps = p.predict("T-4G", -100.0), p.predict("S-4G", -100.0)
    assert (pt < ps) == (truth["T-4G"] < truth["S-4G"])


def test_cache_and_no_cache_agree():
    s = benchmark()
    a = CarrierPredictor(Metric.LATENCY)
    b = CarrierPredictor(Metric.LATENCY, use_cache=False)
    a.warm_up(s.history, s)
    b.warm_up(s.history, s)
    for net in ("T-4G", "T-3G", "S-4G", "S-3G"):
        for rss in range(-140, -60, 3):
            assert a.predict(net, rss) == b.predict(net, rss)


def test_observe_updates_online():
    p = CarrierPredictor(Metric.THROUGHPUT)
    p.observe("T-4G", -90.0, 12.0)
    assert p.predict("T-4G", -60.0) == 12.0
    assert len(p.samples) == 1
