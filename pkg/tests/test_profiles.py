import pytest
from hypothesis import given, settings, strategies as st

from carrier_select.builders import benchmark
from carrier_select.envsim import CellularEvent, EventKind, registration_events
from carrier_select.profiles import PROFILE_FIELDS, ProfileStore


def eps(tc, cell="T-4G/c0", network="T-4G"):
    return CellularEvent(0.0, EventKind.EPS_PDP_SETUP, {
        "cell": cell, "network": network, "traffic_class": tc, "delay_class": 1,
        "max_dl_rate": 150.0, "max_ul_rate": 50.0, "dl_gbr": 0.0, "ul_gbr": 0.0})


def test_modal_probability_39_of_40():
    store = ProfileStore().extend([eps("Interactive")] * 39 + [eps("Background")])
    stat = store.stat("T-4G", "traffic_class", "T-4G/c0")
    assert stat.value == "Interactive"
    assert stat.probability == pytest.approx(0.975)


def test_first_event_gives_certainty_for_each_field():
    s = benchmark()
    store = ProfileStore().extend(registration_events(0.0, s.cell("T-4G/c0"), s))
    for f in PROFILE_FIELDS:
        assert store.stat("T-4G", f, "T-4G/c0").probability == 1.0


def test_radio_measurement_is_a_no_op():
    store = ProfileStore()
    store.update(eps("Interactive"))
    before = (store.version, store.rows())
    store.update(CellularEvent(1.0, EventKind.RADIO_MEAS, {"cell": "T-4G/c0", "network": "T-4G", "rss": -90.0}))
    assert (store.version, store.rows()) == before


def test_unvisited_cell_falls_back_to_network():
    store = ProfileStore().extend([eps("Interactive")])
    assert store.modal("T-4G", "traffic_class", "T-4G/c9") == "Interactive"
    assert store.modal("S-4G", "traffic_class", default="none") == "none"
    assert store.profile("S-4G") == {}


def test_modal_tie_keeps_first_seen():
    store = ProfileStore().extend([eps("Background"), eps("Interactive")])
    assert store.modal("T-4G", "traffic_class") == "Background"


def test_unknown_field_rejected():
    with pytest.raises(KeyError):
        ProfileStore().add("T-4G", "c", "colour", "red")


def test_csv_round_trip(tmp_path):
    s = benchmark()
    store = ProfileStore()
    for c in s.cells:
        store.extend(registration_events(0.0, c, s))
    store.extend([eps("Background")] * 3)
    path = tmp_path / "p.csv"
    store.to_csv(path)
    back = ProfileStore.from_csv(path)
    assert back.rows() == store.rows()
    assert path.read_text().splitlines()[0] == "network,cell,field,value,count,total,probability"


@settings(max_examples=100)
@given(st.lists(st.sampled_from(["Interactive", "Background", "Streaming"]), min_size=1, max_size=60))
def test_counts_are_consistent(classes):
    store = ProfileStore().extend([eps(c) for c in classes])
    stat = store.stat("T-4G", "traffic_class")
    assert stat.total == len(classes)
    assert stat.count == max(classes.count(c) for c in set(classes))
    rows = [r for r in store.rows() if r["field"] == "traffic_class"]
    assert sum(r["probability"] for r in rows) == pytest.approx(1.0)
