import copy
import json
from dataclasses import replace

import pytest
import yaml
from hypothesis import given, strategies as st

from carrier_select.builders import NetSpec, assemble, bundled, fault_barred
from carrier_select.model import (
    RAT,
    BillingPlan,
    BillingTier,
    RadioTrace,
    ScenarioError,
    SibConfig,
    UnknownCellError,
    bundled_names,
    dump_scenario,
    interp,
    load_scenario,
    rss_at,
    scenario_errors,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)

TRACE = RadioTrace({"c": ((0.0, -100.0), (10.0, -120.0))})


def two_carrier():
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 2), NetSpec("S-4G", "S", RAT.RAT_4G, 1)]
    return assemble("two", specs, {"T-4G": ((0, -90), (10, -95)), "S-4G": ((0, -100), (10, -100))},
                    initial_registration="T-4G", horizon=10.0)


@pytest.mark.parametrize("t,expected", [(5.0, -110.0), (0.0, -100.0), (15.0, -120.0), (-3.0, -100.0)])
def test_rss_interpolation_and_clamp(t, expected):
    assert rss_at(TRACE, "c", t) == expected


def test_rss_unknown_cell():
    with pytest.raises(UnknownCellError):
        rss_at(TRACE, "nope", 1.0)


@st.composite
def traces(draw):
    n = draw(st.integers(1, 8))
    times = sorted(draw(st.lists(st.floats(0, 1000, allow_nan=False), min_size=n, max_size=n,
                                 unique=True)))
    vals = draw(st.lists(st.floats(-160, -40, allow_nan=False), min_size=n, max_size=n))
    return tuple(zip(times, vals))


@given(traces())
def test_breakpoints_are_exact(points):
    for t, v in points:
        assert interp(points, t) == v


@given(traces(), st.floats(-10, 1010, allow_nan=False))
def test_interpolation_stays_within_neighbouring_values(points, t):
    v = interp(points, t)
    lo = min(p[1] for p in points)
    hi = max(p[1] for p in points)
    assert lo - 1e-9 <= v <= hi + 1e-9


def test_well_formed_scenario_returned_unchanged():
    s = two_carrier()
    assert validate_scenario(s) is s
    assert validate_scenario(validate_scenario(s)) is s


def _raw():
    return scenario_to_dict(two_carrier())


def _codes(d):
    return [(e.code, e.entity) for e in scenario_errors(scenario_from_dict(d))]


def test_duplicate_cell_id():
    d = _raw()
    d["cells"].append(copy.deepcopy(d["cells"][0]))
    assert ("DUPLICATE_ID", "T-4G/c0") in _codes(d)


def test_non_monotone_trace():
    d = _raw()
    d["trace"]["T-4G/c0"] = [[5.0, -90.0], [3.0, -95.0]]
    assert ("NON_MONOTONE_TRACE", "T-4G/c0") in _codes(d)


def test_dangling_references_and_empty_network():
    d = _raw()
    d["device"]["initial_registration"] = "X-4G"
    d["networks"].append({"network_id": "E-4G", "plmn": "E", "rat": "4G", "cells": []})
    codes = _codes(d)
    assert ("DANGLING_REFERENCE", "device") in codes
    assert ("EMPTY_NETWORK", "E-4G") in codes
    # E-4G is also missing from the priority list
    assert ("DANGLING_REFERENCE", "baseline") in codes


def test_all_violations_reported_at_once():
    d = _raw()
    d["cells"].append(copy.deepcopy(d["cells"][0]))
    d["trace"]["S-4G/c0"] = [[5.0, -90.0], [3.0, -95.0]]
    with pytest.raises(ScenarioError) as exc:
        validate_scenario(scenario_from_dict(d))
    assert {e.code for e in exc.value.errors} >= {"DUPLICATE_ID", "NON_MONOTONE_TRACE"}


@pytest.mark.parametrize("name", sorted(bundled()))
def test_round_trip_through_file(tmp_path, name):
    s = bundled()[name]
    path = tmp_path / f"{name}.json"
    dump_scenario(s, path)
    back = load_scenario(path)
    assert scenario_to_dict(back) == scenario_to_dict(s)


def test_yaml_scenario(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(json.loads(json.dumps(_raw()))))
    assert scenario_to_dict(load_scenario(path)) == _raw()


def test_bundled_files_match_builders():
    assert set(bundled_names()) == set(bundled())
    for name in bundled_names():
        assert scenario_to_dict(load_scenario(name)) == scenario_to_dict(bundled()[name])


def test_barred_window():
    sib = SibConfig(barred_intervals=((1.0, 2.0),))
    assert not sib.barred_at(0.5) and sib.barred_at(1.0) and not sib.barred_at(2.0)


def test_default_on_duration_is_tenth_of_cycle():
    assert SibConfig(paging_cycle=2.56).on_duration == pytest.approx(0.256)


def test_availability_follows_service_floor():
    s = fault_barred()
    assert s.is_available("T-4G/c0", 5.0)
    low = replace(s, service_floor=-80.0)
    assert not low.is_available("T-4G/c0", 5.0)


def test_billing_tiers():
    plan = BillingPlan((BillingTier(2.0, 10.0), BillingTier(float("inf"), 15.0)), usage_gb=1.0)
    assert plan.unit_price() == 10.0
    assert plan.unit_price(3.0) == 15.0
    with pytest.raises(ValueError):
        BillingPlan(())


def test_best_cell_strongest_then_lexicographic():
    specs = [NetSpec("T-4G", "T", RAT.RAT_4G, 3)]
    s = assemble("cells", specs, {"T-4G/c0": ((0, -90),), "T-4G/c1": ((0, -80),),
                                  "T-4G/c2": ((0, -80),)}, horizon=5.0)
    assert s.best_cell("T-4G", 1.0).cell_id == "T-4G/c1"
