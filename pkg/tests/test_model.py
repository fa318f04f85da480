import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ies.model import (MBTU_TO_M3, ScenarioError, apply_overrides, bundled, convert_gas_price, load_scenario,
                       parse_scenario, read_series_csv, substitute_pressure)

from conftest import base_doc, unit_doc


def test_bundled_fixture_sizes(fixture_scenario):
    s = fixture_scenario
    assert len(s.power.buses) == 30
    assert len(s.units) == 5
    assert len(s.gas.nodes) == 24
    assert s.horizon == 24


def test_table_unit_one_quadratic_coefficient(fixture_scenario):
    # the printed "01524" is read as 0.1524
    assert fixture_scenario.units[0].a == pytest.approx(0.1524)


def test_every_series_has_horizon_length(fixture_scenario):
    s = fixture_scenario
    T = s.horizon
    assert all(len(v) == T for v in s.loads.values())
    assert all(len(v) == T for v in s.gas_demands.values())
    assert len(s.wind.availability) == T
    assert len(s.coal.mined) == T
    assert all(len(p) == T for p in s.wind.profiles.values())


def test_loading_is_deterministic():
    assert load_scenario(bundled()) == load_scenario(bundled())


def test_negative_wind_availability_rejected(tiny3_doc_copy):
    tiny3_doc_copy["wind"]["availability"][3] = -1.0
    with pytest.raises(ScenarioError, match="wind availability negative"):
        parse_scenario(tiny3_doc_copy)


def test_series_length_mismatch_rejected(tiny3_doc_copy):
    tiny3_doc_copy["horizon"] = 2
    with pytest.raises(ScenarioError, match="series-length mismatch"):
        parse_scenario(tiny3_doc_copy)


def test_schema_violation_names_field(tiny3_doc_copy):
    tiny3_doc_copy["units"][0]["p_max"] = "big"
    with pytest.raises(ScenarioError, match="units/0/p_max"):
        parse_scenario(tiny3_doc_copy)


@pytest.mark.parametrize("field,value,match", [
    ("p_min", 2.0, "p_min <= p_max"),
    ("a", -0.1, "nonconvex"),
    ("min_up", 0, None),
    ("bus", 9, "missing bus"),
])
def test_unit_invariants(field, value, match):
    doc = base_doc(1)
    doc["units"] = [unit_doc(1, **{field: value})]
    with pytest.raises(ScenarioError, match=match):
        parse_scenario(doc)


def test_reserve_coefficient_range():
    doc = base_doc(1)
    doc["power"]["reserve_rho"] = 1.0
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_eta_ordering_rejected(tiny3_doc_copy):
    tiny3_doc_copy["p2g"]["eta_meth"] = 0.64
    tiny3_doc_copy["p2g"]["eta_elec"] = 0.6
    with pytest.raises(ScenarioError):
        parse_scenario(tiny3_doc_copy)


def test_missing_file_is_scenario_error(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.json")


def test_bad_json_is_scenario_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioError, match="not valid JSON"):
        load_scenario(p)


@pytest.mark.parametrize("price,expected", [(1.0, 0.0353), (0.0, 0.0), (28.3, 1.0)])
def test_convert_gas_price(price, expected):
    assert convert_gas_price(price) == pytest.approx(expected, abs=5e-5)


def test_convert_gas_price_rejects_negative():
    with pytest.raises(ValueError):
        convert_gas_price(-1.0)


@given(st.floats(0, 1e4), st.floats(0, 1e3))
def test_convert_gas_price_is_linear(x, k):
    assert convert_gas_price(k * x) == pytest.approx(k * convert_gas_price(x), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("lo,hi,expected", [(30, 80, (900, 6400)), (0, 0, (0, 0)), (50, 66.2, (2500, 4382.44))])
def test_substitute_pressure(lo, hi, expected):
    assert substitute_pressure(lo, hi) == pytest.approx(expected)


def test_substitute_pressure_rejects_negative():
    with pytest.raises(ValueError):
        substitute_pressure(-1, 5)


def test_mbtu_constant():
    assert MBTU_TO_M3 == 28.3


# ---------------------------------------------------------------------------
# CSV overrides

def _csv(path, values, header="slot,value"):
    path.write_text(header + "\n" + "".join(f"{i},{v}\n" for i, v in enumerate(values)))
    return path


def test_read_series_csv(tmp_path):
    assert read_series_csv(_csv(tmp_path / "w.csv", [0.1, 0.2]), 2) == (0.1, 0.2)


def test_read_series_csv_length_mismatch(tmp_path):
    with pytest.raises(ScenarioError, match="series-length mismatch"):
        read_series_csv(_csv(tmp_path / "w.csv", [0.1, 0.2, 0.3]), 2)


def test_read_series_csv_header(tmp_path):
    with pytest.raises(ScenarioError, match="header"):
        read_series_csv(_csv(tmp_path / "w.csv", [0.1], header="t,v"), 1)


def test_overrides_replace_series(tiny3, tmp_path):
    out = apply_overrides(tiny3, {
        "wind": _csv(tmp_path / "w.csv", [0.1, 0.1, 0.1, 0.1]),
        "load:2": _csv(tmp_path / "l.csv", [0.3, 0.3, 0.3, 0.3]),
        "mined": _csv(tmp_path / "m.csv", [5, 5, 5, 5]),
    })
    assert out.wind.availability == (0.1,) * 4
    assert out.loads[2] == (0.3,) * 4
    assert out.coal.mined == (5.0,) * 4
    assert tiny3.wind.availability == (0.6, 0.5, 0.2, 0.4)


def test_override_unknown_key(tiny3, tmp_path):
    with pytest.raises(ScenarioError, match="unknown override"):
        apply_overrides(tiny3, {"sunshine": _csv(tmp_path / "s.csv", [1, 1, 1, 1])})


def test_override_is_validated(tiny3, tmp_path):
    with pytest.raises(ScenarioError):
        apply_overrides(tiny3, {"wind": _csv(tmp_path / "w.csv", [0.1, -0.2, 0.1, 0.1])})


def test_day_profiles(fixture_scenario):
    winter = fixture_scenario.with_day("winter")
    assert winter.wind.availability == fixture_scenario.wind.profiles["winter"]
    with pytest.raises(ScenarioError):
        fixture_scenario.with_day("monsoon")


def test_fixture_records_provenance():
    doc = json.loads(bundled().read_text())
    assert "provenance" in doc
