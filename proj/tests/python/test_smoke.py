import json
import math
import os
from pathlib import Path

import pytest

import roadcap

ROOT = Path(os.environ.get("ROADCAP_SOURCE_DIR", Path(__file__).resolve().parents[2]))
CONFIG = ROOT / "configs" / "g30ys.toml"
DATA = ROOT / "data" / "g30ys"


def test_pollutant_order():
    assert roadcap.pollutants() == ["CO", "CO2", "NO2", "SO2", "PM2.5", "PM10"]


def test_units_round_trip():
    assert roadcap.to_internal(4.0, "mg/m3") == pytest.approx(4e-6, rel=1e-15)
    assert roadcap.from_internal(2e-8, "ug/m3") == pytest.approx(20.0, rel=1e-15)
    with pytest.raises(ValueError):
        roadcap.to_internal(1.0, "ppm")


def test_stokes_velocity():
    # (1000 - 1.2) * 9.8 * (1e-5)^2 / (18 * 1.8e-5) = 998.8 * 9.8e-10 / 3.24e-4
    assert roadcap.settling_velocity(1e-5) == pytest.approx(0.003021061728395062, rel=1e-12)


def test_inventory_rates():
    inv = roadcap.inventory(str(CONFIG))
    for name, kg_yr in inv["kg_per_year"].items():
        back = inv["kg_per_s"][name] * roadcap.seconds_per_year * 118000.0 / 300.0
        assert back == pytest.approx(kg_yr, rel=1e-12)


def test_published_capacity_split():
    totals = {"SO2": 909662, "NO2": 2465373, "PM2.5": 3236022, "CO": 7718717, "CO2": 8037217, "PM10": 22020013}
    rep = roadcap.capacity_from_totals(totals, str(DATA / "fleet.csv"))
    assert rep["binding"] == "SO2"
    assert rep["SO2"]["per_class"] == pytest.approx([563990, 59128, 54580, 31838, 177384, 22742], abs=1)
    assert rep["SO2"]["equivalents"] == pytest.approx(1334929, abs=5)


def test_bisection_matches_linear_inverse():
    q, converged, _ = roadcap.bisection_invert(lambda t: 1e-9 + 2e-15 * t, 5e-9, 0.0, 1e7, 1e-18)
    assert converged
    assert q == pytest.approx(2e6, rel=1e-8)


def test_calibration_table():
    rep = roadcap.calibrate_files(str(DATA / "table2_simulated.csv"), str(DATA / "field_measurements.csv"))
    assert len(rep["rows"]) == 36
    assert all(math.isfinite(r["relative_error"]) for r in rep["rows"])


def test_config_dump_names_scenario():
    assert '[scenario]\nname = "g30ys"' in roadcap.effective_config(str(CONFIG))


def test_pipeline_emit_stage(tmp_path):
    res = roadcap.run_pipeline(str(CONFIG), str(tmp_path), last="emit")
    assert res["exit_code"] == 0
    assert res["failed_stage"] == ""
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest
    assert res["kg_per_year"]["CO2"] > res["kg_per_year"]["CO"] > 0


def test_bad_config_raises(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[solver]\nrelax_velocty = 0.5\n")
    with pytest.raises(ValueError):
        roadcap.effective_config(str(bad))
