"""HTTP layer: request validation, routing, parity with the handlers."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from exoneck import __version__
from exoneck.geometry import suit_to_dict
from exoneck.service import create_app
from exoneck.service.handlers import solve as solve_handler
from exoneck.service.schemas import PoseTriple, SolveRequest


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def suit_json(suit):
    return suit_to_dict(suit)


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_solve_matches_in_process_handler(client):
    body = {"suit": None, "pose": {"fe_deg": 20.0, "ld_deg": 0.0,
                                   "ar_deg": 10.0}}
    r = client.post("/solve", json=body)
    assert r.status_code == 200
    direct = solve_handler(SolveRequest(
        pose=PoseTriple(fe_deg=20.0, ld_deg=0.0, ar_deg=10.0)))
    assert r.json() == direct.model_dump(mode="json")


def test_solve_neutral_is_grav_ok(client):
    r = client.post("/solve", json={
        "pose": {"fe_deg": 0.0, "ld_deg": 0.0, "ar_deg": 0.0}})
    assert r.status_code == 200
    out = r.json()
    assert out["reachable"] and out["grav_ok"]
    assert out["relative_error"] is None
    assert max(out["pressures_kpa"]) < 1e-6


def test_solve_unreachable_pose(client):
    r = client.post("/solve", json={
        "pose": {"fe_deg": 0.0, "ld_deg": 80.0, "ar_deg": 0.0}})
    assert r.status_code == 200
    out = r.json()
    # the balance attempt is still reported for an unreachable pose
    assert not out["reachable"]
    assert not out["grav_ok"]
    assert len(out["pressures_kpa"]) == 5


def test_rom_row_count_and_band(client, suit_json):
    r = client.post("/rom", json={"suit": suit_json, "axis": "AR",
                                  "samples": 100})
    assert r.status_code == 200
    out = r.json()
    assert len(out["rows"]) == 100
    lo, hi = out["intervals_deg"]["grav_ok"]
    assert lo < 0.0 < hi
    assert 0.0 < out["percent_of_biological"]["grav_ok"] < 100.0


def test_workspace_grid(client, suit_json):
    r = client.post("/workspace", json={"suit": suit_json})
    assert r.status_code == 200
    out = r.json()
    assert len(out["horizontal_deg"]) == 73
    assert len(out["vertical_deg"]) == 41
    assert len(out["rows"]) == 73 * 41
    assert out["coverage_pct"]["reachable"] == 100.0
    assert set(out["coverage_at_limit_pct"]) == \
        {"-80", "-100", "-120", "-140"}


def test_design_ranking(client, suit_json):
    r = client.post("/design", json={"suit": suit_json})
    assert r.status_code == 200
    out = r.json()
    assert out["ranking"] == [1, 3, 4, 2, 6, 5]
    assert len(out["profiles"]) == 6
    by_id = {p["config_id"]: p for p in out["profiles"]}
    assert by_id[1]["measured_force_n"] == pytest.approx(22.6)


def test_track_smoke(client, suit_json):
    r = client.post("/track", json={"suit": suit_json, "axis": "FE",
                                    "cycles": 1})
    assert r.status_code == 200
    out = r.json()
    assert out["axis"] == "FE"
    assert len(out["t_s"]) == len(out["meas_deg"]) == len(out["ref_deg"])
    assert out["rmse_deg"] < 10.0
    p = np.asarray(out["pressures_kpa"])
    assert p.shape[1] == 5
    assert p.min() >= 0.0 and p.max() <= 138.0


def test_fit_round_trip(client):
    from exoneck.actuator import FpamParams, generate_samples
    params = FpamParams(r0=0.0136, alpha0=37.0,
                        p=(12.3, -182.9, 791.3, -1121.4), L0=0.2)
    samples = generate_samples(params, (0.0, 34.5, 69.0, 103.5, 138.0),
                               np.linspace(0.12, 0.2, 24))
    body = {"samples": [{"pressure_kpa": s.pressure_kpa,
                         "length_m": s.length_m, "force_n": s.force_n}
                        for s in samples],
            "L0_m": 0.2}
    r = client.post("/fit", json=body)
    assert r.status_code == 200
    out = r.json()
    assert out["params"]["r0_m"] == pytest.approx(0.0136, rel=1e-4)
    assert out["params"]["alpha0_deg"] == pytest.approx(37.0, rel=1e-4)
    assert out["rmse_n"] < 1e-6
    assert out["geometry_identifiable"] is True


# ---------------------------------------------------------------------------
# Error mapping.

def test_bad_axis_is_422(client, suit_json):
    r = client.post("/rom", json={"suit": suit_json, "axis": "YAW"})
    assert r.status_code == 422


def test_malformed_suit_is_422(client, suit_json):
    broken = dict(suit_json)
    broken["actuators"] = suit_json["actuators"][:1]
    broken["actuators"][0] = dict(broken["actuators"][0], channel=9)
    r = client.post("/solve", json={
        "suit": broken, "pose": {"fe_deg": 0.0, "ld_deg": 0.0,
                                 "ar_deg": 0.0}})
    assert r.status_code == 422
    assert "detail" in r.json()


def test_empty_fit_is_422(client):
    r = client.post("/fit", json={"samples": [], "L0_m": 0.2})
    assert r.status_code == 422
    assert "no samples" in r.json()["detail"]


def test_unknown_design_id_is_422(client, suit_json):
    r = client.post("/design", json={"suit": suit_json, "config_ids": [99]})
    assert r.status_code == 422
    assert "unknown placement config" in r.json()["detail"]


def test_unknown_field_rejected(client):
    r = client.post("/solve", json={
        "pose": {"fe_deg": 0.0, "ld_deg": 0.0, "ar_deg": 0.0},
        "tolerance": 0.5})
    assert r.status_code == 422
