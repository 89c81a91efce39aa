import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from aerocouple import cases, model_io
from aerocouple.driver import run_from_config
from aerocouple.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def static_inputs():
    return {
        "config_text": cases.static_config_text(),
        "model_text": model_io.serialize_structural_model(cases.static_model()),
    }


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_run_endpoint_matches_direct_driver(client, static_inputs):
    response = client.post("/api/run", json=static_inputs)
    assert response.status_code == 200
    body = response.json()
    assert body["mode"] == "steady-coupled"
    assert body["summary"]["final_h"] == pytest.approx(0.289, abs=0.003)
    direct = run_from_config(
        model_io.parse_config(static_inputs["config_text"]),
        model_io.parse_structural_model(static_inputs["model_text"]))
    assert body["history_csv"] == direct.history_csv  # byte-for-byte


def test_config_endpoint_echoes_resolved_settings(client, static_inputs):
    response = client.post("/api/config",
                           json={"config_text": static_inputs["config_text"]})
    assert response.status_code == 200
    config = response.json()["config"]
    assert config["mode"] == "steady-coupled"
    assert config["fsi_tolerance"] == 1e-6
    assert config["dof_names"] == ["h", "theta"]


def test_config_endpoint_rejects_bad_text(client):
    response = client.post("/api/config", json={"config_text": "MODE = NOPE"})
    assert response.status_code == 422
    assert "unknown MODE" in response.json()["detail"]


def test_check_endpoint(client, static_inputs):
    response = client.post("/api/check", json=static_inputs)
    assert response.status_code == 200
    body = response.json()
    assert body["n_modes"] == 2
    assert body["n_nodes"] == 5
    assert body["map_condition"] > 1.0


def test_run_endpoint_model_error_is_422_with_diagnostic(client, static_inputs):
    response = client.post("/api/run", json={
        "config_text": static_inputs["config_text"],
        "model_text": "GRID,1,zz,0,0\n"})
    assert response.status_code == 422
    assert "cannot parse number" in response.json()["detail"]
    assert "line 1" in response.json()["detail"]


def test_run_endpoint_nonconvergence_is_409(client, static_inputs):
    config = static_inputs["config_text"] + "MAX_FSI_ITERS = 1\nFSI_TOLERANCE = 1e-30\n"
    response = client.post("/api/run", json={
        "config_text": config, "model_text": static_inputs["model_text"]})
    assert response.status_code == 409
    assert "did not converge" in response.json()["detail"]


def test_analyze_endpoint_transfer_function(client):
    t = 1e-3 * np.arange(4000)
    theta = 0.01 * np.sin(2 * math.pi * 8.0 * t)
    cl = 0.03 * np.sin(2 * math.pi * 8.0 * t + math.radians(45.0))
    records = [model_io.HistoryRecord(
        time=ti, q=np.array([0.0, th]), qd=np.zeros(2), f=np.zeros(2),
        monitors=(c,)) for ti, th, c in zip(t, theta, cl)]
    history_csv = model_io.format_history(records, ("cl",))
    response = client.post("/api/analyze", json={
        "operation": "transfer_function", "history_csv": history_csv,
        "input_column": "q_2", "output_column": "cl", "frequency": 8.0})
    assert response.status_code == 200
    result = response.json()["result"]
    assert result["magnitude"] == pytest.approx(3.0, rel=1e-6)
    assert result["phase_deg"] == pytest.approx(45.0, abs=1e-3)


def test_analyze_endpoint_modes(client):
    t = 1e-3 * np.arange(6000)
    q = np.exp(-0.3 * t) * np.sin(2 * math.pi * 4.0 * t)
    records = [model_io.HistoryRecord(time=ti, q=np.array([qi]),
                                      qd=np.zeros(1), f=np.zeros(1))
               for ti, qi in zip(t, q)]
    response = client.post("/api/analyze", json={
        "operation": "modal_identification",
        "history_csv": model_io.format_history(records),
        "column": "q_1", "n_expected": 1})
    assert response.status_code == 200
    modes = response.json()["result"]["modes"]
    assert len(modes) == 1
    assert modes[0]["frequency_hz"] == pytest.approx(4.0, rel=0.01)


def test_analyze_endpoint_flutter_boundary(client):
    response = client.post("/api/analyze", json={
        "operation": "flutter_boundary",
        "speeds": [40.0, 50.0, 60.0], "dampings": [0.02, 0.005, -0.01]})
    assert response.status_code == 200
    assert response.json()["result"]["speed"] == pytest.approx(53.3333, rel=1e-4)


def test_analyze_endpoint_missing_params(client):
    response = client.post("/api/analyze", json={
        "operation": "transfer_function", "history_csv": "time\n"})
    assert response.status_code == 422


def test_sweep_endpoint_small(client):
    # two cheap sub-critical speeds: rows come back in order with dampings
    model_text = model_io.serialize_structural_model(cases.flutter_model())
    config_text = cases.flutter_config_text(u_inf=60.0, n_steps=2500)
    response = client.post("/api/sweep", json={
        "config_text": config_text, "model_text": model_text,
        "key": "UINF", "values": [60.0, 80.0], "max_workers": 1})
    assert response.status_code == 200
    body = response.json()
    assert [row["value"] for row in body["rows"]] == [60.0, 80.0]
    assert all(row["damping"] > 0 for row in body["rows"])
    assert body["flutter_speed"] is None
    assert body["trend"] == "stable in range"
    assert body["csv"].startswith("value,damping,frequency")
