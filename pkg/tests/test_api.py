import pytest
from fastapi.testclient import TestClient

from api.main import create_app
from api.repository import ArtifactRepository
from haptable.config import EngineConfig
from haptable.vibmap import save_map


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(ArtifactRepository(config=EngineConfig())))


@pytest.fixture
def hand_client(tmp_path, hand_map):
    path = tmp_path / "hand.txt"
    save_map(hand_map, path)
    return TestClient(create_app(ArtifactRepository(map_path=path, config=EngineConfig())))


def test_root_describes_the_fixture_map(client):
    response = client.get("/")
    assert response.status_code == 200
    body = response.json()
    assert body["provenance"] == "fixture"
    assert body["grid"]["rows"] == 7 and body["grid"]["cols"] == 12


def test_lookup_record(client):
    response = client.get("/lookup/51/52")
    assert response.status_code == 200
    body = response.json()
    assert body["actuator"] == "PA"
    assert body["freq"] == 465.0
    assert body["max_diff"] == pytest.approx(0.201)
    assert client.get("/").json()["lookup_loaded"]


def test_lookup_of_coincident_points(client):
    response = client.get("/lookup/51/51")
    assert response.status_code == 400
    assert response.json()["error"] == "GeometryError"


def test_point_flow(client):
    response = client.post("/flow/point", json={"source": 52, "destination": 51})
    assert response.status_code == 200
    body = response.json()
    assert [(p["actuator"], p["freq"]) for p in body["parts"]] == [("PALL", 428.0), ("PA", 465.0)]
    assert body["sensation_levels"][0] == pytest.approx(body["sensation_levels"][1])
    assert body["waveform"] is None


def test_point_flow_with_waveform(client):
    response = client.post("/flow/point", json={"source": 51, "destination": 52, "part_duration": 0.5,
                                                "include_waveform": True, "waveform_rate": 2000})
    assert response.status_code == 200
    waveform = response.json()["waveform"]
    assert waveform["sample_rate"] == 2000
    assert len(waveform["piezo"]) == 2000
    assert set(waveform["actuator"]) == {"PA", "PALL"}


def test_point_flow_by_coordinates(client):
    response = client.post("/flow/point", json={"source": [161.73, 283.645], "destination": [221.73, 283.645]})
    assert response.status_code == 200
    assert [p["actuator"] for p in response.json()["parts"]] == ["PA", "PALL"]


def test_point_flow_outside_grid(client):
    response = client.post("/flow/point", json={"source": 1, "destination": [1.0, 1.0]})
    assert response.status_code == 400
    assert response.json()["error"] == "ExtrapolationError"


def test_request_validation(client):
    assert client.post("/flow/point", json={"source": 1}).status_code == 422


def test_electro_force(client):
    response = client.post("/electro/force", json={"voltage": 100.0})
    assert response.status_code == 200
    assert response.json()["electrostatic_force"] == pytest.approx(0.041296, rel=1e-4)

    response = client.post("/electro/force", json={"voltage": [0.0, 100.0], "sliding": False})
    body = response.json()
    assert body["electrostatic_force"][1] == pytest.approx(0.041296, rel=1e-4)
    assert body["friction_force"] == [0.0, 0.0]


def test_hand_flow(hand_client):
    response = hand_client.post("/flow/hand", json={"direction": "L->R"})
    assert response.status_code == 200
    parts = response.json()["parts"]
    assert [(p["actuator"], p["freq"]) for p in parts] == [("PA", 100.0), ("PC", 100.0)]


def test_hand_flow_failure_reports_near_misses(hand_client):
    response = hand_client.post("/flow/hand", json={"direction": "U->D"})
    assert response.status_code == 422
    body = response.json()
    assert body["error"] == "PlanningError"
    assert len(body["near_misses"]) == 6


def test_hand_flow_explicit_centre(hand_client):
    response = hand_client.post("/flow/hand", json={"direction": "R->L", "region": [371.73, 223.645]})
    assert response.status_code == 200
    assert [p["actuator"] for p in response.json()["parts"]] == ["PC", "PA"]
