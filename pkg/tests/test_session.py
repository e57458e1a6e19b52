import json

import pytest
from fastapi.testclient import TestClient

from pneuhaptics.service import create_app
from pneuhaptics.study import TrialRecord, load_patterns


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def _create(client, **over):
    body = {"task": "patterns", "seed": 7}
    body.update(over)
    r = client.post("/sessions", json=body)
    assert r.status_code == 201
    return r.json()


def test_create_session_counts(client):
    doc = _create(client)
    assert doc["trial_count"] == 45 and doc["stimulus_count"] == 9
    assert doc["participant"] == "anonymous"
    doc2 = _create(client, task="vibro", repetitions=2)
    assert doc2["trial_count"] == 6
    assert doc2["session"] != doc["session"]


def test_reference_sheet(client):
    doc = client.get("/reference").json()
    assert doc["tasks"] == {"patterns": 9, "sliding": 6, "vibro": 3}
    assert doc["patterns"] == {str(k): sorted(v)
                               for k, v in load_patterns().items()}
    assert doc["sliding"] == ["Right", "Left", "Up", "Down", "CW", "CCW"]
    assert [v["freq_hz"] for v in doc["vibro"]] == [5.0, 30.0, 100.0]
    assert [v["material"] for v in doc["vibro"]] == ["Stone", "Fabric", "Wood"]
    assert doc["layout"]["1"] == [0, 0] and doc["layout"]["4"] == [1, 1]
    assert doc["map_full_scale"] == 64.0
    assert doc["pressure_full_scale_kpa"] == 64.0


def test_create_session_validation(client):
    assert client.post("/sessions", json={"task": "tapping"}).status_code == 422
    assert client.post("/sessions", json={"task": "vibro",
                                          "repetitions": 0}).status_code == 422
    _create(client, id="lab")
    assert client.post("/sessions", json={"task": "vibro",
                                          "id": "lab"}).status_code == 409


def test_unknown_session_not_found(client):
    assert client.post("/sessions/nope/next").status_code == 404
    assert client.get("/sessions/nope/results").status_code == 404


def test_trial_flow_rt_from_simulated_clock(client):
    sid = _create(client)["session"]
    r = client.post(f"/sessions/{sid}/next")
    assert r.json()["status"] == "stimulus" and r.json()["trial_index"] == 0
    client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.12})
    r = client.post(f"/sessions/{sid}/response", json={"response": 3})
    assert r.status_code == 200
    assert r.json()["rt_s"] == pytest.approx(0.12, abs=1e-3)
    assert r.json()["response"] == 3
    # duplicate submit and premature next both conflict
    assert client.post(f"/sessions/{sid}/response",
                       json={"response": 3}).status_code == 409
    assert client.post(f"/sessions/{sid}/next").status_code == 409
    client.post(f"/sessions/{sid}/advance", json={"duration_s": 2.0})
    assert client.post(f"/sessions/{sid}/next").json()["status"] == "stimulus"
    # double start also conflicts
    assert client.post(f"/sessions/{sid}/next").status_code == 409


def test_response_validation(client):
    sid = _create(client)["session"]
    assert client.post(f"/sessions/{sid}/response",
                       json={"response": 1}).status_code == 409  # idle
    client.post(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.1})
    assert client.post(f"/sessions/{sid}/response",
                       json={"response": 10}).status_code == 422
    assert client.post(f"/sessions/{sid}/response",
                       json={"response": 0}).status_code == 422
    # the rejected calls left the trial active and unrecorded
    r = client.get(f"/sessions/{sid}/results")
    assert r.json()["completed"] == 0


def test_advance_validation(client):
    sid = _create(client)["session"]
    assert client.post(f"/sessions/{sid}/advance",
                       json={"duration_s": -1}).status_code == 422
    assert client.post(f"/sessions/{sid}/advance",
                       json={"duration_s": 0}).status_code == 422


def test_session_completes_and_reports(client):
    sid = _create(client, task="vibro", repetitions=1, isi_s=0.5)["session"]
    for _ in range(3):
        assert client.post(f"/sessions/{sid}/next").json()["status"] == "stimulus"
        client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.2})
        # REST never reveals the stimulus; peek inside to play a perfect
        # participant
        stim = client.app.state.sessions[sid].stimulus
        client.post(f"/sessions/{sid}/response", json={"response": stim})
        client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.5})
    r = client.post(f"/sessions/{sid}/next")
    assert r.json()["status"] == "complete"
    doc = client.get(f"/sessions/{sid}/results").json()
    assert doc["completed"] == 3 and doc["total"] == 3
    assert doc["report"]["accuracy_mean"] == 1.0
    assert doc["report"]["counts"] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert doc["report_error"] is None
    assert all(r["rt_s"] == pytest.approx(0.2, abs=1e-3) for r in doc["records"])


def test_partial_results_have_no_report(client):
    sid = _create(client)["session"]
    client.post(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.1})
    client.post(f"/sessions/{sid}/response", json={"response": 1})
    doc = client.get(f"/sessions/{sid}/results").json()
    assert doc["completed"] == 1
    assert doc["report"] is None and "class ids" in doc["report_error"]


def test_trial_log_appended(tmp_path):
    with TestClient(create_app(out_dir=tmp_path)) as client:
        sid = _create(client, task="vibro", repetitions=1, isi_s=0.1)["session"]
        for _ in range(2):
            client.post(f"/sessions/{sid}/next")
            client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.25})
            client.post(f"/sessions/{sid}/response", json={"response": 2})
            client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.1})
    lines = (tmp_path / f"{sid}_trials.jsonl").read_text().splitlines()
    assert len(lines) == 2
    records = [TrialRecord(**json.loads(line)) for line in lines]
    assert all(r.rt_s == pytest.approx(0.25, abs=1e-3) for r in records)


def test_live_stream_idle_and_active(client):
    sid = _create(client, task="vibro")["session"]
    with client.websocket_connect(f"/sessions/{sid}/live") as ws:
        first = ws.receive_json()
        second = ws.receive_json()
    assert first["state"] == "idle"
    assert max(first["pressures_kpa"]) == 0.0
    assert len(first["map"]) == 6 and len(first["map"][0]) == 6
    assert second["t"] >= first["t"]
    assert first["counters"]["accepted"] == 0

    # drive a stimulus, then the stream must show pressure
    client.post(f"/sessions/{sid}/next")
    client.post(f"/sessions/{sid}/advance", json={"duration_s": 0.3})
    with client.websocket_connect(f"/sessions/{sid}/live") as ws:
        snap = ws.receive_json()
    assert snap["state"] == "stimulus"
    assert snap["trial"] == {"trial_index": 0, "onset_s": 0.0}
    assert max(snap["pressures_kpa"]) > 1.0
    assert max(max(row) for row in snap["map"]) > 1.0
    assert snap["counters"]["accepted"] > 0


def test_live_stream_unknown_session(client):
    with client.websocket_connect("/sessions/ghost/live") as ws:
        msg = ws.receive_json()
    assert "unknown session" in msg["error"]


def test_closed_session_ends_stream(client):
    sid = _create(client)["session"]
    r = client.delete(f"/sessions/{sid}")
    assert r.json()["state"] == "closed"
    with client.websocket_connect(f"/sessions/{sid}/live") as ws:
        msg = ws.receive_json()
        assert msg["state"] == "closed"
    assert client.post(f"/sessions/{sid}/next").status_code == 404
    # results remain readable after closing
    assert client.get(f"/sessions/{sid}/results").status_code == 200
