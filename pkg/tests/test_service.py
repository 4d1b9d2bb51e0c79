"""HTTP/WebSocket session service: framing, commands, replay equality."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from fastapi.testclient import TestClient
from numpy.testing import assert_allclose
from starlette.websockets import WebSocketDisconnect

from swarmlink import engine, service


@pytest.fixture()
def client():
    with TestClient(service.create_app()) as c:
        yield c


def _drain(ws, send_commands=(), send_raw=()):
    """Read frames until the end frame; optionally inject frames after hello."""
    hello = ws.receive_json()
    assert hello["type"] == "hello"
    for cmd in send_commands:
        ws.send_json(cmd)
    for raw in send_raw:
        ws.send_text(raw)
    states = []
    while True:
        frame = ws.receive_json()
        if frame["type"] == "end":
            return hello, states, frame
        assert frame["type"] == "state"
        states.append(frame)


def test_scenarios_endpoint(client):
    got = client.get("/scenarios").json()["scenarios"]
    names = {s["name"] for s in got}
    assert "live_delayed" in names and "paper_delayed" in names
    for s in got:
        assert s["mode"] in ("delay_free", "delayed", "virtual_point")
        assert s["duration_s"] > 0


def test_session_lifecycle_and_framing(client):
    made = client.post("/session", json={"duration_s": 1.0,
                                         "realtime": False}).json()
    sid = made["session_id"]
    assert made["mode"] == "delayed" and made["duration_s"] == 1.0
    with client.websocket_connect(f"/session/{sid}") as ws:
        hello, states, end = _drain(ws)
    assert hello["session"] == sid
    assert hello["edges"] == [[1, 2], [1, 3]]
    assert hello["n_robots"] == 3 and hello["n_dim"] == 2
    assert hello["h"] == 1e-3 and hello["r"] == 0.1
    assert hello["r_bar"] == pytest.approx(0.06)
    assert hello["kappa_eps"] == pytest.approx(0.04)
    assert hello["f_bar"] == 0.5
    assert hello["bound"] > 0.0

    # frame cadence in simulation time: at least 30 per simulated second
    ts = np.array([s["t"] for s in states])
    assert len(ts) >= 30
    assert np.all(np.diff(ts) > 0.0)
    assert np.max(np.diff(ts)) <= 1.0 / 30.0 + 2e-3

    one = states[0]
    assert len(one["slaves"]) == 3
    assert len(one["slaves"][0]["x"]) == 2
    assert len(one["links"]) == 2
    assert all(link["alive"] for link in one["links"])
    assert one["energy"]["V2"] >= one["energy"]["V1"] >= one["energy"]["Vp"]
    assert one["energy"]["bound"] > 0.0
    assert len(one["f"]) == 2 and len(one["K"]) == 3

    assert end["type"] == "end"
    assert end["malformed_frames"] == 0
    assert end["verdict"]["ok"]
    assert end["verdict"]["checks"]["link_distances"]["ok"]

    status = client.get(f"/session/{sid}").json()
    assert status["finished"]
    verdict = client.get(f"/session/{sid}/verdict").json()
    assert verdict == end["verdict"]


def test_malformed_frames_counted(client):
    sid = client.post("/session", json={"duration_s": 0.7}).json()["session_id"]
    bad = [{"type": "master", "x": [0.0, 0.0, 0.0]},   # wrong dimension
           {"type": "master", "x": "northwest"},
           {"type": "mystery"}]
    with client.websocket_connect(f"/session/{sid}") as ws:
        _, _, end = _drain(ws, send_commands=bad, send_raw=["not json"])
    assert end["malformed_frames"] == 4
    assert client.get(f"/session/{sid}").json()["malformed_frames"] == 4


def test_live_commands_replay_to_identical_verdict(client):
    # drive a live session, then push its command log through the batch path
    sid = client.post("/session", json={"duration_s": 1.5}).json()["session_id"]
    cmds = [{"type": "master", "x": [0.004, 0.0], "t_client": 1},
            {"type": "master", "x": [0.0, 0.003], "t_client": 2},
            {"type": "master", "x": [0.0, 0.0], "t_client": 3}]
    with client.websocket_connect(f"/session/{sid}") as ws:
        _, _, end = _drain(ws, send_commands=cmds)
    assert end["verdict"]["ok"]
    assert end["malformed_frames"] == 0

    logged = client.get(f"/session/{sid}/commands").json()["commands"]
    assert len(logged) == 3
    for row in logged:
        assert 0.0 <= row[0] <= 1.5   # stamped with simulation time

    base = engine.load_bundled("live_delayed")
    replay = dataclasses.replace(
        base, duration_s=1.5,
        master={"program": "command_log", "commands": logged,
                "k0": base.master["k0"], "f_max": base.master["f_max"]})
    res = engine.run(replay)
    assert res.verdict["ok"] == end["verdict"]["ok"]
    live_checks = end["verdict"]["checks"]
    for name, chk in res.verdict["checks"].items():
        assert_allclose(chk["worst_margin"], live_checks[name]["worst_margin"],
                        rtol=0.0, atol=0.0)


def test_missing_session_and_conflict(client):
    assert client.get("/session/nope").status_code == 404
    assert client.get("/session/nope/verdict").status_code == 404
    assert client.post("/session/nope/stop").status_code == 404
    sid = client.post("/session", json={"duration_s": 5.0}).json()["session_id"]
    assert client.get(f"/session/{sid}/verdict").status_code == 409
    with pytest.raises(WebSocketDisconnect):
        with client.websocket_connect("/session/ghost"):
            pass   # refused with close code 4404 before any frame


def test_unknown_scenario_rejected(client):
    resp = client.post("/session", json={"scenario": "nonexistent"})
    assert resp.status_code == 400


def test_stop_ends_running_session(client):
    sid = client.post("/session", json={"duration_s": 60.0}).json()["session_id"]
    with client.websocket_connect(f"/session/{sid}") as ws:
        hello = ws.receive_json()
        assert hello["duration_s"] == 60.0
        first = ws.receive_json()
        assert first["type"] == "state"
        stop = client.post(f"/session/{sid}/stop").json()
        assert stop["finished"]
        frame = ws.receive_json()
        while frame["type"] == "state":
            frame = ws.receive_json()
        assert frame["type"] == "end"
    status = client.get(f"/session/{sid}").json()
    assert status["finished"] and status["t"] < 60.0


def test_live_variant_rules():
    base = engine.load_bundled("paper_delayed")
    live = service._live_variant(base, None, 2.0)
    assert live.master["program"] == "live"
    assert live.duration_s == 2.0
    assert "points" not in live.master
    forced = service._live_variant(base, "delay_free", None)
    assert forced.mode == "delay_free"
    replay = dataclasses.replace(base, master={"program": "force_replay",
                                               "forces": [[0.0, 0.0]]})
    with pytest.raises(engine.ScenarioError):
        service._live_variant(replay, None, 1.0)
