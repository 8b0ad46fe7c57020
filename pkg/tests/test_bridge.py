import json

import pytest
from fastapi.testclient import TestClient

from glidesim.bridge import LiveUserSource, create_app
from glidesim.config import SimConfig
from glidesim.engine import EventLog, run, trace_source_from_log


def straight_cfg(seed=21):
    return SimConfig({"map": "straight", "mode": "glide_directed", "seed": seed,
                      "start": [2.0, 1.25, 0.0], "goal": "end",
                      "timeout": 60.0})


def connect(cfg):
    client = TestClient(create_app(cfg, realtime=False))
    return client


def drain(ws):
    """Collect all pending frames: a log request marks the queue's end."""
    ws.send_json({"type": "control", "action": "log"})
    frames = []
    while True:
        f = ws.receive_json()
        if f["type"] == "log":
            return frames, f
        frames.append(f)


# ---------------------------------------------------------------------------
# LiveUserSource


def test_live_source_clamps_and_warns():
    src = LiveUserSource()
    assert src.apply(0.5, 0.1, 0.0) == []
    warns = src.apply(-1.0, 9.0, 0.0)
    assert len(warns) == 2
    assert src.push_speed == 0.0
    assert src.torque == 2.0


def test_live_source_dead_man_decay():
    src = LiveUserSource(staleness=0.5)
    src.apply(1.0, 0.0, 0.0)
    for k in range(25):  # up to t=0.5: input fresh, speed approaches target
        h = src.tick(k * 0.02, 0.02, (), False, None)
    assert h.push_speed > 0.9
    for k in range(25, 100):  # stale: decays back to zero
        h = src.tick(k * 0.02, 0.02, (), False, None)
    assert h.push_speed == 0.0


def test_live_source_brake_zeroes_speed():
    src = LiveUserSource()
    src.apply(1.0, 0.0, 0.0)
    for k in range(20):
        src.tick(k * 0.02, 0.02, (), False, None)
    h = src.tick(0.42, 0.02, (), True, None)
    assert h.push_speed == 0.0


# ---------------------------------------------------------------------------
# Session protocol


def test_hello_frame_shape():
    cfg = straight_cfg()
    with connect(cfg) as client, client.websocket_connect("/session") as ws:
        hello = ws.receive_json()
        assert hello["type"] == "hello"
        assert hello["seq"] == 1
        assert len(hello["map_digest"]) == 64
        assert hello["config"]["seed"] == cfg.seed
        assert hello["session"]


def test_input_moves_the_platform():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        ws.receive_json()
        ws.send_json({"type": "input", "push_speed": 0.8, "torque": 0.0})
        ws.send_json({"type": "control", "action": "step", "ticks": 20})
        frames, _ = drain(ws)
        ticks = [f for f in frames if f["type"] == "tick"]
        assert ticks
        assert ticks[-1]["truth"][0] > 2.0
        assert ticks[-1]["handle"]["v"] > 0.0


def test_out_of_range_input_warned_and_clamped():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        ws.receive_json()
        ws.send_json({"type": "input", "push_speed": 99.0, "torque": -7.0})
        warn = ws.receive_json()
        assert warn["type"] == "warning"
        warn2 = ws.receive_json()
        assert warn2["type"] == "warning"


def test_sequence_numbers_strictly_increase():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        frames = [ws.receive_json()]
        ws.send_json({"type": "input", "push_speed": 0.5, "torque": 0.0})
        ws.send_json({"type": "control", "action": "step", "ticks": 60})
        ws.send_json({"type": "control", "action": "log"})
        while frames[-1]["type"] != "log":
            frames.append(ws.receive_json())
        seqs = [f["seq"] for f in frames]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_tick_decimation_below_sim_rate():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        ws.receive_json()
        ws.send_json({"type": "input", "push_speed": 0.5, "torque": 0.0})
        ws.send_json({"type": "control", "action": "step", "ticks": 100})
        ws.send_json({"type": "control", "action": "log"})
        ticks = 0
        while True:
            f = ws.receive_json()
            if f["type"] == "log":
                break
            if f["type"] == "tick":
                ticks += 1
        assert 20 <= ticks < 100  # 100 sim ticks (2 s) wired at <= 30 Hz


def test_unknown_frame_type_errors():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        ws.receive_json()
        ws.send_json({"type": "mystery"})
        err = ws.receive_json()
        assert err["type"] == "error"
        assert "mystery" in err["message"]


def test_reset_reissues_hello():
    with connect(straight_cfg()) as client, \
            client.websocket_connect("/session") as ws:
        first = ws.receive_json()
        ws.send_json({"type": "control", "action": "step", "ticks": 10})
        ws.send_json({"type": "control", "action": "reset"})
        frames, _ = drain(ws)
        hellos = [f for f in frames if f["type"] == "hello"]
        assert hellos and hellos[-1]["config"] == first["config"]


# ---------------------------------------------------------------------------
# Live session end to end + replay equivalence


def drive_to_completion(ws, push=1.2):
    """Push steadily (refreshing within the staleness window) until the end."""
    frames = []
    for _ in range(500):
        ws.send_json({"type": "input", "push_speed": push, "torque": 0.0})
        ws.send_json({"type": "control", "action": "step", "ticks": 20})
        ws.send_json({"type": "control", "action": "log"})
        while True:
            f = ws.receive_json()
            if f["type"] == "log":
                break
            frames.append(f)
        if frames and frames[-1]["type"] == "trial_end":
            ws.send_json({"type": "control", "action": "log"})
            return frames, ws.receive_json()["text"]
    raise AssertionError("trial did not end")


def test_live_session_completes_and_replays_identically(tmp_path):
    cfg = straight_cfg(seed=5)
    with connect(cfg) as client, client.websocket_connect("/session") as ws:
        ws.receive_json()
        frames, log_text = drive_to_completion(ws)
    end = frames[-1]
    assert end["type"] == "trial_end" and end["reason"] == "arrived"
    assert end["metrics"]["completed"]

    path = tmp_path / "live.ndjson"
    path.write_text(log_text)
    live_log = EventLog.read(path)

    # Re-feeding the recorded handle stream headless reproduces the log
    # byte for byte: the bridge adds no hidden state.
    replayed, m = run(straight_cfg(seed=5),
                      user_source=trace_source_from_log(live_log))
    assert replayed.dumps() == log_text
    assert m.completed


def test_live_twist_acknowledged_at_junction():
    cfg = SimConfig({"map": "three_dest", "mode": "user_directed", "seed": 2,
                     "timeout": 120.0,
                     "route": {"start_node": "e", "first_edge": "e_es",
                               "goal_destination": "work area"}})
    with connect(cfg) as client, client.websocket_connect("/session") as ws:
        ws.receive_json()
        announcement = None
        for _ in range(300):
            ws.send_json({"type": "input", "push_speed": 1.0, "torque": 0.0})
            ws.send_json({"type": "control", "action": "step", "ticks": 10})
            ws.send_json({"type": "control", "action": "log"})
            stop = False
            while True:
                f = ws.receive_json()
                if f["type"] == "log":
                    break
                if f["type"] == "tick" and f["announcement"]:
                    announcement = f["announcement"]
                    stop = True
            if stop:
                break
        assert announcement is not None
        assert announcement["node"] == "s"
        assert "turn left" in announcement["text"]

        # Twist left: hold torque past the debounce, then release.
        acks = []
        for _ in range(40):
            ws.send_json({"type": "input", "push_speed": 0.0, "torque": -0.8})
            ws.send_json({"type": "control", "action": "step", "ticks": 5})
            ws.send_json({"type": "control", "action": "log"})
            while True:
                f = ws.receive_json()
                if f["type"] == "log":
                    break
                if f["type"] == "tick":
                    acks += [h["meaning"] for h in f["haptics"]]
            if acks:
                break
        assert "left_ack" in acks
