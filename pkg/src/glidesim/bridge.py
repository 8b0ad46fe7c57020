"""Live session server: one WebSocket client drives a running simulation.

Frames are JSON text, one message per frame, all carrying a session id and
a strictly increasing sequence number. Outbound: hello, tick, trial_end,
warning, error, log. Inbound: input {push_speed, torque} and control
{action: start | pause | step | reset | set_mode | set_goal | set_route |
log}. The session writes the same EventLog as a headless run, so a
recorded session replays bit-for-bit through the engine's trace source.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import math
import secrets

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import SimConfig
from .engine import Simulation
from .errors import GlidesimError
from .floorplan import map_to_dict
from .vehicle import HandleState

WIRE_HZ = 30.0          # outbound tick decimation
MAX_PUSH = 2.5          # m/s handle clamp
MAX_TORQUE = 2.0        # N*m sensor range


class LiveUserSource:
    """Latest-wins handle input with dead-man decay.

    If no input arrives for `staleness` seconds of simulation time, the
    push speed decays to zero: an absent human cannot move the platform.
    """

    def __init__(self, staleness: float = 0.5, decay: float = 2.5):
        self.staleness = staleness
        self.decay = decay
        self.push_speed = 0.0
        self.torque = 0.0
        self.offset = 0.0
        self.speed = 0.0
        self._last_input_t = -math.inf

    def apply(self, push_speed: float, torque: float, now: float):
        """Returns a list of clamp warnings (empty when in range)."""
        warnings = []
        if push_speed < 0.0 or push_speed > MAX_PUSH:
            warnings.append(f"push_speed {push_speed} clamped to [0, {MAX_PUSH}]")
        if abs(torque) > MAX_TORQUE:
            warnings.append(f"torque {torque} clamped to [-{MAX_TORQUE}, {MAX_TORQUE}]")
        self.push_speed = min(max(push_speed, 0.0), MAX_PUSH)
        self.torque = min(max(torque, -MAX_TORQUE), MAX_TORQUE)
        self._last_input_t = now
        return warnings

    def tick(self, now, dt, haptics, brake_engaged, announcement,
             nearest_range=math.inf) -> HandleState:
        stale = now - self._last_input_t > self.staleness
        target = 0.0 if stale else self.push_speed
        step = self.decay * dt
        self.speed += max(-step, min(step, target - self.speed))
        if brake_engaged:
            self.speed = 0.0
        torque = 0.0 if stale else self.torque
        return HandleState(push_speed=self.speed, lateral_offset=self.offset,
                           torque=torque)


class Session:
    """Wraps a Simulation behind the frame protocol; transport-agnostic."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.id = secrets.token_hex(8)
        self.seq = 0
        self.running = False
        self.reset()

    def reset(self):
        self.live = LiveUserSource()
        self.sim = Simulation(self.cfg, user_source=self.live)
        self.running = False
        self._last_wire_t = -math.inf

    def _frame(self, type_: str, **body) -> dict:
        self.seq += 1
        return {"type": type_, "session": self.id, "seq": self.seq, **body}

    def hello(self) -> dict:
        map_digest = hashlib.sha256(
            json.dumps(map_to_dict(self.cfg.scenario), sort_keys=True).encode()
        ).hexdigest()
        return self._frame("hello", map_digest=map_digest,
                           config=self.cfg.canonical(), dt=self.cfg.dt)

    def _tick_frame(self, record: dict) -> dict:
        cm = self.sim.costmap
        marks = [[round(m[0], 3), round(m[1], 3)] for m in cm.marks] if cm else []
        return self._frame(
            "tick", k=record["k"], t=record["t"], truth=record["truth"],
            est=record["est"], steer=record["steer"], brake=record["brake"],
            advisory=record["advisory"], guidance=record["guidance"],
            haptics=record["haptics"], announcement=record["announcement"],
            handle=record["handle"], events=record["events"], costmap=marks)

    def step(self, n: int = 1):
        """Advance n engine ticks; returns outbound frames (decimated)."""
        frames = []
        for _ in range(n):
            if self.sim.done:
                break
            record = self.sim.step()
            must_send = bool(record["haptics"] or record["announcement"]
                             or record["events"] or record["twist"])
            if must_send or record["t"] - self._last_wire_t >= 1.0 / WIRE_HZ - 1e-9:
                self._last_wire_t = record["t"]
                frames.append(self._tick_frame(record))
            if self.sim.done:
                self.running = False
                frames.append(self._frame(
                    "trial_end", reason=self.sim.end_reason,
                    metrics=self.sim.metrics_result.to_dict()))
        return frames

    def handle_message(self, msg: dict):
        """Returns outbound frames. Raises GlidesimError on protocol abuse."""
        if not isinstance(msg, dict):
            raise GlidesimError("frame must be a JSON object")
        tag = msg.get("type")
        if tag == "input":
            now = self.sim.k * self.cfg.dt
            warnings = self.live.apply(float(msg.get("push_speed", 0.0)),
                                       float(msg.get("torque", 0.0)), now)
            return [self._frame("warning", message=w) for w in warnings]
        if tag == "control":
            return self._control(msg)
        raise GlidesimError(f"unknown frame type {tag!r}")

    def _control(self, msg: dict):
        action = msg.get("action")
        if action == "start":
            if not self.sim.done:
                self.running = True
            return []
        if action == "pause":
            self.running = False
            return []
        if action == "step":
            return self.step(int(msg.get("ticks", 1)))
        if action == "reset":
            self.reset()
            return [self.hello()]
        if action in ("set_mode", "set_goal", "set_route"):
            doc = dict(self.cfg.raw)
            key = action.removeprefix("set_")
            doc[key] = msg.get(key)
            self.cfg = SimConfig(doc)
            self.reset()
            return [self.hello()]
        if action == "log":
            return [self._frame("log", text=self.sim.log.dumps())]
        raise GlidesimError(f"unknown control action {action!r}")


def create_app(cfg: SimConfig, realtime: bool = True) -> FastAPI:
    """One-session server. With realtime=False the simulation advances only
    on explicit step controls (deterministic; used by the test suite)."""
    app = FastAPI()
    app.state.session = None

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        sess = Session(cfg)
        app.state.session = sess
        await ws.send_json(sess.hello())

        async def pump_frames(frames):
            for f in frames:
                await ws.send_json(f)

        try:
            if not realtime:
                while True:
                    msg = await ws.receive_json()
                    await pump_frames(sess.handle_message(msg))
            else:
                loop = asyncio.get_running_loop()
                recv_task = asyncio.ensure_future(ws.receive_json())
                next_step = loop.time()
                while True:
                    if sess.running and not sess.sim.done:
                        timeout = max(0.0, next_step - loop.time())
                    else:
                        timeout = None
                    done, _ = await asyncio.wait({recv_task}, timeout=timeout)
                    if recv_task in done:
                        msg = recv_task.result()
                        await pump_frames(sess.handle_message(msg))
                        recv_task = asyncio.ensure_future(ws.receive_json())
                    if sess.running and not sess.sim.done \
                            and loop.time() >= next_step:
                        await pump_frames(sess.step(1))
                        next_step += cfg.dt
        except WebSocketDisconnect:
            pass
        except GlidesimError as exc:
            await ws.send_json(sess._frame("error", message=str(exc)))
            await ws.close()
        except RuntimeError:
            pass  # client went away mid-send

    return app


def serve(cfg: SimConfig, host: str = "127.0.0.1", port: int = 8722):
    import uvicorn
    uvicorn.run(create_app(cfg, realtime=True), host=host, port=port)
