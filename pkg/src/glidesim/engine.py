"""Deterministic fixed-step simulation loop, event logging, metrics, replay.

All randomness flows from named child streams of the master seed
(sensor, user, localization), so a config + seed pair fully determines
the run. Controller outputs computed at tick k are applied to the world
from tick k+1 on.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time as _time
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .errors import CorruptLog, GlidesimError, GuidanceFault, PlanExhausted, ScriptExhausted
from .modes import (
    GlideDirectedMode,
    GuidancePhase,
    TorqueInterpreter,
    UserDirectedMode,
)
from .planning import Advisory, SteeringCommand, plan_global
from .sensing import build_costmap, estimate, init_particles, maybe_resample, \
    mcl_predict, mcl_update, simulate_scan
from .simuser import SimulatedUser
from .vehicle import HandleState, VehicleState, sample_odometry, step_kinematics

LOG_FORMAT = "glidesim-log-v1"

# Fixed labels for the independent rng streams derived from the master seed.
_STREAM_SENSOR = 0
_STREAM_USER = 1
_STREAM_OBSTACLE = 2
_STREAM_MCL = 3


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(stream,)))


@dataclass(frozen=True)
class TrialMetrics:
    completed: bool
    time: float
    misalignment_events: int
    potential_collisions: int

    def to_dict(self):
        return {"completed": self.completed, "time": self.time,
                "misalignment_events": self.misalignment_events,
                "potential_collisions": self.potential_collisions}


class EventLog:
    """Header + ordered tick records + end record; NDJSON on disk."""

    def __init__(self, header: dict):
        self.header = header
        self.records = []
        self.end = None

    def append(self, record: dict):
        self.records.append(record)

    def finish(self, reason: str, t: float, metrics: TrialMetrics):
        self.end = {"type": "end", "reason": reason, "t": t,
                    "metrics": metrics.to_dict()}

    def lines(self):
        out = [json.dumps(self.header, sort_keys=True)]
        out += [json.dumps(r, sort_keys=True) for r in self.records]
        if self.end is not None:
            out.append(json.dumps(self.end, sort_keys=True))
        return out

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path):
        with open(path, "w") as f:
            f.write(self.dumps())

    @classmethod
    def read(cls, path) -> "EventLog":
        with open(path) as f:
            lines = [ln for ln in f.read().splitlines() if ln.strip()]
        if not lines:
            raise CorruptLog("empty log file")
        last_tick = None
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise CorruptLog(f"bad header: {exc}") from exc
        if header.get("type") != "header":
            raise CorruptLog("first record is not a header")
        log = cls(header)
        for ln in lines[1:]:
            try:
                rec = json.loads(ln)
            except json.JSONDecodeError as exc:
                raise CorruptLog(f"bad record after tick {last_tick}: {exc}",
                                 last_valid_tick=last_tick) from exc
            if rec.get("type") == "end":
                log.end = rec
            else:
                expected = last_tick + 1 if last_tick is not None else None
                if expected is not None and rec.get("k") != expected:
                    raise CorruptLog(f"tick gap after {last_tick}",
                                     last_valid_tick=last_tick)
                last_tick = rec.get("k")
                log.append(rec)
        if log.end is None:
            raise CorruptLog("log truncated: no end record",
                             last_valid_tick=last_tick)
        return log


class TraceUserSource:
    """Replays recorded handle states (live-session replay equivalence)."""

    def __init__(self, handles):
        self._handles = list(handles)
        self._k = 0
        self.offset = 0.0

    def tick(self, now, dt, haptics, brake_engaged, announcement,
             nearest_range=math.inf) -> HandleState:
        if self._k >= len(self._handles):
            h = self._handles[-1] if self._handles else {"v": 0.0, "e": 0.0, "tau": 0.0}
        else:
            h = self._handles[self._k]
        self._k += 1
        return HandleState(push_speed=h["v"], lateral_offset=h["e"], torque=h["tau"])


def trace_source_from_log(log: EventLog) -> TraceUserSource:
    return TraceUserSource([r["handle"] for r in log.records])


class Simulation:
    """One run, steppable tick by tick (the bridge drives this directly)."""

    def __init__(self, cfg: SimConfig, user_source=None):
        self.cfg = cfg
        self.scenario = cfg.scenario
        grid = self.scenario.grid
        self.grid = grid

        self.sensor_rng = make_rng(cfg.seed, _STREAM_SENSOR)
        self.user_rng = make_rng(cfg.seed, _STREAM_USER)
        self.obstacle_rng = make_rng(cfg.seed, _STREAM_OBSTACLE)
        self.mcl_rng = make_rng(cfg.seed, _STREAM_MCL)

        self.user_source = user_source or SimulatedUser(cfg.user, cfg.torque,
                                                        self.user_rng)
        start = cfg.start_pose()
        self.truth = VehicleState(x=start[0], y=start[1], heading=start[2])

        if cfg.mode == "glide_directed":
            goal = cfg.goal_pose()
            if goal is None:
                raise GlidesimError("glide_directed mode needs a goal")
            plan = plan_global(grid, start, goal, cfg.planner)
            self.mode = GlideDirectedMode(plan, cfg.controller, cfg.vehicle,
                                          cfg.modes, grid=grid,
                                          planner_cfg=cfg.planner)
        elif cfg.mode == "user_directed":
            self.mode = UserDirectedMode(
                self.scenario, cfg.controller, cfg.vehicle, cfg.modes,
                cfg.planner, cfg.route.start_node, cfg.route.first_edge,
                goal_destination=cfg.route.goal_destination)
        else:
            raise GlidesimError(f"unknown mode {cfg.mode!r}")

        self.particles = init_particles(cfg.mcl.n_particles, start,
                                        cfg.mcl.init_spread_xy,
                                        cfg.mcl.init_spread_heading, self.mcl_rng)
        self.est = estimate(self.particles, cfg.mcl.position_var_threshold)
        self.costmap = None
        self.torque_interp = TorqueInterpreter(cfg.torque)
        self.twist_queue = []

        self.k = 0
        self.ctrl_every = max(1, int(round(cfg.controller_period / cfg.dt)))
        self.applied_cmd = SteeringCommand(steer=0.0)
        self.applied_brake = False
        self.pending_haptics = []
        self.pending_announcement = None
        self.last_ctrl_truth = self.truth
        self.nearest_range = math.inf
        self.intervention_until = -1.0
        self.collision_armed = True
        self.misalign_since = None
        self.misalign_armed = True
        self.counts = {"misalignment": 0, "potential_collision": 0}

        self.log = EventLog({
            "type": "header",
            "format": LOG_FORMAT,
            "config_hash": cfg.hash(),
            "config": cfg.canonical(),
            "seed": cfg.seed,
        })
        self.done = False
        self.end_reason = None

    # -- helpers

    def obstacles_at(self, t: float):
        return [(p[0], p[1], o.radius)
                for o in self.cfg.obstacles if o.active(t)
                for p in [o.position(t)]]

    def true_clearance(self, t: float) -> float:
        c = self.grid.clearance(self.truth.x, self.truth.y)
        for ox, oy, orad in self.obstacles_at(t):
            c = min(c, math.hypot(self.truth.x - ox, self.truth.y - oy) - orad)
        return c - self.cfg.vehicle.base_half_width

    # -- main step

    def step(self):
        """Advance exactly one engine tick; returns the appended record."""
        if self.done:
            raise GlidesimError("simulation already finished")
        cfg = self.cfg
        t = self.k * cfg.dt
        events = []

        haptics_in = self.pending_haptics
        ann_in = self.pending_announcement
        self.pending_haptics = []
        self.pending_announcement = None

        brake_now = self.applied_brake or t < self.intervention_until
        handle = self.user_source.tick(t, cfg.dt, haptics_in, brake_now, ann_in,
                                       self.nearest_range)

        twist = self.torque_interp.push(handle.torque, t)
        if twist is not None:
            self.twist_queue.append(twist)

        braked = dataclasses.replace(self.truth, brake_engaged=brake_now)
        self.truth = step_kinematics(braked, handle, self.applied_cmd.steer,
                                     cfg.dt, cfg.vehicle)

        haptics_out = []
        announcement = None
        if self.k % self.ctrl_every == 0:
            odom = sample_odometry(self.last_ctrl_truth, self.truth,
                                   cfg.odom_noise, self.sensor_rng)
            self.last_ctrl_truth = self.truth
            scan = simulate_scan(self.grid, self.truth.pose, cfg.scan,
                                 self.sensor_rng, self.obstacles_at(t))
            finite = scan.ranges[np.isfinite(scan.ranges)]
            self.nearest_range = float(finite.min()) if len(finite) else math.inf

            self.particles = mcl_predict(self.particles, odom, cfg.motion_noise,
                                         self.mcl_rng)
            self.particles = mcl_update(self.particles, scan, self.grid,
                                        cfg.likelihood)
            self.particles = maybe_resample(self.particles, self.mcl_rng)
            self.est = estimate(self.particles, cfg.mcl.position_var_threshold)

            self.costmap = build_costmap(scan, self.est.pose, cfg.costmap,
                                         self.costmap, t)

            if isinstance(self.mode, UserDirectedMode):
                tw = self.twist_queue.pop(0) if self.twist_queue else None
                cmd, haptics_out, announcement = self.mode.tick(
                    self.est.pose, self.costmap, tw, t)
            else:
                self.twist_queue.clear()
                cmd, haptics_out = self.mode.tick(self.est.pose, self.costmap, t)
            self.applied_cmd = cmd
            self.applied_brake = cmd.brake_request or self.mode.state.brake
            self.pending_haptics = haptics_out
            self.pending_announcement = announcement

        # Event detection on ground truth.
        clearance = self.true_clearance(t)
        if clearance < cfg.events.collision_distance:
            if self.collision_armed:
                self.collision_armed = False
                self.counts["potential_collision"] += 1
                events.append({"kind": "potential_collision",
                               "clearance": round(clearance, 4)})
                self._intervene(t)
        elif clearance > cfg.events.collision_distance + 0.05:
            self.collision_armed = True

        if abs(handle.lateral_offset) > cfg.events.misalign_threshold:
            if self.misalign_since is None:
                self.misalign_since = t
            if (self.misalign_armed
                    and t - self.misalign_since >= cfg.events.misalign_dwell):
                self.misalign_armed = False
                self.counts["misalignment"] += 1
                events.append({"kind": "misalignment",
                               "offset": round(handle.lateral_offset, 4)})
        else:
            self.misalign_since = None
            self.misalign_armed = True

        record = {
            "type": "tick",
            "k": self.k,
            "t": round(t, 6),
            "truth": [self.truth.x, self.truth.y, self.truth.heading],
            "est": [self.est.x, self.est.y, self.est.heading],
            "converged": self.est.converged,
            "handle": {"v": handle.push_speed, "e": handle.lateral_offset,
                       "tau": handle.torque},
            "steer": self.applied_cmd.steer,
            "advisory": str(self.applied_cmd.advisory),
            "brake": bool(self.applied_brake or t < self.intervention_until),
            "guidance": self.mode.state.to_dict(),
            "haptics": [h.to_dict() for h in haptics_out],
            "announcement": announcement.to_dict() if announcement else None,
            "twist": ({"direction": str(twist.direction), "t": twist.timestamp}
                      if twist else None),
            "events": events,
        }
        self.log.append(record)
        self.k += 1

        if self.mode.state.phase == GuidancePhase.ARRIVED:
            self._finish("arrived", t)
        elif t >= cfg.timeout:
            self._finish("timeout", t)
        return record

    def _intervene(self, t: float):
        """Study-protocol intervention: stop, back the device up, re-center."""
        cfg = self.cfg
        self.intervention_until = t + cfg.events.intervention_hold
        back = cfg.events.backup_distance
        bx = self.truth.x - back * math.cos(self.truth.heading)
        by = self.truth.y - back * math.sin(self.truth.heading)
        if self.grid.clearance(bx, by) > cfg.vehicle.base_half_width:
            self.truth = VehicleState(x=bx, y=by, heading=self.truth.heading,
                                      steering=self.truth.steering,
                                      brake_engaged=True,
                                      odom_distance=self.truth.odom_distance)
            self.last_ctrl_truth = self.truth
            # The localizer is told about the reposition (experimenter reset).
            self.particles = init_particles(
                cfg.mcl.n_particles, self.truth.pose,
                cfg.mcl.init_spread_xy / 3.0, cfg.mcl.init_spread_heading / 3.0,
                self.mcl_rng)
            self.est = estimate(self.particles, cfg.mcl.position_var_threshold)
        if hasattr(self.user_source, "offset"):
            self.user_source.offset = 0.0

    def _finish(self, reason: str, t: float):
        self.done = True
        self.end_reason = reason
        m = TrialMetrics(completed=(reason == "arrived"), time=t,
                         misalignment_events=self.counts["misalignment"],
                         potential_collisions=self.counts["potential_collision"])
        self.log.finish(reason, t, m)
        self.metrics_result = m

    def run_to_end(self):
        try:
            while not self.done:
                self.step()
        except (GuidanceFault, PlanExhausted, ScriptExhausted) as exc:
            t = (self.k - 1) * self.cfg.dt
            self.fault = exc
            self._finish(f"fault:{type(exc).__name__}", t)
        return self.log, self.metrics_result


def run(cfg: SimConfig, user_source=None):
    """Run a configured trial to termination; returns (EventLog, TrialMetrics)."""
    sim = Simulation(cfg, user_source=user_source)
    return sim.run_to_end()


def metrics(log: EventLog) -> TrialMetrics:
    """Recompute trial metrics from a complete log (pure function of the log)."""
    if log.end is None:
        raise CorruptLog("log has no end record")
    mis = 0
    col = 0
    for r in log.records:
        for e in r.get("events", ()):
            if e["kind"] == "misalignment":
                mis += 1
            elif e["kind"] == "potential_collision":
                col += 1
    return TrialMetrics(completed=(log.end.get("reason") == "arrived"),
                        time=float(log.end["t"]),
                        misalignment_events=mis, potential_collisions=col)


def replay(log: EventLog, rate: float = 1.0):
    """Yield tick records at a scaled wall-clock rate (rate 0 = no delay)."""
    if log.end is None:
        raise CorruptLog("log has no end record")
    prev_t = None
    for rec in log.records:
        if rate > 0 and prev_t is not None:
            _time.sleep(max(0.0, (rec["t"] - prev_t) / rate))
        prev_t = rec["t"]
        yield rec
