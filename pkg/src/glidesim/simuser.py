"""Scripted human models for headless runs.

The simulated traveler supplies push speed (ramping toward a target,
dropping after a slow-down haptic once their reaction latency elapses),
a mean-reverting lateral misalignment process, and junction decisions
rendered as torque pulses shaped to pass the twist debouncer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ScriptExhausted
from .floorplan import HERE, RelativeDirection
from .modes import HapticMeaning, JunctionAnnouncement, TorqueConfig
from .vehicle import HandleState


@dataclass(frozen=True)
class TwistPolicy:
    kind: str = "none"             # none | scripted | to_destination | random
    turns: tuple = ()              # scripted: ordered RelativeDirection values
    destination: str | None = None  # to_destination


@dataclass(frozen=True)
class UserModel:
    target_speed: float = 0.5
    slow_speed: float = 0.25
    accel: float = 0.5              # m/s^2 ramp rate
    reaction_latency: float = 0.5   # s from haptic to speed response
    drift_sigma: float = 0.0        # m, stationary std of the offset process
    drift_reversion: float = 1.0    # 1/s mean reversion rate
    drift_bias: float = 0.0         # m, constant offset the process reverts to
    twist_policy: TwistPolicy = field(default_factory=TwistPolicy)
    proximity_slowing: bool = False  # echolocation-inspired: slow near obstacles
    proximity_range: float = 1.0

    def __post_init__(self):
        if not 0 <= self.slow_speed <= self.target_speed:
            raise ValueError("need 0 <= slow_speed <= target_speed")
        if self.reaction_latency < 0:
            raise ValueError("reaction_latency must be >= 0")


@dataclass(frozen=True)
class TorquePulse:
    direction: RelativeDirection
    magnitude: float
    duration: float


def policy_decide(policy: TwistPolicy, announcement: JunctionAnnouncement,
                  rng, torque_cfg: TorqueConfig, state: dict) -> TorquePulse | None:
    """Decide at a junction; returns a torque pulse, or None for forward.

    The pulse exceeds tau_on for longer than t_hold so the debouncer is
    guaranteed to accept it.
    """
    def pulse(direction):
        if direction == RelativeDirection.FORWARD:
            return None
        return TorquePulse(direction=direction,
                           magnitude=2.0 * torque_cfg.tau_on,
                           duration=2.5 * torque_cfg.t_hold)

    options = [d for d in announcement.options if d != HERE]
    if policy.kind == "scripted":
        idx = state.setdefault("route_index", 0)
        if idx >= len(policy.turns):
            raise ScriptExhausted(f"route exhausted after {idx} junctions")
        state["route_index"] = idx + 1
        return pulse(RelativeDirection(policy.turns[idx]))
    if policy.kind == "to_destination":
        containing = [d for d in options
                      if policy.destination in announcement.options[d]]
        order = [RelativeDirection.FORWARD, RelativeDirection.LEFT,
                 RelativeDirection.RIGHT]
        pool = containing or options
        choice = min(pool, key=lambda d: order.index(d))
        return pulse(choice)
    if policy.kind == "random":
        choice = options[int(rng.integers(len(options)))]
        return pulse(choice)
    return None


class SimulatedUser:
    """Steps the user model once per engine tick; owns its rng stream."""

    def __init__(self, model: UserModel, torque_cfg: TorqueConfig, rng):
        self.model = model
        self.torque_cfg = torque_cfg
        self.rng = rng
        self.speed = 0.0
        self.offset = model.drift_bias
        self._slow = False
        self._pending_slow_at = None
        self._pending_pulse = None      # (start_time, TorquePulse)
        self._active_pulse = None       # (end_time, TorquePulse)
        self._policy_state = {}

    def tick(self, now: float, dt: float, haptics, brake_engaged: bool,
             announcement: JunctionAnnouncement | None,
             nearest_range: float = math.inf) -> HandleState:
        m = self.model

        for h in haptics:
            if h.meaning == HapticMeaning.SLOW_DOWN and self._pending_slow_at is None:
                self._pending_slow_at = now + m.reaction_latency
        if self._pending_slow_at is not None and now >= self._pending_slow_at:
            self._slow = True
            self._pending_slow_at = None

        if announcement is not None:
            decision = policy_decide(m.twist_policy, announcement, self.rng,
                                     self.torque_cfg, self._policy_state)
            if decision is not None:
                self._pending_pulse = (now + m.reaction_latency, decision)

        torque = 0.0
        if self._pending_pulse is not None and now >= self._pending_pulse[0]:
            p = self._pending_pulse[1]
            self._active_pulse = (now + p.duration, p)
            self._pending_pulse = None
        if self._active_pulse is not None:
            end, p = self._active_pulse
            if now < end:
                sign = -1.0 if p.direction == RelativeDirection.LEFT else 1.0
                torque = sign * p.magnitude
            else:
                self._active_pulse = None

        target = m.slow_speed if self._slow else m.target_speed
        if m.proximity_slowing and nearest_range < m.proximity_range:
            target = min(target, m.slow_speed)
        if brake_engaged:
            self.speed = 0.0
        else:
            delta = target - self.speed
            step = m.accel * dt
            self.speed += max(-step, min(step, delta))
            self.speed = max(0.0, self.speed)

        if m.drift_sigma > 0:
            lam = m.drift_reversion
            noise = m.drift_sigma * math.sqrt(max(2.0 * lam * dt, 0.0))
            self.offset += (-lam * (self.offset - m.drift_bias) * dt
                            + noise * self.rng.normal())
        else:
            self.offset = m.drift_bias

        return HandleState(push_speed=self.speed, lateral_offset=self.offset,
                           torque=torque)
