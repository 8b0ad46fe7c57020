"""Kinematics of the passive, pushed, steer-only, brake-able platform.

The device never propels itself: forward speed is whatever the human
pushes, zeroed while the brake is engaged. Steering follows a bicycle
model with wheelbase measured from the handle contact point to the axle.
A lateral-misalignment disturbance term models the user drifting off
center behind the device and dragging its heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.6            # m, handle contact to axle
    max_steer: float = 0.6            # rad
    base_half_width: float = 0.115    # m, half of the ~9 inch base
    misalign_gain: float = 0.4        # rad per (m offset * m traveled)
    steer_rate: float = 1.5           # rad/s servo slew limit (0 = instant)
    brake_decel: float = 2.5          # m/s^2 while braked (<= 0 = instant stop)

    def __post_init__(self):
        if self.wheelbase <= 0:
            raise ValueError("wheelbase must be > 0")
        if not 0 < self.max_steer < math.pi / 2:
            raise ValueError("max_steer must be in (0, pi/2)")


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    steering: float = 0.0
    brake_engaged: bool = False
    odom_distance: float = 0.0
    speed: float = 0.0            # m/s over the last step (carries brake skid)

    @property
    def pose(self):
        return (self.x, self.y, self.heading)


@dataclass(frozen=True)
class HandleState:
    push_speed: float = 0.0       # m/s, user imposed, >= 0
    lateral_offset: float = 0.0   # m, signed offset of the user behind the device
    torque: float = 0.0           # N*m, signed handle twist

    def __post_init__(self):
        if self.push_speed < 0:
            raise ValueError("push_speed must be >= 0")


@dataclass(frozen=True)
class OdomNoiseParams:
    std_distance: float = 0.0     # m per step
    std_heading: float = 0.0      # rad per step


@dataclass(frozen=True)
class OdomDelta:
    d_distance: float
    d_heading: float


def effective_speed(handle: HandleState, state: VehicleState,
                    params: VehicleParams | None = None,
                    dt: float = 0.0) -> float:
    """Speed the platform actually moves at.

    Unbraked, it is whatever the user pushes. Braked, the wheels lock but
    momentum carries the platform on, shedding speed at brake_decel until
    it stands still (instantly when brake_decel <= 0).
    """
    if state.brake_engaged:
        if params is None or params.brake_decel <= 0:
            return 0.0
        return max(0.0, state.speed - params.brake_decel * dt)
    return handle.push_speed


def step_kinematics(state: VehicleState, handle: HandleState, steer_cmd: float,
                    dt: float, params: VehicleParams) -> VehicleState:
    """Advance one fixed step of the pushed-bicycle model."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    target = max(-params.max_steer, min(params.max_steer, steer_cmd))
    if params.steer_rate > 0:
        max_move = params.steer_rate * dt
        steer = state.steering + max(-max_move, min(max_move, target - state.steering))
    else:
        steer = target
    v = effective_speed(handle, state, params, dt)
    if v == 0.0:
        return replace(state, steering=steer, speed=0.0)
    if state.brake_engaged:
        # Locked wheels: the platform skids straight along its heading.
        heading = state.heading
    else:
        heading = state.heading + (v / params.wheelbase) * math.tan(steer) * dt \
            + params.misalign_gain * handle.lateral_offset * v * dt
    return replace(
        state,
        x=state.x + v * dt * math.cos(heading),
        y=state.y + v * dt * math.sin(heading),
        heading=heading,
        steering=steer,
        odom_distance=state.odom_distance + v * dt,
        speed=v,
    )


def sample_odometry(prev: VehicleState, nxt: VehicleState,
                    noise: OdomNoiseParams, rng) -> OdomDelta:
    """Noise-corrupted odometry between two truth states."""
    d_dist = nxt.odom_distance - prev.odom_distance
    d_head = nxt.heading - prev.heading
    if noise.std_distance > 0:
        d_dist += rng.normal(0.0, noise.std_distance)
    if noise.std_heading > 0:
        d_head += rng.normal(0.0, noise.std_heading)
    return OdomDelta(d_distance=d_dist, d_heading=d_head)
