import math

import numpy as np
import pytest

from glidesim.vehicle import (
    HandleState,
    OdomNoiseParams,
    VehicleParams,
    VehicleState,
    effective_speed,
    sample_odometry,
    step_kinematics,
)


DT = 0.02


def advance(state, handle, steer, steps, params, dt=DT):
    for _ in range(steps):
        state = step_kinematics(state, handle, steer, dt, params)
    return state


def test_straight_line_distance():
    params = VehicleParams()
    st = VehicleState()
    st = advance(st, HandleState(push_speed=1.0), 0.0, 500, params)
    assert st.x == pytest.approx(10.0, abs=1e-9)
    assert st.y == pytest.approx(0.0, abs=1e-12)
    assert st.odom_distance == pytest.approx(10.0)


def test_constant_steer_traces_circle():
    # Closed-form: constant steering angle d gives turning radius L / tan(d).
    params = VehicleParams(steer_rate=0.0)
    delta = 0.3
    radius = params.wheelbase / math.tan(delta)
    st = VehicleState(steering=delta)
    handle = HandleState(push_speed=0.5)
    seen = []
    for _ in range(4000):
        st = step_kinematics(st, handle, delta, DT, params)
        seen.append((st.x, st.y))
    # Every visited point lies within a small tolerance of the circle
    # centered one radius to the left of the start pose.
    cx, cy = 0.0, radius
    rr = [math.hypot(x - cx, y - cy) for x, y in seen]
    assert max(abs(r - radius) for r in rr) < 0.01


def test_steer_command_clamped():
    params = VehicleParams(steer_rate=0.0)
    st = step_kinematics(VehicleState(), HandleState(push_speed=1.0), 2.0, DT, params)
    assert st.steering == pytest.approx(params.max_steer)


def test_steer_slew_rate_limits_change():
    params = VehicleParams(steer_rate=1.5)
    st = step_kinematics(VehicleState(), HandleState(push_speed=1.0),
                         params.max_steer, DT, params)
    assert st.steering == pytest.approx(1.5 * DT)


def test_brake_skid_stopping_distance():
    # v^2 / (2 a): from 2.0 m/s at 2.5 m/s^2 the platform slides 0.8 m.
    params = VehicleParams()
    st = VehicleState(speed=2.0, brake_engaged=True)
    handle = HandleState(push_speed=0.0)
    x0 = st.x
    for _ in range(200):
        st = step_kinematics(st, handle, 0.0, DT, params)
    expect = 2.0 ** 2 / (2 * params.brake_decel)
    assert st.x - x0 == pytest.approx(expect, abs=0.05)
    assert st.speed == 0.0


def test_instant_brake_when_decel_disabled():
    params = VehicleParams(brake_decel=0.0)
    st = VehicleState(speed=2.0, brake_engaged=True)
    assert effective_speed(HandleState(push_speed=2.0), st, params, DT) == 0.0


def test_braked_pose_fixpoint_after_stop():
    params = VehicleParams()
    st = VehicleState(x=1.0, y=2.0, heading=0.5, brake_engaged=True, speed=0.0)
    nxt = step_kinematics(st, HandleState(push_speed=2.0), 0.2, DT, params)
    assert (nxt.x, nxt.y, nxt.heading) == (st.x, st.y, st.heading)


def test_misalignment_drags_heading():
    params = VehicleParams()
    handle = HandleState(push_speed=1.0, lateral_offset=0.2)
    st = advance(VehicleState(), handle, 0.0, 100, params)
    # positive offset drags heading positive at rate k * e * v
    assert st.heading == pytest.approx(params.misalign_gain * 0.2 * 1.0 * 2.0,
                                       rel=1e-6)


def test_zero_dt_rejected():
    with pytest.raises(ValueError):
        step_kinematics(VehicleState(), HandleState(), 0.0, 0.0, VehicleParams())


def test_negative_push_speed_rejected():
    with pytest.raises(ValueError):
        HandleState(push_speed=-0.1)


def test_odometry_noise_statistics():
    # Sample mean approaches the true delta; sample std approaches the
    # configured std (law of large numbers check on the generator wiring).
    rng = np.random.default_rng(7)
    prev = VehicleState()
    nxt = VehicleState(x=1.0, odom_distance=1.0, heading=0.1)
    noise = OdomNoiseParams(std_distance=0.05, std_heading=0.02)
    ds = [sample_odometry(prev, nxt, noise, rng) for _ in range(4000)]
    dd = np.array([d.d_distance for d in ds])
    dh = np.array([d.d_heading for d in ds])
    assert dd.mean() == pytest.approx(1.0, abs=0.005)
    assert dd.std() == pytest.approx(0.05, rel=0.1)
    assert dh.mean() == pytest.approx(0.1, abs=0.002)
    assert dh.std() == pytest.approx(0.02, rel=0.1)


def test_noise_free_odometry_is_exact():
    rng = np.random.default_rng(0)
    prev = VehicleState()
    nxt = VehicleState(x=2.0, odom_distance=2.0, heading=-0.3)
    d = sample_odometry(prev, nxt, OdomNoiseParams(), rng)
    assert d.d_distance == 2.0
    assert d.d_heading == -0.3
