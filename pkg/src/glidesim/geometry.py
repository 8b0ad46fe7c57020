"""Small angle/pose helpers used throughout."""

import math

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def quantize_heading_deg(heading: float) -> int:
    """Snap a heading in radians to the nearest of {0, 90, 180, 270} degrees."""
    deg = math.degrees(wrap_angle(heading)) % 360.0
    return int(round(deg / 90.0) * 90) % 360


def heading_from_deg(deg: int) -> float:
    return wrap_angle(math.radians(deg))


def dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def bearing_to(from_pose, point) -> float:
    """Bearing of a world point in the frame of (x, y, heading)."""
    dx = point[0] - from_pose[0]
    dy = point[1] - from_pose[1]
    return wrap_angle(math.atan2(dy, dx) - from_pose[2])


def circular_mean(angles, weights) -> float:
    s = sum(w * math.sin(a) for a, w in zip(angles, weights))
    c = sum(w * math.cos(a) for a, w in zip(angles, weights))
    return math.atan2(s, c)
