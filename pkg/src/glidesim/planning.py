"""Global planning and the steering controller.

The global planner runs A* over the 8-connected inflated grid (uniform
move cost, no corner cutting), shortcut-smooths the cell path, and
replaces corners with circular arcs of radius >= min_radius where
clearance allows. The local controller is pure pursuit re-targeted for a
device that cannot set its own speed: instead of regulating velocity it
emits slow-down advisories and brake requests.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoPath, PlanExhausted
from .floorplan import FREE, OccupancyGrid
from .geometry import wrap_angle
from .sensing import LETHAL, LocalCostmap
from .vehicle import VehicleParams


class Advisory(str, enum.Enum):
    NONE = "none"
    SLOW_DOWN = "slow_down"

    def __str__(self):
        return self.value


class GoalZone(str, enum.Enum):
    FAR = "far"
    NEAR = "near"
    ARRIVED = "arrived"


@dataclass(frozen=True)
class ControllerConfig:
    lookahead: float = 0.8
    slowdown_distance: float = 2.0      # "near goal" band
    arrival_tolerance: float = 0.3
    kappa_slow: float = 0.6             # 1/m; sharper commanded turns advise slowing
    cost_slow_threshold: int = 128
    candidate_steer_count: int = 15
    safety_distance: float = 1.0        # m of forward arc scored against the costmap
    deviation_weight: float = 100.0     # score per rad of deviation from pursuit steer


@dataclass(frozen=True)
class SteeringCommand:
    steer: float
    advisory: Advisory = Advisory.NONE
    brake_request: bool = False


@dataclass(frozen=True)
class PursuitGeometry:
    lookahead_point: tuple
    alpha: float
    curvature: float


class GlobalPlan:
    """Polyline plan with arc-length parametrization."""

    def __init__(self, waypoints, goal_pose, min_radius: float,
                 raw_cost: int | None = None, raw_cells=None):
        self.waypoints = np.asarray(waypoints, dtype=float)
        if self.waypoints.ndim != 2 or len(self.waypoints) < 2:
            raise ValueError("plan needs at least two waypoints")
        self.goal_pose = tuple(goal_pose)
        self.raw_cost = raw_cost
        self.raw_cells = raw_cells
        seg = np.diff(self.waypoints, axis=0)
        self._seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])
        # Report the tightest turn actually present: corners that cannot
        # clear the requested radius are rounded at a smaller one, and the
        # plan's radius field reflects that so the curvature bound holds.
        self.min_radius = float(min_radius)
        if len(self.waypoints) >= 3:
            max_curv = float(np.max(self.discrete_curvatures()))
            if max_curv > 1.0 / max(self.min_radius, 1e-9):
                self.min_radius = 1.0 / max_curv

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def project(self, x: float, y: float) -> float:
        """Arc length of the nearest point on the plan to (x, y)."""
        p = np.array([x, y])
        a = self.waypoints[:-1]
        b = self.waypoints[1:]
        ab = b - a
        denom = np.maximum(np.sum(ab * ab, axis=1), 1e-12)
        t = np.clip(np.sum((p - a) * ab, axis=1) / denom, 0.0, 1.0)
        near = a + t[:, None] * ab
        d2 = np.sum((near - p) ** 2, axis=1)
        k = int(np.argmin(d2))
        return float(self._cum[k] + t[k] * self._seg_len[k])

    def point_at(self, s: float):
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self._cum, s, side="right") - 1)
        k = min(k, len(self._seg_len) - 1)
        t = (s - self._cum[k]) / max(self._seg_len[k], 1e-12)
        p = self.waypoints[k] + t * (self.waypoints[k + 1] - self.waypoints[k])
        return (float(p[0]), float(p[1]))

    def cross_track_error(self, x: float, y: float) -> float:
        s = self.project(x, y)
        px, py = self.point_at(s)
        return math.hypot(x - px, y - py)

    def discrete_curvatures(self) -> np.ndarray:
        """Menger curvature at each interior waypoint."""
        p = self.waypoints
        a, b, c = p[:-2], p[1:-1], p[2:]
        ab = np.hypot(*(b - a).T)
        bc = np.hypot(*(c - b).T)
        ca = np.hypot(*(c - a).T)
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) \
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        denom = np.maximum(ab * bc * ca, 1e-12)
        return np.abs(2.0 * cross) / denom


# ---------------------------------------------------------------------------
# A* over the inflated grid

_MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def astar_cells(blocked: np.ndarray, start, goal):
    """Shortest 8-connected cell path by move count; no corner cutting.

    Returns (path cells, move count). Raises NoPath.
    """
    h, w = blocked.shape
    if blocked[start] or blocked[goal]:
        raise NoPath(f"start {start} or goal {goal} blocked")

    def heuristic(c):
        return max(abs(c[0] - goal[0]), abs(c[1] - goal[1]))

    g = {start: 0}
    came = {}
    heap = [(heuristic(start), 0, start)]
    closed = set()
    while heap:
        f, gc, cur = heapq.heappop(heap)
        if cur == goal:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            path.reverse()
            return path, gc
        if cur in closed:
            continue
        closed.add(cur)
        for di, dj in _MOVES:
            ni, nj = cur[0] + di, cur[1] + dj
            if not (0 <= ni < h and 0 <= nj < w) or blocked[ni, nj]:
                continue
            if di != 0 and dj != 0:
                # Diagonal moves need both orthogonal neighbors open.
                if blocked[cur[0], nj] or blocked[ni, cur[1]]:
                    continue
            ng = gc + 1
            nxt = (ni, nj)
            if ng < g.get(nxt, math.inf):
                g[nxt] = ng
                came[nxt] = cur
                heapq.heappush(heap, (ng + heuristic(nxt), ng, nxt))
    raise NoPath("goal unreachable")


def _line_of_sight(blocked: np.ndarray, grid: OccupancyGrid, a, b) -> bool:
    n = max(2, int(math.hypot(b[0] - a[0], b[1] - a[1]) / (grid.resolution / 2.0)) + 1)
    for k in range(n + 1):
        t = k / n
        x = a[0] + t * (b[0] - a[0])
        y = a[1] + t * (b[1] - a[1])
        i, j = grid.world_to_cell(x, y)
        if not grid.in_bounds(i, j) or blocked[i, j]:
            return False
    return True


def _shortcut(points, blocked, grid):
    out = [points[0]]
    k = 0
    while k < len(points) - 1:
        j = len(points) - 1
        while j > k + 1 and not _line_of_sight(blocked, grid, points[k], points[j]):
            j -= 1
        out.append(points[j])
        k = j
    return out


def smooth_corners(points, min_radius: float, spacing: float, clear_fn=None):
    """Resample a polyline, replacing corners with tangent arcs.

    Arcs use the largest radius in {R, R/2, R/4} whose tangent trim fits
    the adjacent segments and (when clear_fn is given) whose samples stay
    clear. Corners that cannot take any arc stay sharp.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    out = [pts[0]]
    for k in range(1, len(pts) - 1):
        a, b, c = out[-1], pts[k], pts[k + 1]
        v1, v2 = b - a, c - b
        l1, l2 = np.linalg.norm(v1), np.linalg.norm(v2)
        if l1 < 1e-9 or l2 < 1e-9:
            continue
        u1, u2 = v1 / l1, v2 / l2
        turn = wrap_angle(math.atan2(u2[1], u2[0]) - math.atan2(u1[1], u1[0]))
        if abs(turn) < 1e-6:
            out.append(b)
            continue
        half = abs(turn) / 2.0
        placed = False
        for r in (min_radius, min_radius / 2.0, min_radius / 4.0,
                  min_radius / 8.0):
            trim = r * math.tan(half)
            if trim > 0.45 * l1 or trim > 0.45 * l2:
                continue
            start = b - u1 * trim
            center = start + r * np.array([-u1[1], u1[0]]) * np.sign(turn)
            a0 = math.atan2(start[1] - center[1], start[0] - center[0])
            n_arc = max(2, int(abs(turn) * r / max(spacing, 1e-6)) + 1)
            arc = []
            ok = True
            for m in range(n_arc + 1):
                ang = a0 + np.sign(turn) * abs(turn) * m / n_arc
                p = center + r * np.array([math.cos(ang), math.sin(ang)])
                if clear_fn is not None and not clear_fn(p[0], p[1]):
                    ok = False
                    break
                arc.append(p)
            if ok:
                out.extend(arc)
                placed = True
                break
        if not placed:
            out.append(b)
    out.append(pts[-1])

    # Resample at roughly uniform spacing, keeping arc geometry intact.
    dense = [out[0]]
    for p, q in zip(out, out[1:]):
        d = np.linalg.norm(q - p)
        if d < 1e-9:
            continue
        n = max(1, int(math.ceil(d / spacing)))
        for m in range(1, n + 1):
            dense.append(p + (q - p) * (m / n))
    return [(float(p[0]), float(p[1])) for p in dense]


@dataclass(frozen=True)
class PlannerConfig:
    inflation_radius: float = 0.45
    min_radius: float = 1.0
    waypoint_spacing: float = 0.1


def plan_global(grid: OccupancyGrid, start, goal, cfg: PlannerConfig | None = None,
                avoid_points=()) -> GlobalPlan:
    """A* + shortcut smoothing + corner arcs, start/goal as (x, y[, heading]).

    avoid_points: extra world-frame (x, y) points treated as occupied, e.g.
    sensed obstacles not present in the static map.
    """
    cfg = cfg or PlannerConfig()
    if avoid_points:
        occupied = grid.cells != FREE
        for px, py in avoid_points:
            i, j = grid.world_to_cell(px, py)
            if grid.in_bounds(i, j):
                occupied[i, j] = True
        dist = ndimage.distance_transform_edt(~occupied) * grid.resolution
        blocked = dist <= cfg.inflation_radius
    else:
        blocked = grid.inflated_blocked(cfg.inflation_radius)
    sc = grid.world_to_cell(start[0], start[1])
    gc = grid.world_to_cell(goal[0], goal[1])
    if not grid.in_bounds(*sc) or not grid.in_bounds(*gc):
        raise NoPath("start or goal outside the map")
    cells, raw_cost = astar_cells(blocked, sc, gc)

    points = [(start[0], start[1])]
    points += [grid.cell_center(i, j) for i, j in cells[1:-1]]
    points.append((goal[0], goal[1]))
    points = _shortcut(points, blocked, grid)

    def clear(x, y):
        i, j = grid.world_to_cell(x, y)
        return grid.in_bounds(i, j) and not blocked[i, j]

    waypoints = smooth_corners(points, cfg.min_radius, cfg.waypoint_spacing, clear)
    goal_pose = (goal[0], goal[1], goal[2] if len(goal) > 2 else 0.0)
    return GlobalPlan(waypoints, goal_pose, cfg.min_radius,
                      raw_cost=raw_cost, raw_cells=cells)


def plan_from_polyline(points, goal_pose, min_radius: float = 1.0,
                       spacing: float = 0.1, clear_fn=None) -> GlobalPlan:
    """Build a trackable plan directly from an authored polyline (corridor edge)."""
    waypoints = smooth_corners(list(points), min_radius, spacing, clear_fn)
    return GlobalPlan(waypoints, goal_pose, min_radius)


# ---------------------------------------------------------------------------
# Pure pursuit and costmap avoidance


def goal_check(est_pose, goal_pose, cfg: ControllerConfig) -> GoalZone:
    d = math.hypot(est_pose[0] - goal_pose[0], est_pose[1] - goal_pose[1])
    if d <= cfg.arrival_tolerance:
        return GoalZone.ARRIVED
    if d <= cfg.slowdown_distance:
        return GoalZone.NEAR
    return GoalZone.FAR


def pure_pursuit_steer(est_pose, plan: GlobalPlan, cfg: ControllerConfig,
                       params: VehicleParams):
    """Lookahead-point steering; returns (SteeringCommand, PursuitGeometry)."""
    zone = goal_check(est_pose, plan.goal_pose, cfg)
    s = plan.project(est_pose[0], est_pose[1])
    if s >= plan.length - 1e-6 and zone != GoalZone.ARRIVED:
        raise PlanExhausted(f"projection at s={s:.2f} of {plan.length:.2f} without arrival")

    target = plan.point_at(s + cfg.lookahead)
    alpha = wrap_angle(
        math.atan2(target[1] - est_pose[1], target[0] - est_pose[0]) - est_pose[2])
    kappa = 2.0 * math.sin(alpha) / cfg.lookahead
    kappa_max = math.tan(params.max_steer) / params.wheelbase
    kappa = max(-kappa_max, min(kappa_max, kappa))
    steer = math.atan(params.wheelbase * kappa)
    steer = max(-params.max_steer, min(params.max_steer, steer))

    advisory = Advisory.NONE
    if abs(kappa) > cfg.kappa_slow or zone == GoalZone.NEAR:
        advisory = Advisory.SLOW_DOWN
    cmd = SteeringCommand(steer=steer, advisory=advisory,
                          brake_request=(zone == GoalZone.ARRIVED))
    return cmd, PursuitGeometry(lookahead_point=target, alpha=alpha, curvature=kappa)


def _arc_points(steer: float, params: VehicleParams, length: float, step: float):
    """Forward-arc sample points in the device frame for a fixed steer angle."""
    n = max(1, int(length / step))
    ss = np.arange(1, n + 1) * step
    k = math.tan(steer) / params.wheelbase
    if abs(k) < 1e-9:
        return np.stack([ss, np.zeros_like(ss)], axis=1)
    return np.stack([np.sin(k * ss) / k, (1.0 - np.cos(k * ss)) / k], axis=1)


def avoid_adjust(cmd: SteeringCommand, costmap: LocalCostmap,
                 cfg: ControllerConfig, params: VehicleParams) -> SteeringCommand:
    """Rescore candidate steering angles against the local costmap.

    Candidates span the steering range; each is scored by mean forward-arc
    cost plus a deviation penalty from the pursuit command. If every
    candidate's arc touches lethal cost, request the brake.
    """
    if not costmap.costs.any():
        return cmd

    candidates = list(np.linspace(-params.max_steer, params.max_steer,
                                  cfg.candidate_steer_count))
    candidates.append(cmd.steer)
    step = costmap.resolution

    # Tight spots can make every full-length arc touch lethal cells even
    # though the device can still creep clear; retry with shorter horizons
    # (and a slow-down advisory) before giving up and braking.
    for horizon in (cfg.safety_distance, cfg.safety_distance / 2,
                    cfg.safety_distance / 4):
        best = None
        best_score = math.inf
        max_cost_seen = 0
        for steer in candidates:
            pts = _arc_points(steer, params, horizon, step)
            costs = [costmap.cost_at(x, y) for x, y in pts]
            worst = max(costs)
            max_cost_seen = max(max_cost_seen, worst)
            if worst >= LETHAL:
                continue
            score = (sum(costs) / len(costs)
                     + cfg.deviation_weight * abs(steer - cmd.steer))
            if score < best_score:
                best_score = score
                best = steer
        if best is not None:
            advisory = cmd.advisory
            if max_cost_seen >= cfg.cost_slow_threshold or horizon < cfg.safety_distance:
                advisory = Advisory.SLOW_DOWN
            return SteeringCommand(steer=best, advisory=advisory,
                                   brake_request=cmd.brake_request)

    return SteeringCommand(steer=cmd.steer, advisory=Advisory.SLOW_DOWN,
                           brake_request=True)


def plan_blocked(plan: GlobalPlan, costmap: LocalCostmap, est_pose,
                 horizon: float = 2.0) -> bool:
    """True when the upcoming plan segment crosses lethal costmap cells now."""
    s0 = plan.project(est_pose[0], est_pose[1])
    cos_h, sin_h = math.cos(est_pose[2]), math.sin(est_pose[2])
    s = s0
    while s <= min(s0 + horizon, plan.length):
        wx, wy = plan.point_at(s)
        rx, ry = wx - est_pose[0], wy - est_pose[1]
        dx = cos_h * rx + sin_h * ry
        dy = -sin_h * rx + cos_h * ry
        if costmap.cost_at(dx, dy) >= LETHAL:
            return True
        s += costmap.resolution
    return False


class ReplanMonitor:
    """Debounces transient blockages: replan only after t_block of persistence."""

    def __init__(self, t_block: float = 1.0):
        self.t_block = t_block
        self._since = None

    def replan_needed(self, plan: GlobalPlan, costmap: LocalCostmap, est_pose,
                      now: float) -> bool:
        if plan_blocked(plan, costmap, est_pose):
            if self._since is None:
                self._since = now
            return (now - self._since) >= self.t_block
        self._since = None
        return False
