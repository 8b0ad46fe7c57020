"""Control-mode state machines, junction interaction, torque mapping, haptics.

Two modes share the steering stack but differ in who owns routing:
device-directed mode drives to a preset destination; user-directed mode
brakes at junctions and lets the traveler choose a direction by twisting
the handle. Twist decisions are debounced through a hysteresis automaton
and acknowledged through the six-actuator haptic vocabulary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DanglingEdge, GuidanceFault, NoPath, NotAJunction
from .floorplan import (
    HERE,
    JunctionKind,
    RelativeDirection,
    ScenarioMap,
    classify_junction,
    destinations_by_direction,
    exit_map,
)
from .geometry import dist
from .planning import (
    Advisory,
    ControllerConfig,
    GlobalPlan,
    GoalZone,
    PlannerConfig,
    ReplanMonitor,
    SteeringCommand,
    avoid_adjust,
    goal_check,
    plan_from_polyline,
    plan_global,
    pure_pursuit_steer,
)
from .vehicle import VehicleParams


class ModeKind(str, enum.Enum):
    GLIDE_DIRECTED = "glide_directed"
    USER_DIRECTED = "user_directed"

    def __str__(self):
        return self.value


class HapticMeaning(str, enum.Enum):
    LEFT_ACK = "left_ack"
    RIGHT_ACK = "right_ack"
    SLOW_DOWN = "slow_down"

    def __str__(self):
        return self.value


_ACTUATORS = {
    HapticMeaning.LEFT_ACK: (0, 1, 2),
    HapticMeaning.RIGHT_ACK: (3, 4, 5),
    HapticMeaning.SLOW_DOWN: (0, 1, 2, 3, 4, 5),
}


@dataclass(frozen=True)
class HapticPattern:
    meaning: HapticMeaning
    actuators: tuple
    duration: float = 0.5

    @classmethod
    def of(cls, meaning: HapticMeaning, duration: float = 0.5) -> "HapticPattern":
        return cls(meaning=meaning, actuators=_ACTUATORS[meaning], duration=duration)

    def to_dict(self):
        return {"meaning": str(self.meaning), "actuators": list(self.actuators),
                "duration": self.duration}


@dataclass(frozen=True)
class TwistCommand:
    direction: RelativeDirection  # LEFT or RIGHT only
    timestamp: float


@dataclass(frozen=True)
class TorqueConfig:
    tau_on: float = 0.3    # N*m, engage threshold
    tau_off: float = 0.1   # N*m, re-arm threshold
    t_hold: float = 0.2    # s the twist must be sustained

    def __post_init__(self):
        if self.tau_off >= self.tau_on:
            raise ValueError("tau_off must be < tau_on")


class TorqueInterpreter:
    """Debounced hysteresis automaton mapping handle torque to twist commands.

    A command fires once the torque stays past tau_on in one direction for
    t_hold; no further command until |torque| drops below tau_off.
    Convention: negative torque is a left twist.
    """

    def __init__(self, cfg: TorqueConfig | None = None):
        self.cfg = cfg or TorqueConfig()
        self._state = "ready"
        self._side = None
        self._since = 0.0

    def push(self, torque: float, t: float):
        cfg = self.cfg
        if self._state == "fired":
            if abs(torque) < cfg.tau_off:
                self._state = "ready"
            return None
        side = None
        if torque <= -cfg.tau_on:
            side = RelativeDirection.LEFT
        elif torque >= cfg.tau_on:
            side = RelativeDirection.RIGHT
        if self._state == "ready":
            if side is not None:
                self._state = "holding"
                self._side = side
                self._since = t
            return None
        # holding
        if side != self._side:
            if side is None:
                self._state = "ready"
            else:
                self._side = side
                self._since = t
            return None
        if t - self._since >= cfg.t_hold:
            self._state = "fired"
            return TwistCommand(direction=self._side, timestamp=t)
        return None


def interpret_torque(samples, cfg: TorqueConfig, dt: float):
    """Run the automaton over a torque time series; returns emitted commands."""
    interp = TorqueInterpreter(cfg)
    out = []
    for k, tau in enumerate(samples):
        cmd = interp.push(tau, k * dt)
        if cmd is not None:
            out.append(cmd)
    return out


# ---------------------------------------------------------------------------
# Junction announcements


@dataclass(frozen=True)
class JunctionAnnouncement:
    text: str
    options: dict  # RelativeDirection -> frozenset of destination names
    node_id: str

    def to_dict(self):
        return {"text": self.text, "node": self.node_id,
                "options": {str(k): sorted(v) for k, v in self.options.items()}}


_DIRECTION_PHRASE = {
    RelativeDirection.FORWARD: "go straight",
    RelativeDirection.LEFT: "turn left",
    RelativeDirection.RIGHT: "turn right",
}

_DIRECTION_ORDER = [RelativeDirection.FORWARD, RelativeDirection.LEFT,
                    RelativeDirection.RIGHT]


def render_announcement(node, approach_heading: float, dests, graph) -> JunctionAnnouncement:
    """Deterministic sentence listing each available direction and its goals.

    Directions with no reachable destination are kept in the options map
    but omitted from the sentence; if nothing is nameable the sentence
    falls back to plain directions.
    """
    reach = destinations_by_direction(graph, node, approach_heading, dests)
    options = {d: frozenset(reach.get(d, set()))
               for d in _DIRECTION_ORDER if d in reach}

    clauses = []
    for d in _DIRECTION_ORDER:
        if d not in options or not options[d]:
            continue
        names = " or ".join(sorted(options[d]))
        clauses.append(f"{_DIRECTION_PHRASE[d]} to get to the {names}")
    if not clauses:
        clauses = ["you can " + " or ".join(
            _DIRECTION_PHRASE[d] for d in _DIRECTION_ORDER if d in options)]
    text = " or ".join(clauses)
    text = text[0].upper() + text[1:]
    return JunctionAnnouncement(text=text, options=options, node_id=node.id)


# ---------------------------------------------------------------------------
# Guidance state


class GuidancePhase(str, enum.Enum):
    GUIDING = "guiding"
    TRAVELING = "traveling"
    AT_JUNCTION = "at_junction"
    INFEASIBLE_HOLD = "infeasible_hold"
    NEAR_GOAL = "near_goal"
    ARRIVED = "arrived"

    def __str__(self):
        return self.value


@dataclass
class GuidanceState:
    mode: ModeKind
    phase: GuidancePhase
    brake: bool = False
    target_node: str | None = None
    junction_kind: JunctionKind | None = None
    options: tuple = ()
    hold_until: float | None = None

    def to_dict(self):
        return {
            "mode": str(self.mode),
            "phase": str(self.phase),
            "brake": self.brake,
            "target_node": self.target_node,
            "junction_kind": str(self.junction_kind) if self.junction_kind else None,
            "options": sorted(str(o) for o in self.options),
        }


@dataclass(frozen=True)
class ModesConfig:
    junction_radius: float = 1.0     # m, "reached a junction"
    t_announce: float = 1.5          # s of momentary brake at L / four-way
    t_infeasible: float = 2.0        # s brake hold after an infeasible twist
    fourway_brakes_like_t: bool = False
    haptic_duration: float = 0.5


_BRAKE_CMD = SteeringCommand(steer=0.0, advisory=Advisory.NONE, brake_request=True)


class GlideDirectedMode:
    """Device owns routing: follow the plan, slow-down haptic near the goal,
    brake at arrival (latched until reset)."""

    def __init__(self, plan: GlobalPlan, ctrl: ControllerConfig,
                 params: VehicleParams, modes_cfg: ModesConfig | None = None,
                 grid=None, planner_cfg: PlannerConfig | None = None):
        self.plan = plan
        self.ctrl = ctrl
        self.params = params
        self.modes_cfg = modes_cfg or ModesConfig()
        self.grid = grid
        self.planner_cfg = planner_cfg
        self._replan_monitor = ReplanMonitor()
        self.state = GuidanceState(mode=ModeKind.GLIDE_DIRECTED,
                                   phase=GuidancePhase.GUIDING)

    def force_replan(self, est_pose, costmap) -> None:
        """Re-route from the current estimate around sensed obstacles."""
        if self.grid is None:
            return
        marks = [(m[0], m[1]) for m in costmap.marks] if costmap is not None else []
        try:
            self.plan = plan_global(
                self.grid, (est_pose[0], est_pose[1]), self.plan.goal_pose,
                self.planner_cfg, avoid_points=marks)
        except NoPath:
            return  # keep the old plan; the blockage may clear
        self._replan_monitor = ReplanMonitor(self._replan_monitor.t_block)

    def tick(self, est_pose, costmap, now: float):
        haptics = []
        st = self.state
        if st.phase == GuidancePhase.ARRIVED:
            return _BRAKE_CMD, haptics

        zone = goal_check(est_pose, self.plan.goal_pose, self.ctrl)
        if zone == GoalZone.ARRIVED:
            st.phase = GuidancePhase.ARRIVED
            st.brake = True
            return _BRAKE_CMD, haptics

        cmd, _geom = pure_pursuit_steer(est_pose, self.plan, self.ctrl, self.params)
        if costmap is not None:
            cmd = avoid_adjust(cmd, costmap, self.ctrl, self.params)
        if zone == GoalZone.NEAR and st.phase == GuidancePhase.GUIDING:
            st.phase = GuidancePhase.NEAR_GOAL
            haptics.append(HapticPattern.of(HapticMeaning.SLOW_DOWN,
                                            self.modes_cfg.haptic_duration))
        st.brake = cmd.brake_request
        return cmd, haptics


class UserDirectedMode:
    """Traveler owns routing: brake at junctions, accept twist decisions,
    acknowledge with haptics, plan edge by edge."""

    def __init__(self, scenario: ScenarioMap, ctrl: ControllerConfig,
                 params: VehicleParams, modes_cfg: ModesConfig,
                 planner_cfg: PlannerConfig, start_node: str, first_edge: str,
                 goal_destination: str | None = None):
        self.map = scenario
        self.ctrl = ctrl
        self.params = params
        self.cfg = modes_cfg
        self.planner_cfg = planner_cfg
        self.goal_destination = goal_destination
        self._goal_node = (scenario.destination_node(goal_destination).id
                           if goal_destination else None)
        blocked = scenario.grid.inflated_blocked(planner_cfg.inflation_radius)

        def clear(x, y):
            i, j = scenario.grid.world_to_cell(x, y)
            return scenario.grid.in_bounds(i, j) and not blocked[i, j]

        self._clear_fn = clear
        self.state = GuidanceState(mode=ModeKind.USER_DIRECTED,
                                   phase=GuidancePhase.TRAVELING)
        self.plan = None
        self._approach_heading = 0.0
        self._junction_since = 0.0
        self._slowdown_sent = False
        self._adopt_edge(start_node, first_edge)

    # -- plumbing

    def _adopt_edge(self, from_node: str, edge_id: str):
        if edge_id not in self.map.graph.edges:
            raise DanglingEdge(f"edge {edge_id} missing from graph")
        edge = self.map.graph.edges[edge_id]
        pts = edge.polyline_from(from_node)
        target = edge.other(from_node)
        end = self.map.graph.nodes[target].position
        a, b = pts[-2], pts[-1]
        heading = math.atan2(b[1] - a[1], b[0] - a[0])
        goal_pose = (end[0], end[1], heading)
        self.plan = plan_from_polyline(pts, goal_pose, self.planner_cfg.min_radius,
                                       self.planner_cfg.waypoint_spacing, self._clear_fn)
        self.state.target_node = target
        self.state.junction_kind = None
        self.state.options = ()
        self._approach_heading = heading

    def _target_is_goal(self) -> bool:
        return self._goal_node is not None and self.state.target_node == self._goal_node

    def _enter_junction(self, node, now: float):
        st = self.state
        kind = classify_junction(node, self._approach_heading)
        opts = exit_map(node, self._approach_heading)
        ann = render_announcement(node, self._approach_heading,
                                  self.map.destinations.values(), self.map.graph)
        st.phase = GuidancePhase.AT_JUNCTION
        st.junction_kind = kind
        st.options = tuple(sorted(opts.keys(), key=lambda d: str(d)))
        st.brake = True
        self._junction_since = now
        return ann

    def _choose(self, node, direction: RelativeDirection):
        opts = exit_map(node, self._approach_heading)
        _deg, edge_id = opts[direction]
        self._adopt_edge(node.id, edge_id)
        self.state.phase = GuidancePhase.TRAVELING
        self.state.brake = False

    # -- main tick

    def tick(self, est_pose, costmap, twist: TwistCommand | None, now: float):
        """Returns (SteeringCommand, haptics, announcement-or-None)."""
        st = self.state
        haptics = []
        announcement = None

        if st.phase == GuidancePhase.ARRIVED:
            return _BRAKE_CMD, haptics, None

        graph = self.map.graph
        node = graph.nodes[st.target_node] if st.target_node else None

        if st.phase == GuidancePhase.INFEASIBLE_HOLD:
            if now >= st.hold_until:
                st.hold_until = None
                kind = st.junction_kind
                brake_like_t = kind == JunctionKind.T or (
                    kind == JunctionKind.FOUR_WAY and self.cfg.fourway_brakes_like_t)
                if brake_like_t and RelativeDirection.FORWARD not in exit_map(
                        node, self._approach_heading):
                    # No default path: back to waiting for a feasible twist.
                    st.phase = GuidancePhase.AT_JUNCTION
                    st.brake = True
                else:
                    self._choose(node, RelativeDirection.FORWARD)
            return _BRAKE_CMD, haptics, None

        if st.phase == GuidancePhase.AT_JUNCTION:
            opts = exit_map(node, self._approach_heading)
            if twist is not None:
                if twist.direction in opts:
                    meaning = (HapticMeaning.LEFT_ACK
                               if twist.direction == RelativeDirection.LEFT
                               else HapticMeaning.RIGHT_ACK)
                    haptics.append(HapticPattern.of(meaning, self.cfg.haptic_duration))
                    self._choose(node, twist.direction)
                    cmd, h2 = self._steer(est_pose, costmap)
                    return cmd, haptics + h2, None
                st.phase = GuidancePhase.INFEASIBLE_HOLD
                st.hold_until = now + self.cfg.t_infeasible
                st.brake = True
                return _BRAKE_CMD, haptics, None
            kind = st.junction_kind
            waits_for_twist = kind == JunctionKind.T or (
                kind == JunctionKind.FOUR_WAY and self.cfg.fourway_brakes_like_t)
            if not waits_for_twist and now - self._junction_since >= self.cfg.t_announce:
                self._choose(node, RelativeDirection.FORWARD)
                cmd, h2 = self._steer(est_pose, costmap)
                return cmd, haptics + h2, None
            return _BRAKE_CMD, haptics, None

        # Traveling / near-goal
        if self._target_is_goal():
            dest = self.map.destinations[self.goal_destination]
            ctrl = self.ctrl
            d = dist(est_pose, dest.pose)
            if d <= dest.arrival_tolerance:
                st.phase = GuidancePhase.ARRIVED
                st.brake = True
                return _BRAKE_CMD, haptics, None
            if d <= ctrl.slowdown_distance and not self._slowdown_sent:
                self._slowdown_sent = True
                st.phase = GuidancePhase.NEAR_GOAL
                haptics.append(HapticPattern.of(HapticMeaning.SLOW_DOWN,
                                                self.cfg.haptic_duration))
        elif node is not None and dist(est_pose, node.position) < self.cfg.junction_radius:
            opts = exit_map(node, self._approach_heading)
            if set(opts) == {RelativeDirection.FORWARD}:
                # Straight-through corridor node: not a decision point.
                self._choose(node, RelativeDirection.FORWARD)
            elif not opts:
                raise GuidanceFault(f"dead end at node {node.id}")
            else:
                announcement = self._enter_junction(node, now)
                return _BRAKE_CMD, haptics, announcement

        cmd, h2 = self._steer(est_pose, costmap)
        st.brake = cmd.brake_request
        return cmd, haptics + h2, announcement

    def _steer(self, est_pose, costmap):
        cmd, _geom = pure_pursuit_steer(est_pose, self.plan, self.ctrl, self.params)
        if costmap is not None:
            cmd = avoid_adjust(cmd, costmap, self.ctrl, self.params)
        return cmd, []
