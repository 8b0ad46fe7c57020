"""Scenario configuration: JSON in, fully-resolved parameter objects out."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

from .errors import GlidesimError
from .floorplan import ScenarioMap, load_map
from .modes import ModesConfig, TorqueConfig
from .planning import ControllerConfig, PlannerConfig
from .sensing import CostmapConfig, LikelihoodConfig, MotionNoiseParams, ScanParams
from .simuser import TwistPolicy, UserModel
from .vehicle import OdomNoiseParams, VehicleParams


@dataclass(frozen=True)
class EventConfig:
    misalign_threshold: float = 0.25   # m offset counted as misaligned
    misalign_dwell: float = 0.5        # s the offset must persist
    collision_distance: float = 0.1    # m clearance; below this is a potential collision
    intervention_hold: float = 1.0     # s of forced brake after an intervention
    backup_distance: float = 0.4       # m the device is moved back when re-centered


@dataclass(frozen=True)
class MclConfig:
    n_particles: int = 500
    init_spread_xy: float = 0.3
    init_spread_heading: float = 0.1
    position_var_threshold: float = 0.05


def _build(cls, doc: dict | None):
    doc = doc or {}
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise GlidesimError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**doc)


def bundled_asset_path(kind: str, name: str) -> str:
    return str(resources.files("glidesim").joinpath(f"assets/{kind}/{name}.json"))


def resolve_map(ref: str, base_dir: str | None = None) -> ScenarioMap:
    """Map reference: bundled asset name, or a path to a map JSON file."""
    if ref.endswith(".json"):
        path = ref if os.path.isabs(ref) or base_dir is None \
            else os.path.join(base_dir, ref)
        return load_map(path)
    return load_map(bundled_asset_path("maps", ref))


@dataclass
class RouteSpec:
    start_node: str
    first_edge: str
    policy: TwistPolicy = field(default_factory=TwistPolicy)
    goal_destination: str | None = None


@dataclass
class ObstacleScript:
    center: tuple
    radius: float = 0.25
    waypoints: tuple = ()     # optional motion polyline (replaces center over time)
    speed: float = 0.0
    t_start: float = 0.0
    t_end: float = math.inf

    def active(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def position(self, t: float):
        if not self.waypoints or self.speed <= 0:
            return tuple(self.center)
        s = self.speed * max(0.0, t - self.t_start)
        pts = [tuple(self.center)] + [tuple(p) for p in self.waypoints]
        for a, b in zip(pts, pts[1:]):
            seg = math.hypot(b[0] - a[0], b[1] - a[1])
            if s <= seg:
                f = s / seg if seg > 0 else 0.0
                return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
            s -= seg
        return pts[-1]


class SimConfig:
    """Fully-resolved simulation configuration."""

    def __init__(self, doc: dict, base_dir: str | None = None):
        self.raw = doc
        self.map_ref = doc.get("map", "corridor_loop")
        self.scenario = resolve_map(self.map_ref, base_dir)
        self.mode = doc.get("mode", "glide_directed")
        self.seed = int(doc.get("seed", 0))
        self.dt = float(doc.get("dt", 0.02))
        self.controller_period = float(doc.get("controller_period", 0.1))
        self.timeout = float(doc.get("timeout", 180.0))
        if self.dt <= 0 or self.controller_period < self.dt:
            raise GlidesimError("need dt > 0 and controller_period >= dt")

        self.vehicle = _build(VehicleParams, doc.get("vehicle"))
        self.controller = _build(ControllerConfig, doc.get("controller"))
        self.planner = _build(PlannerConfig, doc.get("planner"))
        self.scan = _build(ScanParams, doc.get("scan"))
        self.costmap = _build(CostmapConfig, doc.get("costmap"))
        self.likelihood = _build(LikelihoodConfig, doc.get("likelihood"))
        self.motion_noise = _build(MotionNoiseParams, doc.get("motion_noise"))
        self.odom_noise = _build(OdomNoiseParams, doc.get("odom_noise"))
        self.torque = _build(TorqueConfig, doc.get("torque"))
        self.modes = _build(ModesConfig, doc.get("modes"))
        self.events = _build(EventConfig, doc.get("events"))
        self.mcl = _build(MclConfig, doc.get("mcl"))

        user_doc = dict(doc.get("user") or {})
        policy_doc = user_doc.pop("twist_policy", None)
        self.route = None
        if self.mode == "user_directed":
            rdoc = doc.get("route") or {}
            if "start_node" not in rdoc or "first_edge" not in rdoc:
                raise GlidesimError("user_directed mode needs route.start_node and route.first_edge")
            policy = _policy_from(policy_doc or rdoc.get("policy"))
            self.route = RouteSpec(start_node=rdoc["start_node"],
                                   first_edge=rdoc["first_edge"],
                                   policy=policy,
                                   goal_destination=rdoc.get("goal_destination"))
            user_doc["twist_policy"] = policy
        self.user = _build(UserModel, user_doc)

        self.goal = doc.get("goal")  # destination name or [x, y, heading]
        self.start = doc.get("start")
        self.obstacles = [_obstacle_from(o) for o in doc.get("obstacles", [])]

    def start_pose(self):
        if self.start is not None:
            s = self.start
            return (float(s[0]), float(s[1]), float(s[2]) if len(s) > 2 else 0.0)
        if self.route is not None:
            g = self.scenario.graph
            node = g.nodes[self.route.start_node]
            edge = g.edges[self.route.first_edge]
            pts = edge.polyline_from(self.route.start_node)
            heading = math.atan2(pts[1][1] - pts[0][1], pts[1][0] - pts[0][0])
            return (node.position[0], node.position[1], heading)
        raise GlidesimError("config needs an explicit start pose")

    def goal_pose(self):
        if isinstance(self.goal, str):
            d = self.scenario.destinations[self.goal]
            return d.pose
        if self.goal is not None:
            g = self.goal
            return (float(g[0]), float(g[1]), float(g[2]) if len(g) > 2 else 0.0)
        return None

    def canonical(self) -> dict:
        """Fully-resolved config for the log header (defaults included)."""
        def dump(obj):
            d = dataclasses.asdict(obj)
            return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

        out = {
            "map": self.map_ref,
            "mode": self.mode,
            "seed": self.seed,
            "dt": self.dt,
            "controller_period": self.controller_period,
            "timeout": self.timeout,
            "goal": self.goal,
            "start": self.start,
            "vehicle": dump(self.vehicle),
            "controller": dump(self.controller),
            "planner": dump(self.planner),
            "scan": dump(self.scan),
            "costmap": dump(self.costmap),
            "likelihood": dump(self.likelihood),
            "motion_noise": dump(self.motion_noise),
            "odom_noise": dump(self.odom_noise),
            "torque": dump(self.torque),
            "modes": dump(self.modes),
            "events": dump(self.events),
            "mcl": dump(self.mcl),
            "user": dump(self.user),
            "obstacles": [dump(o) for o in self.obstacles],
        }
        if self.route is not None:
            out["route"] = {
                "start_node": self.route.start_node,
                "first_edge": self.route.first_edge,
                "goal_destination": self.route.goal_destination,
                "policy": dump(self.route.policy),
            }
        return _jsonable(out)

    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_file(cls, path: str) -> "SimConfig":
        with open(path) as f:
            doc = json.load(f)
        return cls(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def _policy_from(doc) -> TwistPolicy:
    if not doc:
        return TwistPolicy()
    return TwistPolicy(kind=doc.get("kind", doc.get("type", "none")),
                       turns=tuple(doc.get("turns", ())),
                       destination=doc.get("destination"))


def _obstacle_from(doc: dict) -> ObstacleScript:
    return ObstacleScript(
        center=tuple(doc["center"]),
        radius=float(doc.get("radius", 0.25)),
        waypoints=tuple(tuple(p) for p in doc.get("waypoints", ())),
        speed=float(doc.get("speed", 0.0)),
        t_start=float(doc.get("t_start", 0.0)),
        t_end=float(doc.get("t_end", math.inf)),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if hasattr(obj, "value") and isinstance(obj, str):
        return str(obj)
    return obj
