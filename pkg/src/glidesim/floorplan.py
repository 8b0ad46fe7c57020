"""World model: occupancy grid, junction graph, destinations, scenario map I/O.

The on-disk scenario format is a single JSON document. Grid rows are
run-length encoded as strings like ``"12O276F12O"`` with letters
F (free), O (occupied), U (unknown). Junction geometry is authored, not
detected; exit headings are quantized to 90 degrees while all world poses
stay continuous.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvariantViolation, MalformedMap, NotAJunction, OriginOccupied
from .geometry import dist, heading_from_deg, wrap_angle

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

_RLE_CHARS = {"F": FREE, "O": OCCUPIED, "U": UNKNOWN}
_RLE_LETTERS = {v: k for k, v in _RLE_CHARS.items()}

FORWARD_TOLERANCE = math.radians(30.0)


class RelativeDirection(str, enum.Enum):
    FORWARD = "forward"
    LEFT = "left"
    RIGHT = "right"

    def __str__(self):
        return self.value


# Distinguished key for destinations sitting on the queried node itself.
HERE = "here"


class JunctionKind(str, enum.Enum):
    T = "T"
    L = "L"
    FOUR_WAY = "four_way"

    def __str__(self):
        return self.value


class OccupancyGrid:
    """Row-major occupancy grid; cell (col, row) covers a resolution-sized square."""

    def __init__(self, cells: np.ndarray, resolution: float, origin=(0.0, 0.0)):
        if resolution <= 0:
            raise InvariantViolation("resolution must be > 0")
        cells = np.asarray(cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise InvariantViolation("cells must be 2-D (height, width)")
        self.cells = cells
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self._edt = None
        self._boundary_edt = None

    @property
    def width_cells(self) -> int:
        return self.cells.shape[1]

    @property
    def height_cells(self) -> int:
        return self.cells.shape[0]

    def world_to_cell(self, x: float, y: float):
        j = int(math.floor((x - self.origin[0]) / self.resolution))
        i = int(math.floor((y - self.origin[1]) / self.resolution))
        return i, j

    def cell_center(self, i: int, j: int):
        return (
            self.origin[0] + (j + 0.5) * self.resolution,
            self.origin[1] + (i + 0.5) * self.resolution,
        )

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.height_cells and 0 <= j < self.width_cells

    def value_at(self, x: float, y: float) -> int:
        i, j = self.world_to_cell(x, y)
        if not self.in_bounds(i, j):
            return OCCUPIED
        return int(self.cells[i, j])

    def is_free(self, x: float, y: float) -> bool:
        return self.value_at(x, y) == FREE

    def obstacle_distance_field(self) -> np.ndarray:
        """Meters from each cell center to the nearest non-free cell (cached)."""
        if self._edt is None:
            free = self.cells == FREE
            self._edt = ndimage.distance_transform_edt(free) * self.resolution
        return self._edt

    def boundary_distance_field(self) -> np.ndarray:
        """Meters from each cell center to the free/non-free interface (cached).

        Unlike obstacle_distance_field this is nonzero *inside* obstacles
        too, so a scan endpoint buried deep in a wall scores as badly as
        one falling equally short of it.
        """
        if self._boundary_edt is None:
            free = self.cells == FREE
            self._boundary_edt = np.where(
                free,
                ndimage.distance_transform_edt(free),
                ndimage.distance_transform_edt(~free),
            ) * self.resolution
        return self._boundary_edt

    def clearance(self, x: float, y: float) -> float:
        i, j = self.world_to_cell(x, y)
        if not self.in_bounds(i, j):
            return 0.0
        return float(self.obstacle_distance_field()[i, j])

    def inflated_blocked(self, radius: float) -> np.ndarray:
        """Boolean mask of cells closed to the device center for a given radius."""
        if radius <= 0:
            return self.cells != FREE
        return self.obstacle_distance_field() <= radius


@dataclass
class JunctionNode:
    id: str
    position: tuple  # (x, y) meters
    exits: dict  # heading degrees in {0, 90, 180, 270} -> edge id

    def exit_headings(self):
        return {heading_from_deg(d): e for d, e in self.exits.items()}


@dataclass
class Edge:
    id: str
    nodes: tuple  # (node_id_a, node_id_b)
    polyline: list  # [(x, y), ...] from nodes[0] to nodes[1]

    def other(self, node_id: str) -> str:
        a, b = self.nodes
        return b if node_id == a else a

    def polyline_from(self, node_id: str):
        pts = list(self.polyline)
        return pts if node_id == self.nodes[0] else pts[::-1]

    def length(self) -> float:
        return sum(dist(a, b) for a, b in zip(self.polyline, self.polyline[1:]))


@dataclass
class JunctionGraph:
    nodes: dict = field(default_factory=dict)  # id -> JunctionNode
    edges: dict = field(default_factory=dict)  # id -> Edge

    def neighbors(self, node_id: str):
        out = []
        for edge_id in self.nodes[node_id].exits.values():
            out.append((self.edges[edge_id].other(node_id), edge_id))
        return out

    def nearest_node(self, point) -> JunctionNode:
        return min(self.nodes.values(), key=lambda n: dist(n.position, point))


@dataclass
class Destination:
    name: str
    pose: tuple  # (x, y, heading)
    arrival_tolerance: float = 0.3


@dataclass
class ScenarioMap:
    name: str
    grid: OccupancyGrid
    graph: JunctionGraph
    destinations: dict  # name -> Destination

    def destination_node(self, name: str) -> JunctionNode:
        d = self.destinations[name]
        return self.graph.nearest_node((d.pose[0], d.pose[1]))


# ---------------------------------------------------------------------------
# Relative directions and junction classification


def _relative_of(approach_heading: float, exit_heading: float):
    """Classify an absolute exit heading relative to the approach heading.

    Returns a RelativeDirection, or None for the back exit (the corridor
    we arrived through).
    """
    rel = wrap_angle(exit_heading - approach_heading)
    if abs(rel) <= FORWARD_TOLERANCE:
        return RelativeDirection.FORWARD
    if abs(rel) >= math.pi - FORWARD_TOLERANCE:
        return None
    return RelativeDirection.LEFT if rel > 0 else RelativeDirection.RIGHT


def exit_map(node: JunctionNode, approach_heading: float):
    """Available exits keyed by relative direction -> (heading_deg, edge id)."""
    out = {}
    for deg, edge_id in node.exits.items():
        rel = _relative_of(approach_heading, heading_from_deg(deg))
        if rel is not None:
            out[rel] = (deg, edge_id)
    return out


def exits_available(node: JunctionNode, approach_heading: float):
    return set(exit_map(node, approach_heading).keys())


def classify_junction(node: JunctionNode, approach_heading: float) -> JunctionKind:
    dirs = exits_available(node, approach_heading)
    if not dirs or dirs == {RelativeDirection.FORWARD}:
        raise NotAJunction(f"node {node.id} is not a decision point for this approach")
    if RelativeDirection.FORWARD not in dirs:
        # Pure turns, including single-exit corners: the user must twist.
        return JunctionKind.T
    if dirs == {RelativeDirection.FORWARD, RelativeDirection.LEFT, RelativeDirection.RIGHT}:
        return JunctionKind.FOUR_WAY
    return JunctionKind.L


def destinations_by_direction(graph: JunctionGraph, node: JunctionNode,
                              approach_heading: float, dests) -> dict:
    """Destination names reachable through each available exit.

    Reachability is BFS over the junction graph excluding the queried node,
    so routes may not re-cross it. Destinations are associated with their
    nearest graph node. Destinations sitting on the node itself are reported
    under the distinguished HERE key.
    """
    dest_nodes = {}
    for d in dests:
        dest_nodes.setdefault(graph.nearest_node((d.pose[0], d.pose[1])).id, set()).add(d.name)

    out = {}
    here = dest_nodes.get(node.id)
    if here:
        out[HERE] = set(here)

    for rel, (_deg, edge_id) in exit_map(node, approach_heading).items():
        start = graph.edges[edge_id].other(node.id)
        seen = {node.id, start}
        frontier = [start]
        reachable = set(dest_nodes.get(start, ()))
        while frontier:
            nxt = []
            for nid in frontier:
                if nid in dest_nodes:
                    # Destination nodes are rooms: routes end there, so
                    # reachability does not continue through them.
                    continue
                for other, _eid in graph.neighbors(nid):
                    if other not in seen:
                        seen.add(other)
                        reachable |= dest_nodes.get(other, set())
                        nxt.append(other)
            frontier = nxt
        out[rel] = reachable
    return out


# ---------------------------------------------------------------------------
# Raycasting


def raycast(grid: OccupancyGrid, origin, angle: float, max_range: float):
    """Distance along a ray to the first occupied cell boundary, or None.

    Amanatides-Woo traversal: steps cell by cell, returning the ray
    parameter at which the occupied cell is entered. Unknown cells are
    treated as transparent.
    """
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    if grid.value_at(origin[0], origin[1]) == OCCUPIED:
        raise OriginOccupied(f"raycast origin {origin} inside occupied cell")

    res = grid.resolution
    dx, dy = math.cos(angle), math.sin(angle)
    i, j = grid.world_to_cell(origin[0], origin[1])

    step_j = 1 if dx > 0 else -1
    step_i = 1 if dy > 0 else -1

    # Ray parameter t at which we cross the next vertical / horizontal line.
    if dx != 0.0:
        next_x = grid.origin[0] + (j + (1 if dx > 0 else 0)) * res
        t_max_x = (next_x - origin[0]) / dx
        t_delta_x = res / abs(dx)
    else:
        t_max_x = math.inf
        t_delta_x = math.inf
    if dy != 0.0:
        next_y = grid.origin[1] + (i + (1 if dy > 0 else 0)) * res
        t_max_y = (next_y - origin[1]) / dy
        t_delta_y = res / abs(dy)
    else:
        t_max_y = math.inf
        t_delta_y = math.inf

    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            j += step_j
        else:
            t = t_max_y
            t_max_y += t_delta_y
            i += step_i
        if t > max_range:
            return None
        if not grid.in_bounds(i, j):
            return None
        if grid.cells[i, j] == OCCUPIED:
            return t


# ---------------------------------------------------------------------------
# Serialization

MAP_FORMAT = "glidesim-map-v1"


def _encode_rows(cells: np.ndarray):
    rows = []
    for row in cells:
        parts = []
        run_val = int(row[0])
        run_len = 0
        for v in row:
            v = int(v)
            if v == run_val:
                run_len += 1
            else:
                parts.append(f"{run_len}{_RLE_LETTERS[run_val]}")
                run_val, run_len = v, 1
        parts.append(f"{run_len}{_RLE_LETTERS[run_val]}")
        rows.append("".join(parts))
    return rows


def _decode_row(text: str, width: int):
    out = []
    count = ""
    for ch in text:
        if ch.isdigit():
            count += ch
        elif ch in _RLE_CHARS:
            if not count:
                raise MalformedMap(f"RLE run missing count in {text!r}")
            out.extend([_RLE_CHARS[ch]] * int(count))
            count = ""
        else:
            raise MalformedMap(f"bad RLE character {ch!r}")
    if count:
        raise MalformedMap(f"trailing count in RLE row {text!r}")
    if len(out) != width:
        raise MalformedMap(f"RLE row decodes to {len(out)} cells, expected {width}")
    return out


def map_to_dict(m: ScenarioMap) -> dict:
    return {
        "format": MAP_FORMAT,
        "name": m.name,
        "resolution": m.grid.resolution,
        "origin": list(m.grid.origin),
        "grid": {
            "width": m.grid.width_cells,
            "height": m.grid.height_cells,
            "rows": _encode_rows(m.grid.cells),
        },
        "nodes": [
            {"id": n.id, "position": list(n.position),
             "exits": {str(d): e for d, e in sorted(n.exits.items())}}
            for n in sorted(m.graph.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [
            {"id": e.id, "nodes": list(e.nodes),
             "polyline": [list(p) for p in e.polyline]}
            for e in sorted(m.graph.edges.values(), key=lambda e: e.id)
        ],
        "destinations": [
            {"name": d.name, "pose": list(d.pose), "arrival_tolerance": d.arrival_tolerance}
            for d in sorted(m.destinations.values(), key=lambda d: d.name)
        ],
    }


def save_map(m: ScenarioMap, path) -> None:
    with open(path, "w") as f:
        json.dump(map_to_dict(m), f, indent=2, sort_keys=True)
        f.write("\n")


def map_from_dict(doc: dict) -> ScenarioMap:
    try:
        if doc.get("format") != MAP_FORMAT:
            raise MalformedMap(f"unknown map format {doc.get('format')!r}")
        res = float(doc["resolution"])
        origin = tuple(doc.get("origin", (0.0, 0.0)))
        g = doc["grid"]
        width, height = int(g["width"]), int(g["height"])
        rows = g["rows"]
        if len(rows) != height:
            raise MalformedMap(f"{len(rows)} rows, expected {height}")
        cells = np.array([_decode_row(r, width) for r in rows], dtype=np.uint8)
        grid = OccupancyGrid(cells, res, origin)

        graph = JunctionGraph()
        for nd in doc["nodes"]:
            exits = {int(k): v for k, v in nd["exits"].items()}
            graph.nodes[nd["id"]] = JunctionNode(
                id=nd["id"], position=tuple(nd["position"]), exits=exits)
        for ed in doc["edges"]:
            graph.edges[ed["id"]] = Edge(
                id=ed["id"], nodes=tuple(ed["nodes"]),
                polyline=[tuple(p) for p in ed["polyline"]])

        dests = {}
        for dd in doc.get("destinations", []):
            dests[dd["name"]] = Destination(
                name=dd["name"], pose=tuple(dd["pose"]),
                arrival_tolerance=float(dd.get("arrival_tolerance", 0.3)))
    except MalformedMap:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedMap(f"map schema violation: {exc}") from exc

    m = ScenarioMap(name=doc.get("name", "unnamed"), grid=grid, graph=graph,
                    destinations=dests)
    violations = validate_map(m)
    if violations:
        raise InvariantViolation("; ".join(violations))
    return m


def load_map(path) -> ScenarioMap:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedMap(f"cannot read map {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedMap(f"map {path} is not a JSON object")
    return map_from_dict(doc)


def validate_map(m: ScenarioMap):
    """Structural invariant checks; returns a list of violation strings."""
    out = []
    grid, graph = m.grid, m.graph

    for node in graph.nodes.values():
        if not (1 <= len(node.exits) <= 4):
            out.append(f"node {node.id}: {len(node.exits)} exits (must be 1..4)")
        for deg in node.exits:
            if deg not in (0, 90, 180, 270):
                out.append(f"node {node.id}: exit heading {deg} not quantized to 90 deg")
        if not grid.is_free(*node.position):
            out.append(f"node {node.id}: position {node.position} not in free space")
        for deg, eid in node.exits.items():
            if eid not in graph.edges:
                out.append(f"node {node.id}: exit {deg} references missing edge {eid}")

    for edge in graph.edges.values():
        for nid in edge.nodes:
            if nid not in graph.nodes:
                out.append(f"edge {edge.id}: dangling node reference {nid}")
        if len(edge.polyline) < 2:
            out.append(f"edge {edge.id}: polyline needs >= 2 points")
        for a, b in zip(edge.polyline, edge.polyline[1:]):
            n = max(2, int(dist(a, b) / grid.resolution) + 1)
            for k in range(n + 1):
                t = k / n
                x = a[0] + t * (b[0] - a[0])
                y = a[1] + t * (b[1] - a[1])
                if not grid.is_free(x, y):
                    out.append(f"edge {edge.id}: polyline leaves free space near ({x:.2f}, {y:.2f})")
                    break

    for d in m.destinations.values():
        if d.arrival_tolerance <= 0:
            out.append(f"destination {d.name}: arrival_tolerance must be > 0")
        if not grid.is_free(d.pose[0], d.pose[1]):
            out.append(f"destination {d.name}: pose not in free space")

    # Connectivity (warning-level for authored maps, reported like the rest).
    if graph.nodes:
        start = next(iter(graph.nodes))
        seen = {start}
        frontier = [start]
        while frontier:
            nid = frontier.pop()
            for eid in graph.nodes[nid].exits.values():
                if eid not in graph.edges:
                    continue
                other = graph.edges[eid].other(nid)
                if other in seen or other not in graph.nodes:
                    continue
                seen.add(other)
                frontier.append(other)
        if seen != set(graph.nodes):
            out.append(f"graph not connected: unreachable nodes {sorted(set(graph.nodes) - seen)}")
    return out
