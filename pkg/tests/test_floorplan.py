import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glidesim.errors import InvariantViolation, MalformedMap, NotAJunction, OriginOccupied
from glidesim.floorplan import (
    FREE,
    HERE,
    OCCUPIED,
    UNKNOWN,
    Destination,
    JunctionKind,
    JunctionNode,
    OccupancyGrid,
    RelativeDirection,
    classify_junction,
    destinations_by_direction,
    exits_available,
    heading_from_deg,
    load_map,
    map_from_dict,
    map_to_dict,
    raycast,
    save_map,
    validate_map,
)

F, L, R = RelativeDirection.FORWARD, RelativeDirection.LEFT, RelativeDirection.RIGHT
EAST, NORTH, WEST, SOUTH = (heading_from_deg(d) for d in (0, 90, 180, 270))


# ---------------------------------------------------------------------------
# Occupancy grid


def test_cell_addressing_roundtrip(corridor_grid):
    i, j = corridor_grid.world_to_cell(1.23, 0.87)
    cx, cy = corridor_grid.cell_center(i, j)
    assert abs(cx - 1.23) <= corridor_grid.resolution
    assert abs(cy - 0.87) <= corridor_grid.resolution


def test_value_and_free(corridor_grid):
    assert corridor_grid.value_at(5.0, 1.5) == FREE
    assert corridor_grid.value_at(0.1, 0.1) == OCCUPIED
    assert corridor_grid.is_free(5.0, 1.5)
    assert not corridor_grid.is_free(-1.0, -1.0)  # out of bounds is not free


def test_clearance_matches_wall_distance(corridor_grid):
    # Center of a 10x3 room with 0.5 m walls: nearest wall is 1.0 m away.
    c = corridor_grid.clearance(5.0, 1.5)
    assert c == pytest.approx(1.0, abs=2 * corridor_grid.resolution)


def test_inflated_blocked_grows_with_radius(corridor_grid):
    small = corridor_grid.inflated_blocked(0.1)
    big = corridor_grid.inflated_blocked(0.5)
    assert big.sum() > small.sum()
    # inflation only adds blocked cells, never removes
    assert np.all(big[small])


# ---------------------------------------------------------------------------
# Raycasting against an analytic oracle


def test_raycast_axis_aligned_exact(corridor_grid):
    # From x=5.0 looking east, the far wall face is at x=9.5.
    t = raycast(corridor_grid, (5.0, 1.5), 0.0, 10.0)
    assert t == pytest.approx(4.5, abs=1e-9)
    t = raycast(corridor_grid, (5.0, 1.5), math.pi, 10.0)
    assert t == pytest.approx(4.5, abs=1e-9)
    t = raycast(corridor_grid, (5.0, 1.5), math.pi / 2, 10.0)
    assert t == pytest.approx(1.0, abs=1e-9)


def test_raycast_out_of_range_returns_none(corridor_grid):
    assert raycast(corridor_grid, (5.0, 1.5), 0.0, 1.0) is None


def test_raycast_origin_in_wall_raises(corridor_grid):
    with pytest.raises(OriginOccupied):
        raycast(corridor_grid, (0.1, 0.1), 0.0, 5.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_raycast_diagonal_matches_fine_marching(angle):
    # Independent oracle: march the same ray at 1/20 cell resolution and
    # find the first occupied sample; DDA must agree to within one cell.
    cells = np.full((60, 60), FREE, dtype=np.uint8)
    cells[:2, :] = OCCUPIED
    cells[-2:, :] = OCCUPIED
    cells[:, :2] = OCCUPIED
    cells[:, -2:] = OCCUPIED
    cells[28:32, 40:44] = OCCUPIED
    grid = OccupancyGrid(cells, resolution=0.05)
    origin = (1.5, 1.5)
    t = raycast(grid, origin, angle, 4.0)

    step = 0.05 / 20
    march = None
    s = step
    while s <= 4.0:
        x = origin[0] + s * math.cos(angle)
        y = origin[1] + s * math.sin(angle)
        if grid.value_at(x, y) == OCCUPIED:
            march = s
            break
        s += step
    if march is None:
        assert t is None
    else:
        assert t is not None
        assert abs(t - march) <= 0.06


def test_raycast_unknown_is_transparent():
    cells = np.full((40, 40), FREE, dtype=np.uint8)
    cells[:, 20:25] = UNKNOWN
    cells[:, 30] = OCCUPIED
    grid = OccupancyGrid(cells, resolution=0.05)
    t = raycast(grid, (0.5, 1.0), 0.0, 4.0)
    assert t == pytest.approx(30 * 0.05 - 0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# Junction classification


def node_with(exits):
    return JunctionNode(id="n", position=(0.0, 0.0), exits=exits)


def test_four_way_offers_three_directions():
    n = node_with({0: "e", 90: "n", 180: "w", 270: "s"})
    assert exits_available(n, EAST) == {F, L, R}
    assert classify_junction(n, EAST) == JunctionKind.FOUR_WAY


def test_t_junction_no_forward():
    n = node_with({90: "n", 270: "s", 180: "w"})
    # approaching eastbound: exits are left (north) and right (south)
    assert exits_available(n, EAST) == {L, R}
    assert classify_junction(n, EAST) == JunctionKind.T


def test_l_junction_forward_plus_turn():
    n = node_with({0: "e", 90: "n", 180: "w"})
    assert exits_available(n, EAST) == {F, L}
    assert classify_junction(n, EAST) == JunctionKind.L


def test_corner_classified_as_t():
    # A single turn exit and no forward still forces a decision.
    n = node_with({90: "n", 180: "w"})
    assert classify_junction(n, EAST) == JunctionKind.T


def test_pass_through_not_a_junction():
    n = node_with({0: "e", 180: "w"})
    with pytest.raises(NotAJunction):
        classify_junction(n, EAST)


def test_back_exit_excluded():
    n = node_with({0: "e", 180: "w"})
    assert exits_available(n, EAST) == {F}


def test_approach_heading_changes_relative_directions():
    n = node_with({0: "e", 90: "n", 180: "w", 270: "s"})
    # heading north: east exit is on the right, west on the left
    ex = exits_available(n, NORTH)
    assert ex == {F, L, R}
    m = {}
    from glidesim.floorplan import exit_map
    for rel, (deg, _eid) in exit_map(n, NORTH).items():
        m[rel] = deg
    assert m[F] == 90 and m[L] == 180 and m[R] == 0


# ---------------------------------------------------------------------------
# Destination lookup on the bundled three-destination map


def test_three_dest_announcement_sets(three_dest_map):
    m = three_dest_map
    node = m.graph.nodes["s"]
    dests = list(m.destinations.values())
    out = destinations_by_direction(m.graph, node, EAST, dests)
    assert out[F] == {"work area", "kitchen"}
    assert out[L] == {"work area", "lounge"}
    assert R not in out


def test_destination_on_node_reported_here(three_dest_map):
    m = three_dest_map
    node = m.destination_node("kitchen")
    dests = list(m.destinations.values())
    out = destinations_by_direction(m.graph, node, EAST, dests)
    assert out.get(HERE) == {"kitchen"}


# ---------------------------------------------------------------------------
# Serialization and validation


def test_map_roundtrip_is_identical(loop_map):
    doc = map_to_dict(loop_map)
    again = map_to_dict(map_from_dict(doc))
    assert doc == again


def test_save_load_roundtrip_bytes(tmp_path, three_dest_map):
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_map(three_dest_map, p1)
    save_map(load_map(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_bundled_maps_validate(loop_map, three_dest_map, junctions_map, straight_map):
    for m in (loop_map, three_dest_map, junctions_map, straight_map):
        assert validate_map(m) == []


def test_node_in_wall_rejected(loop_map):
    doc = map_to_dict(loop_map)
    doc["nodes"][0]["position"] = [0.1, 0.1]
    with pytest.raises(InvariantViolation, match="free"):
        map_from_dict(doc)


def test_dangling_edge_rejected(loop_map):
    doc = map_to_dict(loop_map)
    doc["nodes"][0]["exits"]["0"] = "no_such_edge"
    with pytest.raises(InvariantViolation):
        map_from_dict(doc)


def test_bad_exit_count_rejected(loop_map):
    doc = map_to_dict(loop_map)
    doc["nodes"][0]["exits"] = {}
    with pytest.raises(InvariantViolation, match="exits"):
        map_from_dict(doc)


def test_malformed_rle_rejected(loop_map):
    doc = map_to_dict(loop_map)
    doc["grid"]["rows"][0] = "12Q"
    with pytest.raises(MalformedMap):
        map_from_dict(doc)
