#!/usr/bin/env python3
"""Generate the bundled scenario map assets.

Run from the repo root:  python scripts/make_maps.py
Maps are written to src/glidesim/assets/maps/. Geometry is authored to be
topologically faithful to the study courses; dimensions are invented.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from glidesim.floorplan import (  # noqa: E402
    Destination,
    Edge,
    FREE,
    JunctionGraph,
    JunctionNode,
    OCCUPIED,
    OccupancyGrid,
    ScenarioMap,
    save_map,
    validate_map,
)

RES = 0.05

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "glidesim",
                       "assets", "maps")


def blank(width_m, height_m):
    w = int(round(width_m / RES))
    h = int(round(height_m / RES))
    return np.full((h, w), OCCUPIED, dtype=np.uint8)


def carve_rect(cells, x0, y0, x1, y1):
    j0, j1 = int(round(x0 / RES)), int(round(x1 / RES))
    i0, i1 = int(round(y0 / RES)), int(round(y1 / RES))
    cells[i0:i1, j0:j1] = FREE


def fill_disc(cells, cx, cy, r):
    h, w = cells.shape
    jj, ii = np.meshgrid(np.arange(w), np.arange(h))
    x = (jj + 0.5) * RES
    y = (ii + 0.5) * RES
    cells[(x - cx) ** 2 + (y - cy) ** 2 <= r * r] = OCCUPIED


def node(nid, x, y, exits):
    return JunctionNode(id=nid, position=(x, y), exits=exits)


def edge(eid, a, b, pts):
    return Edge(id=eid, nodes=(a, b), polyline=pts)


def build(name, cells, nodes, edges, dests):
    graph = JunctionGraph(nodes={n.id: n for n in nodes},
                          edges={e.id: e for e in edges})
    m = ScenarioMap(name=name, grid=OccupancyGrid(cells, RES),
                    graph=graph, destinations={d.name: d for d in dests})
    problems = validate_map(m)
    if problems:
        raise SystemExit(f"{name}: " + "; ".join(problems))
    path = os.path.join(OUT_DIR, f"{name}.json")
    save_map(m, path)
    print(f"wrote {path}")


def make_straight():
    cells = blank(30.0, 3.0)
    carve_rect(cells, 0.5, 0.5, 29.5, 2.5)
    build(
        "straight", cells,
        [node("a", 1.5, 1.5, {0: "e_ab"}),
         node("b", 28.5, 1.5, {180: "e_ab"})],
        [edge("e_ab", "a", "b", [(1.5, 1.5), (28.5, 1.5)])],
        [Destination("end", (28.5, 1.5, 0.0))],
    )


def make_corridor_loop():
    cells = blank(15.0, 11.0)
    carve_rect(cells, 1.0, 1.0, 14.0, 3.0)    # bottom
    carve_rect(cells, 1.0, 8.0, 14.0, 10.0)   # top
    carve_rect(cells, 1.0, 1.0, 3.0, 10.0)    # left
    carve_rect(cells, 12.0, 1.0, 14.0, 10.0)  # right
    build(
        "corridor_loop", cells,
        [node("c1", 2.0, 2.0, {0: "e_bottom", 90: "e_left"}),
         node("c2", 13.0, 2.0, {180: "e_bottom", 90: "e_right"}),
         node("c3", 13.0, 9.0, {270: "e_right", 180: "e_top"}),
         node("c4", 2.0, 9.0, {0: "e_top", 270: "e_left"})],
        [edge("e_bottom", "c1", "c2", [(2.0, 2.0), (13.0, 2.0)]),
         edge("e_right", "c2", "c3", [(13.0, 2.0), (13.0, 9.0)]),
         edge("e_top", "c4", "c3", [(2.0, 9.0), (13.0, 9.0)]),
         edge("e_left", "c1", "c4", [(2.0, 2.0), (2.0, 9.0)])],
        [Destination("goal", (13.0, 8.0, 1.5707963267948966))],
    )


def make_three_dest():
    cells = blank(15.0, 11.0)
    carve_rect(cells, 0.5, 0.5, 14.5, 2.5)    # bottom corridor E-S-A-K
    carve_rect(cells, 0.5, 4.5, 6.0, 6.5)     # mid corridor LN-B
    carve_rect(cells, 4.0, 8.5, 10.0, 10.5)   # top corridor C-D
    carve_rect(cells, 4.0, 0.5, 6.0, 10.5)    # vertical S-B-C
    carve_rect(cells, 8.0, 0.5, 10.0, 10.5)   # vertical A-W-D
    build(
        "three_dest", cells,
        [node("e", 1.5, 1.5, {0: "e_es"}),
         node("s", 5.0, 1.5, {180: "e_es", 0: "e_sa", 90: "e_sb"}),
         node("a", 9.0, 1.5, {180: "e_sa", 0: "e_ak", 90: "e_aw"}),
         node("k", 13.5, 1.5, {180: "e_ak"}),
         node("b", 5.0, 5.5, {270: "e_sb", 180: "e_bl", 90: "e_bc"}),
         node("ln", 1.5, 5.5, {0: "e_bl"}),
         node("c", 5.0, 9.5, {270: "e_bc", 0: "e_cd"}),
         node("d", 9.0, 9.5, {180: "e_cd", 270: "e_dw"}),
         node("w", 9.0, 5.5, {90: "e_dw", 270: "e_aw"})],
        [edge("e_es", "e", "s", [(1.5, 1.5), (5.0, 1.5)]),
         edge("e_sa", "s", "a", [(5.0, 1.5), (9.0, 1.5)]),
         edge("e_ak", "a", "k", [(9.0, 1.5), (13.5, 1.5)]),
         edge("e_sb", "s", "b", [(5.0, 1.5), (5.0, 5.5)]),
         edge("e_bl", "b", "ln", [(5.0, 5.5), (1.5, 5.5)]),
         edge("e_bc", "b", "c", [(5.0, 5.5), (5.0, 9.5)]),
         edge("e_cd", "c", "d", [(5.0, 9.5), (9.0, 9.5)]),
         edge("e_dw", "d", "w", [(9.0, 9.5), (9.0, 5.5)]),
         edge("e_aw", "a", "w", [(9.0, 1.5), (9.0, 5.5)])],
        [Destination("kitchen", (13.5, 1.5, 0.0)),
         Destination("lounge", (1.5, 5.5, 3.141592653589793)),
         Destination("work area", (9.0, 5.5, 1.5707963267948966))],
    )


def make_junctions():
    cells = blank(13.0, 13.0)
    carve_rect(cells, 0.5, 5.5, 12.5, 7.5)    # main horizontal
    carve_rect(cells, 5.5, 0.5, 7.5, 12.5)    # vertical
    carve_rect(cells, 0.5, 10.5, 12.5, 12.5)  # top horizontal
    build(
        "junctions", cells,
        [node("x", 6.5, 6.5, {0: "e_xe", 90: "e_xn", 180: "e_xw", 270: "e_xs"}),
         node("en", 6.5, 11.5, {270: "e_xn", 0: "e_ne", 180: "e_nw"}),
         node("ee", 11.5, 6.5, {180: "e_xe"}),
         node("ew", 1.5, 6.5, {0: "e_xw"}),
         node("es", 6.5, 1.5, {90: "e_xs"}),
         node("te", 11.5, 11.5, {180: "e_ne"}),
         node("tw", 1.5, 11.5, {0: "e_nw"})],
        [edge("e_xe", "x", "ee", [(6.5, 6.5), (11.5, 6.5)]),
         edge("e_xn", "x", "en", [(6.5, 6.5), (6.5, 11.5)]),
         edge("e_xw", "x", "ew", [(6.5, 6.5), (1.5, 6.5)]),
         edge("e_xs", "x", "es", [(6.5, 6.5), (6.5, 1.5)]),
         edge("e_ne", "en", "te", [(6.5, 11.5), (11.5, 11.5)]),
         edge("e_nw", "en", "tw", [(6.5, 11.5), (1.5, 11.5)])],
        [Destination("east room", (11.5, 6.5, 0.0)),
         Destination("west room", (1.5, 6.5, 3.141592653589793)),
         Destination("north east room", (11.5, 11.5, 0.0)),
         Destination("north west room", (1.5, 11.5, 3.141592653589793))],
    )


if __name__ == "__main__":
    os.makedirs(OUT_DIR, exist_ok=True)
    make_straight()
    make_corridor_loop()
    make_three_dest()
    make_junctions()
