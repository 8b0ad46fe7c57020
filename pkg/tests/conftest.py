"""Shared fixtures: small synthetic grids and the bundled assets."""

import numpy as np
import pytest

from glidesim.floorplan import FREE, OCCUPIED, OccupancyGrid
from glidesim.config import bundled_asset_path, resolve_map


def corridor_cells(width_m=10.0, height_m=3.0, res=0.05, wall=0.5):
    """Rectangular room with solid walls, free interior."""
    w = int(round(width_m / res))
    h = int(round(height_m / res))
    cells = np.full((h, w), OCCUPIED, dtype=np.uint8)
    wi = int(round(wall / res))
    cells[wi:h - wi, wi:w - wi] = FREE
    return cells


@pytest.fixture
def corridor_grid():
    return OccupancyGrid(corridor_cells(), resolution=0.05)


@pytest.fixture
def loop_map():
    return resolve_map("corridor_loop")


@pytest.fixture
def three_dest_map():
    return resolve_map("three_dest")


@pytest.fixture
def junctions_map():
    return resolve_map("junctions")


@pytest.fixture
def straight_map():
    return resolve_map("straight")


@pytest.fixture
def loop_scenario_path():
    return bundled_asset_path("scenarios", "glide_loop.json")
