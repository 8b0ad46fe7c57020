"""Simulated depth sensing, rolling local costmap, and Monte Carlo localization.

The scan simulator marches all rays through the occupancy grid at
sub-resolution steps and intersects dynamic disc obstacles analytically.
Localization is a fixed-size particle filter with a likelihood-field
measurement model over the floor plan's obstacle distance field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import OriginOccupied
from .floorplan import FREE, OCCUPIED, OccupancyGrid
from .geometry import circular_mean, wrap_angle
from .vehicle import OdomDelta

NO_HIT = math.inf


@dataclass(frozen=True)
class ScanParams:
    fov: float = math.radians(87.0)   # Realsense-class depth FOV
    max_range: float = 4.0
    n_rays: int = 64
    noise_std: float = 0.02


@dataclass(frozen=True)
class DepthScan:
    bearings: np.ndarray   # rad, strictly increasing, device frame
    ranges: np.ndarray     # m, NO_HIT (inf) where nothing sensed
    max_range: float

    def hits(self):
        mask = np.isfinite(self.ranges)
        return self.bearings[mask], self.ranges[mask]


def scan_bearings(params: ScanParams) -> np.ndarray:
    half = params.fov / 2.0
    return np.linspace(-half, half, params.n_rays)


def simulate_scan(grid: OccupancyGrid, true_pose, params: ScanParams, rng,
                  obstacles=()) -> DepthScan:
    """Simulate one depth scan from the true pose.

    obstacles: iterable of (x, y, radius) discs injected by the engine
    (pedestrians, boxes); they occlude rays in front of grid hits.
    """
    x, y, heading = true_pose
    if grid.value_at(x, y) == OCCUPIED:
        raise OriginOccupied(f"scan origin ({x:.2f}, {y:.2f}) inside occupied cell")

    bearings = scan_bearings(params)
    angles = bearings + heading
    cos_a, sin_a = np.cos(angles), np.sin(angles)

    step = grid.resolution / 3.0
    n_steps = int(math.ceil(params.max_range / step))
    ts = (np.arange(1, n_steps + 1) * step)[None, :]          # (1, S)
    px = x + cos_a[:, None] * ts                               # (R, S)
    py = y + sin_a[:, None] * ts
    jj = np.floor((px - grid.origin[0]) / grid.resolution).astype(np.int64)
    ii = np.floor((py - grid.origin[1]) / grid.resolution).astype(np.int64)
    inb = (ii >= 0) & (ii < grid.height_cells) & (jj >= 0) & (jj < grid.width_cells)
    occ = np.zeros_like(inb)
    occ[inb] = grid.cells[ii[inb], jj[inb]] == OCCUPIED

    ranges = np.full(len(bearings), NO_HIT)
    any_hit = occ.any(axis=1)
    first = np.argmax(occ, axis=1)
    ranges[any_hit] = (first[any_hit] + 1) * step - step / 2.0

    for ox, oy, orad in obstacles:
        # Ray-circle intersection in closed form per ray.
        fx, fy = ox - x, oy - y
        b = fx * cos_a + fy * sin_a            # projection of center on ray
        d2 = fx * fx + fy * fy - b * b         # squared perpendicular distance
        disc = orad * orad - d2
        valid = (disc >= 0) & (b > 0)
        t_hit = b - np.sqrt(np.maximum(disc, 0.0))
        valid &= (t_hit > 0) & (t_hit <= params.max_range)
        ranges = np.where(valid & (t_hit < ranges), t_hit, ranges)

    if params.noise_std > 0:
        noise = rng.normal(0.0, params.noise_std, size=len(bearings))
        hit = np.isfinite(ranges)
        ranges[hit] = np.clip(ranges[hit] + noise[hit], 0.0, params.max_range)

    return DepthScan(bearings=bearings, ranges=ranges, max_range=params.max_range)


# ---------------------------------------------------------------------------
# Local costmap

LETHAL = 255


@dataclass(frozen=True)
class CostmapConfig:
    side: float = 4.0              # m, device-centered square
    resolution: float = 0.05
    inflation_radius: float = 0.45
    lethal_core: float = 0.2       # m, radius marked lethal around each hit
    decay_time: float = 2.0        # s, stale marks dropped after this


@dataclass
class LocalCostmap:
    """Device-frame costmap (x forward, y left), cell costs 0..255."""
    costs: np.ndarray
    resolution: float
    side: float
    inflation_radius: float
    marks: list = field(default_factory=list)  # world-frame (x, y, t) lethal points

    def cost_at(self, dx: float, dy: float) -> int:
        """Cost at a device-frame point; out-of-map queries cost 0."""
        half = self.side / 2.0
        j = int((dx + half) / self.resolution)
        i = int((dy + half) / self.resolution)
        n = self.costs.shape[0]
        if 0 <= i < n and 0 <= j < n:
            return int(self.costs[i, j])
        return 0


def build_costmap(scan: DepthScan, est_pose, cfg: CostmapConfig,
                  prev: LocalCostmap | None = None, now: float = 0.0) -> LocalCostmap:
    """Rasterize scan hits (plus still-fresh previous marks) into a costmap.

    Hit endpoints are stored in the world frame at the estimated pose so
    marks persist across motion; marks older than decay_time are dropped.
    """
    x, y, heading = est_pose[0], est_pose[1], est_pose[2]
    marks = []
    if prev is not None:
        marks = [m for m in prev.marks if now - m[2] <= cfg.decay_time]
    if scan is not None:
        bearings, ranges = scan.hits()
        ang = bearings + heading
        for b, r, a in zip(bearings, ranges, ang):
            marks.append((x + r * math.cos(a), y + r * math.sin(a), now))

    n = int(round(cfg.side / cfg.resolution))
    lethal = np.zeros((n, n), dtype=bool)
    half = cfg.side / 2.0
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    for mx, my, _t in marks:
        wx, wy = mx - x, my - y
        dx = cos_h * wx + sin_h * wy      # device frame
        dy = -sin_h * wx + cos_h * wy
        j = int((dx + half) / cfg.resolution)
        i = int((dy + half) / cfg.resolution)
        if 0 <= i < n and 0 <= j < n:
            lethal[i, j] = True

    costs = np.zeros((n, n), dtype=np.uint8)
    if lethal.any():
        d = ndimage.distance_transform_edt(~lethal) * cfg.resolution
        costs[d <= cfg.lethal_core] = LETHAL
        if cfg.inflation_radius > cfg.lethal_core:
            band = (d > cfg.lethal_core) & (d < cfg.inflation_radius)
            decay = 5.0 / (cfg.inflation_radius - cfg.lethal_core)
            costs[band] = np.floor(
                254.0 * np.exp(-decay * (d[band] - cfg.lethal_core))).astype(np.uint8)

    return LocalCostmap(costs=costs, resolution=cfg.resolution, side=cfg.side,
                        inflation_radius=cfg.inflation_radius, marks=marks)


# ---------------------------------------------------------------------------
# Monte Carlo localization


@dataclass
class ParticleSet:
    poses: np.ndarray     # (N, 3)
    weights: np.ndarray   # (N,), sums to 1

    @property
    def n(self) -> int:
        return len(self.weights)

    def effective_sample_size(self) -> float:
        return 1.0 / float(np.sum(self.weights ** 2))


@dataclass(frozen=True)
class MotionNoiseParams:
    std_distance_per_m: float = 0.05
    std_heading_per_m: float = 0.02
    std_heading_per_rad: float = 0.1


@dataclass(frozen=True)
class LikelihoodConfig:
    sigma_hit: float = 0.1
    z_hit: float = 0.95
    p_floor: float = 0.05        # uniform floor per ray
    ray_stride: int = 4          # use every k-th hit ray
    wall_penalty: float = 1e-9   # factor for particles in non-free cells


@dataclass(frozen=True)
class PoseEstimate:
    x: float
    y: float
    heading: float
    covariance: np.ndarray   # 3x3 over (x, y, heading)
    converged: bool

    @property
    def pose(self):
        return (self.x, self.y, self.heading)


def init_particles(n: int, pose, spread_xy: float, spread_heading: float,
                   rng) -> ParticleSet:
    poses = np.empty((n, 3))
    poses[:, 0] = pose[0] + rng.normal(0.0, spread_xy, n)
    poses[:, 1] = pose[1] + rng.normal(0.0, spread_xy, n)
    poses[:, 2] = pose[2] + rng.normal(0.0, spread_heading, n)
    return ParticleSet(poses=poses, weights=np.full(n, 1.0 / n))


def mcl_predict(ps: ParticleSet, delta: OdomDelta, noise: MotionNoiseParams,
                rng) -> ParticleSet:
    n = ps.n
    d, dth = delta.d_distance, delta.d_heading
    std_d = noise.std_distance_per_m * abs(d)
    std_th = noise.std_heading_per_m * abs(d) + noise.std_heading_per_rad * abs(dth)
    ds = d + (rng.normal(0.0, std_d, n) if std_d > 0 else 0.0)
    dths = dth + (rng.normal(0.0, std_th, n) if std_th > 0 else 0.0)
    poses = ps.poses.copy()
    mid = poses[:, 2] + dths / 2.0
    poses[:, 0] += ds * np.cos(mid)
    poses[:, 1] += ds * np.sin(mid)
    poses[:, 2] += dths
    return ParticleSet(poses=poses, weights=ps.weights.copy())


def mcl_update(ps: ParticleSet, scan: DepthScan, grid: OccupancyGrid,
               cfg: LikelihoodConfig) -> ParticleSet:
    """Reweight particles by likelihood-field scan probability, renormalized."""
    bearings, ranges = scan.hits()
    bearings = bearings[::cfg.ray_stride]
    ranges = ranges[::cfg.ray_stride]

    log_w = np.log(np.maximum(ps.weights, 1e-300))
    if len(bearings) > 0:
        edt = grid.boundary_distance_field()
        ang = ps.poses[:, 2][:, None] + bearings[None, :]      # (N, R)
        ex = ps.poses[:, 0][:, None] + ranges[None, :] * np.cos(ang)
        ey = ps.poses[:, 1][:, None] + ranges[None, :] * np.sin(ang)
        jj = np.floor((ex - grid.origin[0]) / grid.resolution).astype(np.int64)
        ii = np.floor((ey - grid.origin[1]) / grid.resolution).astype(np.int64)
        inb = (ii >= 0) & (ii < grid.height_cells) & (jj >= 0) & (jj < grid.width_cells)
        d = np.full(ex.shape, 2.0 * cfg.sigma_hit * 3.0)
        d[inb] = edt[ii[inb], jj[inb]]
        p = cfg.z_hit * np.exp(-0.5 * (d / cfg.sigma_hit) ** 2) + cfg.p_floor
        log_w += np.sum(np.log(p), axis=1)

    # Particles sitting in non-free space are implausible regardless of rays.
    pj = np.floor((ps.poses[:, 0] - grid.origin[0]) / grid.resolution).astype(np.int64)
    pi = np.floor((ps.poses[:, 1] - grid.origin[1]) / grid.resolution).astype(np.int64)
    pin = (pi >= 0) & (pi < grid.height_cells) & (pj >= 0) & (pj < grid.width_cells)
    in_free = np.zeros(ps.n, dtype=bool)
    in_free[pin] = grid.cells[pi[pin], pj[pin]] == FREE
    log_w[~in_free] += math.log(cfg.wall_penalty)

    log_w -= np.max(log_w)
    w = np.exp(log_w)
    total = float(w.sum())
    if total <= 0 or not np.isfinite(total):
        w = np.full(ps.n, 1.0 / ps.n)
    else:
        w /= total
    return ParticleSet(poses=ps.poses.copy(), weights=w)


def mcl_resample(ps: ParticleSet, rng, u0: float | None = None) -> ParticleSet:
    """Low-variance systematic resampling; weights reset to uniform."""
    n = ps.n
    if u0 is None:
        u0 = rng.random() / n
    positions = u0 + np.arange(n) / n
    cumsum = np.cumsum(ps.weights)
    cumsum[-1] = 1.0
    idx = np.searchsorted(cumsum, positions, side="right")
    idx = np.minimum(idx, n - 1)
    return ParticleSet(poses=ps.poses[idx].copy(), weights=np.full(n, 1.0 / n))


def maybe_resample(ps: ParticleSet, rng) -> ParticleSet:
    """Resample only when the effective sample size drops below N/2."""
    if ps.effective_sample_size() < ps.n / 2.0:
        return mcl_resample(ps, rng)
    return ps


def estimate(ps: ParticleSet, position_var_threshold: float = 0.05) -> PoseEstimate:
    w = ps.weights
    mx = float(np.sum(w * ps.poses[:, 0]))
    my = float(np.sum(w * ps.poses[:, 1]))
    mth = circular_mean(ps.poses[:, 2], w)

    dx = ps.poses[:, 0] - mx
    dy = ps.poses[:, 1] - my
    dth = np.array([wrap_angle(a - mth) for a in ps.poses[:, 2]])
    dev = np.stack([dx, dy, dth], axis=1)
    cov = (w[:, None] * dev).T @ dev
    cov = (cov + cov.T) / 2.0
    converged = float(cov[0, 0] + cov[1, 1]) < position_var_threshold
    return PoseEstimate(x=mx, y=my, heading=mth, covariance=cov, converged=converged)
