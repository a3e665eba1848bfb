"""Synthetic camera, lidar and radar, and the fused range-speed image.

The camera is a flat-shaded pinhole render of the ground classes and agent
boxes. The lidar is a horizontal ray sweep expanded into vertical samples,
the radar reports one analytic range-rate return per visible agent. Lidar
points and radar returns are projected into the camera plane and packed into
a single H x W x 4 tensor: channels 1-3 carry the hit's camera-frame
coordinates (channel 3 is depth, nearest wins per pixel) and channel 4 the
radar relative speed splatted over a small disk.

All noise draws come from generators seeded by (world seed, tick, stream),
so renders are pure functions of the world state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path as MplPath

from .conditions import ConditionProfile
from .geometry import Pose2D, obb_corners, obb_segments, ray_segments_argmin, rot2d
from .townmap import WALL_HEIGHT
from .world import KIND_HEIGHTS, AgentKind, WorldState

RADAR_RETURN_HEIGHT = 1.0  # meters above ground for channel-4 splats
RADAR_SPLAT_RADIUS = 2  # pixels
MIN_CAMERA_DEPTH = 0.05
MAX_LIDAR_Z = 4.0


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int = 144
    height: int = 60
    fx: float = 72.0
    fy: float = 72.0
    cx: float = 72.0
    cy: float = 30.0
    mount: Pose2D = field(default_factory=lambda: Pose2D(1.0, 0.0, 0.0))
    mount_height: float = 1.4

    @classmethod
    def for_size(cls, width: int, height: int) -> "CameraIntrinsics":
        return cls(width=width, height=height, fx=width / 2.0, fy=width / 2.0,
                   cx=width / 2.0, cy=height / 2.0)


@dataclass(frozen=True)
class LidarScan:
    points: np.ndarray  # (N, 3) ego frame, z up from ground


@dataclass(frozen=True)
class RadarReturns:
    azimuth: np.ndarray  # (N,) radians, ego frame
    range: np.ndarray  # (N,) meters
    relative_speed: np.ndarray  # (N,) m/s, negative = closing


# ---------------------------------------------------------------------------
# Projection


def _ego_to_camera(points: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Ego-frame (x fwd, y left, z up) -> camera frame (x right, y down, z fwd)."""
    p = np.atleast_2d(np.asarray(points, float))
    rel_xy = (p[:, :2] - intr.mount.xy) @ rot2d(intr.mount.yaw)
    cam = np.empty_like(p)
    cam[:, 0] = -rel_xy[:, 1]
    cam[:, 1] = intr.mount_height - p[:, 2]
    cam[:, 2] = rel_xy[:, 0]
    return cam


def _camera_to_ego(cam: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    c = np.atleast_2d(np.asarray(cam, float))
    rel = np.empty_like(c)
    rel_xy = np.column_stack([c[:, 2], -c[:, 0]]) @ rot2d(intr.mount.yaw).T
    rel[:, :2] = rel_xy + intr.mount.xy
    rel[:, 2] = intr.mount_height - c[:, 1]
    return rel


def project_points(points: np.ndarray, intr: CameraIntrinsics):
    """Pinhole-project ego-frame 3D points.

    Returns (pixels, depths, cam_xyz, kept_index): float (row, col) pairs for
    the points in front of the image plane whose rounded pixel lands inside
    the image, their depths, camera-frame coordinates, and original indices.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    cam = _ego_to_camera(pts, intr)
    z = cam[:, 2]
    keep = z > MIN_CAMERA_DEPTH
    col = intr.cx + intr.fx * cam[:, 0] / np.where(keep, z, 1.0)
    row = intr.cy + intr.fy * cam[:, 1] / np.where(keep, z, 1.0)
    keep &= (row >= -0.5) & (row < intr.height - 0.5) \
        & (col >= -0.5) & (col < intr.width - 0.5)
    idx = np.where(keep)[0]
    pixels = np.column_stack([row[idx], col[idx]])
    return pixels, z[idx], cam[idx], idx


def unproject_point(row: float, col: float, depth: float,
                    intr: CameraIntrinsics) -> np.ndarray:
    """Inverse of project_points for a single pixel/depth, back to ego frame."""
    x = (col - intr.cx) / intr.fx * depth
    y = (row - intr.cy) / intr.fy * depth
    return _camera_to_ego(np.array([[x, y, depth]]), intr)[0]


# ---------------------------------------------------------------------------
# Camera

_GROUND_COLORS = np.array([
    [0.35, 0.48, 0.30],  # off-road
    [0.42, 0.42, 0.45],  # road
    [0.52, 0.52, 0.55],  # intersection
    [0.62, 0.57, 0.47],  # sidewalk
])
_SKY_TOP = np.array([0.55, 0.70, 0.90])
_SKY_HORIZON = np.array([0.80, 0.85, 0.92])
_KIND_COLORS = {
    AgentKind.CAR: (0.70, 0.15, 0.15),
    AgentKind.TRUCK: (0.20, 0.30, 0.70),
    AgentKind.VAN: (0.72, 0.52, 0.20),
    AgentKind.BUS: (0.80, 0.72, 0.20),
    AgentKind.MOTORCYCLIST: (0.50, 0.20, 0.60),
    AgentKind.BICYCLIST: (0.20, 0.60, 0.60),
    AgentKind.PEDESTRIAN: (0.85, 0.45, 0.10),
}


def render_camera(state: WorldState, intr: CameraIntrinsics,
                  condition: ConditionProfile | None = None) -> np.ndarray:
    """Flat-shaded pinhole render, then contrast/noise degradation."""
    cond = condition or state.condition
    h, w = intr.height, intr.width
    img = np.empty((h, w, 3))

    rows = np.arange(h, dtype=float)
    cols = np.arange(w, dtype=float)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    dy = (rr - intr.cy) / intr.fy  # camera down-component per pixel at z=1

    # sky gradient above the horizon row
    sky = dy <= 1e-9
    frac = np.clip(rr / max(intr.cy, 1.0), 0.0, 1.0)[..., None]
    img[:] = _SKY_TOP * (1 - frac) + _SKY_HORIZON * frac

    # ground: intersect each remaining pixel ray with z = 0
    gmask = ~sky
    if gmask.any():
        dxc = (cc[gmask] - intr.cx) / intr.fx
        t = intr.mount_height / dy[gmask]
        cam_pts = np.column_stack([dxc * t, dy[gmask] * t, t])
        ego_pts = _camera_to_ego(cam_pts, intr)
        world = ego_pts[:, :2] @ rot2d(state.ego.pose.yaw).T + state.ego.pose.xy
        classes = state.town.ground_class_at(world)
        img[gmask] = _GROUND_COLORS[classes]

    # agents, far to near
    order = sorted(
        state.agents,
        key=lambda a: -math.hypot(a.pose.x - state.ego.pose.x, a.pose.y - state.ego.pose.y),
    )
    for agent in order:
        _paint_agent(img, agent, state.ego.pose, intr)

    img = 0.5 + (img - 0.5) * cond.cam_contrast
    if cond.cam_noise_sigma > 0:
        rng = np.random.default_rng([state.seed, state.tick, 11])
        img = img + rng.normal(0.0, cond.cam_noise_sigma, img.shape)
    return np.clip(img, 0.0, 1.0)


def _paint_agent(img, agent, ego_pose: Pose2D, intr) -> None:
    corners2 = obb_corners(agent.pose.x, agent.pose.y, agent.pose.yaw,
                           *agent.half_extents)
    rel = (corners2 - ego_pose.xy) @ rot2d(ego_pose.yaw)
    height = KIND_HEIGHTS[agent.kind]
    pts3 = np.vstack([
        np.column_stack([rel, np.zeros(4)]),
        np.column_stack([rel, np.full(4, height)]),
    ])
    cam = _ego_to_camera(pts3, intr)
    if (cam[:, 2] <= MIN_CAMERA_DEPTH).any():
        return  # partially behind the image plane: skip rather than mis-fill
    col = intr.cx + intr.fx * cam[:, 0] / cam[:, 2]
    row = intr.cy + intr.fy * cam[:, 1] / cam[:, 2]
    r0 = max(0, int(math.floor(row.min())))
    r1 = min(intr.height - 1, int(math.ceil(row.max())))
    c0 = max(0, int(math.floor(col.min())))
    c1 = min(intr.width - 1, int(math.ceil(col.max())))
    if r0 > r1 or c0 > c1:
        return
    hull = _convex_hull(np.column_stack([row, col]))
    if len(hull) < 3:
        return
    rr, cc = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
    cells = np.column_stack([rr.ravel(), cc.ravel()]).astype(float)
    inside = MplPath(hull).contains_points(cells, radius=0.5)
    if not inside.any():
        return
    base = np.array(_KIND_COLORS[agent.kind])
    tint = 0.85 + 0.15 * ((agent.id * 2654435761) % 97) / 96.0
    patch = img[r0:r1 + 1, c0:c1 + 1].reshape(-1, 3)
    patch[inside] = np.clip(base * tint, 0.0, 1.0)
    img[r0:r1 + 1, c0:c1 + 1] = patch.reshape(r1 - r0 + 1, c1 - c0 + 1, 3)


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices in order."""
    pts = np.unique(pts, axis=0)
    if len(pts) < 3:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(points):
        out = []
        for p in points:
            while len(out) >= 2 and np.cross(out[-1] - out[-2], p - out[-2]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


# ---------------------------------------------------------------------------
# Lidar


def lidar_scan(state: WorldState, condition: ConditionProfile | None = None,
               n_azimuths: int = 360, max_range: float = 50.0,
               z_step: float = 0.5) -> LidarScan:
    """Horizontal ray sweep against walls and agent boxes, expanded vertically."""
    cond = condition or state.condition
    az = np.arange(n_azimuths) * (2 * math.pi / n_azimuths)
    world_dirs = np.column_stack([
        np.cos(az + state.ego.pose.yaw), np.sin(az + state.ego.pose.yaw)
    ])
    wall_p, wall_q = state.town.walls()
    seg_p = [wall_p]
    seg_q = [wall_q]
    heights = [np.full(len(wall_p), WALL_HEIGHT)]
    for agent in state.agents:
        edges = obb_segments(obb_corners(*agent.box()))
        seg_p.append(edges[:, 0])
        seg_q.append(edges[:, 1])
        heights.append(np.full(4, KIND_HEIGHTS[agent.kind]))
    seg_p = np.vstack(seg_p)
    seg_q = np.vstack(seg_q)
    heights = np.concatenate(heights)

    ranges, seg_idx = ray_segments_argmin(state.ego.pose.xy, world_dirs,
                                          seg_p, seg_q, max_range)
    hit = seg_idx >= 0
    if cond.lidar_dropout > 0 or cond.lidar_range_jitter > 0:
        rng = np.random.default_rng([state.seed, state.tick, 12])
        drop = rng.random(n_azimuths) < cond.lidar_dropout
        hit &= ~drop
        if cond.lidar_range_jitter > 0:
            ranges = ranges + rng.normal(0.0, cond.lidar_range_jitter, n_azimuths)
    idx = np.where(hit)[0]
    if idx.size == 0:
        return LidarScan(points=np.zeros((0, 3)))
    r = np.maximum(ranges[idx], 0.1)
    top = np.minimum(heights[seg_idx[idx]], MAX_LIDAR_Z)
    n_levels = np.maximum(1, np.floor((top - 0.25) / z_step).astype(int) + 1)
    ray_rep = np.repeat(idx, n_levels)
    r_rep = np.repeat(r, n_levels)
    level = np.concatenate([np.arange(n) for n in n_levels])
    z = 0.25 + level * z_step
    pts = np.column_stack([
        r_rep * np.cos(az[ray_rep]), r_rep * np.sin(az[ray_rep]), z
    ])
    return LidarScan(points=pts)


# ---------------------------------------------------------------------------
# Radar


def radar_scan(state: WorldState, condition: ConditionProfile | None = None,
               fov_half_angle: float = math.radians(60.0),
               max_range: float = 60.0) -> RadarReturns:
    """One analytic range-rate return per agent inside the forward cone."""
    cond = condition or state.condition
    ego = state.ego
    ego_vel_world = rot2d(ego.pose.yaw) @ np.array([ego.vx, ego.vy])
    az_list, rng_list, spd_list = [], [], []
    for agent in state.agents:
        rel = np.array([agent.pose.x - ego.pose.x, agent.pose.y - ego.pose.y])
        dist = float(np.hypot(*rel))
        if dist <= 1e-6 or dist > max_range:
            continue
        rel_ego = rot2d(ego.pose.yaw).T @ rel
        azimuth = math.atan2(rel_ego[1], rel_ego[0])
        if abs(azimuth) > fov_half_angle:
            continue
        agent_vel = agent.speed * np.array([
            math.cos(agent.pose.yaw), math.sin(agent.pose.yaw)
        ])
        v_rel = agent_vel - ego_vel_world
        rate = float(rel @ v_rel) / dist
        az_list.append(azimuth)
        rng_list.append(dist)
        spd_list.append(rate)
    az = np.array(az_list)
    rg = np.array(rng_list)
    spd = np.array(spd_list)
    if cond.radar_noise > 0 and len(spd):
        rng = np.random.default_rng([state.seed, state.tick, 13])
        spd = spd + rng.normal(0.0, cond.radar_noise, len(spd))
    return RadarReturns(azimuth=az, range=rg, relative_speed=spd)


# ---------------------------------------------------------------------------
# Fused image

_SPLAT_OFFSETS = np.array([
    (dr, dc)
    for dr in range(-RADAR_SPLAT_RADIUS, RADAR_SPLAT_RADIUS + 1)
    for dc in range(-RADAR_SPLAT_RADIUS, RADAR_SPLAT_RADIUS + 1)
    if dr * dr + dc * dc <= RADAR_SPLAT_RADIUS * RADAR_SPLAT_RADIUS
])


def assemble_ralidar(lidar: LidarScan, radar: RadarReturns,
                     intr: CameraIntrinsics) -> np.ndarray:
    """Pack projected lidar coordinates and radar speeds into H x W x 4.

    Channels 1-3 hold the camera-frame coordinates of the nearest lidar point
    per pixel (channel 3 = depth); channel 4 holds radar relative speed over
    a small disk per return, nearest return winning contested pixels.
    """
    img = np.zeros((intr.height, intr.width, 4))
    pix, depth, cam, _ = project_points(lidar.points, intr)
    if len(pix):
        pr = np.rint(pix[:, 0]).astype(int)
        pc = np.rint(pix[:, 1]).astype(int)
        flat = pr * intr.width + pc
        order = np.lexsort((depth, flat))
        flat, depth, cam = flat[order], depth[order], cam[order]
        first = np.ones(len(flat), dtype=bool)
        first[1:] = flat[1:] != flat[:-1]
        img[..., :3].reshape(-1, 3)[flat[first]] = cam[first]

    if len(radar.azimuth):
        pts = np.column_stack([
            radar.range * np.cos(radar.azimuth),
            radar.range * np.sin(radar.azimuth),
            np.full(len(radar.azimuth), RADAR_RETURN_HEIGHT),
        ])
        pix, _, _, kept = project_points(pts, intr)
        if len(pix):
            pr = np.rint(pix[:, 0]).astype(int)[:, None] + _SPLAT_OFFSETS[:, 0]
            pc = np.rint(pix[:, 1]).astype(int)[:, None] + _SPLAT_OFFSETS[:, 1]
            rgs = np.broadcast_to(radar.range[kept][:, None], pr.shape).ravel()
            spd = np.broadcast_to(radar.relative_speed[kept][:, None], pr.shape).ravel()
            pr, pc = pr.ravel(), pc.ravel()
            ok = (pr >= 0) & (pr < intr.height) & (pc >= 0) & (pc < intr.width)
            pr, pc, rgs, spd = pr[ok], pc[ok], rgs[ok], spd[ok]
            flat = pr * intr.width + pc
            order = np.lexsort((rgs, flat))
            flat, spd = flat[order], spd[order]
            first = np.ones(len(flat), dtype=bool)
            first[1:] = flat[1:] != flat[:-1]
            img[..., 3].reshape(-1)[flat[first]] = spd[first]
    return img
