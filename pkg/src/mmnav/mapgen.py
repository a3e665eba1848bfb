"""Procedural town templates: right-hand-traffic grids, urban or rural flavor."""

from __future__ import annotations

import numpy as np

from .geometry import Pose2D
from .townmap import Lane, TownMap

URBAN_LANE_WIDTH = 3.5
RURAL_LANE_WIDTH = 2.6

TEMPLATES = ("grid", "rural")


def make_town(template: str, rows: int = 3, cols: int = 3, block: float = 45.0,
              seed: int = 0, name: str | None = None) -> TownMap:
    """Build a rows x cols intersection grid with one lane per direction.

    `grid` is the urban default; `rural` narrows the lanes and perturbs the
    block spacing so crossings arrive at irregular intervals.
    """
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; expected one of {TEMPLATES}")
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2x2 intersections")
    if block < 25.0:
        raise ValueError("block spacing below 25 m leaves no room between intersections")
    rng = np.random.default_rng(seed)
    lane_width = URBAN_LANE_WIDTH if template == "grid" else RURAL_LANE_WIDTH
    # irregular spacing for the rural flavor, fixed pitch for urban
    if template == "rural":
        dx = block * rng.uniform(0.8, 1.3, size=cols - 1)
        dy = block * rng.uniform(0.8, 1.3, size=rows - 1)
    else:
        dx = np.full(cols - 1, block)
        dy = np.full(rows - 1, block)
    xs = np.concatenate([[0.0], np.cumsum(dx)])
    ys = np.concatenate([[0.0], np.cumsum(dy)])

    half_int = lane_width + 1.0  # intersection square half-size
    walk_off = lane_width + 1.3  # sidewalk axis, clear of the road edge

    nodes = {}
    for r in range(rows):
        for c in range(cols):
            nodes[r * cols + c] = (xs[c], ys[r])

    def node_id(r, c):
        return r * cols + c

    lanes = []
    sidewalks = []
    spawns = []

    def add_road(a_id, b_id):
        # a mid-block node per road so spawn poses snap onto the graph
        a = np.asarray(nodes[a_id], float)
        b = np.asarray(nodes[b_id], float)
        m_id = len(nodes)
        m = (a + b) / 2
        nodes[m_id] = tuple(m)
        for src, dst, p0, p1 in ((a_id, b_id, a, b), (b_id, a_id, b, a)):
            u = (p1 - p0) / np.linalg.norm(p1 - p0)
            n = np.array([u[1], -u[0]])  # right-hand traffic: keep right
            off = n * lane_width / 2
            start = p0 + u * half_int + off
            end = p1 - u * half_int + off
            mid = m + off
            lanes.append(Lane(id=len(lanes), src=src, dst=m_id, width=lane_width,
                              centerline=np.array([start, mid])))
            lanes.append(Lane(id=len(lanes), src=m_id, dst=dst, width=lane_width,
                              centerline=np.array([mid, end])))
            yaw = float(np.arctan2(u[1], u[0]))
            spawns.append(Pose2D(mid[0], mid[1], yaw))
        # one sidewalk per road side, clear of the intersection squares
        u = (b - a) / np.linalg.norm(b - a)
        n = np.array([u[1], -u[0]])
        for side in (+1, -1):
            s0 = a + u * (half_int + 1.0) + side * n * walk_off
            s1 = b - u * (half_int + 1.0) + side * n * walk_off
            sidewalks.append(np.array([s0, s1]))

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                add_road(node_id(r, c), node_id(r, c + 1))
            if r + 1 < rows:
                add_road(node_id(r, c), node_id(r + 1, c))

    intersections = []
    for r in range(rows):
        for c in range(cols):
            x, y = nodes[node_id(r, c)]
            h = half_int
            intersections.append(
                [[x - h, y - h], [x + h, y - h], [x + h, y + h], [x - h, y + h]]
            )

    return TownMap(
        name or f"{template}_{rows}x{cols}",
        nodes,
        lanes,
        intersections,
        sidewalks,
        spawns,
    )
