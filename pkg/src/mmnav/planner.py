"""Global route planning over the lane graph and local guidance extraction.

The global planner runs A* with a Euclidean heuristic over map nodes. From
the densified route, a fixed window of 130 guidance points spaced exactly
0.4 m apart (Euclidean, enforced by chord stepping along the polyline) is
extracted, anchored at the route point nearest the ego, and flattened into a
260-value ego-frame vector for the policy.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Pose2D,
    densify_polyline,
    polyline_arclength,
    world_to_frame,
)
from .townmap import TownMap

LOCAL_ROUTE_POINTS = 130
LOCAL_ROUTE_SPACING = 0.4  # meters between adjacent guidance points
ROUTE_DENSIFY_SPACING = 0.1
SNAP_RADIUS = 5.0


class NoRouteError(RuntimeError):
    """Start or goal could not be connected on the lane graph."""


@dataclass(frozen=True)
class FullRoute:
    waypoints: np.ndarray  # (N, 2), spacing <= ROUTE_DENSIFY_SPACING
    total_length: float
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cum", polyline_arclength(self.waypoints))


@dataclass(frozen=True)
class LocalRoute:
    waypoints: np.ndarray  # (LOCAL_ROUTE_POINTS, 2) world frame

    def __post_init__(self):
        if self.waypoints.shape != (LOCAL_ROUTE_POINTS, 2):
            raise ValueError(f"local route shape {self.waypoints.shape}")


def astar(coords: dict, adjacency: dict, start, goal) -> tuple[float, list]:
    """Shortest path by cost with a Euclidean-distance heuristic.

    `coords` maps node -> (x, y); `adjacency` maps node -> [(dst, cost, tag)].
    Costs must be >= the straight-line distance between the nodes they join
    (true for lane edges), which keeps the heuristic admissible.
    Returns (cost, [start..goal]) or raises NoRouteError.
    """
    gx, gy = coords[goal]

    def h(n):
        x, y = coords[n]
        return math.hypot(x - gx, y - gy)

    g = {start: 0.0}
    parent = {start: None}
    done = set()
    pq = [(h(start), 0, start)]
    counter = 1
    while pq:
        _, _, u = heapq.heappop(pq)
        if u in done:
            continue
        if u == goal:
            break
        done.add(u)
        for dst, cost, _tag in adjacency.get(u, ()):
            ng = g[u] + cost
            if ng < g.get(dst, math.inf):
                g[dst] = ng
                parent[dst] = u
                heapq.heappush(pq, (ng + h(dst), counter, dst))
                counter += 1
    if goal not in g:
        raise NoRouteError(f"no path from {start} to {goal}")
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return g[goal], path[::-1]


def _lane_cost(town: TownMap, lane_id: int) -> float:
    lane = town.lanes[lane_id]
    a = town.nodes[lane.src]
    b = town.nodes[lane.dst]
    node_dist = float(np.hypot(*(b - a)))
    # curved lanes are longer than the node gap; straight pulled-back lanes
    # are shorter, so take the max to keep the heuristic admissible
    return max(lane.length, node_dist)


def plan_global(town: TownMap, start: Pose2D, goal: Pose2D) -> FullRoute:
    """A* route between the nodes nearest to start and goal, densified."""
    s_node, s_dist = town.nearest_node(start.xy)
    g_node, g_dist = town.nearest_node(goal.xy)
    if s_dist > SNAP_RADIUS or g_dist > SNAP_RADIUS:
        raise NoRouteError(
            f"start/goal farther than {SNAP_RADIUS} m from the lane graph "
            f"({s_dist:.1f} m, {g_dist:.1f} m)"
        )
    if s_node == g_node:
        p = town.nodes[s_node]
        return FullRoute(waypoints=np.array([p]), total_length=0.0)
    adjacency = {
        nid: [(dst, _lane_cost(town, lid), lid) for dst, _, lid in lst]
        for nid, lst in town.adjacency.items()
    }
    _, node_path = astar(town.nodes, adjacency, s_node, g_node)
    pts: list[np.ndarray] = []
    for a, b in zip(node_path[:-1], node_path[1:]):
        lid = min(
            (lid for dst, _, lid in town.adjacency[a] if dst == b),
            key=lambda lid: town.lanes[lid].length,
        )
        line = town.lanes[lid].centerline
        if pts and np.allclose(pts[-1], line[0]):
            pts.extend(line[1:])
        else:
            pts.extend(line)
    dense = densify_polyline(np.array(pts), ROUTE_DENSIFY_SPACING)
    cum = polyline_arclength(dense)
    return FullRoute(waypoints=dense, total_length=float(cum[-1]))


def _chord_forward(points: np.ndarray, seg: int, t: float, center: np.ndarray,
                   radius: float) -> tuple[np.ndarray, int, float] | None:
    """First point forward of (seg, t) at Euclidean `radius` from `center`.

    Walks segments solving |A + t (B - A) - center| = radius; returns the
    point with its polyline position, or None when the rest of the route
    stays inside the radius.
    """
    n = len(points)
    r2 = radius * radius
    for j in range(seg, n - 1):
        a = points[j]
        d = points[j + 1] - a
        f = a - center
        qa = float(d @ d)
        if qa <= 0.0:
            continue
        qb = 2.0 * float(f @ d)
        qc = float(f @ f) - r2
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            continue
        sq = math.sqrt(disc)
        lo = (j == seg) * t
        for root in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
            if root >= lo - 1e-12 and root <= 1.0 + 1e-12:
                root = min(max(root, 0.0), 1.0)
                # accept only outward crossings; inward roots re-enter the disk
                if float((f + root * d) @ d) >= 0.0:
                    return a + root * d, j, root
    return None


def extract_local_route(route: FullRoute, ego: Pose2D) -> LocalRoute:
    """Fixed-size guidance window anchored at the route point nearest the ego.

    Points march forward along the route at exactly LOCAL_ROUTE_SPACING
    (chord distance). Past the route end, the terminal waypoint repeats.
    """
    pts = route.waypoints
    if len(pts) == 0:
        raise ValueError("empty route")
    d = np.hypot(pts[:, 0] - ego.x, pts[:, 1] - ego.y)
    anchor = int(np.argmin(d))  # first minimum: earliest along the route
    out = np.empty((LOCAL_ROUTE_POINTS, 2))
    out[0] = pts[anchor]
    seg = min(anchor, len(pts) - 2) if len(pts) > 1 else 0
    t = float(anchor == seg + 1) if len(pts) > 1 else 0.0
    filled = 1
    if len(pts) > 1:
        cur = pts[anchor]
        for k in range(1, LOCAL_ROUTE_POINTS):
            nxt = _chord_forward(pts, seg, t, cur, LOCAL_ROUTE_SPACING)
            if nxt is None:
                break
            cur, seg, t = nxt
            out[k] = cur
            filled = k + 1
    if filled < LOCAL_ROUTE_POINTS:
        out[filled:] = pts[-1]
    return LocalRoute(waypoints=out)


def flatten_route(local: LocalRoute, ego: Pose2D) -> np.ndarray:
    """Serialize the window as (x1, y1, ..., x130, y130) in the ego frame."""
    return world_to_frame(local.waypoints, ego).ravel()
