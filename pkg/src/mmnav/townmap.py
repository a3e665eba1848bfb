"""Town map model: lane graph, intersections, sidewalks, and derived geometry.

Maps are stored as schema-1 JSON documents with top-level keys nodes, lanes,
intersections, sidewalks, spawn_points (coordinates in meters). Everything
derived (walls, drivable area, rasterized ground classes) is computed at load
and cached; the map object itself is immutable and shareable across threads.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon
from shapely.ops import unary_union
import shapely

from .geometry import (
    Pose2D,
    nearest_point_on_polyline,
    point_in_polygon,
    polyline_arclength,
    tangent_at_arc,
    wrap_angle,
)

MIN_LANE_WIDTH = 2.2
SIDEWALK_WIDTH = 1.5
WALL_HEIGHT = 2.0  # nominal height of road-edge obstacles seen by the lidar


class MapError(ValueError):
    """Raised for malformed or inconsistent map documents."""


class RegionKind(enum.Enum):
    INTERSECTION = "intersection"
    ROAD = "road"
    OFF_ROAD = "off_road"


@dataclass(frozen=True)
class RegionInfo:
    kind: RegionKind
    lane_id: int | None
    lateral_offset: float  # signed, left of lane direction is positive
    heading_error: float  # wrapped pose.yaw - lane heading


@dataclass(frozen=True)
class Lane:
    id: int
    src: int
    dst: int
    width: float
    centerline: np.ndarray  # (V, 2)
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cum", polyline_arclength(self.centerline))

    @property
    def length(self) -> float:
        return float(self.cum[-1])


class TownMap:
    """Immutable road network with cached derived geometry."""

    def __init__(self, name, nodes, lanes, intersections, sidewalks, spawn_points):
        self.name = str(name)
        self.nodes: dict[int, np.ndarray] = {int(k): np.asarray(v, float) for k, v in nodes.items()}
        self.lanes: list[Lane] = list(lanes)
        self.intersections: list[np.ndarray] = [np.asarray(p, float) for p in intersections]
        self.sidewalks: list[np.ndarray] = [np.asarray(p, float) for p in sidewalks]
        self.spawn_points: list[Pose2D] = list(spawn_points)
        self.adjacency: dict[int, list[tuple[int, float, int]]] = {nid: [] for nid in self.nodes}
        for lane in self.lanes:
            self.adjacency[lane.src].append((lane.dst, lane.length, lane.id))
        self._drivable = None
        self._walls = None
        self._grid = None
        self._walk_cum: dict[int, np.ndarray] = {}
        self.validate()

    def walk_cum(self, walk_id: int) -> np.ndarray:
        """Cached cumulative arc length of a sidewalk polyline."""
        if walk_id not in self._walk_cum:
            self._walk_cum[walk_id] = polyline_arclength(self.sidewalks[walk_id])
        return self._walk_cum[walk_id]

    # -- construction / IO ---------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "TownMap":
        if doc.get("schema") != 1:
            raise MapError(f"unsupported map schema {doc.get('schema')!r}")
        required = {"nodes", "lanes", "intersections", "sidewalks", "spawn_points"}
        missing = required - doc.keys()
        if missing:
            raise MapError(f"map document missing keys {sorted(missing)}")
        nodes = {n["id"]: (n["x"], n["y"]) for n in doc["nodes"]}
        lanes = [
            Lane(
                id=i,
                src=int(l["from"]),
                dst=int(l["to"]),
                width=float(l["width"]),
                centerline=np.asarray(l["centerline"], float),
            )
            for i, l in enumerate(doc["lanes"])
        ]
        spawns = [Pose2D(s["x"], s["y"], s["yaw"]) for s in doc["spawn_points"]]
        return cls(
            doc.get("name", "town"),
            nodes,
            lanes,
            doc["intersections"],
            doc["sidewalks"],
            spawns,
        )

    def to_dict(self, extra: dict | None = None) -> dict:
        doc = {
            "schema": 1,
            "name": self.name,
            "nodes": [
                {"id": nid, "x": float(xy[0]), "y": float(xy[1])}
                for nid, xy in sorted(self.nodes.items())
            ],
            "lanes": [
                {
                    "from": l.src,
                    "to": l.dst,
                    "width": l.width,
                    "centerline": [[float(x), float(y)] for x, y in l.centerline],
                }
                for l in self.lanes
            ],
            "intersections": [[[float(x), float(y)] for x, y in p] for p in self.intersections],
            "sidewalks": [[[float(x), float(y)] for x, y in p] for p in self.sidewalks],
            "spawn_points": [{"x": s.x, "y": s.y, "yaw": s.yaw} for s in self.spawn_points],
        }
        if extra:
            doc.update(extra)
        return doc

    @classmethod
    def load(cls, path) -> "TownMap":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path, extra: dict | None = None) -> None:
        text = json.dumps(self.to_dict(extra), sort_keys=True, indent=1) + "\n"
        Path(path).write_text(text)

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        for lane in self.lanes:
            if lane.width < MIN_LANE_WIDTH:
                raise MapError(f"lane {lane.id} width {lane.width} < {MIN_LANE_WIDTH}")
            if lane.src not in self.nodes or lane.dst not in self.nodes:
                raise MapError(f"lane {lane.id} references unknown node")
            if lane.length <= 0:
                raise MapError(f"lane {lane.id} has empty centerline")
        if not self.spawn_points:
            raise MapError("map has no spawn points")
        for sp in self.spawn_points:
            start, _ = self.nearest_node(sp.xy)
            reached = self._reachable_from(start)
            if reached != set(self.nodes):
                raise MapError(
                    f"spawn at ({sp.x:.1f}, {sp.y:.1f}) cannot reach nodes "
                    f"{sorted(set(self.nodes) - reached)}"
                )

    def _reachable_from(self, node: int) -> set[int]:
        seen = {node}
        stack = [node]
        while stack:
            for dst, _, _ in self.adjacency[stack.pop()]:
                if dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return seen

    # -- queries ---------------------------------------------------------------

    def nearest_node(self, xy) -> tuple[int, float]:
        xy = np.asarray(xy, float)
        ids = sorted(self.nodes)
        coords = np.array([self.nodes[i] for i in ids])
        d = np.hypot(coords[:, 0] - xy[0], coords[:, 1] - xy[1])
        k = int(np.argmin(d))
        return ids[k], float(d[k])

    def lanes_from(self, node: int) -> list[Lane]:
        return [self.lanes[lid] for _, _, lid in self.adjacency[node]]

    def region_of(self, pose: Pose2D) -> RegionInfo:
        """Classify a pose: inside an intersection, on a lane, or off-road.

        Lane assignment prefers the nearest lane whose local direction is
        within +-90 degrees of the pose yaw; if none qualifies the nearest
        opposing lane is reported (the caller decides what that means).
        """
        p = pose.xy
        for poly in self.intersections:
            if point_in_polygon(p, poly)[0]:
                return RegionInfo(RegionKind.INTERSECTION, None, 0.0, 0.0)
        best = None  # (dist, lane, s)
        best_co = None
        for lane in self.lanes:
            s, dist, _ = nearest_point_on_polyline(lane.centerline, p)
            heading = tangent_at_arc(lane.centerline, lane.cum, s)
            co = abs(wrap_angle(pose.yaw - heading)) <= math.pi / 2
            entry = (dist, lane, s, heading)
            if best is None or dist < best[0]:
                best = entry
            if co and (best_co is None or dist < best_co[0]):
                best_co = entry
        chosen = best_co if best_co is not None else best
        if chosen is None:
            return RegionInfo(RegionKind.OFF_ROAD, None, math.inf, 0.0)
        dist, lane, s, heading = chosen
        # signed offset: positive when left of travel direction
        _, _, foot = nearest_point_on_polyline(lane.centerline, p)
        tangent = np.array([math.cos(heading), math.sin(heading)])
        rel = p - foot
        lateral = float(tangent[0] * rel[1] - tangent[1] * rel[0])
        herr = float(wrap_angle(pose.yaw - heading))
        kind = RegionKind.ROAD if dist <= lane.width / 2 else RegionKind.OFF_ROAD
        return RegionInfo(kind, lane.id, lateral, herr)

    # -- derived geometry ------------------------------------------------------

    @property
    def drivable(self):
        """Shapely union of lane corridors and intersection polygons."""
        if self._drivable is None:
            parts = [
                shapely.LineString(l.centerline).buffer(l.width / 2, cap_style="flat")
                for l in self.lanes
            ]
            parts += [Polygon(p) for p in self.intersections]
            self._drivable = unary_union(parts)
        return self._drivable

    def walls(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary of the drivable area as segment arrays (P, Q), each (S, 2)."""
        if self._walls is None:
            rings = []
            geoms = getattr(self.drivable, "geoms", [self.drivable])
            for geom in geoms:
                rings.append(np.asarray(geom.exterior.coords))
                rings.extend(np.asarray(r.coords) for r in geom.interiors)
            ps, qs = [], []
            for ring in rings:
                ps.append(ring[:-1])
                qs.append(ring[1:])
            self._walls = (np.vstack(ps), np.vstack(qs))
        return self._walls

    def bounds(self, margin: float = 5.0) -> tuple[float, float, float, float]:
        minx, miny, maxx, maxy = self.drivable.bounds
        return minx - margin, miny - margin, maxx + margin, maxy + margin

    def ground_grid(self, resolution: float = 0.5):
        """Rasterized ground classes: 0 off-road, 1 road, 2 intersection, 3 sidewalk.

        Returns (grid, origin_xy, resolution); used for cheap camera shading.
        """
        if self._grid is None or self._grid[2] != resolution:
            minx, miny, maxx, maxy = self.bounds(margin=10.0)
            nx = int(math.ceil((maxx - minx) / resolution))
            ny = int(math.ceil((maxy - miny) / resolution))
            xs = minx + (np.arange(nx) + 0.5) * resolution
            ys = miny + (np.arange(ny) + 0.5) * resolution
            gx, gy = np.meshgrid(xs, ys, indexing="ij")
            flat_x, flat_y = gx.ravel(), gy.ravel()
            grid = np.zeros(nx * ny, dtype=np.uint8)
            shapely.prepare(self.drivable)
            grid[shapely.contains_xy(self.drivable, flat_x, flat_y)] = 1
            inter = unary_union([Polygon(p) for p in self.intersections])
            if not inter.is_empty:
                grid[shapely.contains_xy(inter, flat_x, flat_y)] = 2
            if self.sidewalks:
                walk = unary_union(
                    [shapely.LineString(s).buffer(SIDEWALK_WIDTH / 2) for s in self.sidewalks]
                )
                mask = shapely.contains_xy(walk, flat_x, flat_y) & (grid == 0)
                grid[mask] = 3
            self._grid = (grid.reshape(nx, ny), np.array([minx, miny]), resolution)
        return self._grid

    def ground_class_at(self, points: np.ndarray) -> np.ndarray:
        grid, origin, res = self.ground_grid()
        idx = np.floor((np.asarray(points, float) - origin) / res).astype(int)
        ix = np.clip(idx[:, 0], 0, grid.shape[0] - 1)
        iy = np.clip(idx[:, 1], 0, grid.shape[1] - 1)
        out = grid[ix, iy]
        oob = (idx[:, 0] < 0) | (idx[:, 0] >= grid.shape[0]) | (idx[:, 1] < 0) | (idx[:, 1] >= grid.shape[1])
        out = np.where(oob, 0, out)
        return out
