"""2D geometry primitives: poses, oriented boxes, polylines, polygons, rays."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    r = np.asarray(a, dtype=float)
    r = r - TWO_PI * np.round(r / TWO_PI)
    # round-half-even can land exactly on -pi
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    return float(r) if np.isscalar(a) or np.ndim(a) == 0 else r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose in meters/radians, yaw in (-pi, pi]."""

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.yaw})")
        object.__setattr__(self, "yaw", float(wrap_angle(self.yaw)))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def heading(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw)])


def rot2d(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def world_to_frame(points, pose: Pose2D) -> np.ndarray:
    """Express world-frame points in the frame anchored at `pose`."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return (p - pose.xy) @ rot2d(pose.yaw)  # R(-yaw) applied on the right


def frame_to_world(points, pose: Pose2D) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return p @ rot2d(pose.yaw).T + pose.xy


# ---------------------------------------------------------------------------
# Oriented bounding boxes


def obb_corners(cx: float, cy: float, yaw: float, hx: float, hy: float) -> np.ndarray:
    """Corners of an oriented box, CCW, shape (4, 2)."""
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    return local @ rot2d(yaw).T + np.array([cx, cy])


def obb_overlap(a, b, gap: float = 1e-9) -> bool:
    """Separating-axis test for two oriented boxes given as (cx, cy, yaw, hx, hy).

    Boxes separated by less than `gap` along every axis count as overlapping
    (conservative tie-break for collision checking).
    """
    ax, ay, ayaw, ahx, ahy = a
    bx, by, byaw, bhx, bhy = b
    ra = rot2d(ayaw)
    rb = rot2d(byaw)
    axes = np.vstack([ra.T, rb.T])  # 4 candidate axes, rows are unit vectors
    d = np.array([bx - ax, by - ay])
    ha = np.array([ahx, ahy])
    hb = np.array([bhx, bhy])
    for axis in axes:
        # projection radius of each box onto the axis
        pa = np.abs(axis @ ra) @ ha
        pb = np.abs(axis @ rb) @ hb
        if abs(axis @ d) - (pa + pb) >= gap:
            return False
    return True


def obb_segments(corners: np.ndarray) -> np.ndarray:
    """Edges of a corner loop as (4, 2, 2): [edge, endpoint, xy]."""
    nxt = np.roll(corners, -1, axis=0)
    return np.stack([corners, nxt], axis=1)


def obb_intersects_segments(box, segs_p: np.ndarray, segs_q: np.ndarray) -> np.ndarray:
    """Indices of segments [p_i, q_i] that touch an oriented box.

    A segment touches if either endpoint is inside or it crosses an edge.
    """
    cx, cy, yaw, hx, hy = box
    pose = Pose2D(cx, cy, yaw)
    pl = world_to_frame(segs_p, pose)
    ql = world_to_frame(segs_q, pose)
    inside = lambda pts: (np.abs(pts[:, 0]) <= hx) & (np.abs(pts[:, 1]) <= hy)
    hit = inside(pl) | inside(ql)
    # remaining: check segment/edge crossings
    rest = np.where(~hit)[0]
    if rest.size:
        edges = obb_segments(obb_corners(cx, cy, yaw, hx, hy))
        for e0, e1 in edges:
            cross = segments_intersect(segs_p[rest], segs_q[rest], e0, e1)
            hit[rest] |= cross
    return np.where(hit)[0]


def segments_intersect(p: np.ndarray, q: np.ndarray, a, b) -> np.ndarray:
    """Vectorized proper/improper intersection of segments [p_i, q_i] with [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d1 = q - p
    d2 = b - a
    denom = d1[:, 0] * d2[1] - d1[:, 1] * d2[0]
    diff = a - p
    t_num = diff[:, 0] * d2[1] - diff[:, 1] * d2[0]
    u_num = diff[:, 0] * d1[:, 1] - diff[:, 1] * d1[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    ok = (np.abs(denom) > 1e-15) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    return ok


def point_in_polygon(points, polygon: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, boundary-inclusive up to float noise."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


# ---------------------------------------------------------------------------
# Polylines


def polyline_lengths(points: np.ndarray) -> np.ndarray:
    """Per-segment lengths of a polyline, shape (n-1,)."""
    d = np.diff(np.asarray(points, dtype=float), axis=0)
    return np.hypot(d[:, 0], d[:, 1])


def polyline_arclength(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length at each vertex, starting at 0."""
    return np.concatenate([[0.0], np.cumsum(polyline_lengths(points))])


def point_at_arc(points: np.ndarray, cum: np.ndarray, s: float) -> np.ndarray:
    """Point at arc-length coordinate s, clamped to the polyline extent."""
    s = min(max(s, 0.0), cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(points) - 2)
    seg = cum[i + 1] - cum[i]
    t = 0.0 if seg <= 0 else (s - cum[i]) / seg
    return points[i] * (1 - t) + points[i + 1] * t


def tangent_at_arc(points: np.ndarray, cum: np.ndarray, s: float) -> float:
    """Heading (radians) of the polyline at arc-length s."""
    s = min(max(s, 0.0), cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(points) - 2)
    d = points[i + 1] - points[i]
    return math.atan2(d[1], d[0])


def nearest_point_on_polyline(points: np.ndarray, p) -> tuple[float, float, np.ndarray]:
    """Project p onto a polyline.

    Returns (arc_s, distance, foot_point). Ties between segments resolve to the
    earliest arc coordinate.
    """
    pts = np.asarray(points, dtype=float)
    p = np.asarray(p, dtype=float)
    if len(pts) == 1:
        return 0.0, float(np.hypot(*(p - pts[0]))), pts[0].copy()
    a = pts[:-1]
    b = pts[1:]
    ab = b - a
    seg_len2 = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("ij,ij->i", p - a, ab) / seg_len2
    t = np.clip(np.nan_to_num(t), 0.0, 1.0)
    foot = a + t[:, None] * ab
    d = np.hypot(foot[:, 0] - p[0], foot[:, 1] - p[1])
    i = int(np.argmin(d))  # argmin returns the first minimum: earliest segment
    cum = polyline_arclength(pts)
    s = cum[i] + t[i] * math.sqrt(seg_len2[i]) if seg_len2[i] > 0 else cum[i]
    return float(s), float(d[i]), foot[i]


def densify_polyline(points: np.ndarray, max_spacing: float) -> np.ndarray:
    """Insert vertices so that no segment exceeds max_spacing."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return pts.copy()
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = float(np.hypot(*(b - a)))
        n = max(1, int(math.ceil(seg / max_spacing - 1e-12)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return np.array(out)


# ---------------------------------------------------------------------------
# Rays


def ray_segments_min_hit(origin, directions: np.ndarray, seg_p: np.ndarray,
                         seg_q: np.ndarray, max_range: float) -> np.ndarray:
    """Nearest hit distance per ray against a segment soup.

    directions: (R, 2) unit vectors from a common origin. Returns (R,) ranges,
    inf where nothing is hit within max_range.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(directions, dtype=float)
    if len(seg_p) == 0:
        return np.full(len(d), np.inf)
    e = seg_q - seg_p  # (S, 2)
    w = seg_p - o  # (S, 2)
    # solve o + t*d = p + u*e for each (ray, segment)
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]  # (R, S)
    t_num = w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]
    u_num = w[None, :, 0] * d[:, None, 1] - w[None, :, 1] * d[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    valid = (np.abs(denom) > 1e-15) & (u >= 0.0) & (u <= 1.0) & (t > 1e-9) & (t <= max_range)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def ray_segments_argmin(origin, directions: np.ndarray, seg_p: np.ndarray,
                        seg_q: np.ndarray, max_range: float) -> tuple[np.ndarray, np.ndarray]:
    """Like ray_segments_min_hit but also returns the hit segment index (-1 = miss)."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(directions, dtype=float)
    if len(seg_p) == 0:
        return np.full(len(d), np.inf), np.full(len(d), -1)
    e = seg_q - seg_p
    w = seg_p - o
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    t_num = w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]
    u_num = w[None, :, 0] * d[:, None, 1] - w[None, :, 1] * d[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    valid = (np.abs(denom) > 1e-15) & (u >= 0.0) & (u <= 1.0) & (t > 1e-9) & (t <= max_range)
    t = np.where(valid, t, np.inf)
    idx = t.argmin(axis=1)
    tmin = t[np.arange(len(d)), idx]
    idx = np.where(np.isfinite(tmin), idx, -1)
    return tmin, idx
