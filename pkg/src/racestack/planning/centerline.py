"""Centerline extraction: keep Delaunay edges that cross the lane (one left-boundary
and one right-boundary cone), order them by walking the triangle adjacency graph in
travel direction, take edge midpoints as control points and smooth them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ConeColor, Pose2, wrap_angle
from .delaunay import Triangulation

EDGE_LEN_MIN = 2.0   # m, lane-crossing gate (competition geometry)
EDGE_LEN_MAX = 7.0
MAX_TURN_PER_STEP = math.pi / 2


class NoValidEdges(Exception):
    """No lane-crossing edge reachable from the vehicle; keep the previous path."""


@dataclass
class CenterlinePoints:
    points: np.ndarray       # (n, 2) ordered midpoints, travel direction
    width_left: np.ndarray   # (n,) m, midpoint to left (blue) cone
    width_right: np.ndarray  # (n,) m, midpoint to right (yellow) cone

    def __len__(self):
        return len(self.points)


def _side_of(colors: np.ndarray, points: np.ndarray) -> np.ndarray:
    """+1 left (blue side), -1 right (yellow side), 0 unknown.

    Orange cones take the side of the nearest blue/yellow cone.
    """
    side = np.zeros(len(colors), dtype=int)
    blue = colors == ConeColor.BLUE
    yellow = colors == ConeColor.YELLOW
    side[blue] = 1
    side[yellow] = -1
    known = blue | yellow
    if np.any(known):
        for i in np.flatnonzero(side == 0):
            if colors[i] in (ConeColor.ORANGE_SMALL, ConeColor.ORANGE_BIG):
                d = np.hypot(*(points[known] - points[i]).T)
                side[i] = 1 if blue[known][np.argmin(d)] else -1
    return side


def _point_in_triangle(p, a, b, c) -> bool:
    def cross(o, u, v):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])
    d1, d2, d3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    has_neg = (d1 < 0) or (d2 < 0) or (d3 < 0)
    has_pos = (d1 > 0) or (d2 > 0) or (d3 > 0)
    return not (has_neg and has_pos)


def filter_and_sort(tri: Triangulation, colors, vehicle_pose: Pose2) -> list:
    """Ordered lane-crossing edges (vertex index pairs) in travel direction.

    Walks triangle-to-triangle from the triangle containing (or nearest to) the
    vehicle, always crossing the admissible edge whose midpoint best continues
    the current heading; stops when the next step would turn more than 90 deg
    or no unused crossing edge remains.
    """
    pts = tri.points
    colors = np.asarray(colors, dtype=object)
    side = _side_of(colors, pts)

    def is_crossing(i, j) -> bool:
        if side[i] * side[j] != -1:
            return False
        return EDGE_LEN_MIN <= math.hypot(*(pts[i] - pts[j])) <= EDGE_LEN_MAX

    crossing_edges = set()
    for t in tri.triangles:
        for k in range(3):
            i, j = int(t[k]), int(t[(k + 1) % 3])
            if is_crossing(i, j):
                crossing_edges.add(frozenset((i, j)))
    if not crossing_edges:
        raise NoValidEdges("no blue/yellow crossing edges in the triangulation")

    pos = np.array([vehicle_pose.x, vehicle_pose.y])
    start_tri = None
    for t, tverts in enumerate(tri.triangles):
        a, b, c = pts[tverts[0]], pts[tverts[1]], pts[tverts[2]]
        if _point_in_triangle(pos, a, b, c):
            start_tri = t
            break
    if start_tri is None:
        centroids = pts[tri.triangles].mean(axis=1)
        start_tri = int(np.argmin(np.hypot(*(centroids - pos).T)))

    def tri_edges(t):
        tv = tri.triangles[t]
        for k in range(3):
            i, j = int(tv[(k + 1) % 3]), int(tv[(k + 2) % 3])
            yield k, frozenset((i, j))

    ordered: list = []
    used: set = set()
    cur_tri = start_tri
    cur_point = pos
    cur_heading = vehicle_pose.psi
    for _ in range(4 * len(tri.triangles) + 8):
        best = None
        for k, e in tri_edges(cur_tri):
            if e not in crossing_edges or e in used:
                continue
            i, j = tuple(e)
            mid = 0.5 * (pts[i] + pts[j])
            step = mid - cur_point
            dist = float(np.hypot(*step))
            turn = 0.0 if dist < 1e-9 else abs(wrap_angle(math.atan2(step[1], step[0]) - cur_heading))
            if turn < MAX_TURN_PER_STEP and (best is None or (turn, dist) < (best[0], best[1])):
                best = (turn, dist, k, e, mid)
        if best is None:
            break
        _, _, k, e, mid = best
        used.add(e)
        ordered.append(tuple(sorted(e)))
        if np.hypot(*(mid - cur_point)) > 1e-9:
            cur_heading = math.atan2(mid[1] - cur_point[1], mid[0] - cur_point[0])
        cur_point = mid
        nxt = int(tri.neighbors[cur_tri, k])
        if nxt >= 0:
            cur_tri = nxt
        # hull-adjacent gate (e.g. the start line): stay and keep scanning
    if not ordered:
        raise NoValidEdges("no admissible crossing edge ahead of the vehicle")
    return ordered


def edges_to_centerline(tri: Triangulation, colors, edges) -> CenterlinePoints:
    """Midpoints plus left/right half-widths for an ordered crossing-edge list."""
    colors = np.asarray(colors, dtype=object)
    side = _side_of(colors, tri.points)
    mids, wl, wr = [], [], []
    for (i, j) in edges:
        left, right = (i, j) if side[i] == 1 else (j, i)
        m = 0.5 * (tri.points[left] + tri.points[right])
        if mids and np.hypot(*(m - mids[-1])) < 0.5:
            continue  # spacing floor
        mids.append(m)
        wl.append(np.hypot(*(tri.points[left] - m)))
        wr.append(np.hypot(*(tri.points[right] - m)))
    return CenterlinePoints(points=np.array(mids),
                            width_left=np.array(wl), width_right=np.array(wr))


def _resample_polyline(cp: CenterlinePoints, step: float) -> CenterlinePoints:
    seg = np.diff(cp.points, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    s = np.concatenate([[0.0], np.cumsum(ds)])
    total = s[-1]
    if total < step:
        return cp
    n_new = max(int(round(total / step)) + 1, 2)
    s_new = np.linspace(0.0, total, n_new)
    pts = np.stack([np.interp(s_new, s, cp.points[:, 0]),
                    np.interp(s_new, s, cp.points[:, 1])], axis=1)
    wl = np.interp(s_new, s, cp.width_left)
    wr = np.interp(s_new, s, cp.width_right)
    return CenterlinePoints(points=pts, width_left=wl, width_right=wr)


def smooth_control_points(cp: CenterlinePoints, spacing: float = 2.0) -> CenterlinePoints:
    """Resample to near-uniform spacing, then one 1/4-1/2-1/4 pass; endpoints fixed."""
    if len(cp) < 2:
        return cp
    rs = _resample_polyline(cp, spacing)
    pts = rs.points.copy()
    if len(pts) > 2:
        inner = 0.25 * rs.points[:-2] + 0.5 * rs.points[1:-1] + 0.25 * rs.points[2:]
        pts[1:-1] = inner
    return CenterlinePoints(points=pts, width_left=rs.width_left, width_right=rs.width_right)
