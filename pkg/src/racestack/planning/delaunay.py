"""Incremental Delaunay triangulation with robust predicates.

Bowyer-Watson insertion over a single ghost vertex (hull edges carry ghost
triangles), so no finite super-triangle can corrupt circumcircles. Orientation
and in-circle signs use a floating-point filter with an exact rational fallback,
which makes the output deterministic even for the near-cocircular quadruples
that regular cone grids produce. Insertion order is lexicographic, which is also
the tie-break for exactly cocircular point sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class DegenerateInput(Exception):
    """All points collinear (or fewer than 3): no triangulation exists."""


_GHOST = -1
_FILTER_EPS = 1e-12


def _orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the signed area of (a, b, c): +1 CCW, -1 CW, 0 collinear (exact)."""
    t1 = (bx - ax) * (cy - ay)
    t2 = (by - ay) * (cx - ax)
    det = t1 - t2
    mag = abs(t1) + abs(t2)
    if abs(det) > _FILTER_EPS * mag:
        return 1 if det > 0 else -1
    ax, ay, bx, by, cx, cy = map(Fraction, (ax, ay, bx, by, cx, cy))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def _incircle(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Sign test: +1 if d strictly inside the circumcircle of CCW (a, b, c)."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (adx * (bdy * cd2 - cdy * bd2)
           - ady * (bdx * cd2 - cdx * bd2)
           + ad2 * (bdx * cdy - cdx * bdy))
    mag = (abs(adx) * (abs(bdy * cd2) + abs(cdy * bd2))
           + abs(ady) * (abs(bdx * cd2) + abs(cdx * bd2))
           + ad2 * (abs(bdx * cdy) + abs(cdx * bdy)))
    if abs(det) > _FILTER_EPS * mag:
        return 1 if det > 0 else -1
    ax, ay, bx, by, cx, cy, dx, dy = (Fraction(v) for v in (ax, ay, bx, by, cx, cy, dx, dy))
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (adx * (bdy * cd2 - cdy * bd2)
           - ady * (bdx * cd2 - cdx * bd2)
           + ad2 * (bdx * cdy - cdx * bdy))
    return (det > 0) - (det < 0)


@dataclass
class Triangulation:
    points: np.ndarray      # (n, 2)
    vertex_ids: np.ndarray  # (n,) caller-supplied ids (e.g. landmark ids)
    triangles: np.ndarray   # (m, 3) CCW vertex indices into points
    neighbors: np.ndarray   # (m, 3); neighbors[t][k] faces the edge opposite vertex k, -1 at hull

    def edges(self) -> set:
        out = set()
        for tri in self.triangles:
            a, b, c = int(tri[0]), int(tri[1]), int(tri[2])
            out.update({frozenset((a, b)), frozenset((b, c)), frozenset((c, a))})
        return out

    def triangle_set(self) -> set:
        return {frozenset(map(int, t)) for t in self.triangles}


def merge_close_points(points: np.ndarray, ids=None, tol: float = 1e-3):
    """Drop points closer than tol to an already-kept point (first in wins)."""
    pts = np.asarray(points, dtype=float)
    ids = np.arange(len(pts)) if ids is None else np.asarray(ids)
    keep_pts: list = []
    keep_ids: list = []
    for p, i in zip(pts, ids):
        if keep_pts and np.min(np.hypot(*(np.array(keep_pts) - p).T)) < tol:
            continue
        keep_pts.append(p)
        keep_ids.append(i)
    return np.array(keep_pts), np.array(keep_ids)


def _cavity_test(tri, pts, px, py) -> bool:
    """Is (px, py) inside the (possibly ghost) triangle's circumdisk?"""
    ia, ib, ic = tri
    if ia != _GHOST and ib != _GHOST and ic != _GHOST:
        a, b, c = pts[ia], pts[ib], pts[ic]
        return _incircle(a[0], a[1], b[0], b[1], c[0], c[1], px, py) > 0
    # ghost triangle: rotate so the ghost sits last -> finite directed edge (u, v)
    if ia == _GHOST:
        iu, iv = ib, ic
    elif ib == _GHOST:
        iu, iv = ic, ia
    else:
        iu, iv = ia, ib
    u, v = pts[iu], pts[iv]
    o = _orient2d(u[0], u[1], v[0], v[1], px, py)
    if o > 0:
        return True
    if o < 0:
        return False
    # collinear with a hull edge: inside only if strictly between the endpoints
    return (px - u[0]) * (px - v[0]) + (py - u[1]) * (py - v[1]) < 0


def delaunay_triangulate(points, vertex_ids=None) -> Triangulation:
    """Delaunay triangulation of >= 3 points with duplicates pre-merged (< 1 mm).

    Raises DegenerateInput when every point is collinear.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DegenerateInput("need at least 3 points")
    ids = np.arange(len(pts)) if vertex_ids is None else np.asarray(vertex_ids)

    order = np.lexsort((pts[:, 1], pts[:, 0]))
    # bootstrap: first two points plus the first non-collinear successor
    i0, i1 = int(order[0]), int(order[1])
    k = None
    for j in order[2:]:
        if _orient2d(*pts[i0], *pts[i1], *pts[int(j)]) != 0:
            k = int(j)
            break
    if k is None:
        raise DegenerateInput("all points collinear")

    a, b, c = i0, i1, k
    if _orient2d(*pts[a], *pts[b], *pts[c]) < 0:
        b, c = c, b
    tris: list = [(a, b, c), (b, a, _GHOST), (c, b, _GHOST), (a, c, _GHOST)]

    pending = [int(j) for j in order[2:] if int(j) != k]
    for ip in pending:
        px, py = pts[ip]
        bad = [t for t, tri in enumerate(tris) if _cavity_test(tri, pts, px, py)]
        bad_set = set(bad)
        edge_count: dict = {}
        for t in bad:
            ia, ib, ic = tris[t]
            for (u, v) in ((ia, ib), (ib, ic), (ic, ia)):
                edge_count[(u, v)] = edge_count.get((u, v), 0) + 1
        boundary = [(u, v) for (u, v) in edge_count if (v, u) not in edge_count]
        tris = [tri for t, tri in enumerate(tris) if t not in bad_set]
        for (u, v) in boundary:
            tris.append((u, v, ip))

    real = [t for t in tris if _GHOST not in t]
    triangles = np.array(sorted(tuple(t) for t in real), dtype=int)
    if len(triangles) == 0:
        raise DegenerateInput("no finite triangles produced")

    edge_to_tris: dict = {}
    for t, tri in enumerate(triangles):
        ia, ib, ic = int(tri[0]), int(tri[1]), int(tri[2])
        for e in (frozenset((ia, ib)), frozenset((ib, ic)), frozenset((ic, ia))):
            edge_to_tris.setdefault(e, []).append(t)
    neighbors = np.full((len(triangles), 3), -1, dtype=int)
    for t, tri in enumerate(triangles):
        for kk in range(3):
            e = frozenset((int(tri[(kk + 1) % 3]), int(tri[(kk + 2) % 3])))
            for other in edge_to_tris[e]:
                if other != t:
                    neighbors[t, kk] = other
    return Triangulation(points=pts, vertex_ids=ids, triangles=triangles, neighbors=neighbors)


def circumcircle_violations(tri: Triangulation) -> int:
    """Count (triangle, point) pairs violating the empty-circumcircle property (exact)."""
    bad = 0
    for t in tri.triangles:
        a, b, c = tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]
        if _orient2d(a[0], a[1], b[0], b[1], c[0], c[1]) < 0:
            a, b = b, a
        for i, p in enumerate(tri.points):
            if i in (int(t[0]), int(t[1]), int(t[2])):
                continue
            if _incircle(a[0], a[1], b[0], b[1], c[0], c[1], p[0], p[1]) > 0:
                bad += 1
    return bad
