import math

import numpy as np
import pytest

from racestack.core import ConeColor, Pose2
from racestack.planning.centerline import (
    CenterlinePoints,
    NoValidEdges,
    edges_to_centerline,
    filter_and_sort,
    smooth_control_points,
)
from racestack.planning.delaunay import delaunay_triangulate


def _ladder(n_pairs=5, spacing=5.0, width=3.5):
    """Two parallel straight cone rows; blue left (+y), yellow right (-y)."""
    pts, colors = [], []
    for i in range(n_pairs):
        pts.append([i * spacing, width / 2])
        colors.append(ConeColor.BLUE)
        pts.append([i * spacing, -width / 2])
        colors.append(ConeColor.YELLOW)
    return np.array(pts, dtype=float), colors


def test_ladder_nine_crossing_edges():
    pts, colors = _ladder(5)
    tri = delaunay_triangulate(pts)
    edges = filter_and_sort(tri, colors, Pose2(0.0, 0.0, 0.0))
    # 5 rungs + 4 diagonals, in travel order
    assert len(edges) == 9
    cp = edges_to_centerline(tri, colors, edges)
    xs = cp.points[:, 0]
    assert np.all(np.diff(xs) > 0)  # monotone along travel direction
    assert np.all(np.abs(cp.points[:, 1]) < 1e-9)  # symmetric ladder -> y = 0 midline


def test_same_color_edges_excluded():
    pts, colors = _ladder(4)
    tri = delaunay_triangulate(pts)
    edges = filter_and_sort(tri, colors, Pose2(0.0, 0.0, 0.0))
    for (i, j) in edges:
        assert {colors[i], colors[j]} == {ConeColor.BLUE, ConeColor.YELLOW}


def test_walk_does_not_jump_hairpin():
    # hairpin: out lane and return lane ~5.5 m apart; Euclidean nearest midpoint
    # across the hairpin must not short-circuit the walk order.
    lane = 3.0
    gap = 2.5
    pts, colors = [], []
    gates = []
    n_straight = 6
    for i in range(n_straight):  # outbound along +x, blue left
        x = i * 4.0
        pts += [[x, lane / 2], [x, -lane / 2]]
        colors += [ConeColor.BLUE, ConeColor.YELLOW]
        gates.append(np.array([x, 0.0]))
    # 180 degree left turn of radius r around (x_end, c)
    cx = (n_straight - 1) * 4.0 + 2.0
    cy = lane / 2 + gap / 2
    r_mid = cy
    for k in range(1, 6):
        ang = -math.pi / 2 + k * math.pi / 6
        mid = np.array([cx + r_mid * math.cos(ang), cy + r_mid * math.sin(ang)])
        u = np.array([math.cos(ang), math.sin(ang)])
        pts += [list(mid - u * lane / 2), list(mid + u * lane / 2)]
        colors += [ConeColor.BLUE, ConeColor.YELLOW]
        gates.append(mid)
    for i in range(n_straight):  # return along -x, now y = lane + gap
        x = (n_straight - 1) * 4.0 - i * 4.0
        y = 2 * cy
        pts += [[x, y - lane / 2], [x, y + lane / 2]]
        colors += [ConeColor.BLUE, ConeColor.YELLOW]
        gates.append(np.array([x, y]))
    tri = delaunay_triangulate(np.array(pts, dtype=float))
    edges = filter_and_sort(tri, colors, Pose2(0.0, 0.0, 0.0))
    cp = edges_to_centerline(tri, colors, edges)
    # the walked midline must progress along the hairpin: consecutive jumps stay
    # small (no leap across the gap), and the path reaches the return straight
    steps = np.hypot(*np.diff(cp.points, axis=0).T)
    assert np.max(steps) < 5.0
    assert cp.points[-1][1] > 4.0  # reached return lane
    # progress along the hand-labeled gate sequence is monotone
    gate_idx = [int(np.argmin([np.linalg.norm(p - g) for g in gates])) for p in cp.points]
    assert all(b >= a for a, b in zip(gate_idx, gate_idx[1:]))


def test_orange_cones_assigned_to_nearest_side():
    pts, colors = _ladder(5)
    pts = np.vstack([pts, [[2.5, 1.8], [2.5, -1.8]]])
    colors += [ConeColor.ORANGE_BIG, ConeColor.ORANGE_BIG]
    tri = delaunay_triangulate(pts)
    edges = filter_and_sort(tri, colors, Pose2(0.0, 0.0, 0.0))
    cp = edges_to_centerline(tri, colors, edges)
    assert np.all(np.abs(cp.points[:, 1]) < 0.3)  # midline still near y=0


def test_no_valid_edges_raises():
    pts = np.array([[0, 1], [5, 1], [2, 4], [7, 4]], dtype=float)
    colors = [ConeColor.BLUE] * 4
    tri = delaunay_triangulate(pts)
    with pytest.raises(NoValidEdges):
        filter_and_sort(tri, colors, Pose2(0, 0, 0))


# ---------- smoothing ----------

def test_smooth_preserves_lines():
    pts = np.stack([np.linspace(0, 20, 11), np.linspace(0, 10, 11)], axis=1)
    cp = CenterlinePoints(points=pts, width_left=np.full(11, 1.75),
                          width_right=np.full(11, 1.75))
    sm = smooth_control_points(cp)
    # collinear input stays on the line
    d = np.abs(sm.points[:, 1] - 0.5 * sm.points[:, 0])
    assert np.max(d) < 1e-9


def test_smooth_reduces_zigzag():
    pts = np.stack([np.arange(0, 22.0, 2.0), np.zeros(11)], axis=1)
    pts[5, 1] = 0.3  # single outlier
    cp = CenterlinePoints(points=pts, width_left=np.full(11, 1.75),
                          width_right=np.full(11, 1.75))
    sm = smooth_control_points(cp)
    peak = np.max(np.abs(sm.points[:, 1]))
    assert peak <= 0.6 * 0.3  # at least 40% reduction


def test_smooth_endpoints_fixed():
    rng = np.random.default_rng(1)
    pts = np.cumsum(rng.uniform(0.5, 2.0, (9, 2)), axis=0)
    cp = CenterlinePoints(points=pts, width_left=np.ones(9), width_right=np.ones(9))
    sm = smooth_control_points(cp)
    assert np.allclose(sm.points[0], pts[0], atol=1e-12)
    assert np.allclose(sm.points[-1], pts[-1], atol=1e-12)
