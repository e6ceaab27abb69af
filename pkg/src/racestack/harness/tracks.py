"""Fixture track generation: cone pairs laid along generator curves (blue left,
yellow right of travel direction), competition-style geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Cone, ConeColor, Pose2, TrackDefinition
from ..planning.spline import fit_spline
from ..raceline import TrajectoryProfile


class InvalidParams(Exception):
    pass


FIXTURE_KINDS = ("straight", "circle", "hairpin", "fs_spain_like")


@dataclass(frozen=True)
class TrackMeta:
    """Generator-side truth about a fixture (not part of the track file)."""
    kind: str
    closed: bool
    length: float
    centerline: np.ndarray   # (n, 2) generator curve samples
    width: float


def _straight_curve(length: float) -> np.ndarray:
    n = max(int(math.ceil(length / 2.0)) + 1, 2)
    return np.stack([np.linspace(0, length, n), np.zeros(n)], axis=1)


def _circle_curve(radius: float) -> np.ndarray:
    n = max(int(math.ceil(2 * math.pi * radius / 2.0)), 12)
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    # CCW travel starting at the bottom of the circle, heading +x
    return np.stack([radius * np.sin(th), radius * (1 - np.cos(th))], axis=1)


def _hairpin_curve(leg: float, radius: float) -> np.ndarray:
    pts = [np.array([x, 0.0]) for x in np.arange(0.0, leg, 2.0)]
    cx, cy = leg, radius
    for ang in np.arange(-90.0, 91.0, 15.0):
        a = math.radians(ang)
        pts.append(np.array([cx + radius * math.cos(a), cy + radius * math.sin(a)]))
    for x in np.arange(leg, -0.1, -2.0):
        pts.append(np.array([x, 2 * radius]))
    return np.array(pts)


def _fs_spain_like_curve() -> np.ndarray:
    """Closed autocross-style circuit: long start straight, two 180-degree end
    caps, and a chicane on the return leg. Roughly 220 m around.
    """
    way = []
    way += [(21, 0), (40, 0), (60, 0), (78, 0), (86, 0)]          # start straight
    cx, cy, r = 86.0, 10.0, 10.0                                  # right-end cap
    for ang in (-75, -50, -25, 0, 25, 50, 75):
        a = math.radians(ang)
        way.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    way += [(86, 20), (72, 20)]                                   # top straight
    way += [(62, 24.5), (52, 20), (42, 24.5), (32, 20)]           # chicane
    way += [(18, 20)]
    cx, cy, r = 18.0, 10.0, 10.0                                  # left-end cap
    for ang in (105, 130, 155, 180, 205, 230, 255):
        a = math.radians(ang)
        way.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    return np.array(way, dtype=float)


def _resample_closed(points: np.ndarray, step: float) -> np.ndarray:
    path = fit_spline(points, closed=True)
    n = max(int(round(path.total_length / step)), 8)
    s = np.linspace(0, path.total_length, n, endpoint=False)
    pos, _, _ = path.query(s)
    return pos, path


def generate_fixture_track(kind: str, params: dict | None = None, seed: int = 0):
    """Build a TrackDefinition plus its TrackMeta for one of the fixture kinds."""
    params = dict(params or {})
    width = float(params.get("width", 3.5 if kind != "fs_spain_like" else 4.0))
    spacing = float(params.get("spacing", 4.0))
    if width < 3.0:
        raise InvalidParams("lane width must be >= 3 m (competition geometry)")
    if spacing > 5.0:
        raise InvalidParams("cone spacing must be <= 5 m")

    if kind == "straight":
        length = float(params.get("length", 75.0))
        spacing = float(params.get("spacing", 5.0))
        n = int(math.ceil(length / spacing)) + 1
        xs = np.linspace(0.0, length, n)
        curve = np.stack([xs, np.zeros(n)], axis=1)
        cones = []
        for x in xs:
            cones.append(Cone(np.array([x, width / 2]), ConeColor.BLUE))
            cones.append(Cone(np.array([x, -width / 2]), ConeColor.YELLOW))
        track = TrackDefinition(cones=tuple(cones), start_pose=Pose2(0.0, 0.0, 0.0),
                                track_length_hint=length)
        meta = TrackMeta(kind, closed=False, length=length,
                         centerline=_straight_curve(length), width=width)
        return track, meta

    if kind == "circle":
        radius = float(params.get("radius", 15.0))
        curve = _circle_curve(radius)
        path = fit_spline(curve, closed=True)
        length = path.total_length
        n = int(math.ceil(length / spacing))
        s = np.linspace(0, length, n, endpoint=False)
        pos, heading, _ = path.query(s)
        cones = []
        for p, h in zip(pos, heading):
            nrm = np.array([-math.sin(h), math.cos(h)])
            cones.append(Cone(p + nrm * width / 2, ConeColor.BLUE))
            cones.append(Cone(p - nrm * width / 2, ConeColor.YELLOW))
        track = TrackDefinition(cones=tuple(cones), start_pose=Pose2(0.0, 0.0, 0.0),
                                track_length_hint=length)
        meta = TrackMeta(kind, closed=True, length=length, centerline=pos, width=width)
        return track, meta

    if kind == "hairpin":
        leg = float(params.get("leg", 40.0))
        radius = float(params.get("radius", 7.0))
        curve = _hairpin_curve(leg, radius)
        path = fit_spline(curve, closed=False)
        length = path.total_length
        n = int(math.ceil(length / spacing)) + 1
        s = np.linspace(0, length, n)
        pos, heading, _ = path.query(s)
        cones = []
        for p, h in zip(pos, heading):
            nrm = np.array([-math.sin(h), math.cos(h)])
            cones.append(Cone(p + nrm * width / 2, ConeColor.BLUE))
            cones.append(Cone(p - nrm * width / 2, ConeColor.YELLOW))
        track = TrackDefinition(cones=tuple(cones), start_pose=Pose2(0.0, 0.0, 0.0),
                                track_length_hint=length)
        meta = TrackMeta(kind, closed=False, length=length, centerline=pos, width=width)
        return track, meta

    if kind == "fs_spain_like":
        way = _fs_spain_like_curve()
        path = fit_spline(way, closed=True)
        length = path.total_length
        n = int(math.ceil(length / spacing))
        s = np.linspace(0, length, n, endpoint=False)
        pos, heading, _ = path.query(s)
        start_s = 0.0
        p0, h0, _ = path.query(start_s)
        cones = []
        for p, h in zip(pos, heading):
            nrm = np.array([-math.sin(h), math.cos(h)])
            cones.append(Cone(p + nrm * width / 2, ConeColor.BLUE))
            cones.append(Cone(p - nrm * width / 2, ConeColor.YELLOW))
        # start gate marked with big orange cones just outside the lane markers
        nrm0 = np.array([-math.sin(h0), math.cos(h0)])
        cones.append(Cone(np.asarray(p0) + nrm0 * (width / 2 + 0.4), ConeColor.ORANGE_BIG))
        cones.append(Cone(np.asarray(p0) - nrm0 * (width / 2 + 0.4), ConeColor.ORANGE_BIG))
        track = TrackDefinition(cones=tuple(cones),
                                start_pose=Pose2(float(p0[0]), float(p0[1]), float(h0)),
                                track_length_hint=length)
        meta = TrackMeta(kind, closed=True, length=length, centerline=pos, width=width)
        return track, meta

    raise InvalidParams(f"unknown fixture kind {kind!r} (choose from {FIXTURE_KINDS})")


def infer_closed(track: TrackDefinition) -> bool:
    """Loaded tracks: a loop has cones behind the start pose as well as ahead."""
    import numpy as np
    sp = track.start_pose
    fwd = np.array([math.cos(sp.psi), math.sin(sp.psi)])
    rel = track.cone_positions() - np.array([sp.x, sp.y])
    along = rel @ fwd
    dist = np.hypot(rel[:, 0], rel[:, 1])
    behind = np.any((along < -3.0) & (dist < 12.0))
    return bool(behind)


def double_lane_change_path(offset: float = 3.0, v: float = 13.0):
    """ISO-style double lane change: reference profile plus gate cones.

    Returns (TrajectoryProfile at constant speed, TrackDefinition of lane cones).
    """
    xs = [0, 10, 20, 28, 36, 45, 52, 60, 68, 76, 85, 95, 105, 115]
    ys = []
    for x in xs:
        if x < 22:
            y = 0.0
        elif x < 45:
            y = offset * 0.5 * (1 - math.cos(math.pi * (x - 22) / 23))
        elif x < 58:
            y = offset
        elif x < 82:
            y = offset * 0.5 * (1 + math.cos(math.pi * (x - 58) / 24))
        else:
            y = 0.0
        ys.append(y)
    pts = np.array([xs, ys], dtype=float).T
    path = fit_spline(pts)
    m = int(path.total_length / 0.5)
    s = np.linspace(0, path.total_length, m)
    profile = TrajectoryProfile(path=path, s=s, v=np.full(m, v),
                                duration=float(path.total_length / v))
    lane = 3.5
    n = int(path.total_length / 4.0)
    sg = np.linspace(0, path.total_length, n)
    pos, heading, _ = path.query(sg)
    cones = []
    for p, h in zip(pos, heading):
        nrm = np.array([-math.sin(h), math.cos(h)])
        cones.append(Cone(p + nrm * lane / 2, ConeColor.BLUE))
        cones.append(Cone(p - nrm * lane / 2, ConeColor.YELLOW))
    track = TrackDefinition(cones=tuple(cones), start_pose=Pose2(0, 0, 0),
                            track_length_hint=path.total_length)
    return profile, track
