"""Shared domain types: 2D rigid-body geometry, cones, track I/O and seeded RNG streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


# ---------- errors ----------

class TrackFileError(Exception):
    """Base class for track file problems."""


class MalformedRow(TrackFileError):
    def __init__(self, line_no: int, line: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed track row at line {line_no}: {line!r}")


class MissingStartPose(TrackFileError):
    def __init__(self):
        super().__init__("track file has no 'start' row")


class TooFewCones(TrackFileError):
    def __init__(self, msg="track needs at least 4 cones including one blue and one yellow"):
        super().__init__(msg)


# ---------- geometry ----------

def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(theta + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class Pose2:
    """Planar rigid-body pose (x, y in meters, psi in radians CCW from +x)."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi])

    @staticmethod
    def from_array(v) -> "Pose2":
        return Pose2(float(v[0]), float(v[1]), wrap_angle(float(v[2])))


def pose_compose(a: Pose2, b: Pose2) -> Pose2:
    """Apply rigid transform a to b (SE(2) composition), heading normalized."""
    c, s = math.cos(a.psi), math.sin(a.psi)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        wrap_angle(a.psi + b.psi),
    )


def pose_inverse(p: Pose2) -> Pose2:
    c, s = math.cos(p.psi), math.sin(p.psi)
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), wrap_angle(-p.psi))


def pose_between(a: Pose2, b: Pose2) -> Pose2:
    """Relative pose of b expressed in frame a (a^-1 * b)."""
    return pose_compose(pose_inverse(a), b)


def transform_point(pose: Pose2, xy) -> np.ndarray:
    """Body-frame point -> world frame."""
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    x, y = float(xy[0]), float(xy[1])
    return np.array([pose.x + c * x - s * y, pose.y + s * x + c * y])


def body_frame_point(pose: Pose2, xy) -> np.ndarray:
    """World-frame point -> body frame of `pose`."""
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    dx, dy = float(xy[0]) - pose.x, float(xy[1]) - pose.y
    return np.array([c * dx + s * dy, -s * dx + c * dy])


def rotation_matrix(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s], [s, c]])


# ---------- cones and tracks ----------

class ConeColor(enum.Enum):
    BLUE = "blue"
    YELLOW = "yellow"
    ORANGE_SMALL = "orange_small"
    ORANGE_BIG = "orange_big"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Cone:
    position: np.ndarray  # (2,) meters, world frame
    color: ConeColor

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        if p.shape != (2,) or not np.all(np.isfinite(p)):
            raise ValueError(f"cone position must be 2 finite floats, got {self.position!r}")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class TrackDefinition:
    cones: tuple  # tuple[Cone, ...]
    start_pose: Pose2
    track_length_hint: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cones", tuple(self.cones))
        colors = {c.color for c in self.cones}
        if len(self.cones) < 4 or ConeColor.BLUE not in colors or ConeColor.YELLOW not in colors:
            raise TooFewCones()

    def cone_positions(self) -> np.ndarray:
        return np.array([c.position for c in self.cones])


def load_track(path) -> TrackDefinition:
    """Load a track CSV (`type,x,y` rows plus one `start,x,y,psi` row)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    cones = []
    start = None
    valid_colors = {c.value for c in ConeColor if c is not ConeColor.UNKNOWN}
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if i == 1 and line.lower().replace(" ", "") == "type,x,y":
            continue
        parts = [p.strip() for p in line.split(",")]
        kind = parts[0].lower()
        try:
            if kind == "start":
                if len(parts) != 4:
                    raise ValueError
                start = Pose2(float(parts[1]), float(parts[2]), wrap_angle(float(parts[3])))
            elif kind in valid_colors:
                if len(parts) != 3:
                    raise ValueError
                cones.append(Cone(np.array([float(parts[1]), float(parts[2])]), ConeColor(kind)))
            else:
                raise ValueError
        except ValueError:
            raise MalformedRow(i, raw) from None
    if start is None:
        raise MissingStartPose()
    if len(cones) < 4:
        raise TooFewCones()
    return TrackDefinition(cones=tuple(cones), start_pose=start)


def save_track(track: TrackDefinition, path) -> None:
    rows = ["type,x,y"]
    for c in track.cones:
        rows.append(f"{c.color.value},{float(c.position[0])!r},{float(c.position[1])!r}")
    sp = track.start_pose
    rows.append(f"start,{float(sp.x)!r},{float(sp.y)!r},{float(sp.psi)!r}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


# ---------- deterministic random streams ----------

@dataclass
class RandomStream:
    """Counter-based random stream: same (seed, stream) gives the same sequence on any platform.

    Module-local substreams are derived with `substream(stream_id)` so modules do not
    perturb each other's draws.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream & 0xFFFFFFFFFFFFFFFF],
                       dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)
