"""Synthetic perception and odometry: noisy cone observations within the sensor
envelope (range, field of view, false positives/negatives) and noisy IMU/wheel
measurements sampled from the ground-truth plant state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ConeColor, Pose2, RandomStream, TrackDefinition, body_frame_point
from .vehicle import VehicleState

_COV_FLOOR = 1e-8  # keeps observation covariances positive definite at zero noise


@dataclass(frozen=True)
class PerceptionConfig:
    max_range: float = 35.0                    # m
    fov: float = math.radians(240.0)           # rad, full angle centered on body +x
    range_noise_sigma: float = 0.03            # m (assumed, no published figure)
    bearing_noise_sigma: float = math.radians(0.3)  # rad (assumed)
    false_positive_rate: float = 0.01
    false_negative_rate: float = 0.02
    rate: float = 10.0                         # Hz

    def __post_init__(self):
        if not (0.0 <= self.false_positive_rate <= 1.0 and 0.0 <= self.false_negative_rate <= 1.0):
            raise ValueError("false positive/negative rates must be in [0, 1]")
        if self.max_range <= 0 or not (0.0 < self.fov <= 2 * math.pi):
            raise ValueError("max_range must be > 0 and fov in (0, 2*pi]")


@dataclass(frozen=True)
class ConeObservation:
    position: np.ndarray   # (2,) m, vehicle body frame
    color: ConeColor
    covariance: np.ndarray  # (2, 2) m^2

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))


@dataclass(frozen=True)
class OdometryMeasurement:
    wheel_speeds: np.ndarray  # (4,) rad/s
    yaw_rate_gyro: float      # rad/s
    accel_body: np.ndarray    # (2,) m/s^2
    dt: float                 # s

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "wheel_speeds", np.asarray(self.wheel_speeds, dtype=float))
        object.__setattr__(self, "accel_body", np.asarray(self.accel_body, dtype=float))


@dataclass(frozen=True)
class OdometryNoise:
    wheel_speed_sigma: float = 0.05   # rad/s per wheel
    gyro_sigma: float = 0.002         # rad/s white noise
    gyro_bias: float = 0.001          # rad/s constant bias (assumed small-grade IMU)
    accel_sigma: float = 0.05         # m/s^2


def _range_bearing_cov(rng_m: float, bearing: float, sr: float, sb: float) -> np.ndarray:
    """Cartesian covariance of a range/bearing measurement at (rng_m, bearing)."""
    sr = max(sr, 1e-4)
    sb = max(sb, 1e-5)
    c, s = math.cos(bearing), math.sin(bearing)
    rot = np.array([[c, -s], [s, c]])
    d = np.diag([sr ** 2, (rng_m * sb) ** 2 + _COV_FLOOR])
    return rot @ d @ rot.T + _COV_FLOOR * np.eye(2)


def observe_cones(truth: TrackDefinition, true_pose: Pose2, cfg: PerceptionConfig,
                  rng: RandomStream) -> list:
    """One synthetic perception frame.

    Every true cone inside the range/FOV gate is emitted with probability
    (1 - false_negative_rate), perturbed by Gaussian range/bearing noise; false
    positives are appended uniformly inside the FOV wedge with color `unknown`.
    Cones are processed in world (x, y) order so the draw sequence does not depend
    on the track-file row order.
    """
    order = sorted(range(len(truth.cones)),
                   key=lambda i: (truth.cones[i].position[0], truth.cones[i].position[1]))
    half_fov = 0.5 * cfg.fov
    out = []
    n_true = 0
    for i in order:
        cone = truth.cones[i]
        rel = body_frame_point(true_pose, cone.position)
        rng_m = math.hypot(rel[0], rel[1])
        bearing = math.atan2(rel[1], rel[0])
        if rng_m > cfg.max_range or abs(bearing) > half_fov:
            continue
        if cfg.false_negative_rate > 0.0 and rng.uniform() < cfg.false_negative_rate:
            continue
        r_meas = rng_m + rng.normal(0.0, cfg.range_noise_sigma) if cfg.range_noise_sigma > 0 else rng_m
        b_meas = bearing + rng.normal(0.0, cfg.bearing_noise_sigma) if cfg.bearing_noise_sigma > 0 else bearing
        pos = np.array([r_meas * math.cos(b_meas), r_meas * math.sin(b_meas)])
        cov = _range_bearing_cov(max(r_meas, 0.1), b_meas,
                                 cfg.range_noise_sigma, cfg.bearing_noise_sigma)
        out.append(ConeObservation(pos, cone.color, cov))
        n_true += 1
    if cfg.false_positive_rate > 0.0:
        for _ in range(n_true):
            if rng.uniform() >= cfg.false_positive_rate:
                continue
            b = rng.uniform(-half_fov, half_fov)
            r = rng.uniform(1.0, cfg.max_range)
            pos = np.array([r * math.cos(b), r * math.sin(b)])
            cov = _range_bearing_cov(r, b, cfg.range_noise_sigma, cfg.bearing_noise_sigma)
            out.append(ConeObservation(pos, ConeColor.UNKNOWN, cov))
    return out


def sample_odometry(true_state: VehicleState, noise: OdometryNoise, dt: float,
                    rng: RandomStream) -> OdometryMeasurement:
    """Noisy wheel speeds, gyro (with constant bias) and body accelerometer."""
    w = true_state.wheel_omega + (rng.normal(0.0, noise.wheel_speed_sigma, 4)
                                  if noise.wheel_speed_sigma > 0 else 0.0)
    gyro = true_state.yaw_rate + noise.gyro_bias
    if noise.gyro_sigma > 0:
        gyro += rng.normal(0.0, noise.gyro_sigma)
    acc = np.array([true_state.ax, true_state.ay])
    if noise.accel_sigma > 0:
        acc = acc + rng.normal(0.0, noise.accel_sigma, 2)
    return OdometryMeasurement(wheel_speeds=w, yaw_rate_gyro=float(gyro),
                               accel_body=acc, dt=dt)


# ---------- observation / odometry logs (offline SLAM replay) ----------

OBS_LOG_HEADER = "frame,t,x_body,y_body,color,sxx,sxy,syy"
ODO_LOG_HEADER = "frame,t,dt,w_fl,w_fr,w_rl,w_rr,gyro,ax,ay"


class ObservationLogWriter:
    """Streams perception frames (and the matching odometry) to CSV for replay."""

    def __init__(self, obs_path, odo_path=None):
        self._obs_lines = [OBS_LOG_HEADER]
        self._odo_lines = [ODO_LOG_HEADER]
        self._obs_path = Path(obs_path)
        self._odo_path = Path(odo_path) if odo_path else None

    def add_frame(self, frame: int, t: float, observations,
                  odometry: OdometryMeasurement | None = None):
        for ob in observations:
            c = ob.covariance
            self._obs_lines.append(
                f"{frame},{t:.6f},{ob.position[0]:.9f},{ob.position[1]:.9f},"
                f"{ob.color.value},{c[0, 0]:.12e},{c[0, 1]:.12e},{c[1, 1]:.12e}")
        if odometry is not None and self._odo_path is not None:
            w = odometry.wheel_speeds
            self._odo_lines.append(
                f"{frame},{t:.6f},{odometry.dt:.6f},{w[0]:.9f},{w[1]:.9f},{w[2]:.9f},{w[3]:.9f},"
                f"{odometry.yaw_rate_gyro:.9f},{odometry.accel_body[0]:.9f},{odometry.accel_body[1]:.9f}")

    def flush(self):
        self._obs_path.write_text("\n".join(self._obs_lines) + "\n", encoding="utf-8")
        if self._odo_path is not None:
            self._odo_path.write_text("\n".join(self._odo_lines) + "\n", encoding="utf-8")


def read_observation_log(path):
    """Returns {frame: (t, [ConeObservation...])} in frame order."""
    frames: dict = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        frame = int(parts[0])
        t = float(parts[1])
        pos = np.array([float(parts[2]), float(parts[3])])
        color = ConeColor(parts[4])
        sxx, sxy, syy = (float(parts[5]), float(parts[6]), float(parts[7]))
        ob = ConeObservation(pos, color, np.array([[sxx, sxy], [sxy, syy]]))
        frames.setdefault(frame, (t, []))[1].append(ob)
    return dict(sorted(frames.items()))


def read_odometry_log(path):
    """Returns {frame: OdometryMeasurement}."""
    out = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        p = line.split(",")
        out[int(p[0])] = OdometryMeasurement(
            wheel_speeds=np.array([float(p[3]), float(p[4]), float(p[5]), float(p[6])]),
            yaw_rate_gyro=float(p[7]),
            accel_body=np.array([float(p[8]), float(p[9])]),
            dt=float(p[2]))
    return out
