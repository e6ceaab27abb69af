"""Low-level control: 2-DoF PI velocity tracking, yaw-moment PID, weighted
least-squares control allocation to four wheel forces, and a slip governor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..vehicle import VehicleParams


@dataclass
class PiVelocityConfig:
    kp: float = 900.0            # N per m/s
    ki: float = 350.0            # N per m
    feedforward: bool = True


class PiVelocityController:
    """Feedforward mass*ax_ref plus PI on speed error, clamping anti-windup."""

    def __init__(self, cfg: PiVelocityConfig, params: VehicleParams):
        self.cfg = cfg
        self.params = params
        self.integral = 0.0

    def reset(self):
        self.integral = 0.0

    def update(self, v_ref: float, v: float, ax_ref: float, dt: float) -> float:
        err = v_ref - v
        ff = self.params.mass * ax_ref if self.cfg.feedforward else 0.0
        limit = min(self.params.max_total_drive_force,
                    self.params.power_limit / max(v, 1.0))
        unsat = ff + self.cfg.kp * err + self.cfg.ki * (self.integral + err * dt)
        out = float(np.clip(unsat, -limit, limit))
        if out == unsat or (unsat > out and err < 0) or (unsat < out and err > 0):
            self.integral += err * dt  # integrate only when it helps desaturate
        return out


@dataclass
class YawPidConfig:
    kp: float = 900.0            # N*m per rad/s
    ki: float = 150.0
    kd: float = 18.0
    d_filter_hz: float = 20.0    # first-order filter on the measurement derivative
    mz_max: float = 1500.0       # N*m


class YawMomentPid:
    """PID on yaw-rate error, derivative on the filtered measurement."""

    def __init__(self, cfg: YawPidConfig):
        self.cfg = cfg
        self.integral = 0.0
        self._meas_filt = None
        self._meas_prev = None

    def reset(self):
        self.integral = 0.0
        self._meas_filt = None
        self._meas_prev = None

    def update(self, psidot_ref: float, psidot_meas: float, dt: float) -> float:
        err = psidot_ref - psidot_meas
        alpha = dt / (dt + 1.0 / (2.0 * math.pi * self.cfg.d_filter_hz))
        if self._meas_filt is None:
            self._meas_filt = psidot_meas
            d_meas = 0.0
        else:
            prev = self._meas_filt
            self._meas_filt = prev + alpha * (psidot_meas - prev)
            d_meas = (self._meas_filt - prev) / dt
        unsat = self.cfg.kp * err + self.cfg.ki * (self.integral + err * dt) \
            - self.cfg.kd * d_meas
        out = float(np.clip(unsat, -self.cfg.mz_max, self.cfg.mz_max))
        if out == unsat or (unsat > out and err < 0) or (unsat < out and err > 0):
            self.integral += err * dt
        return out


@dataclass(frozen=True)
class AllocatorConfig:
    q_mz: float = 1.0            # yaw-moment tracking weight
    q_fx: float = 1.0            # total-force tracking weight
    r_base: float = 0.5          # per-wheel penalty scale (divided by the load)
    mu: float = 1.5              # friction for the per-wheel clamp
    headroom: float = 0.95       # fraction of mu*Fz available to drive forces
    slip_target: float = 0.1     # traction-control slip threshold

    def __post_init__(self):
        if self.r_base <= 0 or self.q_mz < 0 or self.q_fx < 0:
            raise ValueError("r_base must be positive and weights non-negative")


def geometry_matrix(params: VehicleParams) -> np.ndarray:
    """Maps wheel forces to [yaw moment, total longitudinal force]."""
    sf, sr = params.sf, params.sr
    return np.array([[-sf, sf, -sr, sr],
                     [1.0, 1.0, 1.0, 1.0]])


def allocate(u_hat, wheel_loads, cfg: AllocatorConfig, params: VehicleParams) -> np.ndarray:
    """Closed-form weighted least squares: min |G u - u_hat|^2_Q + |u|^2_R with
    R inversely proportional to the wheel loads, then a per-wheel friction clamp.
    """
    g = geometry_matrix(params)
    q = np.diag([cfg.q_mz, cfg.q_fx])
    fz = np.asarray(wheel_loads, dtype=float)
    r = np.diag(cfg.r_base / np.maximum(fz, 1.0))
    m = g.T @ q @ g + r
    u = np.linalg.solve(m, g.T @ q @ np.asarray(u_hat, dtype=float))
    clamp = cfg.mu * fz * cfg.headroom
    return np.clip(u, -clamp, clamp)


def traction_limit(forces, slip_ratios, cfg: AllocatorConfig,
                   wheel_force_limits=None) -> np.ndarray:
    """First-order slip governor: a wheel over the slip target has its force
    scaled by target/slip; the freed amount moves to the same-axle partner up
    to that wheel's own clamp.
    """
    f = np.asarray(forces, dtype=float).copy()
    slips = np.abs(np.asarray(slip_ratios, dtype=float))
    limits = (np.full(4, np.inf) if wheel_force_limits is None
              else np.asarray(wheel_force_limits, dtype=float))
    partner = [1, 0, 3, 2]
    scaled = f.copy()
    freed = np.zeros(4)
    for i in range(4):
        if slips[i] > cfg.slip_target and abs(f[i]) > 0:
            new = f[i] * cfg.slip_target / slips[i]
            freed[i] = f[i] - new
            scaled[i] = new
    for i in range(4):
        j = partner[i]
        if freed[i] != 0.0 and slips[j] <= cfg.slip_target:
            room = limits[j] - abs(scaled[j])
            if room > 0:
                transfer = np.sign(freed[i]) * min(abs(freed[i]), room)
                scaled[j] += transfer
    return scaled


def pure_pursuit_steer(target_body_xy, wheelbase: float, max_steer: float) -> float:
    """Kinematic fallback steering toward a lookahead point in the body frame."""
    x, y = float(target_body_xy[0]), float(target_body_xy[1])
    ld2 = x * x + y * y
    if ld2 < 1e-6:
        return 0.0
    curvature = 2.0 * y / ld2
    return float(np.clip(math.atan(wheelbase * curvature), -max_steer, max_steer))
