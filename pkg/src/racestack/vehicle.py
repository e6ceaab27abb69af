"""Ground-truth plant: nonlinear 7-DoF planar vehicle with combined-slip Pacejka tires,
quasi-static load transfer, aerodynamics, powertrain limits and a PT2 steering actuator.

Wheel order everywhere: [front-left, front-right, rear-left, rear-right].
Body frame: +x forward, +y left, yaw CCW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .core import Pose2, wrap_angle

G = 9.81


class NonFiniteState(Exception):
    """Plant integration produced NaN/Inf; the run must abort."""


@dataclass(frozen=True)
class PacejkaParams:
    B: float = 12.0    # stiffness factor
    C: float = 1.8     # shape factor
    D_mu: float = 1.5  # peak friction coefficient
    E: float = 0.95    # curvature factor

    def __post_init__(self):
        if self.B <= 0 or self.C <= 0 or self.D_mu <= 0:
            raise ValueError("Pacejka B, C, D_mu must be positive")


@dataclass(frozen=True)
class VehicleParams:
    """Plant parameters, SI units. Defaults are documented assumptions except where noted.

    mass and power_limit follow the published vehicle figures (214 kg, 80 kW);
    everything else (tires, inertia, aero, actuator) is a plausible Formula-Student-scale
    assumption, adjustable via the config file.
    """

    mass: float = 214.0                 # kg (published)
    yaw_inertia: float = 120.0          # kg m^2
    lf: float = 0.80                    # m, CG to front axle
    lr: float = 0.77                    # m, CG to rear axle
    sf: float = 0.60                    # m, half track width front
    sr: float = 0.58                    # m, half track width rear
    wheel_radius: float = 0.205         # m
    wheel_inertia: float = 0.15         # kg m^2 per wheel (spin)
    cg_height: float = 0.28             # m
    aero_drag_coeff: float = 1.30       # C_d * A, m^2
    aero_lift_coeff: float = 3.50       # C_l * A (downforce positive), m^2
    air_density: float = 1.20           # kg/m^3
    power_limit: float = 80e3           # W (published)
    max_total_drive_force: float = 6500.0  # N
    pacejka_front: PacejkaParams = field(default_factory=PacejkaParams)
    pacejka_rear: PacejkaParams = field(default_factory=PacejkaParams)
    cornering_stiffness_front: float = 33000.0  # N/rad, axle linearization
    cornering_stiffness_rear: float = 35000.0   # N/rad
    steer_T: float = 0.08               # s, actuator PT2 time constant
    steer_D: float = 0.7                # actuator PT2 damping ratio
    max_steer: float = 0.45             # rad

    def __post_init__(self):
        for name in ("mass", "yaw_inertia", "lf", "lr", "sf", "sr", "wheel_radius",
                     "wheel_inertia", "cg_height", "steer_D", "steer_T"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def wheelbase(self) -> float:
        return self.lf + self.lr

    def wheel_offsets(self) -> np.ndarray:
        """Contact-patch positions in body frame, (4, 2)."""
        return np.array([
            [self.lf, self.sf],
            [self.lf, -self.sf],
            [-self.lr, self.sr],
            [-self.lr, -self.sr],
        ])

    @staticmethod
    def from_config(pairs: dict) -> "VehicleParams":
        """Build params from a flat key/value mapping (see config file docs)."""
        kw = {}
        pj = {"front": {}, "rear": {}}
        for key, val in pairs.items():
            if key.startswith("pacejka_"):
                _, axle, coef = key.split("_", 2)
                pj[axle][{"b": "B", "c": "C", "d_mu": "D_mu", "e": "E"}[coef]] = float(val)
            else:
                kw[key] = float(val)
        if pj["front"]:
            kw["pacejka_front"] = PacejkaParams(**pj["front"])
        if pj["rear"]:
            kw["pacejka_rear"] = PacejkaParams(**pj["rear"])
        return VehicleParams(**kw)


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2
    vx: float = 0.0            # m/s body frame
    vy: float = 0.0
    yaw_rate: float = 0.0      # rad/s
    wheel_omega: np.ndarray = None  # (4,) rad/s
    steer_actual: float = 0.0  # rad, actuator output
    steer_rate: float = 0.0    # rad/s
    ax: float = 0.0            # cached body accel of the previous step (for load transfer)
    ay: float = 0.0

    def __post_init__(self):
        w = np.zeros(4) if self.wheel_omega is None else np.asarray(self.wheel_omega, dtype=float)
        object.__setattr__(self, "wheel_omega", w)

    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class ControlCommand:
    steer_cmd: float                 # rad
    wheel_forces: np.ndarray = None  # (4,) N  [FL, FR, RL, RR]

    def __post_init__(self):
        f = np.zeros(4) if self.wheel_forces is None else np.asarray(self.wheel_forces, dtype=float)
        object.__setattr__(self, "wheel_forces", f)


def rolling_state(track_start: Pose2, vx: float = 0.0, params: VehicleParams | None = None) -> VehicleState:
    p = params or VehicleParams()
    return VehicleState(pose=track_start, vx=vx, wheel_omega=np.full(4, vx / p.wheel_radius))


# ---------- tire model ----------

def pacejka_combined(slip_ratio: float, slip_angle: float, fz: float,
                     params: PacejkaParams) -> tuple:
    """Combined-slip magic formula via the resultant slip, force split along the slip vector.

    Returns (Fx, Fy) in the wheel frame; Fx has the sign of slip_ratio, Fy the sign
    of slip_angle. |F| <= D_mu * Fz always.
    """
    if fz <= 0.0:
        return 0.0, 0.0
    sx = slip_ratio
    sy = math.tan(slip_angle)
    s = math.hypot(sx, sy)
    if s < 1e-12:
        return 0.0, 0.0
    bs = params.B * s
    f = fz * params.D_mu * math.sin(params.C * math.atan(bs - params.E * (bs - math.atan(bs))))
    return f * sx / s, f * sy / s


def compute_wheel_loads(state: VehicleState, ax: float, ay: float,
                        params: VehicleParams) -> np.ndarray:
    """Vertical loads per wheel: static split + longitudinal/lateral transfer + downforce.

    ax, ay are body-frame CG accelerations; ax > 0 loads the rear, ay > 0 (turning
    left) loads the right side. Loads clamp at zero; the sum equals weight plus
    downforce whenever no clamp is active.
    """
    L = params.wheelbase
    w_tot = params.mass * G + 0.5 * params.air_density * params.aero_lift_coeff * state.vx ** 2
    long_shift = params.mass * ax * params.cg_height / L
    front_axle = w_tot * params.lr / L - long_shift
    rear_axle = w_tot * params.lf / L + long_shift
    # roll stiffness share approximated by the static axle share
    share_f = params.lr / L
    dfy_f = params.mass * ay * params.cg_height * share_f / (2.0 * params.sf)
    dfy_r = params.mass * ay * params.cg_height * (1.0 - share_f) / (2.0 * params.sr)
    loads = np.array([
        0.5 * front_axle - dfy_f,
        0.5 * front_axle + dfy_f,
        0.5 * rear_axle - dfy_r,
        0.5 * rear_axle + dfy_r,
    ])
    return np.maximum(loads, 0.0)


# ---------- actuator ----------

_pt2_cache: dict = {}


def _pt2_discrete(T: float, D: float, dt: float):
    """Exact ZOH discretization of the PT2 companion form; returns (Ad, bd)."""
    key = (T, D, dt)
    hit = _pt2_cache.get(key)
    if hit is not None:
        return hit
    a = np.array([[0.0, 1.0], [-1.0 / T ** 2, -2.0 * D / T]])
    b = np.array([[0.0], [1.0 / T ** 2]])
    m = np.zeros((3, 3))
    m[:2, :2] = a
    m[:2, 2:] = b
    md = expm(m * dt)
    out = (md[:2, :2].copy(), md[:2, 2].copy())
    if len(_pt2_cache) < 64:
        _pt2_cache[key] = out
    return out


# ---------- plant integration ----------

_V_SLIP_FLOOR = 0.5  # m/s, slip denominators


def _tire_forces(vx, vy, r, omega, steer, loads, params):
    """Per-wheel tire forces in body frame plus wheel-frame Fx (for spin dynamics)."""
    offs = params.wheel_offsets()
    steer_per_wheel = np.array([steer, steer, 0.0, 0.0])
    vwx = vx - r * offs[:, 1]
    vwy = vy + r * offs[:, 0]
    cs, sn = np.cos(steer_per_wheel), np.sin(steer_per_wheel)
    v_long = cs * vwx + sn * vwy
    v_lat = -sn * vwx + cs * vwy
    denom = np.maximum(np.abs(v_long), _V_SLIP_FLOOR)
    kappa = (omega * params.wheel_radius - v_long) / denom
    alpha = -np.arctan2(v_lat, denom)
    fxw = np.empty(4)
    fyw = np.empty(4)
    for i in range(4):
        pj = params.pacejka_front if i < 2 else params.pacejka_rear
        fxw[i], fyw[i] = pacejka_combined(kappa[i], alpha[i], loads[i], pj)
    fxb = cs * fxw - sn * fyw
    fyb = sn * fxw + cs * fyw
    return fxb, fyb, fxw, kappa


def _deriv(y, steer, forces_cmd, loads, params):
    """Time derivative of [x, y, psi, vx, vy, r, w1..w4]; also returns body accelerations."""
    psi, vx, vy, r = y[2], y[3], y[4], y[5]
    omega = y[6:10]
    fxb, fyb, fxw, _ = _tire_forces(vx, vy, r, omega, steer, loads, params)
    drag = 0.5 * params.air_density * params.aero_drag_coeff * vx * abs(vx)
    fx_tot = fxb.sum() - drag
    fy_tot = fyb.sum()
    offs = params.wheel_offsets()
    mz = float(np.sum(offs[:, 0] * fyb - offs[:, 1] * fxb))
    ax = fx_tot / params.mass
    ay = fy_tot / params.mass
    c, s = math.cos(psi), math.sin(psi)
    dy = np.empty(10)
    dy[0] = vx * c - vy * s
    dy[1] = vx * s + vy * c
    dy[2] = r
    dy[3] = ax + r * vy
    dy[4] = ay - r * vx
    dy[5] = mz / params.yaw_inertia
    dy[6:10] = (forces_cmd - fxw) * params.wheel_radius / params.wheel_inertia
    return dy, ax, ay


def step_dynamics(state: VehicleState, cmd: ControlCommand, dt: float,
                  params: VehicleParams) -> VehicleState:
    """Advance the plant by one fixed step (dt <= 2 ms).

    The steering actuator is advanced with the exact PT2 discretization; the body and
    wheel-spin states integrate with RK4. Wheel loads are held at the previous step's
    accelerations (quasi-static transfer), and total positive drive force is clamped
    to the powertrain envelope.
    """
    if not 0.0 < dt <= 2e-3:
        raise ValueError(f"plant step must satisfy 0 < dt <= 2 ms, got {dt}")

    steer_cmd = min(max(cmd.steer_cmd, -params.max_steer), params.max_steer)
    ad_h, bd_h = _pt2_discrete(params.steer_T, params.steer_D, 0.5 * dt)
    ad, bd = _pt2_discrete(params.steer_T, params.steer_D, dt)
    xi = np.array([state.steer_actual, state.steer_rate])
    xi_half = ad_h @ xi + bd_h * steer_cmd
    xi_full = ad @ xi + bd * steer_cmd
    steer_stage = (xi[0], xi_half[0], xi_full[0])

    forces = np.asarray(cmd.wheel_forces, dtype=float).copy()
    pos_total = forces[forces > 0.0].sum()
    cap = min(params.max_total_drive_force, params.power_limit / max(state.vx, 1.0))
    if pos_total > cap > 0.0:
        forces[forces > 0.0] *= cap / pos_total

    loads = compute_wheel_loads(state, state.ax, state.ay, params)

    y0 = np.empty(10)
    y0[0], y0[1], y0[2] = state.pose.x, state.pose.y, state.pose.psi
    y0[3], y0[4], y0[5] = state.vx, state.vy, state.yaw_rate
    y0[6:10] = state.wheel_omega

    k1, ax_new, ay_new = _deriv(y0, steer_stage[0], forces, loads, params)
    k2, _, _ = _deriv(y0 + 0.5 * dt * k1, steer_stage[1], forces, loads, params)
    k3, _, _ = _deriv(y0 + 0.5 * dt * k2, steer_stage[1], forces, loads, params)
    k4, _, _ = _deriv(y0 + dt * k3, steer_stage[2], forces, loads, params)
    y = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(xi_full)):
        raise NonFiniteState("plant state diverged")

    steer_new = min(max(xi_full[0], -params.max_steer), params.max_steer)
    return VehicleState(
        pose=Pose2(y[0], y[1], wrap_angle(y[2])),
        vx=y[3], vy=y[4], yaw_rate=y[5],
        wheel_omega=y[6:10].copy(),
        steer_actual=steer_new, steer_rate=xi_full[1],
        ax=ax_new, ay=ay_new,
    )


def wheel_slip_ratios(state: VehicleState, params: VehicleParams) -> np.ndarray:
    """Current longitudinal slip ratios (for traction control and telemetry)."""
    offs = params.wheel_offsets()
    steer_per_wheel = np.array([state.steer_actual, state.steer_actual, 0.0, 0.0])
    vwx = state.vx - state.yaw_rate * offs[:, 1]
    vwy = state.vy + state.yaw_rate * offs[:, 0]
    v_long = np.cos(steer_per_wheel) * vwx + np.sin(steer_per_wheel) * vwy
    denom = np.maximum(np.abs(v_long), _V_SLIP_FLOOR)
    return (state.wheel_omega * params.wheel_radius - v_long) / denom
