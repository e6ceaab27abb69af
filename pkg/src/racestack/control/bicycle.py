"""Dynamic single-track (bicycle) lateral error model, optional actuator-lag
augmentation, and exact zero-order-hold discretization.

States: x = [e_y, v_y, e_psi, yaw_rate] (+ [steer_actual, steer_rate] when
augmented); input u = steering angle. Path curvature feedforward enters through
the reference yaw rate, not the matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..vehicle import VehicleParams

V_FLOOR = 3.0  # m/s, lateral model singularity guard


@dataclass
class BicycleModel:
    a: np.ndarray             # continuous system matrix (4x4 or 6x6)
    b: np.ndarray             # input vector
    vx: float                 # linearization speed (after flooring)
    augmented: bool = False

    @property
    def nx(self) -> int:
        return self.a.shape[0]


def linearize_bicycle(vx: float, params: VehicleParams) -> BicycleModel:
    """Continuous-time lateral/yaw error dynamics linearized at speed vx."""
    v = max(float(vx), V_FLOOR)
    cf, cr = params.cornering_stiffness_front, params.cornering_stiffness_rear
    m, iz = params.mass, params.yaw_inertia
    lf, lr = params.lf, params.lr
    a = np.array([
        [0.0, 1.0, v, 0.0],
        [0.0, -(cf + cr) / (m * v), 0.0, (cr * lr - cf * lf) / (m * v) - v],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, (cr * lr - cf * lf) / (iz * v), 0.0, -(cf * lf ** 2 + cr * lr ** 2) / (iz * v)],
    ])
    b = np.array([0.0, cf / m, 0.0, cf * lf / iz])
    return BicycleModel(a=a, b=b, vx=v)


def augment_with_actuator(model: BicycleModel, T: float, D: float) -> BicycleModel:
    """Embed the PT2 steering actuator: plant input becomes the delayed angle."""
    if T <= 0 or D <= 0:
        raise ValueError("PT2 constants must be positive")
    if model.augmented:
        raise ValueError("model already augmented")
    n = model.nx
    a_xi = np.array([[0.0, 1.0], [-1.0 / T ** 2, -2.0 * D / T]])
    b_xi = np.array([0.0, 1.0 / T ** 2])
    c_xi = np.array([1.0, 0.0])
    a = np.zeros((n + 2, n + 2))
    a[:n, :n] = model.a
    a[:n, n:] = np.outer(model.b, c_xi)
    a[n:, n:] = a_xi
    b = np.zeros(n + 2)
    b[n:] = b_xi
    return BicycleModel(a=a, b=b, vx=model.vx, augmented=True)


def discretize(model: BicycleModel, ts: float):
    """Exact ZOH discretization: returns (Ad, bd)."""
    if ts <= 0:
        raise ValueError("sample time must be positive")
    n = model.nx
    m = np.zeros((n + 1, n + 1))
    m[:n, :n] = model.a
    m[:n, n] = model.b
    md = expm(m * ts)
    return md[:n, :n].copy(), md[:n, n].copy()
