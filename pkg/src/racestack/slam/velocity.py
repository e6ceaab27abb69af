"""Kinematic velocity estimation from wheel odometry and gyro."""

from __future__ import annotations

from ..sensors import OdometryMeasurement
from ..vehicle import VehicleParams


def estimate_velocity(odo: OdometryMeasurement, params: VehicleParams) -> tuple:
    """(vx, vy, yaw_rate) from rear wheel speeds and the gyro.

    The rear-axle mean cancels the yaw-rate speed split between left and right
    wheels; vy assumes negligible rear-axle slip (vy = yaw_rate * lr at the CG).
    """
    yaw_rate = float(odo.yaw_rate_gyro)
    vx = float(0.5 * (odo.wheel_speeds[2] + odo.wheel_speeds[3]) * params.wheel_radius)
    vy = yaw_rate * params.lr
    return vx, vy, yaw_rate
