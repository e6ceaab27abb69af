"""EKF-SLAM baseline: joint pose/landmark Gaussian, per-observation updates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import ConeColor, Pose2, pose_compose, rotation_matrix, transform_point, wrap_angle


@dataclass
class EkfState:
    mean: np.ndarray                 # [x, y, psi, l1x, l1y, ...]
    cov: np.ndarray                  # full joint covariance
    lm_colors: list = field(default_factory=list)

    @property
    def n_landmarks(self) -> int:
        return (len(self.mean) - 3) // 2

    def pose(self) -> Pose2:
        return Pose2(float(self.mean[0]), float(self.mean[1]), wrap_angle(float(self.mean[2])))

    def landmark_position(self, k: int) -> np.ndarray:
        return self.mean[3 + 2 * k: 5 + 2 * k]

    def landmark_cov(self, k: int) -> np.ndarray:
        i = 3 + 2 * k
        return self.cov[i:i + 2, i:i + 2]


def ekf_init(anchor: Pose2, pose_prior_sigma: float = 1e-4) -> EkfState:
    return EkfState(mean=anchor.as_array(),
                    cov=np.eye(3) * pose_prior_sigma ** 2)


def ekf_predict(state: EkfState, delta: Pose2, q_delta: np.ndarray) -> EkfState:
    """Motion update: pose <- pose ⊕ delta, covariance through the Jacobians.

    q_delta is the covariance of the relative motion in the body frame.
    """
    n = len(state.mean)
    mean = state.mean.copy()
    pose = Pose2(mean[0], mean[1], mean[2])
    new_pose = pose_compose(pose, delta)
    mean[0:3] = new_pose.as_array()

    c, s = math.cos(pose.psi), math.sin(pose.psi)
    g = np.eye(n)
    g[0, 2] = -s * delta.x - c * delta.y
    g[1, 2] = c * delta.x - s * delta.y
    v = np.zeros((n, 3))
    v[0, 0], v[0, 1] = c, -s
    v[1, 0], v[1, 1] = s, c
    v[2, 2] = 1.0
    cov = g @ state.cov @ g.T + v @ np.asarray(q_delta, dtype=float) @ v.T
    cov = 0.5 * (cov + cov.T)
    return EkfState(mean=mean, cov=cov, lm_colors=list(state.lm_colors))


def ekf_update(state: EkfState, obs_position: np.ndarray, obs_cov: np.ndarray,
               lm_index: int) -> EkfState:
    """Single landmark measurement update (body-frame Cartesian measurement)."""
    n = len(state.mean)
    mean = state.mean.copy()
    psi = mean[2]
    c, s = math.cos(psi), math.sin(psi)
    rt = np.array([[c, s], [-s, c]])
    drt = np.array([[-s, c], [-c, -s]])
    li = 3 + 2 * lm_index
    d = mean[li:li + 2] - mean[0:2]
    h_pred = rt @ d

    h = np.zeros((2, n))
    h[:, 0:2] = -rt
    h[:, 2] = drt @ d
    h[:, li:li + 2] = rt

    innov = np.asarray(obs_position, dtype=float) - h_pred
    s_mat = h @ state.cov @ h.T + np.asarray(obs_cov, dtype=float)
    k_gain = state.cov @ h.T @ np.linalg.inv(s_mat)
    mean = mean + k_gain @ innov
    mean[2] = wrap_angle(mean[2])
    cov = state.cov - k_gain @ (h @ state.cov)
    cov = 0.5 * (cov + cov.T)
    return EkfState(mean=mean, cov=cov, lm_colors=list(state.lm_colors))


def ekf_add_landmark(state: EkfState, obs_position: np.ndarray, obs_cov: np.ndarray,
                     color: ConeColor) -> EkfState:
    """Augment the state with a new landmark initialized at pose ⊕ observation."""
    n = len(state.mean)
    pose = state.pose()
    lm = transform_point(pose, obs_position)
    rot = rotation_matrix(pose.psi)
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    drot = np.array([[-s, -c], [c, -s]])
    gp = np.zeros((2, 3))
    gp[:, 0:2] = np.eye(2)
    gp[:, 2] = drot @ np.asarray(obs_position, dtype=float)

    mean = np.concatenate([state.mean, lm])
    cov = np.zeros((n + 2, n + 2))
    cov[:n, :n] = state.cov
    cross = gp @ state.cov[0:3, :]
    cov[n:, :n] = cross
    cov[:n, n:] = cross.T
    cov[n:, n:] = gp @ state.cov[0:3, 0:3] @ gp.T + rot @ np.asarray(obs_cov) @ rot.T
    cov = 0.5 * (cov + cov.T)
    colors = list(state.lm_colors) + [color]
    return EkfState(mean=mean, cov=cov, lm_colors=colors)


def ekf_step(state: EkfState, odom_delta: Pose2, q_delta: np.ndarray,
             matches, new) -> EkfState:
    """Predict with the odometry delta, update per matched observation, then
    append new landmarks. `matches` pairs observations with landmark indices.
    """
    st = ekf_predict(state, odom_delta, q_delta)
    for obs, lm_idx in matches:
        st = ekf_update(st, obs.position, obs.covariance, lm_idx)
    for obs in new:
        st = ekf_add_landmark(st, obs.position, obs.covariance, obs.color)
    return st
