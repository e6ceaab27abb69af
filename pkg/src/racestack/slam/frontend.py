"""SLAM front-end: integrates odometry between perception frames, associates
observations, maintains the landmark map used for gating, and drives either the
pose-graph back-end (synchronously or in a background thread with snapshot
isolation) or the EKF baseline.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from ..core import ConeColor, Pose2, pose_compose, rotation_matrix, transform_point
from ..sensors import OdometryMeasurement
from ..vehicle import VehicleParams
from .association import DaConfig, Landmark, LandmarkMap, associate
from .ekf import ekf_init, ekf_step
from .graph import PoseGraph, add_keyframe, optimize_graph
from .velocity import estimate_velocity


@dataclass(frozen=True)
class OdomIntegrationNoise:
    """1-sigma densities used to build odometry edge information matrices."""
    sigma_vx: float = 0.05      # m/s
    sigma_vy: float = 0.08      # m/s (kinematic vy is a rough estimate)
    sigma_omega: float = 0.004  # rad/s


class SlamFrontend:
    def __init__(self, variant: str, anchor: Pose2, params: VehicleParams,
                 da_cfg: DaConfig | None = None,
                 odom_noise: OdomIntegrationNoise | None = None,
                 optimize_every: int = 10, background: bool = False):
        if variant not in ("graph", "ekf"):
            raise ValueError("variant must be 'graph' or 'ekf'")
        self.variant = variant
        self.params = params
        self.da_cfg = da_cfg or DaConfig()
        self.odom_noise = odom_noise or OdomIntegrationNoise()
        self.optimize_every = optimize_every
        self.background = background
        self._lock = threading.Lock()
        self._worker = None

        self.graph = PoseGraph(anchor) if variant == "graph" else None
        self.ekf = ekf_init(anchor) if variant == "ekf" else None
        self.lm_map = LandmarkMap()
        self._base_pose = anchor           # last keyframe pose estimate
        self._acc_delta = Pose2()          # body-frame motion since last keyframe
        self._acc_cov = np.zeros((3, 3))
        self._kf_count = 0
        self.last_optimize_result = None
        self.velocity_estimate = (0.0, 0.0, 0.0)

    # ---------- odometry ----------

    def push_odometry(self, odo: OdometryMeasurement) -> None:
        vx, vy, omega = estimate_velocity(odo, self.params)
        self.velocity_estimate = (vx, vy, omega)
        dt = odo.dt
        step = Pose2(vx * dt, vy * dt, omega * dt)
        with self._lock:
            psi = self._acc_delta.psi
            self._acc_delta = pose_compose(self._acc_delta, step)
            rot = rotation_matrix(psi)
            q = np.diag([(self.odom_noise.sigma_vx * dt) ** 2,
                         (self.odom_noise.sigma_vy * dt) ** 2,
                         (self.odom_noise.sigma_omega * dt) ** 2])
            j = np.eye(3)
            j[:2, :2] = rot
            self._acc_cov = self._acc_cov + j @ q @ j.T

    def pose_estimate(self) -> Pose2:
        with self._lock:
            return pose_compose(self._base_pose, self._acc_delta)

    def _pose_cov_for_gating(self) -> np.ndarray:
        if self.variant == "ekf":
            return self.ekf.cov[0:3, 0:3].copy()
        base = np.diag([0.03 ** 2, 0.03 ** 2, math.radians(0.5) ** 2])
        return base + self._acc_cov

    # ---------- keyframes ----------

    def process_frame(self, observations, stamp: float = 0.0) -> None:
        """One perception frame: predict, associate, insert keyframe, maybe optimize."""
        with self._lock:
            delta = self._acc_delta
            delta_cov = self._acc_cov
            pred_pose = pose_compose(self._base_pose, delta)
        pose_cov = self._pose_cov_for_gating()
        matches, new = associate(observations, self.lm_map, pred_pose, pose_cov,
                                 self.da_cfg)

        floor = np.diag([1e-6, 1e-6, 1e-8])
        info = np.linalg.inv(delta_cov + floor)

        if self.variant == "graph":
            with self._lock:
                _, new_ids = add_keyframe(self.graph, delta, info, matches, new, stamp)
                self._base_pose = self.graph.last_pose()
                self._reset_accumulators()
            self._update_map_graph(matches, new, new_ids)
            self._kf_count += 1
            if self.optimize_every > 0 and self._kf_count % self.optimize_every == 0:
                self.optimize(background=self.background)
        else:
            # ekf landmark indices == map ids by construction
            with self._lock:
                self.ekf = ekf_step(self.ekf, delta, delta_cov + floor, matches, new)
                self._base_pose = self.ekf.pose()
                self._reset_accumulators()
            self._rebuild_map_from_ekf()
            self._kf_count += 1

    def _reset_accumulators(self):
        self._acc_delta = Pose2()
        self._acc_cov = np.zeros((3, 3))

    def _update_map_graph(self, matches, new, new_ids):
        with self._lock:
            pose = self._base_pose
            rot = rotation_matrix(pose.psi)
            for obs, lm_id in matches:
                lm = self.lm_map.get(lm_id)
                z_world = transform_point(pose, obs.position)
                r_world = rot @ obs.covariance @ rot.T
                lam_prior = np.linalg.inv(lm.covariance)
                lam_obs = np.linalg.inv(r_world + np.eye(2) * 1e-9)
                lam_new = lam_prior + lam_obs
                cov_new = np.linalg.inv(lam_new)
                pos_new = cov_new @ (lam_prior @ lm.position + lam_obs @ z_world)
                color = lm.color if lm.color != ConeColor.UNKNOWN else obs.color
                self.lm_map.upsert(Landmark(lm_id, pos_new, color, cov_new,
                                            lm.observation_count + 1))
            for obs, lm_id in zip(new, new_ids):
                pos = self.graph.lm_pos[lm_id]
                r_world = rot @ obs.covariance @ rot.T + np.eye(2) * 1e-6
                self.lm_map.upsert(Landmark(lm_id, pos.copy(), obs.color, r_world, 1))

    def _rebuild_map_from_ekf(self):
        with self._lock:
            st = self.ekf
            counts = {lm.id: lm.observation_count for lm in self.lm_map.landmarks()}
            new_map = LandmarkMap()
            for k in range(st.n_landmarks):
                new_map.upsert(Landmark(k, st.landmark_position(k).copy(),
                                        st.lm_colors[k], st.landmark_cov(k).copy(),
                                        counts.get(k, 0) + 1))
            self.lm_map = new_map

    # ---------- optimization (graph back-end) ----------

    def optimize(self, background: bool = False):
        if self.variant != "graph":
            return None
        if background:
            if self._worker is not None and self._worker.is_alive():
                return None  # previous optimization still running
            self._worker = threading.Thread(target=self._optimize_impl, daemon=True)
            self._worker.start()
            return None
        return self._optimize_impl()

    def join(self):
        if self._worker is not None:
            self._worker.join()

    def _optimize_impl(self):
        with self._lock:
            work = self.graph.copy()
        result = optimize_graph(work)
        with self._lock:
            # merge: vertices that existed in the snapshot get the optimized
            # estimates; newer vertices keep their front-end initialization
            for i in range(min(len(work.poses), len(self.graph.poses))):
                self.graph.poses[i] = work.poses[i]
            for i in range(min(len(work.lm_pos), len(self.graph.lm_pos))):
                self.graph.lm_pos[i] = work.lm_pos[i]
            if len(work.poses) == len(self.graph.poses):
                self._base_pose = self.graph.last_pose()
            for lm_id in range(len(work.lm_pos)):
                if lm_id in self.lm_map:
                    lm = self.lm_map.get(lm_id)
                    self.lm_map.upsert(Landmark(lm_id, self.graph.lm_pos[lm_id].copy(),
                                                lm.color, lm.covariance,
                                                lm.observation_count))
        self.last_optimize_result = result
        return result

    # ---------- snapshots ----------

    def map_snapshot(self, min_observations: int = 1):
        """Consistent (LandmarkMap, Pose2) copy; linearizable under background mode."""
        with self._lock:
            pose = pose_compose(self._base_pose, self._acc_delta)
            out = LandmarkMap()
            for lm in self.lm_map.landmarks():
                if lm.observation_count >= min_observations:
                    out.upsert(Landmark(lm.id, lm.position.copy(), lm.color,
                                        lm.covariance.copy(), lm.observation_count))
        return out, pose
