"""Landmark map with kd-tree index and gated kNN/Mahalanobis data association."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..core import ConeColor, Pose2, rotation_matrix, transform_point
from ..sensors import ConeObservation


@dataclass
class Landmark:
    id: int
    position: np.ndarray        # (2,) world frame
    color: ConeColor
    covariance: np.ndarray      # (2, 2)
    observation_count: int = 1


@dataclass(frozen=True)
class DaConfig:
    k: int = 10                  # nearest neighbors queried from the kd-tree
    gate: float = 5.99           # squared-Mahalanobis gate (chi^2, 2 dof, 95%)

    def __post_init__(self):
        if self.k < 1 or self.gate <= 0:
            raise ValueError("k must be >= 1 and gate positive")


class LandmarkMap:
    """id -> Landmark with a kd-tree over positions, rebuilt lazily on change."""

    def __init__(self):
        self._landmarks: dict = {}
        self._tree = None
        self._tree_ids = None
        self._dirty = True

    def __len__(self):
        return len(self._landmarks)

    def __contains__(self, lm_id):
        return lm_id in self._landmarks

    def get(self, lm_id) -> Landmark:
        return self._landmarks[lm_id]

    def landmarks(self):
        return list(self._landmarks.values())

    def upsert(self, lm: Landmark):
        self._landmarks[lm.id] = lm
        self._dirty = True

    def positions(self) -> np.ndarray:
        if not self._landmarks:
            return np.zeros((0, 2))
        return np.array([lm.position for lm in self._landmarks.values()])

    def _rebuild(self):
        ids = sorted(self._landmarks)
        pts = np.array([self._landmarks[i].position for i in ids])
        self._tree = cKDTree(pts)
        self._tree_ids = np.array(ids)
        self._dirty = False

    def knn(self, point, k: int):
        """k nearest landmark ids by Euclidean distance (exact kd-tree query)."""
        if not self._landmarks:
            return []
        if self._dirty:
            self._rebuild()
        k_eff = min(k, len(self._tree_ids))
        dist, idx = self._tree.query(np.asarray(point, dtype=float), k=k_eff)
        if k_eff == 1:
            dist, idx = np.array([dist]), np.array([idx])
        return [(int(self._tree_ids[i]), float(d)) for d, i in zip(dist, idx)]

    def copy(self) -> "LandmarkMap":
        out = LandmarkMap()
        for lm in self._landmarks.values():
            out.upsert(Landmark(lm.id, lm.position.copy(), lm.color,
                                lm.covariance.copy(), lm.observation_count))
        return out


def _color_compatible(a: ConeColor, b: ConeColor) -> bool:
    return a == b or a == ConeColor.UNKNOWN or b == ConeColor.UNKNOWN


def associate(observations, lmap: LandmarkMap, pose_est: Pose2, pose_cov: np.ndarray,
              cfg: DaConfig):
    """Match observations to landmarks: kd-tree kNN candidates, Mahalanobis gate,
    greedy one-to-one claim in increasing order of best distance.

    Returns (matches, new) where matches is a list of (observation, landmark_id)
    and new the unmatched observations.
    """
    pose_cov = np.asarray(pose_cov, dtype=float)
    rot = rotation_matrix(pose_est.psi)
    c, s = math.cos(pose_est.psi), math.sin(pose_est.psi)
    drot = np.array([[-s, -c], [c, -s]])  # d/dpsi of the rotation matrix

    scored = []
    for obs in observations:
        z_world = transform_point(pose_est, obs.position)
        jp = np.zeros((2, 3))
        jp[:, :2] = np.eye(2)
        jp[:, 2] = drot @ obs.position
        sigma_common = rot @ obs.covariance @ rot.T + jp @ pose_cov @ jp.T
        cands = []
        for lm_id, _ in lmap.knn(z_world, cfg.k):
            lm = lmap.get(lm_id)
            if not _color_compatible(obs.color, lm.color):
                continue
            sigma = lm.covariance + sigma_common
            try:
                diff = z_world - lm.position
                d2 = float(diff @ np.linalg.solve(sigma, diff))
            except np.linalg.LinAlgError:
                continue
            if d2 <= cfg.gate:
                cands.append((d2, lm_id))
        cands.sort()
        scored.append((obs, cands))

    order = sorted(range(len(scored)),
                   key=lambda i: scored[i][1][0][0] if scored[i][1] else math.inf)
    claimed: set = set()
    matched_ids: dict = {}
    for i in order:
        obs, cands = scored[i]
        hit = next(((d2, lid) for d2, lid in cands if lid not in claimed), None)
        if hit is not None:
            claimed.add(hit[1])
            matched_ids[i] = hit[1]
    matches = [(scored[i][0], matched_ids[i]) for i in range(len(scored)) if i in matched_ids]
    new = [scored[i][0] for i in range(len(scored)) if i not in matched_ids]
    return matches, new
