"""Pose-graph SLAM back-end: 2D pose and landmark vertices, odometry and
observation edges, Gauss-Newton with Levenberg damping fallback over sparse
normal equations. The first pose is anchored (gauge fix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..core import ConeColor, Pose2, pose_compose, transform_point, wrap_angle


class SingularSystem(Exception):
    """Under-constrained graph (reported by optimize_graph, not fatal)."""


class PoseGraph:
    def __init__(self, anchor: Pose2):
        self.anchor = anchor
        self.poses: list = []          # np.ndarray (3,) estimates
        self.pose_stamps: list = []
        self.lm_pos: list = []         # np.ndarray (2,) estimates; landmark id = index
        self.lm_color: list = []
        self.odom_i: list = []
        self.odom_j: list = []
        self.odom_meas: list = []      # np.ndarray (3,)
        self.odom_info: list = []      # np.ndarray (3, 3)
        self.obs_pose: list = []
        self.obs_lm: list = []
        self.obs_meas: list = []       # np.ndarray (2,) body frame
        self.obs_info: list = []       # np.ndarray (2, 2)

    @property
    def n_poses(self):
        return len(self.poses)

    @property
    def n_landmarks(self):
        return len(self.lm_pos)

    def last_pose(self) -> Pose2:
        return Pose2.from_array(self.poses[-1])

    def landmark_edge_count(self, lm_id: int) -> int:
        return sum(1 for l in self.obs_lm if l == lm_id)

    def copy(self) -> "PoseGraph":
        g = PoseGraph(self.anchor)
        g.poses = [p.copy() for p in self.poses]
        g.pose_stamps = list(self.pose_stamps)
        g.lm_pos = [p.copy() for p in self.lm_pos]
        g.lm_color = list(self.lm_color)
        g.odom_i = list(self.odom_i)
        g.odom_j = list(self.odom_j)
        g.odom_meas = [m.copy() for m in self.odom_meas]
        g.odom_info = [m.copy() for m in self.odom_info]
        g.obs_pose = list(self.obs_pose)
        g.obs_lm = list(self.obs_lm)
        g.obs_meas = [m.copy() for m in self.obs_meas]
        g.obs_info = [m.copy() for m in self.obs_info]
        return g


def add_keyframe(graph: PoseGraph, odom_delta: Pose2, odom_info: np.ndarray,
                 matches, new, stamp: float = 0.0):
    """Append one pose vertex (chained by an odometry edge after the first),
    create landmark vertices for `new`, add one observation edge per observation.

    Returns (pose_index, new_landmark_ids).
    """
    if graph.n_poses == 0:
        # first vertex: anchor composed with any motion accumulated before it
        # (no odometry edge; the gauge prior pins this vertex)
        pose = pose_compose(graph.anchor, odom_delta)
        graph.poses.append(pose.as_array())
        graph.pose_stamps.append(stamp)
    else:
        prev = Pose2.from_array(graph.poses[-1])
        pose = pose_compose(prev, odom_delta)
        graph.poses.append(pose.as_array())
        graph.pose_stamps.append(stamp)
        graph.odom_i.append(graph.n_poses - 2)
        graph.odom_j.append(graph.n_poses - 1)
        graph.odom_meas.append(odom_delta.as_array())
        graph.odom_info.append(np.asarray(odom_info, dtype=float))
    p_idx = graph.n_poses - 1

    for obs, lm_id in matches:
        graph.obs_pose.append(p_idx)
        graph.obs_lm.append(int(lm_id))
        graph.obs_meas.append(np.asarray(obs.position, dtype=float))
        graph.obs_info.append(np.linalg.inv(obs.covariance))

    new_ids = []
    for obs in new:
        lm_id = graph.n_landmarks
        graph.lm_pos.append(transform_point(pose, obs.position))
        graph.lm_color.append(obs.color)
        graph.obs_pose.append(p_idx)
        graph.obs_lm.append(lm_id)
        graph.obs_meas.append(np.asarray(obs.position, dtype=float))
        graph.obs_info.append(np.linalg.inv(obs.covariance))
        new_ids.append(lm_id)
    return p_idx, new_ids


@dataclass
class OptimizeResult:
    chi2: float
    iterations: int
    converged: bool
    singular: bool = False
    chi2_history: tuple = ()


def _edge_arrays(graph: PoseGraph):
    poses = np.array(graph.poses) if graph.poses else np.zeros((0, 3))
    lms = np.array(graph.lm_pos) if graph.lm_pos else np.zeros((0, 2))
    return poses, lms


def _residuals(poses, lms, graph: PoseGraph, huber_delta: float):
    """Errors, IRLS-weighted infos and chi2 for the current estimates."""
    chi2 = 0.0
    odo = None
    if graph.odom_i:
        oi = np.asarray(graph.odom_i)
        oj = np.asarray(graph.odom_j)
        z = np.array(graph.odom_meas)
        info = np.array(graph.odom_info)
        pi, pj = poses[oi], poses[oj]
        ci, si = np.cos(pi[:, 2]), np.sin(pi[:, 2])
        cz, sz = np.cos(z[:, 2]), np.sin(z[:, 2])
        dt = pj[:, :2] - pi[:, :2]
        # Ri^T dt
        rel = np.stack([ci * dt[:, 0] + si * dt[:, 1],
                        -si * dt[:, 0] + ci * dt[:, 1]], axis=1)
        dtrans = rel - z[:, :2]
        # Rz^T (rel - z_t)
        et = np.stack([cz * dtrans[:, 0] + sz * dtrans[:, 1],
                       -sz * dtrans[:, 0] + cz * dtrans[:, 1]], axis=1)
        epsi = np.array([wrap_angle(a) for a in (pj[:, 2] - pi[:, 2] - z[:, 2])])
        e = np.concatenate([et, epsi[:, None]], axis=1)
        chi2 += float(np.einsum("ei,eij,ej->", e, info, e))
        odo = (oi, oj, z, info, e, ci, si, cz, sz, dt, rel)

    obs = None
    if graph.obs_pose:
        op = np.asarray(graph.obs_pose)
        ol = np.asarray(graph.obs_lm)
        z = np.array(graph.obs_meas)
        info = np.array(graph.obs_info)
        pi = poses[op]
        ci, si = np.cos(pi[:, 2]), np.sin(pi[:, 2])
        d = lms[ol] - pi[:, :2]
        body = np.stack([ci * d[:, 0] + si * d[:, 1],
                         -si * d[:, 0] + ci * d[:, 1]], axis=1)
        e = body - z
        r2 = np.einsum("ei,eij,ej->e", e, info, e)
        r = np.sqrt(np.maximum(r2, 1e-30))
        w = np.where(r <= huber_delta, 1.0, huber_delta / r)
        # robustified chi2 (Huber rho)
        chi2 += float(np.sum(np.where(r <= huber_delta, r2, huber_delta * (2 * r - huber_delta))))
        info_w = info * w[:, None, None]
        obs = (op, ol, z, info_w, e, ci, si, d)
    return chi2, odo, obs


def _chi2_only(poses, lms, graph, huber_delta):
    return _residuals(poses, lms, graph, huber_delta)[0]


def optimize_graph(graph: PoseGraph, max_iterations: int = 25, tol: float = 1e-6,
                   huber_delta: float = 1.0) -> OptimizeResult:
    """Gauss-Newton with Levenberg fallback on the robustified least squares.

    Mutates the graph's pose/landmark estimates. chi2 never increases over
    accepted iterations; raises nothing on rank problems but flags `singular`.
    """
    if graph.n_poses == 0:
        return OptimizeResult(chi2=0.0, iterations=0, converged=True)
    poses, lms = _edge_arrays(graph)
    n_pose_cols = 3 * graph.n_poses
    n_cols = n_pose_cols + 2 * graph.n_landmarks

    chi2, odo, obs = _residuals(poses, lms, graph, huber_delta)
    history = [chi2]
    lam = 0.0
    singular = False
    it = 0
    for it in range(1, max_iterations + 1):
        rows_i: list = []
        cols_i: list = []
        vals: list = []
        rhs = np.zeros(n_cols)

        if odo is not None:
            oi, oj, z, info, e, ci, si, cz, sz, dt, rel = odo
            ne = len(oi)
            rz = np.zeros((ne, 2, 2))
            rz[:, 0, 0] = cz; rz[:, 0, 1] = sz
            rz[:, 1, 0] = -sz; rz[:, 1, 1] = cz
            rit = np.zeros((ne, 2, 2))
            rit[:, 0, 0] = ci; rit[:, 0, 1] = si
            rit[:, 1, 0] = -si; rit[:, 1, 1] = ci
            drit = np.zeros((ne, 2, 2))  # d(Ri^T)/dpsi
            drit[:, 0, 0] = -si; drit[:, 0, 1] = ci
            drit[:, 1, 0] = -ci; drit[:, 1, 1] = -si
            rzrit = np.einsum("eab,ebc->eac", rz, rit)
            j = np.zeros((ne, 3, 6))  # cols: [ti(2), psi_i, tj(2), psi_j]
            j[:, :2, 0:2] = -rzrit
            j[:, :2, 2] = np.einsum("eab,eb->ea", np.einsum("eab,ebc->eac", rz, drit), dt)
            j[:, :2, 3:5] = rzrit
            j[:, 2, 2] = -1.0
            j[:, 2, 5] = 1.0
            cols = np.concatenate([(3 * oi)[:, None] + np.arange(3),
                                   (3 * oj)[:, None] + np.arange(3)], axis=1)  # (ne, 6)
            h_blk = np.einsum("eki,ekl,elj->eij", j, info, j)
            b_blk = np.einsum("eki,ekl,el->ei", j, info, e)
            rows_i.append(np.repeat(cols, 6, axis=1).ravel())
            cols_i.append(np.tile(cols, (1, 6)).ravel())
            vals.append(h_blk.ravel())
            np.add.at(rhs, cols.ravel(), b_blk.ravel())

        if obs is not None:
            op, ol, z, info, e, ci, si, d = obs
            ne = len(op)
            rit = np.zeros((ne, 2, 2))
            rit[:, 0, 0] = ci; rit[:, 0, 1] = si
            rit[:, 1, 0] = -si; rit[:, 1, 1] = ci
            drit = np.zeros((ne, 2, 2))
            drit[:, 0, 0] = -si; drit[:, 0, 1] = ci
            drit[:, 1, 0] = -ci; drit[:, 1, 1] = -si
            j = np.zeros((ne, 2, 5))  # cols: [ti(2), psi_i, lm(2)]
            j[:, :, 0:2] = -rit
            j[:, :, 2] = np.einsum("eab,eb->ea", drit, d)
            j[:, :, 3:5] = rit
            cols = np.concatenate([(3 * op)[:, None] + np.arange(3),
                                   (n_pose_cols + 2 * ol)[:, None] + np.arange(2)], axis=1)
            h_blk = np.einsum("eki,ekl,elj->eij", j, info, j)
            b_blk = np.einsum("eki,ekl,el->ei", j, info, e)
            rows_i.append(np.repeat(cols, 5, axis=1).ravel())
            cols_i.append(np.tile(cols, (1, 5)).ravel())
            vals.append(h_blk.ravel())
            np.add.at(rhs, cols.ravel(), b_blk.ravel())

        h = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows_i), np.concatenate(cols_i))),
                          shape=(n_cols, n_cols)).tocsr()

        # gauge fix: anchor the first pose with a stiff prior instead of column
        # elimination (keeps indexing simple, same fixed-point)
        anchor_w = 1e12
        h = h + sp.diags(np.concatenate([np.full(3, anchor_w), np.zeros(n_cols - 3)]))

        accepted = False
        for _ in range(6):
            h_try = h + sp.diags(np.full(n_cols, lam)) if lam > 0 else h
            try:
                delta = spla.spsolve(h_try.tocsc(), -rhs)
            except Exception:
                singular = True
                delta = None
            if delta is None or not np.all(np.isfinite(delta)):
                singular = True
                lam = max(lam * 10.0, 1e-6)
                continue
            new_poses = poses + delta[:n_pose_cols].reshape(-1, 3)
            new_poses[:, 2] = np.array([wrap_angle(a) for a in new_poses[:, 2]])
            new_lms = lms + delta[n_pose_cols:].reshape(-1, 2)
            new_chi2 = _chi2_only(new_poses, new_lms, graph, huber_delta)
            if new_chi2 <= chi2 + 1e-12:
                poses, lms = new_poses, new_lms
                accepted = True
                lam = lam / 4.0 if lam > 1e-9 else 0.0
                break
            lam = max(lam * 10.0, 1e-6)
        if not accepted:
            break
        prev = chi2
        chi2, odo, obs = _residuals(poses, lms, graph, huber_delta)
        history.append(chi2)
        if abs(prev - chi2) < tol * max(chi2, 1.0):
            break

    graph.poses = [p.copy() for p in poses]
    graph.lm_pos = [p.copy() for p in lms]
    converged = it < max_iterations or abs(history[-1] - history[-2 if len(history) > 1 else -1]) < tol
    return OptimizeResult(chi2=chi2, iterations=it, converged=converged,
                          singular=singular, chi2_history=tuple(history))
