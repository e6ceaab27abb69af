import math

import numpy as np
import pytest

from racestack.core import (
    ConeColor,
    Pose2,
    body_frame_point,
    pose_between,
    pose_compose,
)
from racestack.sensors import ConeObservation
from racestack.slam.graph import PoseGraph, add_keyframe, optimize_graph

TIGHT = np.diag([1e4, 1e4, 1e4])


def _obs(xy, sigma=0.05, color=ConeColor.BLUE):
    return ConeObservation(np.asarray(xy, dtype=float), color, np.eye(2) * sigma ** 2)


# ---------- keyframe bookkeeping ----------

def test_first_keyframe_anchored():
    g = PoseGraph(Pose2(1.0, 2.0, 0.3))
    add_keyframe(g, Pose2(), TIGHT, [], [])
    assert g.n_poses == 1
    assert len(g.odom_i) == 0
    assert np.allclose(g.poses[0], [1.0, 2.0, 0.3])


def test_keyframe_counting_contract():
    g = PoseGraph(Pose2())
    add_keyframe(g, Pose2(), TIGHT, [], [])
    new = [_obs([5, 1]), _obs([5, -1]), _obs([9, 1])]
    add_keyframe(g, Pose2(1.0, 0.0, 0.0), TIGHT, [], new)
    assert g.n_poses == 2
    assert len(g.odom_i) == 1
    assert g.n_landmarks == 3
    assert len(g.obs_pose) == 3


def test_reobservation_increments_edges_only():
    g = PoseGraph(Pose2())
    add_keyframe(g, Pose2(), TIGHT, [], [_obs([5, 1])])
    n_lm = g.n_landmarks
    edges_before = g.landmark_edge_count(0)
    add_keyframe(g, Pose2(0.5, 0, 0), TIGHT, [(_obs([4.5, 1]), 0)], [])
    assert g.n_landmarks == n_lm
    assert g.landmark_edge_count(0) == edges_before + 1


# ---------- optimization ----------

def _build_noiseless_graph(n_poses=3, lm_xy=((4.0, 2.0), (6.0, -2.0))):
    """Poses along +x at 1 m steps observing fixed landmarks, zero noise."""
    truth_poses = [Pose2(float(i), 0.0, 0.0) for i in range(n_poses)]
    g = PoseGraph(truth_poses[0])
    lms = [np.array(p) for p in lm_xy]
    for i, tp in enumerate(truth_poses):
        if i == 0:
            delta = Pose2()
        else:
            delta = pose_between(truth_poses[i - 1], tp)
        matches = []
        new = []
        for k, lm in enumerate(lms):
            ob = _obs(body_frame_point(tp, lm), sigma=0.03)
            if i == 0:
                new.append(ob)
            else:
                matches.append((ob, k))
        add_keyframe(g, delta, TIGHT, matches, new)
    return g, truth_poses, lms


def test_zero_residual_fixed_point():
    g, truth_poses, lms = _build_noiseless_graph()
    res = optimize_graph(g)
    assert res.chi2 == pytest.approx(0.0, abs=1e-9)
    for p, tp in zip(g.poses, truth_poses):
        assert np.allclose(p, tp.as_array(), atol=1e-9)


def test_noiseless_graph_with_perturbed_init_recovers_truth():
    rng = np.random.default_rng(1)
    g, truth_poses, lms = _build_noiseless_graph()
    # perturb everything except the anchored first pose
    for i in range(1, g.n_poses):
        g.poses[i] = g.poses[i] + rng.normal(0, 0.2, 3)
    for k in range(g.n_landmarks):
        g.lm_pos[k] = g.lm_pos[k] + rng.normal(0, 0.3, 2)
    res = optimize_graph(g, max_iterations=50, tol=1e-12)
    assert res.chi2 < 1e-10
    for p, tp in zip(g.poses, truth_poses):
        assert np.allclose(p, tp.as_array(), atol=1e-6)
    for lm, true_lm in zip(g.lm_pos, lms):
        assert np.allclose(lm, true_lm, atol=1e-6)


def _noisy_chain(rng, n_poses=50, n_lms=30, sigma_obs=0.05,
                 sigma_odo_t=0.02, sigma_odo_r=0.005, view_range=12.0):
    """Chain of poses with noisy odometry/observations; returns graph + truth."""
    truth_poses = [Pose2(i * 1.0, 2.0 * math.sin(i * 0.2), 0.0) for i in range(n_poses)]
    lm_true = rng.uniform([0, -8], [n_poses * 1.0, 8], (n_lms, 2))
    odo_info = np.diag([1 / sigma_odo_t ** 2, 1 / sigma_odo_t ** 2, 1 / sigma_odo_r ** 2])
    g = PoseGraph(truth_poses[0])
    id_of: dict = {}
    for i, tp in enumerate(truth_poses):
        if i == 0:
            delta = Pose2()
        else:
            d = pose_between(truth_poses[i - 1], tp)
            delta = Pose2(d.x + rng.normal(0, sigma_odo_t),
                          d.y + rng.normal(0, sigma_odo_t),
                          d.psi + rng.normal(0, sigma_odo_r))
        matches, new_obs, new_ks = [], [], []
        for k in range(n_lms):
            rel = body_frame_point(tp, lm_true[k])
            if np.hypot(*rel) > view_range:
                continue
            ob = _obs(rel + rng.normal(0, sigma_obs, 2), sigma=sigma_obs)
            if k in id_of:
                matches.append((ob, id_of[k]))
            else:
                new_obs.append(ob)
                new_ks.append(k)
        _, new_ids = add_keyframe(g, delta, odo_info, matches, new_obs)
        for k, lid in zip(new_ks, new_ids):
            id_of[k] = lid
    return g, truth_poses, lm_true, id_of


def _graph_chi2_at(g, poses, lms):
    from racestack.slam.graph import _chi2_only
    return _chi2_only(np.array(poses), np.array(lms), g, huber_delta=1.0)


def test_chain_chi2_monotone_and_bounded_by_truth():
    rng = np.random.default_rng(7)
    g, truth_poses, lm_true, id_of = _noisy_chain(rng)
    chi2_before = _graph_chi2_at(g, g.poses, g.lm_pos)
    res = optimize_graph(g, max_iterations=50)
    # accepted iterations never increase chi2
    assert all(b <= a + 1e-9 for a, b in zip(res.chi2_history, res.chi2_history[1:]))
    assert res.chi2 <= chi2_before + 1e-9
    # optimum cannot be worse than the ground-truth configuration
    truth_pose_arr = [tp.as_array() for tp in truth_poses]
    truth_lm_arr = [lm_true[k] for k, lid in sorted(id_of.items(), key=lambda kv: kv[1])]
    truth_lm_sorted = [None] * g.n_landmarks
    for k, lid in id_of.items():
        truth_lm_sorted[lid] = lm_true[k]
    chi2_truth = _graph_chi2_at(g, truth_pose_arr, truth_lm_sorted)
    assert res.chi2 <= chi2_truth + 1e-6
    # and the recovered map is close to the truth
    err = [np.linalg.norm(g.lm_pos[lid] - lm_true[k]) for k, lid in id_of.items()]
    assert np.sqrt(np.mean(np.square(err))) < 0.25
