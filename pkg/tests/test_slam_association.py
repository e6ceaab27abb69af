import itertools
import math

import numpy as np
import pytest

from racestack.core import ConeColor, Pose2
from racestack.sensors import ConeObservation, OdometryMeasurement
from racestack.slam.association import DaConfig, Landmark, LandmarkMap, associate
from racestack.slam.velocity import estimate_velocity
from racestack.vehicle import VehicleParams


def _obs(x, y, sigma=0.05, color=ConeColor.BLUE):
    return ConeObservation(np.array([x, y]), color, np.eye(2) * sigma ** 2)


def _lm(lm_id, x, y, sigma=0.1, color=ConeColor.BLUE):
    return Landmark(lm_id, np.array([x, y], dtype=float), color, np.eye(2) * sigma ** 2)


TIGHT_POSE_COV = np.diag([1e-6, 1e-6, 1e-8])


# ---------- velocity estimation ----------

def test_velocity_straight_rolling():
    p = VehicleParams(wheel_radius=0.2)
    odo = OdometryMeasurement(np.full(4, 20.0), 0.0, np.zeros(2), 0.005)
    vx, vy, r = estimate_velocity(odo, p)
    assert (vx, vy, r) == (4.0, 0.0, 0.0)


def test_velocity_yaw_rate_cancels():
    p = VehicleParams(wheel_radius=0.2, sr=0.6)
    omega = 0.8
    v_center = 6.0
    wl = (v_center - omega * p.sr) / p.wheel_radius
    wr = (v_center + omega * p.sr) / p.wheel_radius
    odo = OdometryMeasurement(np.array([wl, wr, wl, wr]), omega, np.zeros(2), 0.005)
    vx, vy, r = estimate_velocity(odo, p)
    assert vx == pytest.approx(v_center)
    assert r == omega
    assert vy == pytest.approx(omega * p.lr)


def test_velocity_zero_inputs():
    p = VehicleParams()
    odo = OdometryMeasurement(np.zeros(4), 0.0, np.zeros(2), 0.005)
    assert estimate_velocity(odo, p) == (0.0, 0.0, 0.0)


# ---------- kd-tree ----------

def test_knn_matches_brute_force():
    rng = np.random.default_rng(0)
    lmap = LandmarkMap()
    pts = rng.uniform(-50, 50, (200, 2))
    for i, p in enumerate(pts):
        lmap.upsert(_lm(i, p[0], p[1]))
    queries = rng.uniform(-50, 50, (1000, 2))
    for q in queries:
        got = [i for i, _ in lmap.knn(q, 5)]
        want = np.argsort(np.hypot(*(pts - q).T))[:5].tolist()
        assert got == want


# ---------- association ----------

def test_empty_map_all_new():
    obs = [_obs(1, 0), _obs(2, 0)]
    matches, new = associate(obs, LandmarkMap(), Pose2(), TIGHT_POSE_COV, DaConfig())
    assert matches == []
    assert new == obs


def test_identity_covariance_euclidean_gate():
    lmap = LandmarkMap()
    lmap.upsert(Landmark(0, np.array([5.0, 0.0]), ConeColor.BLUE, np.eye(2)))
    obs = [ConeObservation(np.array([5.1, 0.0]), ConeColor.BLUE, np.eye(2))]
    matches, new = associate(obs, lmap, Pose2(), TIGHT_POSE_COV, DaConfig(gate=5.99))
    assert len(matches) == 1 and matches[0][1] == 0
    assert new == []


def test_gate_rejects_far_observation():
    lmap = LandmarkMap()
    lmap.upsert(_lm(0, 5.0, 0.0, sigma=0.05))
    obs = [_obs(9.0, 0.0)]
    matches, new = associate(obs, lmap, Pose2(), TIGHT_POSE_COV, DaConfig())
    assert matches == []
    assert len(new) == 1


def test_color_incompatible_never_matches():
    lmap = LandmarkMap()
    lmap.upsert(_lm(0, 5.0, 0.0, color=ConeColor.YELLOW))
    obs = [_obs(5.0, 0.0, color=ConeColor.BLUE)]
    matches, new = associate(obs, lmap, Pose2(), TIGHT_POSE_COV, DaConfig())
    assert matches == []
    # unknown may match either
    obs = [_obs(5.0, 0.0, color=ConeColor.UNKNOWN)]
    matches, _ = associate(obs, lmap, Pose2(), TIGHT_POSE_COV, DaConfig())
    assert len(matches) == 1


def test_conflict_resolved_one_to_one():
    lmap = LandmarkMap()
    lmap.upsert(_lm(0, 5.0, 0.0))
    lmap.upsert(_lm(1, 5.0, 3.0))
    obs = [_obs(5.02, 0.1), _obs(5.0, 0.5)]  # both nearest landmark 0
    matches, new = associate(obs, lmap, Pose2(), TIGHT_POSE_COV, DaConfig())
    matched_ids = [m[1] for m in matches]
    assert len(matched_ids) == len(set(matched_ids))  # one-to-one
    assert 0 in matched_ids
    assert len(matches) + len(new) == 2


def _assignment_oracle(obs_pts, lm_pts, gate):
    """Brute-force optimal one-to-one assignment count (squared Euclidean, gated)."""
    n_obs, n_lm = len(obs_pts), len(lm_pts)
    best = (math.inf, 0)
    lm_idx = list(range(n_lm)) + [None] * n_obs  # None = unassigned
    for perm in itertools.permutations(lm_idx, n_obs):
        if any(perm.count(i) > 1 for i in perm if i is not None):
            continue
        cost, count = 0.0, 0
        ok = True
        for o, l in zip(obs_pts, perm):
            if l is None:
                cost += gate
                continue
            d2 = float(np.sum((o - lm_pts[l]) ** 2))
            if d2 > gate:
                ok = False
                break
            cost += d2
            count += 1
        if ok and (cost, -count) < (best[0], -best[1]):
            best = (cost, count)
    return best[1]


def test_match_count_agrees_with_assignment_oracle():
    rng = np.random.default_rng(42)
    cfg = DaConfig(gate=5.99)
    for _ in range(25):
        n_lm = rng.integers(2, 6)
        n_obs = rng.integers(1, 6)
        lm_pts = rng.uniform(0, 10, (n_lm, 2))
        # observations near random landmarks
        obs_pts = lm_pts[rng.integers(0, n_lm, n_obs)] + rng.normal(0, 0.3, (n_obs, 2))
        lmap = LandmarkMap()
        for i, p in enumerate(lm_pts):
            lmap.upsert(Landmark(i, p.copy(), ConeColor.BLUE, np.eye(2)))
        obs = [ConeObservation(p.copy(), ConeColor.BLUE, np.eye(2) * 1e-12) for p in obs_pts]
        matches, _ = associate(obs, lmap, Pose2(), np.eye(3) * 1e-12, cfg)
        want = _assignment_oracle(obs_pts, lm_pts, cfg.gate)
        assert len(matches) == want


def test_gate_soundness_property():
    # no returned match may exceed the configured gate
    rng = np.random.default_rng(3)
    cfg = DaConfig(gate=5.99)
    lmap = LandmarkMap()
    pts = rng.uniform(-20, 20, (30, 2))
    for i, p in enumerate(pts):
        lmap.upsert(Landmark(i, p.copy(), ConeColor.BLUE, np.eye(2) * 0.05))
    pose = Pose2(0.5, -0.3, 0.2)
    pose_cov = np.diag([0.01, 0.01, 0.001])
    for _ in range(50):
        k = rng.integers(0, 30)
        noisy = pts[k] + rng.normal(0, 0.5, 2)
        from racestack.core import body_frame_point
        obs = [ConeObservation(body_frame_point(pose, noisy), ConeColor.BLUE,
                               np.eye(2) * 0.05 ** 2)]
        matches, _ = associate(obs, lmap, pose, pose_cov, cfg)
        for ob, lm_id in matches:
            lm = lmap.get(lm_id)
            from racestack.core import rotation_matrix, transform_point
            rot = rotation_matrix(pose.psi)
            z_w = transform_point(pose, ob.position)
            jp = np.zeros((2, 3))
            jp[:, :2] = np.eye(2)
            jp[:, 2] = np.array([[-math.sin(pose.psi), -math.cos(pose.psi)],
                                 [math.cos(pose.psi), -math.sin(pose.psi)]]) @ ob.position
            sigma = lm.covariance + rot @ ob.covariance @ rot.T + jp @ pose_cov @ jp.T
            diff = z_w - lm.position
            d2 = float(diff @ np.linalg.solve(sigma, diff))
            assert d2 <= cfg.gate + 1e-9
