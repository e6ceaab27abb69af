import math
import time

import numpy as np
import pytest

from racestack.core import Cone, ConeColor, Pose2, RandomStream, TrackDefinition
from racestack.sensors import OdometryMeasurement, PerceptionConfig, observe_cones
from racestack.slam.frontend import OdomIntegrationNoise, SlamFrontend
from racestack.vehicle import VehicleParams

NOISELESS = PerceptionConfig(range_noise_sigma=0.0, bearing_noise_sigma=0.0,
                             false_positive_rate=0.0, false_negative_rate=0.0)
EXACT_ODOM = OdomIntegrationNoise(sigma_vx=0.01, sigma_vy=0.01, sigma_omega=0.001)


def _ladder_track(n_pairs=12, spacing=5.0, width=3.5):
    cones = []
    for i in range(n_pairs):
        cones.append(Cone(np.array([i * spacing, width / 2]), ConeColor.BLUE))
        cones.append(Cone(np.array([i * spacing, -width / 2]), ConeColor.YELLOW))
    return TrackDefinition(cones=tuple(cones), start_pose=Pose2())


def _drive_straight(frontend, track, vx=5.0, duration=6.0, rng_seed=1):
    """Constant-speed straight drive with exact odometry and noiseless perception."""
    params = VehicleParams()
    rng = RandomStream(rng_seed)
    t = 0.0
    frame_dt = 0.1
    sub_dt = 0.005
    pose = track.start_pose
    while t < duration:
        for _ in range(int(frame_dt / sub_dt)):
            odo = OdometryMeasurement(np.full(4, vx / params.wheel_radius), 0.0,
                                      np.zeros(2), sub_dt)
            frontend.push_odometry(odo)
        t += frame_dt
        pose = Pose2(vx * t, 0.0, 0.0)
        obs = observe_cones(track, pose, NOISELESS, rng)
        frontend.process_frame(obs, stamp=t)
    return pose


def test_first_frame_maps_visible_cones():
    track = _ladder_track()
    fe = SlamFrontend("graph", track.start_pose, VehicleParams(),
                      odom_noise=EXACT_ODOM)
    rng = RandomStream(3)
    obs = observe_cones(track, track.start_pose, NOISELESS, rng)
    fe.process_frame(obs, stamp=0.0)
    lmap, pose = fe.map_snapshot()
    assert len(lmap) == len(obs)
    # noiseless first frame: landmarks exactly at the observed world positions
    for lm in lmap.landmarks():
        d = min(np.linalg.norm(lm.position - c.position) for c in track.cones)
        assert d < 1e-9


def test_snapshot_is_pure():
    track = _ladder_track()
    fe = SlamFrontend("graph", track.start_pose, VehicleParams(), odom_noise=EXACT_ODOM)
    rng = RandomStream(3)
    fe.process_frame(observe_cones(track, track.start_pose, NOISELESS, rng), 0.0)
    m1, p1 = fe.map_snapshot()
    m2, p2 = fe.map_snapshot()
    assert p1 == p2
    assert len(m1) == len(m2)
    for a, b in zip(m1.landmarks(), m2.landmarks()):
        assert a.id == b.id and np.array_equal(a.position, b.position)


@pytest.mark.parametrize("variant", ["graph", "ekf"])
def test_noiseless_drive_reproduces_map(variant):
    track = _ladder_track()
    fe = SlamFrontend(variant, track.start_pose, VehicleParams(),
                      odom_noise=EXACT_ODOM, optimize_every=10)
    _drive_straight(fe, track, vx=5.0, duration=8.0)
    if variant == "graph":
        fe.optimize()
    lmap, pose = fe.map_snapshot()
    # every mapped landmark lies on a true cone
    errs = []
    for lm in lmap.landmarks():
        errs.append(min(np.linalg.norm(lm.position - c.position) for c in track.cones))
    mse = float(np.mean(np.square(errs)))
    assert mse < 1e-10


def test_pose_estimate_tracks_motion():
    track = _ladder_track()
    fe = SlamFrontend("graph", track.start_pose, VehicleParams(), odom_noise=EXACT_ODOM)
    true_pose = _drive_straight(fe, track, vx=5.0, duration=4.0)
    est = fe.pose_estimate()
    assert est.x == pytest.approx(true_pose.x, abs=0.05)
    assert est.y == pytest.approx(true_pose.y, abs=0.05)


def test_background_snapshot_linearizability():
    # a snapshot taken during background optimization matches either the
    # pre-optimization or post-optimization state, never a mixture
    rng = np.random.default_rng(0)
    track = _ladder_track(n_pairs=30)
    fe = SlamFrontend("graph", track.start_pose, VehicleParams(),
                      odom_noise=EXACT_ODOM, optimize_every=0)
    _drive_straight(fe, track, vx=5.0, duration=20.0)
    # perturb estimates so optimization visibly moves them
    with fe._lock:
        for i in range(1, fe.graph.n_poses):
            fe.graph.poses[i] = fe.graph.poses[i] + rng.normal(0, 0.05, 3)
        for k in range(fe.graph.n_landmarks):
            fe.graph.lm_pos[k] = fe.graph.lm_pos[k] + rng.normal(0, 0.05, 2)
            lm = fe.lm_map.get(k)
            fe.lm_map.upsert(type(lm)(lm.id, fe.graph.lm_pos[k].copy(), lm.color,
                                      lm.covariance, lm.observation_count))
    pre, _ = fe.map_snapshot()
    pre_pos = {lm.id: lm.position.copy() for lm in pre.landmarks()}

    fe.optimize(background=True)
    snaps = []
    while fe._worker.is_alive():
        snap, _ = fe.map_snapshot()
        snaps.append({lm.id: lm.position.copy() for lm in snap.landmarks()})
    fe.join()
    post, _ = fe.map_snapshot()
    post_pos = {lm.id: lm.position.copy() for lm in post.landmarks()}

    for snap in snaps:
        all_pre = all(np.array_equal(snap[i], pre_pos[i]) for i in snap)
        all_post = all(np.array_equal(snap[i], post_pos[i]) for i in snap)
        assert all_pre or all_post


def test_graph_beats_or_ties_ekf_single_seed():
    # smoke version of the replay comparison (full 10-seed run in acceptance)
    track = _ladder_track(n_pairs=12)
    cfg = PerceptionConfig(range_noise_sigma=0.03,
                           bearing_noise_sigma=math.radians(0.3),
                           false_positive_rate=0.0, false_negative_rate=0.0)
    params = VehicleParams()

    def run(variant):
        fe = SlamFrontend(variant, track.start_pose, params, optimize_every=10)
        rng = RandomStream(11, stream=7)
        odo_rng = RandomStream(11, stream=8)
        vx, frame_dt, sub_dt = 5.0, 0.1, 0.005
        t = 0.0
        while t < 9.0:
            for _ in range(20):
                w = vx / params.wheel_radius + odo_rng.normal(0, 0.05, 4)
                fe.push_odometry(OdometryMeasurement(w, odo_rng.normal(0, 0.002),
                                                     np.zeros(2), sub_dt))
            t += frame_dt
            pose = Pose2(vx * t, 0.0, 0.0)
            fe.process_frame(observe_cones(track, pose, cfg, rng), t)
        if variant == "graph":
            fe.optimize()
        lmap, _ = fe.map_snapshot()
        errs = []
        for lm in lmap.landmarks():
            errs.append(min(np.linalg.norm(lm.position - c.position) for c in track.cones))
        return float(np.mean(np.square(errs)))

    mse_graph = run("graph")
    mse_ekf = run("ekf")
    assert mse_graph <= mse_ekf * 1.5  # ties allowed; ordering checked over seeds in acceptance
    assert mse_graph < 0.05
