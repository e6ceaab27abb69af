"""Condensed LTV-MPC in steering-rate form: states eliminated so the horizon
objective becomes an unconstrained QP in the input-rate sequence, solved by
Cholesky factorization. Steering saturation is applied after the solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..core import Pose2, wrap_angle
from ..raceline import TrajectoryProfile


class NotSpd(Exception):
    """Hessian factorization failed; caller should hold the previous command."""


class PathEnded(Exception):
    """Horizon ran past the path end (references are repeated instead)."""


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 40
    ts: float = 0.025
    q_diag: tuple = (20.0, 1.0, 10.0, 1.0)   # [e_y, v_y, e_psi, yaw_rate]
    r_input_rate: float = 5.0
    p_diag: tuple | None = None               # terminal weight, defaults to q
    delay_compensation: bool = True

    def __post_init__(self):
        if self.horizon < 2 or self.ts <= 0 or self.r_input_rate <= 0:
            raise ValueError("need horizon >= 2, ts > 0, r > 0")

    def weights(self, nx: int):
        q = np.zeros(nx)
        q[:4] = self.q_diag
        p = q.copy() if self.p_diag is None else np.concatenate(
            [np.asarray(self.p_diag, dtype=float), np.zeros(nx - len(self.p_diag))])
        return np.diag(q), np.diag(p)


@dataclass
class CondensedQp:
    h: np.ndarray          # (N, N) SPD
    g: np.ndarray          # (N,)
    s_mat: np.ndarray      # ((N+1)*nx, N): stacked states = s_mat @ du + c_vec
    c_vec: np.ndarray
    nx: int
    const: float = 0.0     # constant objective term (for the cost identity)


@dataclass
class ReferenceWindow:
    x0: np.ndarray         # initial error state
    refs: np.ndarray       # (N+1, nx)
    s0: float
    path_ended: bool


def build_reference(profile: TrajectoryProfile, pose: Pose2, vx: float,
                    vy: float, yaw_rate: float, n_steps: int, ts: float,
                    nx: int = 4, steer_state=(0.0, 0.0),
                    s_hint: float | None = None) -> ReferenceWindow:
    """Project the pose onto the path and build error state + reference window.

    Lateral error is positive to the left of the path. The reference yaw rate is
    vx * kappa(s_k) with s_k predicted from the planned speeds.
    """
    path = profile.path
    s0 = path.project(np.array([pose.x, pose.y]), s_hint=s_hint)
    pos, heading, _ = path.query(s0)
    normal = np.array([-math.sin(heading), math.cos(heading)])
    e_y = float((np.array([pose.x, pose.y]) - pos) @ normal)
    e_psi = wrap_angle(pose.psi - float(heading))

    x0 = np.zeros(nx)
    x0[0], x0[1], x0[2], x0[3] = e_y, vy, e_psi, yaw_rate
    if nx > 4:
        x0[4], x0[5] = steer_state

    length = path.total_length
    refs = np.zeros((n_steps + 1, nx))
    s_k = s0
    path_ended = False
    for k in range(n_steps + 1):
        v_plan = max(profile.speed_at(s_k), 1.0)
        s_next = s_k + v_plan * ts
        if not path.closed and s_next >= length:
            s_next = length
            path_ended = True
        _, _, kappa = path.query(min(s_k, length) if not path.closed else s_k)
        refs[k, 3] = vx * float(kappa)
        s_k = s_next
    return ReferenceWindow(x0=x0, refs=refs, s0=s0, path_ended=path_ended)


def condense_qp(ad: np.ndarray, bd: np.ndarray, cfg: MpcConfig, x0: np.ndarray,
                u_prev: float, refs: np.ndarray) -> CondensedQp:
    """Eliminate states: J = 0.5 du' H du + g' du + const with
    H = 2 (S' Qbar S + R I) and stacked states x_{1..N+1} = S du + c.
    """
    n = cfg.horizon
    nx = ad.shape[0]
    q, p = cfg.weights(nx)

    powers = [np.eye(nx)]
    for _ in range(n):
        powers.append(ad @ powers[-1])
    gsum = [np.zeros(nx)]
    for m in range(1, n + 1):
        gsum.append(gsum[-1] + powers[m - 1] @ bd)

    s_mat = np.zeros(((n + 1) * nx, n))
    c_vec = np.zeros((n + 1) * nx)
    c_vec[0:nx] = x0
    for k in range(1, n + 1):
        blk = slice(k * nx, (k + 1) * nx)
        c_vec[blk] = powers[k] @ x0 + gsum[k] * u_prev
        for j in range(1, k):
            s_mat[blk, j - 1] = gsum[k - j]

    qbar = np.zeros(((n + 1) * nx, (n + 1) * nx))
    for k in range(1, n):
        qbar[k * nx:(k + 1) * nx, k * nx:(k + 1) * nx] = q
    qbar[n * nx:, n * nx:] = p
    qbar[0:nx, 0:nx] = q  # x_1 term (constant wrt du, kept for the cost identity)

    d = c_vec - refs.reshape(-1)
    h = 2.0 * (s_mat.T @ qbar @ s_mat + cfg.r_input_rate * np.eye(n))
    g = 2.0 * (s_mat.T @ qbar @ d)
    const = float(d @ qbar @ d)
    h = 0.5 * (h + h.T)
    return CondensedQp(h=h, g=g, s_mat=s_mat, c_vec=c_vec, nx=nx, const=const)


@dataclass
class MpcSolution:
    steer_cmd: float
    du: np.ndarray
    predicted_states: np.ndarray   # (N+1, nx)
    yaw_rate_prediction: float     # first future state (x_2)


def solve_mpc(qp: CondensedQp, u_prev: float, max_steer: float) -> MpcSolution:
    """Solve H du = -g by Cholesky; saturate the applied command post-hoc."""
    try:
        chol = cho_factor(qp.h, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotSpd(str(exc)) from exc
    du = cho_solve(chol, -qp.g)
    states = (qp.s_mat @ du + qp.c_vec).reshape(-1, qp.nx)
    steer = float(np.clip(u_prev + du[0], -max_steer, max_steer))
    return MpcSolution(steer_cmd=steer, du=du, predicted_states=states,
                       yaw_rate_prediction=float(states[1, 3]))


def rollout_cost(ad, bd, cfg: MpcConfig, x0, u_prev, refs, du) -> float:
    """Objective evaluated by explicit state propagation (oracle for condense_qp)."""
    n = cfg.horizon
    nx = ad.shape[0]
    q, p = cfg.weights(nx)
    x = np.asarray(x0, dtype=float).copy()
    u = float(u_prev)
    cost = 0.0
    for k in range(1, n + 1):
        e = x - refs[k - 1]
        cost += float(e @ q @ e) + cfg.r_input_rate * float(du[k - 1]) ** 2
        x = ad @ x + bd * u
        u = u + float(du[k - 1])
    e = x - refs[n]
    cost += float(e @ p @ e)
    return cost
