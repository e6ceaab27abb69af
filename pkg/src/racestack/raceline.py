"""Minimum-curvature raceline optimization (box-constrained QP over lateral offsets)
and velocity planning from the speed-dependent GG acceleration envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .planning.spline import SplinePath, fit_spline
from .vehicle import G


class SolverStall(Exception):
    """Projected-gradient iteration cap reached before the KKT tolerance."""


@dataclass
class RacelineProblem:
    points: np.ndarray    # (n, 2) reference samples (~2 m steps)
    normals: np.ndarray   # (n, 2) unit left normals
    lower: np.ndarray     # (n,) lateral bound toward the right (<= 0)
    upper: np.ndarray     # (n,) lateral bound toward the left (>= 0)
    closed: bool = False

    def __post_init__(self):
        if np.any(self.lower > 0) or np.any(self.upper < 0):
            raise ValueError("lateral bounds must contain 0 (centerline feasible)")
        norms = np.hypot(self.normals[:, 0], self.normals[:, 1])
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise ValueError("normals must be unit length")


@dataclass(frozen=True)
class GgsParams:
    mu: float = 1.5
    aero_lift_coeff: float = 3.5     # C_l * A, m^2
    aero_drag_coeff: float = 1.3     # C_d * A, m^2
    air_density: float = 1.2
    mass: float = 214.0
    power_limit: float = 80e3
    ax_brake_extra: float = 0.0      # reserve for non-regen braking, m/s^2
    safety_factor: float = 0.9

    def __post_init__(self):
        if self.mu <= 0 or not (0 < self.safety_factor <= 1):
            raise ValueError("mu must be positive and safety_factor in (0, 1]")


@dataclass
class TrajectoryProfile:
    path: SplinePath
    s: np.ndarray         # (m,) sample stations
    v: np.ndarray         # (m,) planned speed
    duration: float       # s, planned time over s[0]..s[-1]

    def speed_at(self, s) -> float:
        ss = np.mod(s, self.path.total_length) if self.path.closed else np.clip(s, self.s[0], self.s[-1])
        return float(np.interp(ss, self.s, self.v))

    def accel_at(self, s) -> float:
        """Reference longitudinal acceleration from d(v^2)/ds / 2."""
        ss = np.mod(s, self.path.total_length) if self.path.closed else np.clip(s, self.s[0], self.s[-1])
        i = int(np.clip(np.searchsorted(self.s, ss) - 1, 0, len(self.s) - 2))
        ds = self.s[i + 1] - self.s[i]
        return float((self.v[i + 1] ** 2 - self.v[i] ** 2) / (2.0 * max(ds, 1e-9)))


# ---------- GG envelope ----------

def gg_envelope(v: float, p: GgsParams) -> tuple:
    """(ax_drive_max, ax_brake_max, ay_max) at speed v, all positive magnitudes."""
    v = max(float(v), 0.0)
    normal = p.mass * G + 0.5 * p.air_density * p.aero_lift_coeff * v * v
    drag = 0.5 * p.air_density * p.aero_drag_coeff * v * v / p.mass
    grip = p.safety_factor * p.mu * normal / p.mass
    ay_max = grip
    ax_brake = grip + drag + p.ax_brake_extra
    ax_drive = min(grip, p.power_limit / (p.mass * max(v, 1.0))) - drag
    return ax_drive, ax_brake, ay_max


def _top_speed(p: GgsParams) -> float:
    """Speed where drive force balances drag (power limited)."""
    v = 30.0
    for _ in range(60):
        drag = 0.5 * p.air_density * p.aero_drag_coeff * v * v
        v_new = p.power_limit / max(drag, 1e-9)
        v = 0.5 * (v + min(v_new, 120.0))
    return max(v, 5.0)


# ---------- minimum curvature QP ----------

def build_raceline_problem(path: SplinePath, width_left, width_right,
                           step: float = 2.0, margin: float = 0.75,
                           closed: bool | None = None) -> RacelineProblem:
    """Sample the centerline and attach lateral bounds (vehicle half-width removed).

    width_left/right may be scalars or arrays sampled at the centerline control
    points; they are interpolated over arc length.
    """
    closed = path.closed if closed is None else closed
    L = path.total_length
    n = max(int(round(L / step)) + (0 if closed else 1), 5)
    s = np.linspace(0.0, L, n, endpoint=not closed)
    pos, heading, _ = path.query(s)
    normals = np.stack([-np.sin(heading), np.cos(heading)], axis=1)
    wl = np.broadcast_to(np.asarray(width_left, dtype=float), (n,)).copy() \
        if np.isscalar(width_left) or np.asarray(width_left).ndim == 0 \
        else np.interp(s, np.linspace(0, L, len(width_left)), width_left)
    wr = np.broadcast_to(np.asarray(width_right, dtype=float), (n,)).copy() \
        if np.isscalar(width_right) or np.asarray(width_right).ndim == 0 \
        else np.interp(s, np.linspace(0, L, len(width_right)), width_right)
    upper = np.maximum(wl - margin, 0.0)
    lower = -np.maximum(wr - margin, 0.0)
    return RacelineProblem(points=pos, normals=normals, lower=lower, upper=upper,
                           closed=closed)


def _second_difference(n: int, h: float, closed: bool) -> np.ndarray:
    """Second-difference operator approximating d^2/ds^2 on a uniform grid."""
    if closed:
        d = np.zeros((n, n))
        for i in range(n):
            d[i, (i - 1) % n] = 1.0
            d[i, i] = -2.0
            d[i, (i + 1) % n] = 1.0
    else:
        d = np.zeros((n - 2, n))
        for i in range(n - 2):
            d[i, i] = 1.0
            d[i, i + 1] = -2.0
            d[i, i + 2] = 1.0
    return d / h ** 2


def optimize_min_curvature(problem: RacelineProblem, kkt_tol: float = 1e-6,
                           max_iter: int = 4000) -> np.ndarray:
    """Lateral offsets minimizing total squared (linearized) curvature.

    The curvature of the offset path is linearized as the second difference of
    positions plus offset-times-normal; the resulting box QP is solved with
    projected gradient and Barzilai-Borwein steps. For unclosed horizons the
    first and last two offsets stay 0.
    """
    pts = problem.points
    n = len(pts)
    if n < 5:
        raise ValueError("need at least 5 reference points")
    seg = np.diff(pts, axis=0)
    h = float(np.mean(np.hypot(seg[:, 0], seg[:, 1])))
    d = _second_difference(n, h, problem.closed)
    a = np.vstack([d * problem.normals[:, 0], d * problem.normals[:, 1]])
    b = np.concatenate([d @ pts[:, 0], d @ pts[:, 1]])
    hess = 2.0 * (a.T @ a) + 1e-9 * np.eye(n)
    grad0 = 2.0 * (a.T @ b)

    lo = problem.lower.copy()
    hi = problem.upper.copy()
    if not problem.closed:
        lo[:2] = hi[:2] = 0.0
        lo[-2:] = hi[-2:] = 0.0

    def _polish(x):
        """Exact solve on the free set; keeps x when the polish leaves the box."""
        g = hess @ x + grad0
        at_lo = (x <= lo + 1e-9) & (g > 0)
        at_hi = (x >= hi - 1e-9) & (g < 0)
        clamped = at_lo | at_hi | (hi - lo < 1e-12)
        free = ~clamped
        if not np.any(free):
            return x
        xa = np.where(hi - lo < 1e-12, lo, np.where(at_lo, lo, hi))
        rhs = -(grad0[free] + hess[np.ix_(free, clamped)] @ xa[clamped])
        try:
            xf = np.linalg.solve(hess[np.ix_(free, free)], rhs)
        except np.linalg.LinAlgError:
            return x
        cand = x.copy()
        cand[clamped] = xa[clamped]
        cand[free] = xf
        if np.all(cand >= lo - 1e-9) and np.all(cand <= hi + 1e-9):
            return np.clip(cand, lo, hi)
        return x

    def _kkt(x):
        g = hess @ x + grad0
        return float(np.max(np.abs(x - np.clip(x - g, lo, hi))))

    x = np.zeros(n)
    g = hess @ x + grad0
    step = 1.0 / (np.linalg.norm(hess, ord=2) + 1e-12)
    x_prev, g_prev = x.copy(), g.copy()
    for it in range(max_iter):
        x_new = np.clip(x - step * g, lo, hi)
        g_new = hess @ x_new + grad0
        kkt = np.max(np.abs(x_new - np.clip(x_new - g_new, lo, hi)))
        if kkt < kkt_tol:
            return _polish(x_new)
        if it % 25 == 24:
            # the projection iteration identifies the active set quickly; an
            # exact solve over the free set usually finishes the job
            polished = _polish(x_new)
            if _kkt(polished) < kkt_tol:
                return polished
        dx = x_new - x_prev
        dg = g_new - g_prev
        denom = float(dx @ dg)
        step = float(dx @ dx) / denom if denom > 1e-30 else step
        step = min(max(step, 1e-12), 1e6)
        x_prev, g_prev = x_new, g_new
        x, g = x_new, g_new
    # iteration cap: return the best feasible iterate (projection keeps x feasible)
    return _polish(x)


def curvature_objective(problem: RacelineProblem, alpha) -> float:
    """Total squared linearized curvature for lateral offsets alpha (oracle hook)."""
    pts = problem.points + np.asarray(alpha)[:, None] * problem.normals
    seg = np.diff(problem.points, axis=0)
    h = float(np.mean(np.hypot(seg[:, 0], seg[:, 1])))
    d = _second_difference(len(pts), h, problem.closed)
    return float(np.sum((d @ pts[:, 0]) ** 2) + np.sum((d @ pts[:, 1]) ** 2))


def raceline_path(problem: RacelineProblem, alpha) -> SplinePath:
    pts = problem.points + np.asarray(alpha)[:, None] * problem.normals
    return fit_spline(pts, closed=problem.closed)


# ---------- velocity planning ----------

def plan_velocity(path: SplinePath, p: GgsParams, v_start: float = 0.0,
                  v_end: float | None = None, sample_ds: float = 0.5) -> TrajectoryProfile:
    """Three-pass speed profile: curvature cap, drive-limited forward pass,
    brake-limited backward pass; longitudinal headroom from the GG ellipse.
    """
    L = path.total_length
    if L <= 0:
        raise ValueError("path has zero length")
    closed = path.closed
    m = max(int(math.ceil(L / sample_ds)) + (0 if closed else 1), 2)
    s = np.linspace(0.0, L, m, endpoint=not closed)
    ds = L / m if closed else s[1] - s[0]
    _, _, kappa = path.query(s)
    kap = np.abs(kappa)

    v_cap = _top_speed(p)
    v = np.full(m, v_cap)
    for i in range(m):
        if kap[i] < 1e-9:
            continue
        vi = v_cap
        for _ in range(10):
            _, _, ay = gg_envelope(vi, p)
            v_new = min(math.sqrt(ay / kap[i]), v_cap)
            if abs(v_new - vi) < 1e-3:
                vi = v_new
                break
            vi = v_new
        v[i] = vi

    def _accel(w: float, kappa_i: float, braking: bool) -> float:
        """Ellipse-remaining longitudinal accel at squared speed w."""
        vv = math.sqrt(max(w, 0.0))
        ax_d, ax_b, ay = gg_envelope(vv, p)
        ay_used = w * kappa_i
        headroom = max(0.0, 1.0 - (ay_used / max(ay, 1e-9)) ** 2)
        return (ax_b if braking else max(ax_d, 0.0)) * math.sqrt(headroom)

    def _advance(v0, kappa_i, braking: bool) -> float:
        """Reachable speed after ds; midpoint substeps sized so the kinetic term
        grows a bounded fraction per step (the power envelope is steep near 0).
        """
        w = v0 * v0
        remaining = ds
        while remaining > 1e-12:
            ax0 = _accel(w, kappa_i, braking)
            if ax0 <= 1e-12:
                break
            h = min(remaining, max(1e-3, 0.05 * max(w, 1.0) / (2.0 * ax0)))
            w_mid = max(w + ax0 * h, 0.0)
            ax_mid = _accel(w_mid, kappa_i, braking)
            w = max(w + 2.0 * ax_mid * h, 0.0)
            remaining -= h
        return math.sqrt(w)

    def forward(v):
        v = v.copy()
        if not closed:
            v[0] = min(v[0], v_start)
        rng = range(m) if closed else range(m - 1)
        laps = 2 if closed else 1
        for _ in range(laps):
            for i in rng:
                j = (i + 1) % m
                v[j] = min(v[j], _advance(v[i], kap[i], braking=False))
        return v

    def backward(v):
        v = v.copy()
        if not closed and v_end is not None:
            v[-1] = min(v[-1], v_end)
        rng = range(m - 1, -1, -1) if closed else range(m - 1, 0, -1)
        laps = 2 if closed else 1
        for _ in range(laps):
            for i in rng:
                j = (i - 1) % m
                v[j] = min(v[j], _advance(v[i], kap[i], braking=True))
        return v

    v = backward(forward(v))
    v_mid = 0.5 * (v + np.roll(v, -1)) if closed else 0.5 * (v[:-1] + v[1:])
    v_mid = np.maximum(v_mid, 1e-3)
    duration = float(np.sum(ds / v_mid))
    return TrajectoryProfile(path=path, s=s, v=v, duration=duration)
