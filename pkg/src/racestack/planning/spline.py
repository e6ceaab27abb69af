"""Parametric cubic splines fit via the Thomas algorithm (TDMA), with arc-length
tables built by adaptive Gauss quadrature so position/heading/curvature can be
queried by distance along the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ZeroPivot(Exception):
    """Tridiagonal elimination hit a zero pivot."""


class OutOfRange(Exception):
    """Arc-length query outside [0, total_length]."""


def tdma_solve(sub, diag, sup, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination / back substitution.

    sub[i] multiplies x[i] in row i+1 (length n-1), sup[i] multiplies x[i+1] in
    row i (length n-1).
    """
    a = np.asarray(sub, dtype=float)
    b = np.asarray(diag, dtype=float).copy()
    c = np.asarray(sup, dtype=float)
    d = np.asarray(rhs, dtype=float).copy()
    n = len(b)
    if len(a) != n - 1 or len(c) != n - 1 or len(d) != n:
        raise ValueError("inconsistent tridiagonal system sizes")
    for i in range(1, n):
        if b[i - 1] == 0.0:
            raise ZeroPivot(f"zero pivot at row {i - 1}")
        w = a[i - 1] / b[i - 1]
        b[i] -= w * c[i - 1]
        d[i] -= w * d[i - 1]
    if b[n - 1] == 0.0:
        raise ZeroPivot(f"zero pivot at row {n - 1}")
    x = np.empty(n)
    x[n - 1] = d[n - 1] / b[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i]
    return x


def _cyclic_tdma(sub, diag, sup, corner_lo, corner_hi, rhs) -> np.ndarray:
    """Cyclic tridiagonal solve (Sherman-Morrison over two tdma_solve calls).

    corner_lo is the (0, n-1) entry, corner_hi the (n-1, 0) entry.
    """
    b = np.asarray(diag, dtype=float).copy()
    n = len(b)
    gamma = -b[0]
    b[0] -= gamma
    b[n - 1] -= corner_lo * corner_hi / gamma
    y = tdma_solve(sub, b, sup, rhs)
    u = np.zeros(n)
    u[0] = gamma
    u[n - 1] = corner_hi
    z = tdma_solve(sub, b, sup, u)
    factor = (y[0] + corner_lo * y[n - 1] / gamma) / (1.0 + z[0] + corner_lo * z[n - 1] / gamma)
    return y - factor * z


# 5-point Gauss-Legendre on [0, 1]
_GL_X = 0.5 * (1.0 + np.array([-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640]))
_GL_W = 0.5 * np.array([0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                        0.4786286704993665, 0.2369268850561891])


@dataclass
class SplinePath:
    """Piecewise parametric cubic (x(t), y(t)) with an arc-length lookup table.

    Coefficients are per segment in local parameter tau in [0, h_i]:
    x = cx[i,0] + cx[i,1]*tau + cx[i,2]*tau^2 + cx[i,3]*tau^3.
    """

    knots: np.ndarray        # (n+1,) chord parameter at control points
    coef_x: np.ndarray       # (n, 4)
    coef_y: np.ndarray       # (n, 4)
    closed: bool
    s_knots: np.ndarray = field(default=None)   # arc length at control points
    _tau_table: np.ndarray = field(default=None, repr=False)
    _s_table: np.ndarray = field(default=None, repr=False)

    @property
    def total_length(self) -> float:
        return float(self.s_knots[-1])

    @property
    def n_segments(self) -> int:
        return len(self.coef_x)

    # -- evaluation in the chord parameter --

    def _locate_t(self, t):
        t = np.asarray(t, dtype=float)
        seg = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.n_segments - 1)
        tau = t - self.knots[seg]
        return seg, tau

    def eval_t(self, t, order: int = 0):
        seg, tau = self._locate_t(t)
        cx, cy = self.coef_x[seg], self.coef_y[seg]
        if order == 0:
            x = cx[..., 0] + tau * (cx[..., 1] + tau * (cx[..., 2] + tau * cx[..., 3]))
            y = cy[..., 0] + tau * (cy[..., 1] + tau * (cy[..., 2] + tau * cy[..., 3]))
        elif order == 1:
            x = cx[..., 1] + tau * (2 * cx[..., 2] + 3 * tau * cx[..., 3])
            y = cy[..., 1] + tau * (2 * cy[..., 2] + 3 * tau * cy[..., 3])
        elif order == 2:
            x = 2 * cx[..., 2] + 6 * tau * cx[..., 3]
            y = 2 * cy[..., 2] + 6 * tau * cy[..., 3]
        else:
            raise ValueError("order must be 0, 1 or 2")
        return np.stack([x, y], axis=-1)

    def _speed_t(self, t):
        d = self.eval_t(t, order=1)
        return np.hypot(d[..., 0], d[..., 1])

    # -- arc length <-> parameter --

    def _t_from_s(self, s):
        """Invert the arc-length table (table seed plus Newton refinement)."""
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self._s_table, s, side="right") - 1, 0,
                      len(self._s_table) - 2)
        s0, s1 = self._s_table[idx], self._s_table[idx + 1]
        t0, t1 = self._tau_table[idx], self._tau_table[idx + 1]
        frac = np.where(s1 > s0, (s - s0) / np.maximum(s1 - s0, 1e-300), 0.0)
        t = t0 + frac * (t1 - t0)
        for _ in range(3):
            # s(t) within the cell via 5-pt Gauss from the table node
            span = t - t0
            nodes = t0[..., None] + span[..., None] * _GL_X
            sp = self._speed_t(nodes)
            s_est = s0 + span * np.sum(sp * _GL_W, axis=-1)
            v = np.maximum(self._speed_t(t), 1e-12)
            t = np.clip(t - (s_est - s) / v, self.knots[0], self.knots[-1])
        return t

    def query(self, s):
        """(position (…,2), heading, curvature) at arc length s (wraps when closed)."""
        s_arr = np.asarray(s, dtype=float)
        L = self.total_length
        if self.closed:
            s_arr = np.mod(s_arr, L)
        else:
            if np.any(s_arr < -1e-9) or np.any(s_arr > L + 1e-9):
                raise OutOfRange(f"s outside [0, {L:.3f}]")
            s_arr = np.clip(s_arr, 0.0, L)
        t = self._t_from_s(s_arr)
        pos = self.eval_t(t, 0)
        d1 = self.eval_t(t, 1)
        d2 = self.eval_t(t, 2)
        heading = np.arctan2(d1[..., 1], d1[..., 0])
        sp2 = d1[..., 0] ** 2 + d1[..., 1] ** 2
        curv = (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / np.maximum(sp2, 1e-12) ** 1.5
        return pos, heading, curv

    def project(self, xy, s_hint: float | None = None) -> float:
        """Arc length of the point on the path closest to xy."""
        q = np.asarray(xy, dtype=float)
        nodes = self._tau_table
        pts = self.eval_t(nodes, 0)
        d2 = np.sum((pts - q) ** 2, axis=-1)
        if s_hint is not None and not self.closed:
            # keep the search local to avoid snapping across nearby path folds
            mask = np.abs(self._s_table - s_hint) > 30.0
            if not np.all(mask):
                d2 = np.where(mask, np.inf, d2)
        k = int(np.argmin(d2))
        t = float(nodes[k])
        lo = float(nodes[max(k - 1, 0)])
        hi = float(nodes[min(k + 1, len(nodes) - 1)])
        for _ in range(30):
            p = self.eval_t(t, 0)
            dd1 = self.eval_t(t, 1)
            dd2 = self.eval_t(t, 2)
            g = float((p - q) @ dd1)
            h = float(dd1 @ dd1 + (p - q) @ dd2)
            if h <= 0:
                break
            step = g / h
            t_new = min(max(t - step, lo), hi)
            if abs(t_new - t) < 1e-12:
                t = t_new
                break
            t = t_new
        idx = np.clip(np.searchsorted(self._tau_table, t, side="right") - 1, 0,
                      len(self._tau_table) - 2)
        t0, s0 = self._tau_table[idx], self._s_table[idx]
        span = t - t0
        nodes_q = t0 + span * _GL_X
        s = s0 + span * float(np.sum(self._speed_t(nodes_q) * _GL_W))
        return float(np.clip(s, 0.0, self.total_length))


def _spline_coefficients(vals: np.ndarray, h: np.ndarray, closed: bool) -> np.ndarray:
    """Per-segment cubic coefficients for one coordinate via second-derivative solve."""
    n = len(h)  # segments
    if closed:
        rhs = np.empty(n)
        diag = np.empty(n)
        sub = np.empty(n - 1)
        sup = np.empty(n - 1)
        ext = np.append(vals, vals[0])
        for i in range(n):
            hm = h[i - 1]
            hi = h[i]
            prev = vals[(i - 1) % n]
            diag[i] = 2.0 * (hm + hi)
            rhs[i] = 6.0 * ((ext[i + 1] - vals[i]) / hi - (vals[i] - prev) / hm)
        sub[:] = h[:-1]
        sup[:] = h[:-1]
        m = _cyclic_tdma(sub, diag, sup, h[-1], h[-1], rhs)
        m_ext = np.append(m, m[0])
        y = ext
    else:
        npts = n + 1
        m = np.zeros(npts)
        if npts > 2:
            diag = 2.0 * (h[:-1] + h[1:])
            sub = h[1:-1]
            sup = h[1:-1]
            rhs = 6.0 * ((vals[2:] - vals[1:-1]) / h[1:] - (vals[1:-1] - vals[:-2]) / h[:-1])
            m[1:-1] = tdma_solve(sub, diag, sup, rhs)
        m_ext = m
        y = vals
    coef = np.empty((n, 4))
    coef[:, 0] = y[:-1]
    coef[:, 1] = (y[1:] - y[:-1]) / h - h * (2.0 * m_ext[:-1] + m_ext[1:]) / 6.0
    coef[:, 2] = m_ext[:-1] / 2.0
    coef[:, 3] = (m_ext[1:] - m_ext[:-1]) / (6.0 * h)
    return coef


def fit_spline(points, closed: bool = False, arc_rel_tol: float = 1e-6) -> SplinePath:
    """Chord-length parameterized interpolating cubic spline through >= 3 points.

    Unclosed paths get natural (zero second derivative) ends; closed paths wrap
    with periodic continuity. The arc-length table uses per-segment Gauss
    quadrature refined until the relative change is below arc_rel_tol.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 control points")
    if closed and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    d = np.diff(pts, axis=0)
    h = np.hypot(d[:, 0], d[:, 1])
    if closed:
        h = np.append(h, math.hypot(*(pts[0] - pts[-1])))
    if np.any(h <= 1e-9):
        raise ValueError("duplicate consecutive control points")
    knots = np.concatenate([[0.0], np.cumsum(h)])
    coef_x = _spline_coefficients(pts[:, 0], h, closed)
    coef_y = _spline_coefficients(pts[:, 1], h, closed)
    path = SplinePath(knots=knots, coef_x=coef_x, coef_y=coef_y, closed=closed)
    _build_arc_table(path, arc_rel_tol)
    return path


def _build_arc_table(path: SplinePath, rel_tol: float) -> None:
    n = path.n_segments
    h = np.diff(path.knots)
    k_sub = 4
    prev = None
    while True:
        # tau nodes: k_sub subintervals per segment, 5-pt Gauss in each
        edges = path.knots[:-1, None] + h[:, None] * np.linspace(0.0, 1.0, k_sub + 1)
        a = edges[:, :-1]
        span = edges[:, 1:] - a
        nodes = a[..., None] + span[..., None] * _GL_X  # (n, k_sub, 5)
        sp = path._speed_t(nodes)
        seg_sub = span * np.sum(sp * _GL_W, axis=-1)    # (n, k_sub)
        seg_len = seg_sub.sum(axis=1)
        if prev is not None:
            if np.all(np.abs(seg_len - prev) <= rel_tol * np.maximum(seg_len, 1e-12)):
                break
        if k_sub >= 64:
            break
        prev = seg_len
        k_sub *= 2
    tau_table = np.concatenate([[path.knots[0]], edges[:, 1:].ravel()])
    s_table = np.concatenate([[0.0], np.cumsum(seg_sub.ravel())])
    path._tau_table = tau_table
    path._s_table = s_table
    path.s_knots = s_table[::k_sub].copy()


def spline_query(path: SplinePath, s: float):
    """(position (2,), heading rad, curvature 1/m) at arc length s."""
    pos, heading, curv = path.query(float(s))
    return pos, float(heading), float(curv)
