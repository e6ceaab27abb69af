"""Telemetry streams (CSV per subsystem), run summary, determinism hash, and
small self-contained SVG renderers for the track map and GG scatter.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

PLANT_HEADER = ("t,x,y,psi,vx,vy,yaw_rate,ax,ay,steer_actual,"
                "w_fl,w_fr,w_rl,w_rr")
CONTROL_HEADER = ("t,steer_cmd,steer_actual,f_fl,f_fr,f_rl,f_rr,mz,fx_total,"
                  "v_ref,v_est,psidot_ref,psidot_meas,lat_err,mpc_ms")
SLAM_HEADER = "t,x_est,y_est,psi_est,n_landmarks,chi2,opt_ms"
PLAN_HEADER = "t,path_length,n_control_points,planned_time,raceline,plan_ms"


class TelemetryWriter:
    """Buffered CSV streams; numbers are written with fixed precision so the
    determinism hash is a function of the trajectory alone.
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._streams = {
            "plant": [PLANT_HEADER],
            "control": [CONTROL_HEADER],
            "slam": [SLAM_HEADER],
            "plan": [PLAN_HEADER],
        }

    def row(self, stream: str, values) -> None:
        parts = []
        for v in values:
            if isinstance(v, float):
                if not math.isfinite(v):
                    raise ValueError(f"non-finite telemetry value in {stream}")
                parts.append(f"{v:.9g}")
            else:
                parts.append(str(v))
        self._streams[stream].append(",".join(parts))

    def flush(self) -> None:
        for name, lines in self._streams.items():
            (self.out_dir / f"{name}.csv").write_text("\n".join(lines) + "\n",
                                                      encoding="utf-8")

    def determinism_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self._streams):
            h.update(("\n".join(self._streams[name])).encode("utf-8"))
        return h.hexdigest()


def write_summary(out_dir, values: dict) -> None:
    lines = [f"{k} = {v}" for k, v in values.items()]
    (Path(out_dir) / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_summary(out_dir) -> dict:
    out = {}
    for line in (Path(out_dir) / "summary.txt").read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_map_csv(path, lmap) -> None:
    lines = ["id,x,y,color,cov_xx,cov_xy,cov_yy"]
    for lm in sorted(lmap.landmarks(), key=lambda l: l.id):
        c = lm.covariance
        lines.append(f"{lm.id},{lm.position[0]:.9f},{lm.position[1]:.9f},"
                     f"{lm.color.value},{c[0, 0]:.9e},{c[0, 1]:.9e},{c[1, 1]:.9e}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_map_csv(path):
    """Returns (positions (n,2), colors list, covariances (n,2,2))."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    pos, colors, covs = [], [], []
    for line in lines:
        if not line.strip():
            continue
        p = line.split(",")
        pos.append([float(p[1]), float(p[2])])
        colors.append(p[3])
        covs.append([[float(p[4]), float(p[5])], [float(p[5]), float(p[6])]])
    return np.array(pos), colors, np.array(covs)


def write_path_csv(path, profile) -> None:
    """Planned path dump: s,x,y,heading,curvature,v."""
    lines = ["s,x,y,heading,curvature,v"]
    pos, heading, curv = profile.path.query(profile.s)
    for i, s in enumerate(profile.s):
        lines.append(f"{s:.4f},{pos[i][0]:.6f},{pos[i][1]:.6f},"
                     f"{heading[i]:.6f},{curv[i]:.8f},{profile.v[i]:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------- minimal SVG output ----------

def _svg_header(w, h):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">\n<rect width="100%" height="100%" fill="white"/>\n')


def render_track_svg(path, cones, driven_xy=None, planned_xy=None, scale=6.0) -> None:
    pts = np.array([c.position for c in cones])
    lo = pts.min(axis=0) - 5
    hi = pts.max(axis=0) + 5
    size = (hi - lo) * scale

    def tx(p):
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    colors = {"blue": "#1f4fff", "yellow": "#e0b000", "orange_small": "#ff7722",
              "orange_big": "#cc4400", "unknown": "#888888"}
    out = [_svg_header(size[0], size[1])]
    if driven_xy is not None and len(driven_xy) > 1:
        d = " ".join(f"{tx(p)[0]:.1f},{tx(p)[1]:.1f}" for p in driven_xy)
        out.append(f'<polyline points="{d}" fill="none" stroke="#d02020" stroke-width="1.5"/>')
    if planned_xy is not None and len(planned_xy) > 1:
        d = " ".join(f"{tx(p)[0]:.1f},{tx(p)[1]:.1f}" for p in planned_xy)
        out.append(f'<polyline points="{d}" fill="none" stroke="#20a020" '
                   f'stroke-width="1" stroke-dasharray="4 3"/>')
    for c in cones:
        x, y = tx(c.position)
        out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.2" '
                   f'fill="{colors[c.color.value]}"/>')
    out.append("</svg>\n")
    Path(path).write_text("\n".join(out), encoding="utf-8")


def render_gg_svg(path, ax_vals, ay_vals, ax_limit, ay_limit, g=9.81) -> None:
    """GG scatter (lateral vs longitudinal acceleration) with the target ellipse."""
    size = 420
    half = size / 2
    span = max(2.0 * g, 1.2 * ax_limit, 1.2 * ay_limit)
    k = half / span

    out = [_svg_header(size, size)]
    out.append(f'<line x1="0" y1="{half}" x2="{size}" y2="{half}" stroke="#ccc"/>')
    out.append(f'<line x1="{half}" y1="0" x2="{half}" y2="{size}" stroke="#ccc"/>')
    out.append(f'<ellipse cx="{half}" cy="{half}" rx="{ay_limit * k:.1f}" '
               f'ry="{ax_limit * k:.1f}" fill="none" stroke="black" stroke-width="1.5"/>')
    for ax_v, ay_v in zip(ax_vals, ay_vals):
        x = half + ay_v * k
        y = half - ax_v * k
        out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="1.2" fill="#e0b000" fill-opacity="0.5"/>')
    out.append("</svg>\n")
    Path(path).write_text("\n".join(out), encoding="utf-8")
