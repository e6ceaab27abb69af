"""Independent brute-force oracles shared by the unit and acceptance tests."""

import itertools
from fractions import Fraction

import numpy as np


def orient_exact(a, b, c):
    ax, ay, bx, by, cx, cy = map(Fraction, (a[0], a[1], b[0], b[1], c[0], c[1]))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def incircle_exact(a, b, c, d):
    """For CCW (a, b, c): +1 if d strictly inside the circumcircle (exact)."""
    ax, ay, bx, by, cx, cy, dx, dy = map(
        Fraction, (a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]))
    r0 = (ax - dx, ay - dy, (ax - dx) ** 2 + (ay - dy) ** 2)
    r1 = (bx - dx, by - dy, (bx - dx) ** 2 + (by - dy) ** 2)
    r2 = (cx - dx, cy - dy, (cx - dx) ** 2 + (cy - dy) ** 2)
    det = (r0[0] * (r1[1] * r2[2] - r2[1] * r1[2])
           - r0[1] * (r1[0] * r2[2] - r2[0] * r1[2])
           + r0[2] * (r1[0] * r2[1] - r2[0] * r1[1]))
    return (det > 0) - (det < 0)


def brute_force_delaunay_exact(pts):
    """O(n^4) fully exact Delaunay triangle set. Slow; use on small inputs."""
    n = len(pts)
    out = set()
    for (i, j, k) in itertools.combinations(range(n), 3):
        a, b, c = pts[i], pts[j], pts[k]
        o = orient_exact(a, b, c)
        if o == 0:
            continue
        if o < 0:
            b, c = c, b
        if all(incircle_exact(a, b, c, pts[m]) <= 0
               for m in range(n) if m not in (i, j, k)):
            out.add(frozenset((i, j, k)))
    return out


def brute_force_delaunay(pts):
    """Vectorized empty-circumcircle oracle with exact fallback for near-ties."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    triples = np.array(list(itertools.combinations(range(n), 3)))
    a = pts[triples[:, 0]]
    b = pts[triples[:, 1]]
    c = pts[triples[:, 2]]
    # circumcenter from the 2x2 linear system
    d = 2.0 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
               - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    degenerate = np.abs(d) < 1e-12 * (np.abs(b - a).sum(axis=1) + np.abs(c - a).sum(axis=1)) ** 2
    d_safe = np.where(degenerate, 1.0, d)
    b2 = ((b - a) ** 2).sum(axis=1)
    c2 = ((c - a) ** 2).sum(axis=1)
    ux = a[:, 0] + ((c[:, 1] - a[:, 1]) * b2 - (b[:, 1] - a[:, 1]) * c2) / d_safe
    uy = a[:, 1] + ((b[:, 0] - a[:, 0]) * c2 - (c[:, 0] - a[:, 0]) * b2) / d_safe
    r2 = (a[:, 0] - ux) ** 2 + (a[:, 1] - uy) ** 2
    # distance of every point to every circumcenter
    dx = pts[None, :, 0] - ux[:, None]
    dy = pts[None, :, 1] - uy[:, None]
    dist2 = dx * dx + dy * dy
    margin = 1e-9 * (dist2 + r2[:, None] + 1.0)
    inside = dist2 < r2[:, None] - margin
    uncertain = np.abs(dist2 - r2[:, None]) <= margin
    # own vertices never count
    rows = np.arange(len(triples))[:, None]
    inside[rows, triples] = False
    uncertain[rows, triples] = False

    out = set()
    for t in range(len(triples)):
        if degenerate[t]:
            if orient_exact(a[t], b[t], c[t]) == 0:
                continue
        if inside[t].any():
            continue
        ok = True
        if uncertain[t].any():
            aa, bb, cc = a[t], b[t], c[t]
            if orient_exact(aa, bb, cc) < 0:
                bb, cc = cc, bb
            for m in np.flatnonzero(uncertain[t]):
                if incircle_exact(aa, bb, cc, pts[m]) > 0:
                    ok = False
                    break
        if ok:
            i, j, k = triples[t]
            if orient_exact(pts[i], pts[j], pts[k]) != 0:
                out.add(frozenset((int(i), int(j), int(k))))
    return out
