"""Batched exact triangle-triangle distance.

The minimum distance between two triangles is attained either between a
pair of edges or between a vertex of one and the interior of the other,
unless the triangles intersect, in which case it is zero.  Non-coplanar
intersection always involves an edge of one triangle passing through the
other, so a batched segment-triangle intersection test completes the
picture; coplanar contact is already caught by the distance terms.
"""
from __future__ import annotations

import numpy as np

_EPS = 1e-14


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def seg_seg_sqdist(p1, q1, p2, q2):
    """Squared distance between segments [p1,q1] and [p2,q2], batched (N,3)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b

    with np.errstate(divide="ignore", invalid="ignore"):
        s_gen = np.where(denom > _EPS, np.clip((b * f - c * e) / np.where(denom > _EPS, denom, 1.0), 0.0, 1.0), 0.0)
        e_safe = np.where(e > _EPS, e, 1.0)
        a_safe = np.where(a > _EPS, a, 1.0)
        t_gen = np.clip((b * s_gen + f) / e_safe, 0.0, 1.0)
        s_gen = np.clip((b * t_gen - c) / a_safe, 0.0, 1.0)

        # degenerate segments
        s_a0 = np.zeros_like(a)
        t_a0 = np.clip(f / e_safe, 0.0, 1.0)
        s_e0 = np.clip(-c / a_safe, 0.0, 1.0)
        t_e0 = np.zeros_like(a)

    a_deg = a <= _EPS
    e_deg = e <= _EPS
    s = np.where(a_deg, s_a0, np.where(e_deg, s_e0, s_gen))
    t = np.where(a_deg, t_a0, np.where(e_deg, t_e0, t_gen))
    s = np.where(a_deg & e_deg, 0.0, s)
    t = np.where(a_deg & e_deg, 0.0, t)

    diff = (p1 + s[..., None] * d1) - (p2 + t[..., None] * d2)
    return _dot(diff, diff)


def point_tri_sqdist(p, a, b, c):
    """Squared distance from point p to triangle (a, b, c), batched (N,3)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = p - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = p - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        div = lambda n, d: n / np.where(np.abs(d) > _EPS, d, 1.0)  # noqa: E731
        v_ab = div(d1, d1 - d3)[..., None]
        w_ac = div(d2, d2 - d6)[..., None]
        w_bc = div(d4 - d3, (d4 - d3) + (d5 - d6))[..., None]
        denom = div(np.ones_like(va), va + vb + vc)
        v_in = (vb * denom)[..., None]
        w_in = (vc * denom)[..., None]

    cond = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
    ]
    closest_candidates = [
        a,
        b,
        a + v_ab * ab,
        c,
        a + w_ac * ac,
        b + w_bc * (c - b),
    ]
    closest = a + v_in * ab + w_in * ac  # interior fallback
    for cnd, cand in zip(reversed(cond), reversed(closest_candidates)):
        closest = np.where(cnd[..., None], cand, closest)
    diff = p - closest
    return _dot(diff, diff)


def seg_tri_intersects(o, d, v0, v1, v2):
    """Whether segment [o, o+d] crosses triangle (v0,v1,v2), batched.

    Parallel/coplanar configurations return False here; coplanar contact
    is handled by the distance terms.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    p = np.cross(d, e2)
    det = _dot(e1, p)
    ok = np.abs(det) > _EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / np.where(ok, det, 1.0)
    s = o - v0
    u = _dot(s, p) * inv
    q = np.cross(s, e1)
    v = _dot(d, q) * inv
    t = _dot(e2, q) * inv
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)


def tri_tri_distance_batch(tri_a: np.ndarray, tri_b: np.ndarray) -> np.ndarray:
    """Exact minimum distances for paired triangles (N,3,3) x (N,3,3)."""
    tri_a = np.asarray(tri_a, dtype=float)
    tri_b = np.asarray(tri_b, dtype=float)
    n = tri_a.shape[0]
    best = np.full(n, np.inf)

    for i in range(3):
        p1, q1 = tri_a[:, i], tri_a[:, (i + 1) % 3]
        for j in range(3):
            p2, q2 = tri_b[:, j], tri_b[:, (j + 1) % 3]
            best = np.minimum(best, seg_seg_sqdist(p1, q1, p2, q2))
    for i in range(3):
        best = np.minimum(best, point_tri_sqdist(tri_a[:, i], tri_b[:, 0], tri_b[:, 1], tri_b[:, 2]))
        best = np.minimum(best, point_tri_sqdist(tri_b[:, i], tri_a[:, 0], tri_a[:, 1], tri_a[:, 2]))

    hit = np.zeros(n, dtype=bool)
    for i in range(3):
        o_a = tri_a[:, i]
        d_a = tri_a[:, (i + 1) % 3] - o_a
        hit |= seg_tri_intersects(o_a, d_a, tri_b[:, 0], tri_b[:, 1], tri_b[:, 2])
        o_b = tri_b[:, i]
        d_b = tri_b[:, (i + 1) % 3] - o_b
        hit |= seg_tri_intersects(o_b, d_b, tri_a[:, 0], tri_a[:, 1], tri_a[:, 2])

    dist = np.sqrt(best)
    dist[hit] = 0.0
    return dist


def aabb_pair_distance(lo_a, hi_a, lo_b, hi_b):
    """Lower bound on distance between contents of two AABBs, batched."""
    gap = np.maximum(0.0, np.maximum(lo_a - hi_b, lo_b - hi_a))
    return np.sqrt(_dot(gap, gap))
