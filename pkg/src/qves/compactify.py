"""Poincaré compactification on the unit sphere.

The plane maps to the northern hemisphere via (x, y) -> (x, y, 1)/w with
w = sqrt(1 + x^2 + y^2); the equator Z = 0 carries the points at infinity.
After rescaling time by Z the induced field extends to the polynomial field

    X' = P (Y^2 + Z^2) - Q X Y
    Y' = Q (X^2 + Z^2) - P X Y
    Z' = -Z (P X + Q Y)

with P = p2(X,Y) + p1(X,Y) Z + p0 Z^2 (Q likewise), for which the unit
sphere is exactly invariant.  The Poincaré disc is the orthogonal projection
(X, Y) of the closed hemisphere Z >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .families import QuadSystem


def to_sphere(x: float, y: float) -> np.ndarray:
    w = math.sqrt(1.0 + x * x + y * y)
    return np.array([x / w, y / w, 1.0 / w])


def from_sphere(pt) -> tuple[float, float]:
    X, Y, Z = pt
    if Z <= 0:
        raise ValueError("point at infinity has no affine image")
    return X / Z, Y / Z


def direction_point(direction: tuple[float, float], sign: int = 1) -> np.ndarray:
    """Equator point of a projective direction [X:Y]; sign picks the endpoint."""
    u, v = direction
    n = math.hypot(u, v)
    return np.array([sign * u / n, sign * v / n, 0.0])


def sphere_field(sys: QuadSystem):
    """Vectorized compactified field; accepts (..., 3) arrays."""
    p0, (p10, p01), (p20, p11, p02) = sys.p_parts()
    q0, (q10, q01), (q20, q11, q02) = sys.q_parts()

    def field(pts):
        pts = np.asarray(pts, dtype=float)
        X = pts[..., 0]
        Y = pts[..., 1]
        Z = pts[..., 2]
        P = (p20 * X * X + p11 * X * Y + p02 * Y * Y) + (p10 * X + p01 * Y) * Z + p0 * Z * Z
        Q = (q20 * X * X + q11 * X * Y + q02 * Y * Y) + (q10 * X + q01 * Y) * Z + q0 * Z * Z
        dX = P * (Y * Y + Z * Z) - Q * X * Y
        dY = Q * (X * X + Z * Z) - P * X * Y
        dZ = -Z * (P * X + Q * Y)
        return np.stack([dX, dY, dZ], axis=-1)

    return field


@dataclass
class OrbitResult:
    points: np.ndarray  # (n, 3) on the sphere
    end_reason: str  # "singularity" | "cycle" | "budget"
    end_index: int | None  # which singularity/cycle was reached
    arc_length: float


def _renorm(pts):
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


def scalar_field(sys: QuadSystem):
    """Plain-float compactified field for single-orbit integration."""
    p0, (p10, p01), (p20, p11, p02) = sys.p_parts()
    q0, (q10, q01), (q20, q11, q02) = sys.q_parts()

    def f(X, Y, Z):
        P = (p20 * X * X + p11 * X * Y + p02 * Y * Y) + (p10 * X + p01 * Y) * Z + p0 * Z * Z
        Q = (q20 * X * X + q11 * X * Y + q02 * Y * Y) + (q10 * X + q01 * Y) * Z + q0 * Z * Z
        return (
            P * (Y * Y + Z * Z) - Q * X * Y,
            Q * (X * X + Z * Z) - P * X * Y,
            -Z * (P * X + Q * Y),
        )

    return f


def integrate_orbit(
    sys: QuadSystem,
    start: np.ndarray,
    forward: bool = True,
    singularities: list[np.ndarray] | None = None,
    cycles: list[np.ndarray] | None = None,
    land_tol=1e-5,
    arc_budget: float = 1e3,
    rtol: float = 1e-7,
    atol: float = 1e-9,
    chunk: float = 4.0,
    keep_every: int = 1,
) -> OrbitResult:
    """Integrate one orbit of the compactified flow by unit-speed arc length.

    Terminates on arrival near a listed singularity (``land_tol`` may be a
    scalar or one tolerance per singularity), within ``2e-3`` of a previously
    found cycle polyline, or at the arc budget.  Chunks that stall (slow
    algebraic convergence into a singular point) terminate on the nearest
    singularity when inside 10x its tolerance.
    """
    f = scalar_field(sys)
    sign = 1.0 if forward else -1.0
    sings = [np.asarray(s, dtype=float) for s in (singularities or [])]
    tols = (
        np.broadcast_to(np.asarray(land_tol, dtype=float), (len(sings),)).astype(float)
        if sings
        else np.zeros(0)
    )
    sx = np.array([s[0] for s in sings])
    sy = np.array([s[1] for s in sings])
    sz = np.array([s[2] for s in sings])

    def rhs(_s, state):
        vx, vy, vz = f(state[0], state[1], state[2])
        n = math.sqrt(vx * vx + vy * vy + vz * vz) + 1e-6
        return (sign * vx / n, sign * vy / n, sign * vz / n)

    def near_event(_t, state):
        if not len(sx):
            return 1.0
        d2 = (sx - state[0]) ** 2 + (sy - state[1]) ** 2 + (sz - state[2]) ** 2
        return float(np.min(d2 - tols * tols))

    near_event.terminal = True
    near_event.direction = -1

    pts = [np.asarray(start, dtype=float)]
    s_done = 0.0
    reason, idx = "budget", None
    state = _renorm(np.asarray(start, dtype=float))
    while s_done < arc_budget:
        span = min(chunk, arc_budget - s_done)
        sol = solve_ivp(
            rhs, (0.0, span), state, method="DOP853", rtol=rtol, atol=atol,
            events=[near_event], dense_output=False, max_step=span,
        )
        seg = sol.y.T[1:]
        stalled_steps = len(sol.t) > 40000
        if len(seg):
            seg = _renorm(seg)
            pts.extend(seg[::keep_every])
            state = seg[-1]
        s_done += sol.t[-1]
        if stalled_steps:
            if sings:
                d = np.array([np.linalg.norm(state - s) for s in sings])
                k = int(np.argmin(d))
                if d[k] < 20 * tols[k]:
                    reason, idx = "singularity", k
                    break
            reason = "budget"
            break
        if sol.status == 1:
            d = np.array([np.linalg.norm(state - s) for s in sings])
            reason, idx = "singularity", int(np.argmin(d / np.maximum(tols, 1e-12)))
            break
        if sol.status < 0 or sol.t[-1] < 0.05 * span:
            if len(sings):
                d = np.array([np.linalg.norm(state - s) for s in sings])
                k = int(np.argmin(d))
                if d[k] < 10 * tols[k]:
                    reason, idx = "singularity", k
                    break
            reason = "budget"
            break
        if cycles and len(seg):
            probe = seg[:: max(1, len(seg) // 40)]
            for k, poly in enumerate(cycles):
                d = np.linalg.norm(probe[:, None, :] - np.atleast_2d(poly)[None, :, :], axis=-1)
                if d.min() < 3e-3:
                    reason, idx = "cycle", k
                    break
            if reason == "cycle":
                break
        if s_done >= arc_budget:
            reason = "budget"
            break
    if reason == "budget" and cycles:
        # a long orbit still hugging a cycle at the end of the budget is
        # spiralling onto it
        for k, poly in enumerate(cycles):
            if np.linalg.norm(np.atleast_2d(poly) - state, axis=-1).min() < 0.05:
                reason, idx = "cycle", k
                break
    return OrbitResult(np.array(pts), reason, idx, s_done)


def batch_march(
    sys: QuadSystem,
    starts: np.ndarray,
    sign: float,
    targets: np.ndarray | None,
    land_tol: float = 2e-4,
    h_min: float = 1e-5,
    h_max: float = 0.08,
    budget: float = 25.0,
    max_steps: int = 4000,
    trap_types: np.ndarray | None = None,
):
    """March a batch of orbits with a fixed-step RK4 on the unit-speed field.

    Returns (outcome, final, arc): outcome[i] is the index of the target the
    orbit landed on (distance < land_tol), or -1.  Orbits that exhaust the
    budget while hovering near an attracting target (slow spirals) are
    assigned to the nearest such target when ``trap_types`` marks it.
    """
    field = sphere_field(sys)
    pts = _renorm(np.array(starts, dtype=float, copy=True))
    n = len(pts)
    outcome = np.full(n, -1, dtype=int)
    arc = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    tpos = targets if targets is not None and len(targets) else None
    for _ in range(max_steps):
        if not alive.any():
            break
        cur = pts[alive]
        if tpos is not None:
            d_t = np.linalg.norm(cur[:, None, :] - tpos[None, :, :], axis=-1)
            dmin = d_t.min(axis=1)
            h = np.clip(dmin / 8.0, h_min, h_max)
        else:
            h = np.full(len(cur), h_max)

        def step(q):
            w = field(q) * sign
            return w / (np.linalg.norm(w, axis=-1, keepdims=True) + 1e-300)

        k1 = step(cur)
        k2 = step(cur + 0.5 * h[:, None] * k1)
        k3 = step(cur + 0.5 * h[:, None] * k2)
        k4 = step(cur + h[:, None] * k3)
        new = _renorm(cur + (h[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        idx = np.where(alive)[0]
        pts[idx] = new
        arc[idx] += h
        if tpos is not None:
            d_t = np.linalg.norm(new[:, None, :] - tpos[None, :, :], axis=-1)
            hit = d_t.min(axis=1) < land_tol
            outcome[idx[hit]] = d_t.argmin(axis=1)[hit]
            alive[idx[hit]] = False
        over = arc[idx] > budget
        alive[idx[over]] = False
    if tpos is not None and trap_types is not None:
        undecided = outcome < 0
        if undecided.any():
            d_t = np.linalg.norm(pts[undecided][:, None, :] - tpos[None, :, :], axis=-1)
            masked = np.where(trap_types[None, :], d_t, np.inf)
            near = masked.min(axis=1) < 0.4
            which = masked.argmin(axis=1)
            ids = np.where(undecided)[0]
            outcome[ids[near]] = which[near]
    return outcome, pts, arc


def ring_classify(
    sys: QuadSystem,
    center: np.ndarray,
    radius: float,
    n_rays: int = 720,
    half_plane: bool = False,
    max_steps: int = 6000,
    arc_budget: float = 12.0,
):
    """Classify short orbits launched from a ring around a singular point.

    Marches every ray forward and backward until it lands on the point
    (distance < 0.05 r) or the arc budget runs out; records the largest
    excursion reached before landing.  Per-ray codes:

        2  converges both ways within a local excursion (elliptic)
        1  converges forward locally (attracting parabolic)
       -1  converges backward locally (repelling parabolic)
        0  neither direction converges locally (hyperbolic)

    plus the raw (fwd, bwd) (landed, excursion) data for finer matching.
    For equator points ``half_plane`` restricts rays to the Z > 0 side.
    """
    center = _renorm(np.asarray(center, dtype=float))
    if half_plane:
        u = np.array([-center[1], center[0], 0.0])
        u /= np.linalg.norm(u)
        v = np.array([0.0, 0.0, 1.0])
        angles = np.linspace(0.0, math.pi, n_rays + 2)[1:-1]
    else:
        a = np.array([0.0, 0.0, 1.0]) if abs(center[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        u = np.cross(center, a)
        u /= np.linalg.norm(u)
        v = np.cross(center, u)
        angles = np.linspace(0.0, 2 * math.pi, n_rays, endpoint=False)
    starts = _renorm(
        center[None, :]
        + radius * (np.cos(angles)[:, None] * u[None, :] + np.sin(angles)[:, None] * v[None, :])
    )
    field = sphere_field(sys)

    def march(sign):
        pts = starts.copy()
        alive = np.ones(len(pts), dtype=bool)
        landed = np.zeros(len(pts), dtype=bool)
        excursion = np.full(len(pts), radius)
        arc = np.zeros(len(pts))
        for _ in range(max_steps):
            if not alive.any():
                break
            cur = pts[alive]
            d = np.linalg.norm(cur - center, axis=-1)
            h = np.clip(d / 15.0, radius / 50.0, 0.03)

            def step(q):
                w = field(q) * sign
                return w / (np.linalg.norm(w, axis=-1, keepdims=True) + 1e-300)

            k1 = step(cur)
            k2 = step(cur + 0.5 * h[:, None] * k1)
            k3 = step(cur + 0.5 * h[:, None] * k2)
            k4 = step(cur + h[:, None] * k3)
            new = _renorm(cur + (h[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
            idx = np.where(alive)[0]
            pts[idx] = new
            dn = np.linalg.norm(new - center, axis=-1)
            excursion[idx] = np.maximum(excursion[idx], dn)
            arc[idx] += h
            conv = dn < 0.05 * radius
            dead = arc[idx] > arc_budget
            landed[idx[conv]] = True
            alive[idx[conv | dead]] = False
        return landed, excursion

    fwd_land, fwd_exc = march(1.0)
    bwd_land, bwd_exc = march(-1.0)
    local = 3.0 * radius
    fwd_loc = fwd_land & (fwd_exc <= local)
    bwd_loc = bwd_land & (bwd_exc <= local)
    codes = np.zeros(len(angles), dtype=int)
    codes[fwd_loc & ~bwd_loc] = 1
    codes[bwd_loc & ~fwd_loc] = -1
    codes[fwd_loc & bwd_loc] = 2
    raw = {
        "fwd_land": fwd_land, "bwd_land": bwd_land,
        "fwd_exc": fwd_exc, "bwd_exc": bwd_exc,
    }
    return codes, angles, raw
