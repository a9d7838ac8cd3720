"""Global phase portrait skeleton on the Poincaré disc.

Separatrices are integrated in the compactified sphere coordinates; the
skeleton records every separatrix with its alpha/omega limits, limit cycles
from return maps, and graphic counts.  The nonalgebraic connection surface is
located by bisection on a signed separatrix miss distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .compactify import (
    OrbitResult,
    direction_point,
    from_sphere,
    integrate_orbit,
    ring_classify,
    sphere_field,
    to_sphere,
)
from .families import Family, FamilyPoint, QuadSystem, instantiate
from .singularities import (
    SingularityRecord,
    finite_singularities,
    infinite_singularities,
    is_certified_center,
    weak_singularity,
)


class SeparatrixMissing(RuntimeError):
    pass


class NoSignChange(RuntimeError):
    pass


LAND_TOL = 1e-5


@dataclass
class SkeletonNode:
    """A singular point of the compactified flow (finite or one equator end)."""

    name: str
    pos: np.ndarray  # sphere coords
    record: SingularityRecord
    side: int = 0  # +1/-1 equator endpoint, 0 finite

    @property
    def is_infinite(self) -> bool:
        return self.side != 0


@dataclass
class Separatrix:
    source: str  # node name (alpha limit)
    target: Optional[str]  # node name, "cycle:k", or None when budget ran out
    points: np.ndarray  # (n, 3) sphere polyline
    flags: tuple[str, ...] = ()
    origin: str = ""  # launch provenance ("eig:f0", "fan:inf0N", ...)

    def disc_polyline(self) -> np.ndarray:
        return self.points[:, :2]


@dataclass
class LimitCycle:
    points: np.ndarray  # (n, 3)
    radius: float
    stability: str
    around: str  # node name of the enclosed focus


@dataclass
class Graphic:
    kind: str  # "nondegenerate" | "degenerate"
    members: tuple[str, ...]  # node/edge names on the walk
    cardinality: str  # "one" | "infinite"
    enclosed: Optional[str] = None


@dataclass
class SeparatrixSkeleton:
    point: FamilyPoint
    nodes: dict[str, SkeletonNode]
    separatrices: list[Separatrix]
    cycles: list[LimitCycle]
    graphics: list[Graphic]
    connection_flags: set[str]
    complex_count: int = 0
    degenerate_kind: Optional[str] = None

    @property
    def complete(self) -> bool:
        return all(s.target is not None for s in self.separatrices)

    def incidence(self, name: str) -> int:
        n = 0
        for s in self.separatrices:
            n += (s.source == name) + (s.target == name)
        return n

    def as_dict(self) -> dict:
        return {
            "point": self.point.as_dict(),
            "nodes": {
                k: {
                    "pos": [float(v) for v in n.pos],
                    "record": n.record.as_dict(),
                    "side": n.side,
                }
                for k, n in sorted(self.nodes.items())
            },
            "separatrices": [
                {
                    "source": s.source,
                    "target": s.target,
                    "flags": list(s.flags),
                    "points": np.asarray(s.points)[:, :2].tolist(),
                }
                for s in self.separatrices
            ],
            "cycles": [
                {
                    "points": c.points[:, :2].tolist(),
                    "stability": c.stability,
                    "around": c.around,
                }
                for c in self.cycles
            ],
            "graphics": [
                {"kind": g.kind, "cardinality": g.cardinality, "enclosed": g.enclosed}
                for g in self.graphics
            ],
            "connection_flags": sorted(self.connection_flags),
            "complex_count": self.complex_count,
            "degenerate_kind": self.degenerate_kind,
        }


def _node_name(kind: str, i: int, side: int = 0) -> str:
    if side == 0:
        return f"f{i}"
    return f"inf{i}{'N' if side > 0 else 'S'}"


def build_nodes(point: FamilyPoint) -> tuple[dict[str, SkeletonNode], int, Optional[str]]:
    nodes: dict[str, SkeletonNode] = {}
    complex_count = 0
    degenerate_kind = None
    if point.is_degenerate:
        from .singularities import degenerate_set

        degenerate_kind = degenerate_set(point)
        finite: list[SingularityRecord] = []
    else:
        finite, complex_count = finite_singularities(point)
        for i, rec in enumerate(finite):
            nodes[_node_name("f", i)] = SkeletonNode(
                _node_name("f", i), to_sphere(*rec.location), rec
            )
    for i, rec in enumerate(infinite_singularities(point)):
        if rec.local_type == "line-at-infinity":
            continue
        for side in (+1, -1):
            name = _node_name("inf", i, side)
            nodes[name] = SkeletonNode(name, direction_point(rec.location, side), rec, side)
    return nodes, complex_count, degenerate_kind


def _equator_arcs(point: FamilyPoint, nodes: dict[str, SkeletonNode]):
    """Directed equator arcs between adjacent infinite nodes (orbits of the flow)."""
    inf_nodes = [(n.pos, name) for name, n in nodes.items() if n.is_infinite]
    if not inf_nodes:
        return []
    sys = instantiate(point)
    f = sphere_field(sys)
    by_angle = sorted(inf_nodes, key=lambda t: math.atan2(t[0][1], t[0][0]))
    arcs = []
    for k in range(len(by_angle)):
        p1, n1 = by_angle[k]
        p2, n2 = by_angle[(k + 1) % len(by_angle)]
        a1 = math.atan2(p1[1], p1[0])
        a2 = math.atan2(p2[1], p2[0])
        if a2 <= a1:
            a2 += 2 * math.pi
        mid = 0.5 * (a1 + a2)
        pm = np.array([math.cos(mid), math.sin(mid), 0.0])
        v = f(pm)
        # tangential direction: positive = counterclockwise
        tang = v @ np.array([-pm[1], pm[0], 0.0])
        if abs(tang) < 1e-14:
            continue  # equator arc of singular points
        if tang > 0:
            arcs.append((n1, n2, a1, a2))
        else:
            arcs.append((n2, n1, a1, a2))
    return arcs


# ----------------------------------------------------------------------------
# Separatrix launching
# ----------------------------------------------------------------------------

def _saddle_launch_dirs(rec: SingularityRecord, sys: QuadSystem):
    """Eigen-directions of a finite elemental saddle; returns (dir, forward)."""
    J = sys.jacobian(*rec.location)
    w, V = np.linalg.eig(J)
    out = []
    for k in range(2):
        lam = w[k].real
        vec = V[:, k].real
        vec = vec / np.linalg.norm(vec)
        for s in (+1, -1):
            out.append((s * vec, lam > 0))
    return out


def _semielemental_launch_dirs(rec: SingularityRecord, sys: QuadSystem, offset=1e-5):
    """Separatrix rays of a semi-elemental point (one zero eigenvalue).

    Strong eigen-rays always carry separatrices; a center-manifold ray does
    only when its drift opposes the strong eigenvalue (otherwise it is the
    interior of a parabolic sector)."""
    x0, y0 = rec.location
    J = sys.jacobian(x0, y0)
    w, V = np.linalg.eig(J)
    order = np.argsort(np.abs(w.real))
    lam_strong = w[order[1]].real
    v_strong = V[:, order[1]].real
    v_strong /= np.linalg.norm(v_strong)
    v_kernel = V[:, order[0]].real
    v_kernel /= np.linalg.norm(v_kernel)
    out = []
    for s in (+1, -1):
        out.append((s * v_strong, lam_strong > 0))
    for s in (+1, -1):
        probe = np.array([x0, y0]) + s * offset * v_kernel
        p, q = sys(*probe)
        drift = (p * s * v_kernel[0] + q * s * v_kernel[1])
        if drift * lam_strong < 0:
            out.append((s * v_kernel, drift > 0))
    return out


def _node_frame(node):
    center = node.pos
    if node.is_infinite:
        u = np.array([-center[1], center[0], 0.0])
        u /= np.linalg.norm(u)
        v = np.array([0.0, 0.0, 1.0])
        angles = None  # half-plane
    else:
        a = np.array([0.0, 0.0, 1.0]) if abs(center[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        u = np.cross(center, a)
        u /= np.linalg.norm(u)
        v = np.cross(center, u)
        angles = None
    return u, v


def _ring_starts(node, radius, thetas):
    u, v = _node_frame(node)
    pts = node.pos[None, :] + radius * (
        np.cos(thetas)[:, None] * u[None, :] + np.sin(thetas)[:, None] * v[None, :]
    )
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


_TRAPPING = ("focus", "weak-focus", "node", "center", "n3", "inf-node")
# the triple nilpotent point attracts open parabolic families with algebraic
# rates; landing needs a looser ball than saddle passes
_SLOW_LANDING = ("PEP-H", "E-PHP", "E-H", "HHH-H", "inf-sn", "es3", "shat3", "s3", "sn2", "cp2")


def _transition_launches(sys, node, nodes, radius=2e-3, n_rays=240):
    """Separatrix launch rays at a multiple point: behavioral transitions of
    the ray fan, refined by angular bisection against bracket trajectories."""
    from .compactify import batch_march

    names = sorted(nodes)
    targets = np.array([nodes[k].pos for k in names])
    trap = np.array([nodes[k].record.local_type in _TRAPPING for k in names])
    if node.is_infinite:
        thetas = np.linspace(0.0, math.pi, n_rays + 2)[1:-1]
        wrap = False
    else:
        thetas = np.linspace(0.0, 2 * math.pi, n_rays, endpoint=False)
        wrap = True
    starts = _ring_starts(node, radius, thetas)
    out_f, _, _ = batch_march(sys, starts, +1.0, targets, trap_types=trap)
    out_b, _, _ = batch_march(sys, starts, -1.0, targets, trap_types=trap)

    launches = []
    n = len(thetas)
    for arr, forward in ((out_f, True), (out_b, False)):
        m = n if wrap else n - 1
        pending = []
        for k in range(m):
            k2 = (k + 1) % n
            if arr[k] != arr[k2]:
                th2 = thetas[k2] if thetas[k2] > thetas[k] else thetas[k2] + 2 * math.pi
                pending.append([thetas[k], th2, arr[k], arr[k2]])
        # batched bisection: compare midpoint landings with the bracket sides
        for _ in range(22):
            if not pending:
                break
            mids = np.array([0.5 * (p[0] + p[1]) % (2 * math.pi) for p in pending])
            mstart = _ring_starts(node, radius, mids)
            om, _, _ = batch_march(
                sys, mstart, 1.0 if forward else -1.0, targets, trap_types=trap
            )
            for p, o, mid in zip(pending, om, mids):
                theta_mid = 0.5 * (p[0] + p[1])
                if o == p[2]:
                    p[0] = theta_mid
                elif o == p[3]:
                    p[1] = theta_mid
                else:
                    p[1] = theta_mid
                    p[3] = o
        for p in pending:
            theta = 0.5 * (p[0] + p[1])
            launches.append((_ring_starts(node, radius, np.array([theta]))[0], forward, theta))
    out = []
    for p, fwdd, th in launches:
        if any(np.linalg.norm(p - q) < radius * 0.02 and fwdd == fo for q, fo, _ in out):
            continue
        out.append((p, fwdd, th))
    return out


@dataclass
class SkeletonOptions:
    arc_budget: float = 60.0
    land_tol: float = LAND_TOL
    launch_offset: float = 1e-6
    ring_radius: float = 2e-3
    detect_cycles: bool = True
    rtol: float = 1e-7
    atol: float = 1e-9


def _integrate_separatrix(sys, start, forward, nodes, opts, source_name, cycles):
    names = list(nodes)
    sings = [nodes[n].pos for n in names]
    # escape the launch neighbourhood before arming the self-landing event
    if source_name in nodes:
        pre = integrate_orbit(
            sys, start, forward=forward,
            singularities=[nodes[n].pos for n in names if n != source_name],
            land_tol=1e-3, arc_budget=2e-3, rtol=opts.rtol, atol=opts.atol, chunk=2e-3,
        )
        if len(pre.points) > 1:
            start = pre.points[-1]
    def _tol(n):
        t = nodes[n].record.local_type
        if n == source_name and t not in _TRAPPING:
            return 1e-6  # returning to the launch point needs a true connection
        if t in _TRAPPING:
            return 1e-3
        if t in _SLOW_LANDING:
            return 3e-4
        return opts.land_tol
    tols = np.array([_tol(n) for n in names])
    res = integrate_orbit(
        sys,
        start,
        forward=forward,
        singularities=sings,
        cycles=[c.points for c in cycles],
        land_tol=tols,
        arc_budget=opts.arc_budget,
        rtol=opts.rtol,
        atol=opts.atol,
    )
    target = None
    flags: tuple[str, ...] = ()
    if res.end_reason == "singularity":
        target = names[res.end_index]
    elif res.end_reason == "cycle":
        target = f"cycle:{res.end_index}"
    else:
        flags = ("BudgetExceeded",)
    pts = res.points
    if not forward:
        pts = pts[::-1]
        return Separatrix(source=target or "?", target=source_name, points=pts, flags=flags), target
    return Separatrix(source=source_name, target=target, points=pts, flags=flags), target


def compute_skeleton(point: FamilyPoint, opts: SkeletonOptions | None = None) -> SeparatrixSkeleton:
    """Integrate all separatrices and assemble the skeleton."""
    opts = opts or SkeletonOptions()
    sys = instantiate(point)
    nodes, complex_count, degenerate_kind = build_nodes(point)
    skeleton = SeparatrixSkeleton(
        point=point,
        nodes=nodes,
        separatrices=[],
        cycles=[],
        graphics=[],
        connection_flags=set(),
        complex_count=complex_count,
        degenerate_kind=degenerate_kind,
    )
    if degenerate_kind is not None:
        _degenerate_graphics(point, sys, skeleton)
        return skeleton

    # limit cycles first so separatrices can terminate on them
    if opts.detect_cycles:
        for name, node in sorted(nodes.items()):
            if node.side == 0 and node.record.local_type in ("focus", "weak-focus"):
                for cyc in detect_limit_cycle(point, node.record):
                    skeleton.cycles.append(
                        LimitCycle(cyc.points, cyc.radius, cyc.stability, name)
                    )

    launch_plan: list = []
    for name, node in sorted(nodes.items()):
        rec = node.record
        if node.side == 0:
            if rec.local_type == "saddle":
                for vec, forward in _saddle_launch_dirs(rec, sys):
                    x0 = np.array(rec.location) + opts.launch_offset * vec
                    launch_plan.append((name, to_sphere(*x0), forward, f"eig:{name}"))
            elif rec.local_type in ("sn2", "s3"):
                for vec, forward in _semielemental_launch_dirs(rec, sys):
                    x0 = np.array(rec.location) + opts.launch_offset * vec
                    launch_plan.append((name, to_sphere(*x0), forward, f"eig:{name}"))
            elif rec.local_type in ("shat3", "es3", "cp2", "m3"):
                for p, forward, _ in _transition_launches(sys, node, nodes, opts.ring_radius):
                    launch_plan.append((name, p, forward, f"fan:{name}"))
        else:
            if rec.local_type == "inf-saddle":
                # transversal separatrix: straight inward from the equator point
                inward = np.array([0.0, 0.0, 1.0])
                p = node.pos + opts.ring_radius * inward
                p = p / np.linalg.norm(p)
                forward = _radial_unstable(sys, node)
                launch_plan.append((name, p, forward, f"eig:{name}"))
            elif rec.local_type in ("E-PHP", "HHH-H", "inf-sn"):
                # hyperbolic-sector borders; for PEP-H and E-H the interior
                # characteristic orbits bound the elliptic sector and are not
                # separatrices of the skeleton
                for p, forward, _ in _transition_launches(sys, node, nodes, opts.ring_radius):
                    launch_plan.append((name, p, forward, f"fan:{name}"))

    for source, start, forward, origin in launch_plan:
        sep, target = _integrate_separatrix(
            sys, start, forward, nodes, opts, source, skeleton.cycles
        )
        sep.origin = origin
        # boundary rays that never leave the equator are arcs of the line at
        # infinity, not separatrices
        if (
            sep.points[:, 2].max() < 0.01
            and sep.source in nodes
            and (sep.target or "").startswith("inf")
            and nodes[sep.source].is_infinite
        ):
            continue
        skeleton.separatrices.append(sep)

    _dedupe_separatrices(skeleton)
    _connection_flags(skeleton)
    _count_graphics_into(point, sys, skeleton)
    return skeleton


def _radial_unstable(sys, node) -> bool:
    f = sphere_field(sys)
    eps = 1e-6
    up = np.array([0.0, 0.0, 1.0])
    v = f(node.pos + eps * up)
    return float(v @ up) > 0


def _dedupe_separatrices(skeleton: SeparatrixSkeleton):
    """Drop duplicate separatrices (same endpoints and close mid polylines)."""
    uniq: list[Separatrix] = []
    for s in skeleton.separatrices:
        dup = False
        for t in uniq:
            if s.source == t.source and s.target == t.target and s.target is not None:
                a = s.points[len(s.points) // 2]
                d = np.linalg.norm(t.points - a, axis=-1).min()
                if d < 5e-3:
                    dup = True
                    break
        if not dup:
            uniq.append(s)
    skeleton.separatrices = uniq


def _is_saddle_like(node: SkeletonNode) -> bool:
    return node.record.local_type in (
        "saddle", "sn2", "cp2", "s3", "shat3", "es3",
        "inf-saddle", "PEP-H", "E-PHP", "E-H", "HHH-H", "inf-sn",
    )


def _connection_flags(skeleton: SeparatrixSkeleton):
    tri_seps = [
        s for s in skeleton.separatrices
        if s.origin.startswith("fan:inf") or s.origin.startswith("eig:inf")
    ]
    for s in skeleton.separatrices:
        if s.target is None or s.target.startswith("cycle"):
            continue
        if s.source == s.target and not skeleton.nodes[s.source].is_infinite:
            skeleton.connection_flags.add("loop")
            continue
        if s.source not in skeleton.nodes or s.target not in skeleton.nodes:
            continue
        a, b = skeleton.nodes[s.source], skeleton.nodes[s.target]
        if a.is_infinite == b.is_infinite:
            continue
        fin, inf_ = (a, b) if b.is_infinite else (b, a)
        if not (_is_saddle_like(fin) and fin.side == 0) or not s.origin.startswith("eig:f"):
            continue
        # a connection requires the infinite end to receive the orbit as one
        # of its own separatrices, not through a parabolic sector
        if inf_.record.local_type == "inf-saddle":
            skeleton.connection_flags.add("finite-infinite")
            continue
        mid = s.points[len(s.points) // 2]
        for t in tri_seps:
            if np.linalg.norm(t.points - mid, axis=-1).min() < 2e-3:
                skeleton.connection_flags.add("finite-infinite")
                break


# ----------------------------------------------------------------------------
# Limit cycles
# ----------------------------------------------------------------------------

@dataclass
class CycleHit:
    radius: float
    stability: str
    points: np.ndarray


def _batch_returns(sys, x0, y0, radii, sense, budget=150.0, h_max=0.05):
    """Approximate first-return radii for a batch of transversal offsets."""
    field = sphere_field(sys)
    center = to_sphere(x0, y0)
    starts = np.array([to_sphere(x0 + r, y0) for r in radii])
    pts = starts.copy()
    returned = np.full(len(radii), np.nan)
    arc = np.zeros(len(radii))
    alive = np.ones(len(radii), dtype=bool)
    for _ in range(60000):
        if not alive.any():
            break
        idx = np.where(alive)[0]
        cur = pts[idx]
        d = np.linalg.norm(cur - center, axis=-1)
        h = np.clip(d / 6.0, 1e-4, h_max)

        def step(q):
            w = field(q)
            return w / (np.linalg.norm(w, axis=-1, keepdims=True) + 1e-300)

        k1 = step(cur)
        k2 = step(cur + 0.5 * h[:, None] * k1)
        k3 = step(cur + 0.5 * h[:, None] * k2)
        k4 = step(cur + h[:, None] * k3)
        new = cur + (h[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        new /= np.linalg.norm(new, axis=-1, keepdims=True)
        zc = np.maximum(cur[:, 2], 1e-12)
        zn = np.maximum(new[:, 2], 1e-12)
        oldx = cur[:, 0] / zc - x0
        oldy = cur[:, 1] / zc - y0
        newx = new[:, 0] / zn - x0
        newy = new[:, 1] / zn - y0
        # first return: y - y0 crosses zero in the rotation sense, x > x0
        cross = (
            (np.sign(newy) != np.sign(oldy))
            & (np.sign(oldy) == -sense)
            & (newx > 1e-9)
            & (arc[idx] > 1e-3)
        )
        t = np.abs(oldy) / (np.abs(oldy) + np.abs(newy) + 1e-300)
        rcross = oldx * (1 - t) + newx * t
        hit = cross & np.isnan(returned[idx])
        returned[idx[hit]] = rcross[hit]
        alive[idx[hit]] = False
        pts[idx] = new
        arc[idx] += h
        dnew = np.linalg.norm(new - center, axis=-1)
        dead = (arc[idx] > budget) | (new[:, 2] < 5e-3) | (dnew < 5e-5)
        alive[idx[dead]] = False
    return returned


def _return_map(sys, x0, y0, r, sense, max_arc=None):
    """First-return radius through (x0 + r, y0), solve_ivp refinement."""
    from .compactify import scalar_field
    import math as _math

    f = scalar_field(sys)

    def rhs(_t, state):
        vx, vy, vz = f(state[0], state[1], state[2])
        n = _math.sqrt(vx * vx + vy * vy + vz * vz) + 1e-7
        return (vx / n, vy / n, vz / n)

    start = to_sphere(x0 + r, y0)

    def section(_t, state):
        if state[2] <= 1e-9:
            return 1.0
        return state[1] / state[2] - y0

    section.terminal = False
    section.direction = sense

    def escape(_t, state):
        return state[2] - 5e-3

    escape.terminal = True
    escape.direction = -1

    budget = max_arc or (60.0 * (1.0 + r))
    sol = solve_ivp(
        rhs, (0.0, budget), start, method="DOP853", rtol=1e-10, atol=1e-12,
        events=[section, escape],
    )
    for te, ye in zip(sol.t_events[0], sol.y_events[0]):
        if te < 1e-6 or ye[2] <= 1e-9:
            continue
        x = ye[0] / ye[2]
        if x > x0 + 1e-12:
            return x - x0
    return None


def detect_limit_cycle(point: FamilyPoint, focus: SingularityRecord) -> list[CycleHit]:
    """Bracketed sign changes of the Poincaré return map along a transversal."""
    sys = instantiate(point)
    x0, y0 = focus.location
    p, q = sys(x0 + 1e-6, y0)
    sense = 1 if q > 0 else -1
    radii = np.geomspace(1e-4, 6.0, 36)
    rets = _batch_returns(sys, x0, y0, radii, sense)
    vals = rets - radii
    hits = []
    for i in range(len(radii) - 1):
        d0, d1 = vals[i], vals[i + 1]
        if not (np.isfinite(d0) and np.isfinite(d1)) or d0 == 0 or d0 * d1 >= 0:
            continue
        a, b = radii[i], radii[i + 1]
        fa = _return_map(sys, x0, y0, a, sense)
        fb = _return_map(sys, x0, y0, b, sense)
        if fa is None or fb is None:
            continue
        fa, fb = fa - a, fb - b
        if fa == 0 or fa * fb > 0:
            continue
        for _ in range(40):
            m = 0.5 * (a + b)
            fm = _return_map(sys, x0, y0, m, sense)
            if fm is None:
                break
            fm -= m
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
            if b - a < 1e-8 * max(1.0, a):
                break
        r_star = 0.5 * (a + b)
        stability = "stable" if fa > 0 else "unstable"
        poly = _cycle_polyline(sys, x0, y0, r_star, sense)
        hits.append(CycleHit(r_star, stability, poly))
    return hits


def _cycle_polyline(sys, x0, y0, r, sense, n=400):
    field = sphere_field(sys)

    def rhs(_t, state):
        v = field(state)
        return v / (np.linalg.norm(v) + 1e-7)

    start = to_sphere(x0 + r, y0)

    def section(_t, state):
        x, y = state[0] / max(state[2], 1e-12), state[1] / max(state[2], 1e-12)
        return y - y0

    section.terminal = True
    section.direction = sense
    sol = solve_ivp(
        rhs, (1e-5, 400.0), start, method="DOP853", rtol=1e-9, atol=1e-11,
        events=[section], dense_output=True,
    )
    tend = sol.t_events[0][0] if len(sol.t_events[0]) else sol.t[-1]
    ts = np.linspace(0, tend, n)
    pts = sol.sol(ts).T
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


# ----------------------------------------------------------------------------
# Graphics
# ----------------------------------------------------------------------------

def _skeleton_digraph(skeleton: SeparatrixSkeleton, point: FamilyPoint):
    import networkx as nx

    g = nx.MultiDiGraph()
    for name in skeleton.nodes:
        g.add_node(name)
    for i, s in enumerate(skeleton.separatrices):
        if s.target is None or s.target.startswith("cycle"):
            continue
        if s.source in skeleton.nodes and s.target in skeleton.nodes:
            g.add_edge(s.source, s.target, key=f"sep{i}", kind="orbit")
    for n1, n2, _, _ in _equator_arcs(point, skeleton.nodes):
        g.add_edge(n1, n2, key=f"eq:{n1}->{n2}", kind="equator")
    return g


def _count_graphics_into(point: FamilyPoint, sys, skeleton: SeparatrixSkeleton):
    import networkx as nx

    g = _skeleton_digraph(skeleton, point)
    cycles = []
    try:
        for cyc in nx.simple_cycles(g):
            cycles.append(cyc)
    except Exception:
        cycles = []
    triple = {
        name
        for name, n in skeleton.nodes.items()
        if n.record.local_type in ("PEP-H", "E-PHP", "E-H", "HHH-H")
    }
    elliptic = {
        name
        for name, n in skeleton.nodes.items()
        if n.record.local_type in ("PEP-H", "E-PHP", "E-H")
    }
    isolated = []
    for cyc in cycles:
        # walks consisting solely of equator arcs are the line at infinity
        edge_kinds = set()
        ok = True
        for k in range(len(cyc)):
            a, b = cyc[k], cyc[(k + 1) % len(cyc)]
            kinds = [d.get("kind") for d in g.get_edge_data(a, b, default={}).values()]
            if not kinds:
                ok = False
                break
            edge_kinds.update(kinds)
        if not ok or edge_kinds == {"equator"}:
            continue
        # walks through the triple point with an elliptic sector belong to its
        # families of graphics (or bound them) and are not counted separately
        if any(c in elliptic for c in cyc):
            continue
        if len(cyc) == 1 and cyc[0] in triple:
            continue
        isolated.append(tuple(cyc))
    # the standard infinite family of nondegenerate graphics exists whenever
    # the triple infinite point keeps parabolic/elliptic sectors
    families = 0
    ntypes = {n.record.local_type for n in skeleton.nodes.values() if n.is_infinite}
    if ntypes & {"PEP-H", "E-PHP", "E-H"}:
        families = 1
    for cyc in isolated:
        skeleton.graphics.append(
            Graphic("nondegenerate", tuple(cyc), "one", _enclosed_focus(skeleton, cyc))
        )
    for _ in range(families):
        skeleton.graphics.append(Graphic("nondegenerate", (), "infinite"))


def _enclosed_focus(skeleton: SeparatrixSkeleton, cyc) -> Optional[str]:
    """Identify an antisaddle surrounded by a loop graphic (shoelace test)."""
    pts = []
    for k in range(len(cyc)):
        a, b = cyc[k], cyc[(k + 1) % len(cyc)]
        for s in skeleton.separatrices:
            if s.source == a and s.target == b:
                pts.append(s.points[:, :2])
                break
    if not pts:
        return None
    poly = np.vstack(pts)
    for name, node in skeleton.nodes.items():
        if node.side != 0 or node.record.local_type not in ("focus", "weak-focus", "node", "center"):
            continue
        if _point_in_polygon(node.pos[:2], poly):
            return name
    return None


def _point_in_polygon(p, poly) -> bool:
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xin = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if xin > x:
                inside = not inside
    return inside


def _degenerate_graphics(point: FamilyPoint, sys, skeleton: SeparatrixSkeleton):
    """Families of degenerate graphics for systems with singular curves."""
    kind = skeleton.degenerate_kind
    n_families = 0
    if kind in ("hyperbola", "two-crossing-lines"):
        n_families = 1
    elif kind == "line-at-infinity":
        n_families = 2 if point.family is Family.C else 1
    for _ in range(n_families):
        skeleton.graphics.append(Graphic("degenerate", (), "infinite"))


def count_graphics(skeleton: SeparatrixSkeleton) -> dict:
    finite = sum(1 for g in skeleton.graphics if g.cardinality == "one")
    fams = sum(
        1 for g in skeleton.graphics if g.cardinality == "infinite" and g.kind == "nondegenerate"
    )
    degen = sum(1 for g in skeleton.graphics if g.kind == "degenerate")
    return {"finite": finite, "infinite": fams, "families": fams, "degenerate": degen}


# ----------------------------------------------------------------------------
# Connections and the nonalgebraic surface
# ----------------------------------------------------------------------------

def connection_indicator(point: FamilyPoint, kind: str) -> float:
    """Signed miss distance between the two separatrices whose crossing
    defines the nonalgebraic connection surface."""
    sys = instantiate(point)
    nodes, _, _ = build_nodes(point)
    if kind == "loop":
        return _loop_indicator(point, sys, nodes)
    if kind in ("finite-infinite", "elliptic-infinite"):
        return _elliptic_infinite_indicator(point, sys, nodes)
    raise ValueError(f"unknown connection kind {kind!r}")


def _loop_indicator(point: FamilyPoint, sys, nodes) -> float:
    saddles = [n for n in nodes.values() if n.side == 0 and n.record.local_type == "saddle"]
    foci = [
        n for n in nodes.values()
        if n.side == 0 and n.record.local_type in ("focus", "weak-focus", "node", "center")
    ]
    if not saddles or not foci:
        raise SeparatrixMissing("loop indicator needs a finite saddle and antisaddle")
    best = None
    for sd in saddles:
        for fc in foci:
            val = _loop_indicator_pair(sys, sd, fc, nodes)
            if val is not None and (best is None or abs(val) < abs(best)):
                best = val
    if best is None:
        raise SeparatrixMissing("no separatrix crossing of the section found")
    return best


def _section_crossing(sys, start3, forward, anchor, direction, halfwidth, nodes, budget=80.0):
    """First crossing parameter t of the orbit with the segment
    anchor + t*direction (affine coordinates), |t| <= halfwidth."""
    field = sphere_field(sys)
    sgn = 1.0 if forward else -1.0

    def rhs(_t, state):
        v = field(state) * sgn
        return v / (np.linalg.norm(v) + 1e-7)

    nx, ny = -direction[1], direction[0]

    def ev(_t, state):
        if state[2] <= 1e-9:
            return 1.0
        x, y = state[0] / state[2], state[1] / state[2]
        return (x - anchor[0]) * nx + (y - anchor[1]) * ny

    ev.terminal = False
    sings = [n.pos for n in nodes.values()]

    def land(_t, state):
        d = min(np.linalg.norm(state - s) for s in sings)
        return d - 1e-6

    land.terminal = True
    land.direction = -1

    sol = solve_ivp(
        rhs, (0.0, budget), start3, method="DOP853", rtol=1e-9, atol=1e-11,
        events=[ev, land],
    )
    for ye in sol.y_events[0]:
        if ye[2] <= 1e-9:
            continue
        x, y = ye[0] / ye[2], ye[1] / ye[2]
        t = (x - anchor[0]) * direction[0] + (y - anchor[1]) * direction[1]
        if -1e-9 <= t <= halfwidth:
            return t
    return None


def _loop_indicator_pair(sys, saddle, focus, nodes) -> Optional[float]:
    s_xy = np.array(saddle.record.location)
    f_xy = np.array(focus.record.location)
    direction = f_xy - s_xy
    dist = np.linalg.norm(direction)
    if dist < 1e-12:
        return None
    direction = direction / dist
    anchor = s_xy
    J = sys.jacobian(*s_xy)
    w, V = np.linalg.eig(J)
    crossings = {}
    for k in range(2):
        lam = w[k].real
        vec = V[:, k].real
        vec /= np.linalg.norm(vec)
        for sg in (+1, -1):
            x0 = s_xy + 1e-6 * sg * vec
            t = _section_crossing(
                sys, to_sphere(*x0), lam > 0, anchor, direction, dist * 2.0, nodes
            )
            if t is None or t < 1e-9:
                continue
            key = "u" if lam > 0 else "s"
            if key not in crossings or t < crossings[key]:
                crossings[key] = t
    if "u" in crossings and "s" in crossings:
        return crossings["u"] - crossings["s"]
    return None


def _elliptic_infinite_indicator(point: FamilyPoint, sys, nodes) -> float:
    """Miss distance between a separatrix of the triple nilpotent point and
    the separatrix of the infinite elemental saddle, on a fixed transversal."""
    triple = [n for n in nodes.values() if n.record.local_type in ("PEP-H", "E-PHP", "E-H", "HHH-H")]
    elems = [n for n in nodes.values() if n.record.local_type == "inf-saddle"]
    if not triple or not elems:
        raise SeparatrixMissing("needs a triple nilpotent point and an elemental infinite saddle")
    finite = [n for n in nodes.values() if n.side == 0]
    if not finite:
        raise SeparatrixMissing("no finite anchor for the section")
    f_xy = np.array(finite[0].record.location)

    # separatrix of the elemental saddle, integrated into the disc
    crossings = []
    for el in elems:
        start = el.pos + 2e-4 * np.array([0.0, 0.0, 1.0])
        start /= np.linalg.norm(start)
        forward = _radial_unstable(sys, el)
        crossings.append((el.name, start, forward))
    tr = sorted(triple, key=lambda n: -n.side)[0]
    sysn = sys
    launches = _transition_launches(sysn, tr, nodes, radius=2e-3)
    if not launches:
        raise SeparatrixMissing("no separatrix transitions at the triple point")

    # section: vertical segment through the finite point
    direction = np.array([0.0, 1.0])
    anchor = f_xy

    t_elem = None
    for _, start, forward in crossings:
        t = _section_crossing(sys, start, forward, anchor, direction, 50.0, nodes)
        if t is not None and (t_elem is None or t < t_elem):
            t_elem = t
    t_tri = None
    for start, forward, _ in launches:
        t = _section_crossing(sys, start, forward, anchor, direction, 50.0, nodes)
        if t is not None and (t_tri is None or t < t_tri):
            t_tri = t
    if t_elem is None or t_tri is None:
        raise SeparatrixMissing("separatrices do not cross the section")
    return t_tri - t_elem


@dataclass
class ConnectionLocator:
    t_lo: float
    t_hi: float
    value_lo: float
    value_hi: float
    located: FamilyPoint
    history: list[tuple[float, float]]

    @property
    def bracket_width(self) -> float:
        return self.t_hi - self.t_lo


def locate_s7(path, kind: str, tol: float = 1e-6) -> ConnectionLocator:
    """Bisection on the connection indicator along a parametrized path.

    ``path(t)`` maps [0, 1] to FamilyPoints; the indicator must change sign.
    """
    history = []
    f_lo = connection_indicator(path(0.0), kind)
    f_hi = connection_indicator(path(1.0), kind)
    history += [(0.0, f_lo), (1.0, f_hi)]
    if f_lo == 0:
        return ConnectionLocator(0.0, 0.0, f_lo, f_lo, path(0.0), history)
    if f_lo * f_hi > 0:
        raise NoSignChange("indicator has the same sign at both path endpoints")
    a, b, fa, fb = 0.0, 1.0, f_lo, f_hi
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = connection_indicator(path(m), kind)
        history.append((m, fm))
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return ConnectionLocator(a, b, fa, fb, path(0.5 * (a + b)), history)
