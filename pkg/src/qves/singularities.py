"""Finite and infinite singular points: location, multiplicity, local type.

Finite points come from eliminating y linearly from p = 0 and solving the
resulting cubic in closed form; multiple roots are merged into multiplicity
clusters.  Infinite points are the projective roots of the cubic
C2 = y p2 - x q2; the double direction carries the triple nilpotent point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import cubic
from .compactify import direction_point, ring_classify, sphere_field, to_sphere
from .families import DegenerateSystemError, Family, FamilyPoint, QuadSystem, instantiate
from .invariants import eval_invariants


class NotDegenerate(ValueError):
    pass


class InconclusiveAtRadius(RuntimeError):
    pass


ROOT_MERGE_TOL = 1e-9


@dataclass(frozen=True)
class SingularityRecord:
    kind: str  # "finite" | "infinite"
    location: tuple[float, float]  # (x, y) or projective direction (u, v)
    multiplicity: int
    local_type: str
    index: int
    trace: float = 0.0
    det: float = 0.0
    weak_order: object = 0  # 0 | 1 | "center" | "integrable-saddle"
    stability: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "location": list(self.location),
            "multiplicity": self.multiplicity,
            "type": self.local_type,
            "index": self.index,
            "trace": self.trace,
            "det": self.det,
            "weak_order": self.weak_order,
            "stability": self.stability,
        }


def _winding_index(sys: QuadSystem, x0: float, y0: float, radius: float, n: int = 720) -> int:
    th = np.linspace(0.0, 2 * math.pi, n + 1)
    th[-1] = th[0]  # close the loop
    xs = x0 + radius * np.cos(th)
    ys = y0 + radius * np.sin(th)
    mono = np.stack([np.ones_like(xs), xs, ys, xs * xs, xs * ys, ys * ys], axis=-1)
    p = mono @ np.array(sys.p)
    q = mono @ np.array(sys.q)
    ang = np.unwrap(np.arctan2(q, p))
    return int(round((ang[-1] - ang[0]) / (2 * math.pi)))


def _elimination_cubic(sys: QuadSystem) -> tuple[tuple[float, float, float, float], tuple[float, float, float]]:
    """Substitute y(x) from p=0 (linear in y) into q; returns cubic coeffs and
    the parabola coefficients of y(x) = al + be*x + ga*x^2."""
    p0, (p10, p01), (p20, p11, p02) = sys.p_parts()
    q0, (q10, q01), (q20, q11, q02) = sys.q_parts()
    if p02 != 0.0 or p11 != 0.0 or q02 != 0.0:
        raise ValueError("normal form expected: p linear in y, q free of y^2")
    if p01 == 0.0:
        raise DegenerateSystemError("cannot eliminate y: p does not depend on y")
    al, be, ga = -p0 / p01, -p10 / p01, -p20 / p01
    a = q11 * ga
    b = q20 + q01 * ga + q11 * be
    c = q10 + q01 * be + q11 * al
    d = q0 + q01 * al
    return (a, b, c, d), (al, be, ga)


def finite_singularities(point: FamilyPoint) -> tuple[list[SingularityRecord], int]:
    """All real finite singular points plus the complex count."""
    if point.is_degenerate:
        raise DegenerateSystemError("finite singularity analysis needs a nondegenerate point")
    sys = instantiate(point)
    coeffs, (al, be, ga) = _elimination_cubic(sys)
    roots = cubic.real_roots_cubic(*coeffs)
    clusters = cubic.cluster_roots(roots, ROOT_MERGE_TOL)
    degree = 3 if coeffs[0] != 0 else (2 if coeffs[1] != 0 else 1)
    complex_count = degree - sum(m for _, m in clusters)
    records = []
    xs = [x for x, _ in clusters]
    for x, mult in clusters:
        y = al + be * x + ga * x * x
        sep = min((abs(x - o) for o in xs if o != x), default=1.0)
        records.append(_classify_finite(point, sys, x, y, mult, radius=min(1e-3, sep / 4)))
    records.sort(key=lambda r: r.location)
    return records, complex_count


def _classify_finite(
    point: FamilyPoint, sys: QuadSystem, x: float, y: float, mult: int, radius: float
) -> SingularityRecord:
    J = sys.jacobian(x, y)
    tr = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    scale = max(1.0, float(np.abs(J).max()) ** 2)
    idx = _winding_index(sys, x, y, radius)
    if mult >= 3:
        ltype = classify_triple_point(point) if point.family is Family.C else "m3"
    elif mult == 2:
        ltype = "cp2" if abs(tr) <= 1e-7 * math.sqrt(scale) else "sn2"
    else:
        if det < 0:
            ltype = "saddle"
        else:
            disc = tr * tr - 4 * det
            if abs(tr) <= 1e-9 * math.sqrt(scale):
                ltype = "center" if is_certified_center(point) else "weak-focus"
            elif disc >= 0:
                ltype = "node"
            else:
                ltype = "focus"
    stability = None
    if ltype in ("node", "focus", "weak-focus", "n3"):
        stability = "stable" if tr < 0 else ("unstable" if tr > 0 else None)
    return SingularityRecord(
        kind="finite",
        location=(x, y),
        multiplicity=mult,
        local_type=ltype,
        index=idx,
        trace=tr,
        det=det,
        stability=stability,
    )


def classify_triple_point(point: FamilyPoint) -> str:
    """Type of family C's triple finite point from the printed sign tests."""
    if point.family is not Family.C:
        raise ValueError("triple-point typing is a family C operation")
    g, ell = point.params
    if g == 0.0:
        raise DegenerateSystemError("triple point undefined at g = 0")
    inv = eval_invariants(point)
    if inv.Ktil.xx > 0:  # K~ = 4g
        return "n3" if inv.G10 != 0.0 else "es3"
    return "s3" if inv.F1 != 0.0 else "shat3"


def nilpotent_infinite_type(point: FamilyPoint) -> str:
    """Type of the triple infinite point as a function of the leading parameter."""
    fam = point.family
    lead = point.params[0]
    inv = eval_invariants(point)
    ntil = inv.Ntil.xx
    mtil = inv.Mtil.xx
    if mtil == 0.0:
        return "inf-sn"  # on the infinite-coalescence surface
    beyond = (lead < -2) if fam in (Family.A, Family.B) else (lead > 2)
    if beyond:
        return "HHH-H"
    if ntil < 0:
        return "PEP-H" if fam in (Family.A, Family.B) else "PEP-H"
    if ntil > 0:
        return "E-PHP"
    return "E-H"


class LineAtInfinityDegenerate(Exception):
    """Flag (not an error) carried as a record when C2 vanishes identically."""


def infinite_singularities(point: FamilyPoint) -> list[SingularityRecord]:
    """Infinite singular points (one record per antipodal pair)."""
    inv = eval_invariants(point)
    a, b, c3, d = inv.C2.coeffs()
    scale = max(1.0, max(abs(v) for v in point.params) ** 2)
    if max(abs(a), abs(b), abs(c3), abs(d)) <= 1e-12 * scale:
        return [
            SingularityRecord(
                kind="infinite", location=(1.0, 0.0), multiplicity=0,
                local_type="line-at-infinity", index=0,
            )
        ]
    # our families: C2 = x^2 (a*x + b*y); double direction [0:1], simple [b:-a]
    records = []
    sys = instantiate(point)
    if abs(b) <= 1e-12 * math.sqrt(scale):
        # simple root coalesces with the double one: quadruple point on S5/L5
        records.append(
            SingularityRecord(
                kind="infinite", location=(0.0, 1.0), multiplicity=4,
                local_type="inf-sn", index=0,
            )
        )
        return records
    ntype = nilpotent_infinite_type(point)
    records.append(
        SingularityRecord(
            kind="infinite", location=(0.0, 1.0), multiplicity=3,
            local_type=ntype, index=0,
        )
    )
    u, v = b, -a
    n = math.hypot(u, v)
    u, v = u / n, v / n
    if v < 0 or (v == 0 and u < 0):
        u, v = -u, -v
    tang, rad = _equator_eigs(sys, (u, v))
    etype = "inf-saddle" if tang * rad < 0 else "inf-node"
    records.append(
        SingularityRecord(
            kind="infinite", location=(u, v), multiplicity=1,
            local_type=etype, index=-1 if etype == "inf-saddle" else 1,
            trace=tang + rad, det=tang * rad,
        )
    )
    return records


def _equator_eigs(sys: QuadSystem, direction: tuple[float, float]) -> tuple[float, float]:
    """Tangential and radial eigenvalues of an elemental infinite point,
    from the Jacobian of the compactified field restricted to the sphere."""
    S = direction_point(direction)
    f = sphere_field(sys)
    eps = 1e-6
    u = np.array([-S[1], S[0], 0.0])
    w = np.array([0.0, 0.0, 1.0])

    def dirderiv(vec):
        return (f(S + eps * vec) - f(S - eps * vec)) / (2 * eps)

    Ju = dirderiv(u)
    Jw = dirderiv(w)
    # project onto the tangent frame
    M = np.array([[Ju @ u, Jw @ u], [Ju @ w, Jw @ w]])
    # the frame (u, w) splits invariantly: u along the equator, w transversal
    return float(M[0, 0]), float(M[1, 1])


# ----------------------------------------------------------------------------
# Weak singularities and centers
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class WeakResult:
    kind: str  # none | weak-saddle | weak-focus | center | integrable-saddle |
    #            center+two-integrable-saddles
    records: tuple[SingularityRecord, ...] = ()
    B2_branch: Optional[float] = None


def _sigma_identically_zero(point: FamilyPoint, tol: float = 1e-9) -> bool:
    inv = eval_invariants(point)
    if inv.sigma is None:
        return False
    scale = max(1.0, max(abs(v) for v in point.params) ** 2)
    return abs(inv.sigma.const) <= tol * scale and abs(inv.sigma.slope) <= tol * scale


def is_certified_center(point: FamilyPoint, tol: float = 1e-9) -> bool:
    """Center certification on the paper's exact algebraic branches only."""
    fam = point.family
    scale = max(1.0, max(abs(v) for v in point.params) ** 2)
    if fam is Family.A:
        c, e, f = point.params
        if abs(c - 1) <= tol and abs(e + f) <= tol * scale:
            return True  # the fully integrable line: two integrable saddles + center
        if c > 0 and abs(c - 1) > tol:
            if abs(e) <= tol * scale and abs(f) <= tol * scale:
                return True
            if abs(e + c * (c + 2)) <= tol * scale and abs(f - 3 * c) <= tol * scale:
                return True
        return False
    if fam is Family.B:
        g, u, ell = point.params
        return g < 0 and abs(u) <= tol and abs(ell) <= tol * scale
    return False


def weak_singularity(point: FamilyPoint, tol: float = 1e-9) -> WeakResult:
    """The paper's decision path for trace-zero singularities."""
    if point.is_degenerate:
        raise DegenerateSystemError("weak-singularity analysis needs a nondegenerate point")
    inv = eval_invariants(point)
    fam = point.family
    records, _ = finite_singularities(point)
    scale = max(1.0, max(abs(v) for v in point.params) ** 3)

    if _sigma_identically_zero(point, tol):
        if fam is Family.A:
            saddles = tuple(
                replace(r, weak_order="integrable-saddle")
                for r in records
                if r.det < 0
            )
            center = tuple(
                replace(r, local_type="center", weak_order="center")
                for r in records
                if r.det > 0
            )
            return WeakResult("center+two-integrable-saddles", saddles + center)
        the_one = tuple(replace(r, weak_order="integrable-saddle") for r in records)
        return WeakResult("integrable-saddle", the_one)

    if inv.B1 is None:
        return WeakResult("none")
    b1_zero = any(
        abs(fv) <= tol * scale for fv in inv.B1.factors
    )
    if not b1_zero:
        return WeakResult("none")
    f1_zero = abs(inv.F1) <= tol * scale ** 2 if inv.F1 is not None else False
    weak = min(records, key=lambda r: abs(r.trace))
    if not f1_zero:
        kind = "weak-focus" if weak.det > 0 else "weak-saddle"
        rec = replace(weak, weak_order=1, local_type=kind)
        return WeakResult(kind, (rec,), inv.B2)
    # F1 = B1 = 0: center or integrable saddle, decided on the solved branches
    if is_certified_center(point):
        rec = replace(weak, local_type="center", weak_order="center")
        return WeakResult("center", (rec,), inv.B2_center_branch)
    if weak.det < 0:
        rec = replace(weak, weak_order="integrable-saddle")
        return WeakResult("integrable-saddle", (rec,), inv.B2_center_branch)
    rec = replace(weak, weak_order=1, local_type="weak-focus")
    return WeakResult("weak-focus", (rec,), inv.B2)


# ----------------------------------------------------------------------------
# Degenerate systems (curves filled with singular points)
# ----------------------------------------------------------------------------

def degenerate_set(point: FamilyPoint) -> str:
    """Geometry of the singular set on a degeneracy locus."""
    fam = point.family
    if fam is Family.A:
        c, e, f = point.params
        if abs(c + 2) <= 1e-12 and abs(e) <= 1e-12:
            return "line-at-infinity"
        raise NotDegenerate("family A point off the degeneracy loci")
    if fam is Family.B:
        g, u, ell = point.params
        if g == 0.0:
            return _degenerate_conic_kind(point)
        if abs(g + 2) <= 1e-12 and abs(ell) <= 1e-12:
            return "line-at-infinity"
        raise NotDegenerate("family B point off the degeneracy loci")
    g, ell = point.params
    if g == 0.0:
        return _degenerate_conic_kind(point)
    if abs(g - 2) <= 1e-12 and abs(ell) <= 1e-12:
        return "line-at-infinity"
    raise NotDegenerate("family C point off the degeneracy loci")


def _degenerate_conic_kind(point: FamilyPoint) -> str:
    """For g = 0 the singular set is the conic q = 0; its type is decided by
    L2 and cross-checked by the conic discriminants."""
    inv = eval_invariants(point)
    sys = instantiate(point)
    q = sys.q
    # conic matrix of q = 0
    M3 = np.array(
        [
            [q[3], q[4] / 2, q[1] / 2],
            [q[4] / 2, q[5], q[2] / 2],
            [q[1] / 2, q[2] / 2, q[0]],
        ]
    )
    det3 = float(np.linalg.det(M3))
    det2 = float(q[3] * q[5] - q[4] * q[4] / 4)
    l2_zero = inv.L2 is None or abs(inv.L2) <= 1e-12 * max(
        1.0, max(abs(v) for v in point.params) ** 4
    )
    if l2_zero:
        if abs(det3) > 1e-10:
            raise AssertionError("L2 and the conic discriminant disagree")
        return "two-crossing-lines"
    if det2 < 0 and abs(det3) > 0:
        return "hyperbola"
    return "degenerate-conic"


# ----------------------------------------------------------------------------
# Sector analysis
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SectorAnalysis:
    word: str  # e.g. "PEP", "H", "HH"
    separatrix_angles: tuple[float, ...]  # ray angles bounding sectors
    codes: tuple[int, ...]
    angles: tuple[float, ...]


def sector_analysis(
    point: FamilyPoint,
    sing: SingularityRecord,
    radius: float = 1e-3,
    n_rays: int = 720,
) -> SectorAnalysis:
    """Numeric sector decomposition around a singular point.

    For infinite points the analysis covers the half-disc on the finite side;
    the sector word reads the disc boundary from one equator arc to the other.
    """
    sys = instantiate(point)
    if sing.kind == "infinite":
        center = direction_point(sing.location)
        half = True
    else:
        center = to_sphere(*sing.location)
        half = False
    codes, angles, _ = ring_classify(sys, center, radius, n_rays=n_rays, half_plane=half)
    word, boundaries = _codes_to_word(codes, angles, cyclic=not half)
    if not word:
        raise InconclusiveAtRadius("no sectors resolved; retry with a smaller radius")
    seps = tuple(b[0] for b in boundaries)
    return SectorAnalysis(word, seps, tuple(int(c) for c in codes), tuple(angles))


def _codes_to_word(codes, angles, cyclic: bool, min_run: int = 3):
    """Compress per-ray codes into a sector word plus boundary data.

    Returns (word, boundaries) where each boundary is (angle, left, right).
    """
    sym = {0: "H", 1: "P", -1: "P", 2: "E"}
    n = len(codes)
    if n == 0:
        return "", []
    runs: list[list] = []  # [symbol, first, last]
    for i, c in enumerate(codes):
        s = sym[int(c)]
        if runs and runs[-1][0] == s:
            runs[-1][2] = i
        else:
            runs.append([s, i, i])
    # absorb short glitch runs into the previous neighbour
    changed = True
    while changed and len(runs) > 1:
        changed = False
        for k, r in enumerate(runs):
            if r[2] - r[1] + 1 < min_run:
                tgt = runs[k - 1] if k > 0 else runs[k + 1]
                tgt[1] = min(tgt[1], r[1])
                tgt[2] = max(tgt[2], r[2])
                runs.pop(k)
                # re-merge equal neighbours
                m = 1
                while m < len(runs):
                    if runs[m][0] == runs[m - 1][0]:
                        runs[m - 1][2] = max(runs[m - 1][2], runs[m][2])
                        runs[m - 1][1] = min(runs[m - 1][1], runs[m][1])
                        runs.pop(m)
                    else:
                        m += 1
                changed = True
                break
    if cyclic and len(runs) > 1 and runs[0][0] == runs[-1][0]:
        runs[0][1] = runs[-1][1] - n  # wrapped start
        runs.pop()
    word = "".join(r[0] for r in runs)
    boundaries = []
    last = len(runs) if cyclic else len(runs) - 1
    for k in range(last):
        cur = runs[k]
        nxt = runs[(k + 1) % len(runs)]
        a1 = angles[cur[2] % n]
        a2 = angles[nxt[1] % n]
        if cyclic and a2 < a1:
            a2 += 2 * math.pi
        boundaries.append((0.5 * (a1 + a2) % (2 * math.pi), cur[0], nxt[0]))
    return word, boundaries


def nilpotent_word_pair(point: FamilyPoint, radius: float = 5e-3, n_rays: int = 360) -> tuple[str, str]:
    """Sector words of the two antipodal endpoints of the triple infinite point."""
    sys = instantiate(point)
    words = []
    for sign in (+1, -1):
        center = direction_point((0.0, 1.0), sign)
        codes, angles, _ = ring_classify(sys, center, radius, n_rays=n_rays, half_plane=True)
        word, _ = _codes_to_word(codes, angles, cyclic=False)
        words.append(word)
    return words[0], words[1]


_NILPOTENT_WORDS = {
    frozenset(("PEP", "H")): "PEP-H",
    frozenset(("E", "PHP")): "E-PHP",
    frozenset(("E", "H")): "E-H",
    frozenset(("HHH", "H")): "HHH-H",
}


def match_nilpotent_type(word_north: str, word_south: str) -> str:
    """Match the word pair against the four admitted labels."""
    def canon(w):
        return min(w, w[::-1])

    key = frozenset((canon(word_north), canon(word_south)))
    if len(key) == 1:
        key = frozenset((canon(word_north),)) | frozenset((canon(word_south),))
    return _NILPOTENT_WORDS.get(key, "unrecognized")
