"""Bifurcation surfaces, signed evaluations, and singular slice values.

Families A and B are sliced by their leading parameter (c resp. g); the
in-slice coordinates are (e,f) resp. (u,l).  Family C is fully 2-D in (g,l).

Surface values for family B are normalized by powers of (1+u^2) so that the
asymptotic coincidences at u -> infinity register under a relative tolerance;
zero sets are unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .families import Family, FamilyPoint

DEFAULT_TOL = 1e-9


class UnsupportedFamily(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceValue:
    surface: str
    value: float
    factors: tuple[float, ...]
    factor_degrees: tuple[int, ...]
    zero: bool


@dataclass(frozen=True)
class SurfaceReport:
    family: Family
    point: tuple[float, ...]
    tol: float
    values: dict[str, SurfaceValue]

    @property
    def membership(self) -> set[str]:
        return {k for k, v in self.values.items() if v.zero}

    def as_dict(self) -> dict:
        return {
            "family": self.family.value,
            "point": list(self.point),
            "tol": self.tol,
            "surfaces": {
                k: {
                    "value": v.value,
                    "factors": list(v.factors),
                    "zero": v.zero,
                }
                for k, v in sorted(self.values.items())
            },
            "membership": sorted(self.membership),
        }


def _surface_factors(point: FamilyPoint) -> dict[str, tuple[tuple[float, ...], tuple[int, ...]]]:
    """Factor values and factor degrees (in the parameters) per surface id."""
    fam = point.family
    if fam is Family.A:
        c, e, f = point.params
        ef = e + f
        return {
            "S0": ((c + 1,), (1,)),
            "S2": ((c - f, c + f), (1, 1)),
            "S3": ((c * (c - 1) + ef, c * (c - 1) - ef, e + c * f), (2, 2, 2)),
            "S4": ((e, c * (2 + c - f) - 2 * ef, c * (2 + c + f) + 2 * ef), (1, 2, 2)),
            "S5": ((c + 2,), (1,)),
            "S6": (
                (
                    2 * c ** 3 - e * e - 2 * c * e * f - c * f * f * (2 + c),
                    2 * c ** 3 + c ** 4 + c * c * (1 + 2 * e - 2 * f) - 2 * c * ef + ef * ef,
                    2 * c ** 3 + c ** 4 + c * c * (1 - 2 * e + 2 * f) + 2 * c * ef + ef * ef,
                ),
                (3, 4, 4),
            ),
            "S8": (
                (e + f + c * f, c + 2 * c * c - 2 * e - f, c + 2 * c * c + 2 * e + f),
                (2, 2, 2),
            ),
        }
    if fam is Family.B:
        g, u, ell = point.params
        w = 1 + u * u
        quart = 4 + ell * (ell - 4 * u + ell * u * u)
        # normalized: each factor divided by the (1+u^2) power matching its u-growth
        return {
            "S0": ((g + 1,), (1,)),
            "S1": ((g,), (1,)),
            "S3": (
                (ell - 2 * g * u / w, 4 * g * (g - 2) / (w * w) + quart / w),
                (2, 2),
            ),
            "S4": ((ell, (ell * ell + (2 + g - ell * u) ** 2) / w), (1, 2)),
            "S5": ((g + 2,), (1,)),
            "S6": (
                (
                    (ell - 2 * g * u / w) ** 2 + 8 * g / w,
                    (
                        16 * g * w * (4 + 4 * ell * u - 3 * ell * ell * w)
                        + 64 * g ** 3
                        + 16 * g ** 4
                        + w * w * quart ** 2
                        + 8 * g * g * (ell * ell * w * w + 4 * (3 + u * u) + 12 * ell * u * w)
                    )
                    / (w * w),
                ),
                (2, 4),
            ),
            "S8": ((ell - 2 * u * (1 + g) / w,), (2,)),
        }
    g, ell = point.params
    return {
        "L0": ((g - 1,), (1,)),
        "L1": ((g,), (1,)),
        "L5": ((g - 2,), (1,)),
        "L8": ((ell,), (1,)),
    }


def surface_report(point: FamilyPoint, tol: float = DEFAULT_TOL) -> SurfaceReport:
    """Evaluate every bifurcation surface of the point's family.

    A surface is flagged zero when any of its factors vanishes within a
    relative tolerance scaled by |params|_inf to the factor's degree.
    """
    scale_base = max(1.0, max(abs(v) for v in point.params))
    values: dict[str, SurfaceValue] = {}
    for sid, (factors, degrees) in _surface_factors(point).items():
        zero = False
        val = 1.0
        for fv, dg in zip(factors, degrees):
            val *= fv
            if abs(fv) <= tol * scale_base ** dg:
                zero = True
        values[sid] = SurfaceValue(sid, val, tuple(factors), tuple(degrees), zero)
    return SurfaceReport(point.family, point.params, tol, values)


SQ3 = math.sqrt(3.0)

_A_GEOMETRY = [2.0, SQ3, 1.0, 1 / SQ3, 0.5, -0.5, -1 / SQ3, -2 / 3, -1.0, -1.5, -SQ3, -2.0]
_A_AXIS = [4.0, SQ3 + 2, 2.0, 1.0, 0.5, 2 - SQ3, 0.25, -0.25, -9 / 16, -1.0, -16 / 9, -2.0, -4.0]
_B_GEOMETRY = [1.0, 0.0, -1.0, -2.0]
_B_AXIS = [-0.5]  # surfaces S6 and S8 intercept each other at infinity here


def singular_slice_values(family: Family, which: str = "union") -> list[float]:
    """The singular slice values of the leading parameter, sorted descending."""
    family = Family(family)
    if family is Family.C:
        raise UnsupportedFamily("family C has a 2-D diagram; no slicing")
    if which not in ("geometry", "axis_f0", "union"):
        raise ValueError(f"unknown slice-value kind {which!r}")
    geo, axis = (_A_GEOMETRY, _A_AXIS) if family is Family.A else (_B_GEOMETRY, _B_AXIS)
    if which == "geometry":
        vals = list(geo)
    elif which == "axis_f0":
        vals = list(axis)
    else:
        vals = list(geo)
        vals.extend(v for v in axis if all(abs(v - g) > 1e-12 for g in geo))
    return sorted(vals, reverse=True)


# ----------------------------------------------------------------------------
# Slice-event detection: numerical re-derivation of the singular values.
# ----------------------------------------------------------------------------

_WINDOW = 1e7  # arrangement window in the slice coordinates
_CLUSTER = 1e-6


def _conic6(aee, aef, aff, be, bf, d):
    return np.array([aee, aef, aff, be, bf, d], dtype=float)


def _a_slice_curves(c: float) -> dict[str, np.ndarray]:
    """In-slice curves of family A at parameter c, as conic coefficient vectors
    over the monomials (e^2, ef, f^2, e, f, 1)."""
    cc = {
        "S2a": _conic6(0, 0, 0, 0, 1, -c),
        "S2b": _conic6(0, 0, 0, 0, 1, c),
        "S3a": _conic6(0, 0, 0, 1, 1, c * (c - 1)),
        "S3b": _conic6(0, 0, 0, 1, 1, -c * (c - 1)),
        "S3c": _conic6(0, 0, 0, 1, c, 0),
        "S4a": _conic6(0, 0, 0, 1, 0, 0),
        "S4b": _conic6(0, 0, 0, -2, -(c + 2), c * (c + 2)),
        "S4c": _conic6(0, 0, 0, 2, (c + 2), c * (c + 2)),
        "S6a": _conic6(-1, -2 * c, -c * (2 + c), 0, 0, 2 * c ** 3),
        "S6b": _conic6(1, 2, 1, 2 * c * c - 2 * c, -2 * c * c - 2 * c, c * c + 2 * c ** 3 + c ** 4),
        "S6c": _conic6(1, 2, 1, -2 * c * c + 2 * c, 2 * c * c + 2 * c, c * c + 2 * c ** 3 + c ** 4),
        "S8a": _conic6(0, 0, 0, 1, 1 + c, 0),
        "S8b": _conic6(0, 0, 0, -2, -1, c * (1 + 2 * c)),
        "S8c": _conic6(0, 0, 0, 2, 1, c * (1 + 2 * c)),
        "axis": _conic6(0, 0, 0, 0, 1, 0),
    }
    return cc


def _is_line(v) -> bool:
    return max(abs(v[0]), abs(v[1]), abs(v[2])) == 0.0


def _coincident(v1, v2) -> bool:
    n1 = v1 / max(abs(v1).max(), 1e-300)
    n2 = v2 / max(abs(v2).max(), 1e-300)
    return min(np.abs(n1 - n2).max(), np.abs(n1 + n2).max()) < 1e-9


def _line_points(v1, v2):
    # a1 e + b1 f + d1 = 0, a2 e + b2 f + d2 = 0
    a1, b1, d1 = v1[3], v1[4], v1[5]
    a2, b2, d2 = v2[3], v2[4], v2[5]
    det = a1 * b2 - a2 * b1
    norm = max(abs(a1), abs(b1)) * max(abs(a2), abs(b2))
    if abs(det) <= 1e-14 * max(norm, 1e-300):
        return []
    e = (-d1 * b2 + d2 * b1) / det
    f = (-a1 * d2 + a2 * d1) / det
    return [(e, f)]


def _poly_on_line(conic, line):
    """Restrict a conic to a line; returns (poly coeffs desc, param->point)."""
    a, b, d = line[3], line[4], line[5]
    if abs(b) >= abs(a):
        # param by e: f = -(a e + d)/b
        def pt(t):
            return t, -(a * t + d) / b

        aee, aef, aff, be, bf, dd = conic
        # substitute f
        p2 = aee + aef * (-a / b) + aff * (a / b) ** 2
        p1 = aef * (-d / b) + aff * 2 * (a / b) * (d / b) + be + bf * (-a / b)
        p0 = aff * (d / b) ** 2 + bf * (-d / b) + dd
        return [p2, p1, p0], pt
    else:
        def pt(t):
            return -(b * t + d) / a, t

        aee, aef, aff, be, bf, dd = conic
        p2 = aff + aef * (-b / a) + aee * (b / a) ** 2
        p1 = aef * (-d / a) + aee * 2 * (b / a) * (d / a) + bf + be * (-b / a)
        p0 = aee * (d / a) ** 2 + be * (-d / a) + dd
        return [p2, p1, p0], pt


def _real_roots(coeffs, cluster=_CLUSTER):
    c = np.array(coeffs, dtype=float)
    nz = np.nonzero(np.abs(c) > 1e-13 * max(1.0, np.abs(c).max()))[0]
    if len(nz) == 0:
        return None  # identically zero
    c = c[nz[0]:]
    if len(c) <= 1:
        return []
    roots = np.roots(c)
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-7 * (1 + abs(r)))
    out = []
    for r in real:
        if out and abs(r - out[-1]) <= cluster * (1 + abs(r)):
            continue
        out.append(r)
    return out


def _conic_as_quad_in_e(v, f):
    """Coefficients (a2, a1, a0) of the conic as a quadratic in e at given f."""
    return v[0], v[1] * f + v[3], v[2] * f * f + v[4] * f + v[5]


def _conic_conic_points(v1, v2):
    # resultant in e of two quadratics whose coefficients are linear/quadratic in f
    p = [np.poly1d([v1[0]]), np.poly1d([v1[1], v1[3]]), np.poly1d([v1[2], v1[4], v1[5]])]
    q = [np.poly1d([v2[0]]), np.poly1d([v2[1], v2[3]]), np.poly1d([v2[2], v2[4], v2[5]])]
    res = (p[0] * q[2] - p[2] * q[0]) ** 2 - (p[0] * q[1] - p[1] * q[0]) * (p[1] * q[2] - p[2] * q[1])
    froots = _real_roots(res.coeffs)
    if froots is None:
        return []
    pts = []
    scale = max(np.abs(v2).max(), 1.0)
    for f in froots:
        a2, a1, a0 = _conic_as_quad_in_e(v1, f)
        eroots = _real_roots([a2, a1, a0]) or []
        for e in eroots:
            val = (
                v2[0] * e * e + v2[1] * e * f + v2[2] * f * f + v2[3] * e + v2[4] * f + v2[5]
            )
            if abs(val) <= 1e-5 * scale * (1 + e * e + f * f):
                pts.append((e, f))
    return pts


def _pair_points(v1, v2):
    l1, l2 = _is_line(v1), _is_line(v2)
    if l1 and l2:
        return _line_points(v1, v2)
    if l1 or l2:
        line, conic = (v1, v2) if l1 else (v2, v1)
        coeffs, pt = _poly_on_line(conic, line)
        roots = _real_roots(coeffs)
        if roots is None:
            return []
        return [pt(t) for t in roots]
    return _conic_conic_points(v1, v2)


def _conic_nonempty_in_domain(v) -> bool:
    """Does the conic have real points with f >= 0 inside the window?"""
    if _is_line(v):
        return True
    fs = np.concatenate([[0.0], np.geomspace(1e-4, _WINDOW, 80)])
    for f in fs:
        a2, a1, a0 = _conic_as_quad_in_e(v, f)
        if abs(a2) < 1e-14:
            if abs(a1) > 1e-14:
                return True
            continue
        if a1 * a1 - 4 * a2 * a0 >= 0:
            return True
    return False


def _res2(p, q):
    """Resultant of two polynomials of degree <= 2, with a magnitude reference."""
    a2, a1, a0 = p
    b2, b1, b0 = q
    if a2 == 0 and b2 == 0:
        return a1 * b0 - b1 * a0, abs(a1 * b0) + abs(b1 * a0)
    t1 = a2 * b0 - a0 * b2
    t2 = a2 * b1 - a1 * b2
    t3 = a1 * b0 - a0 * b1
    mag = (abs(a2 * b0) + abs(a0 * b2)) ** 2 + (abs(a2 * b1) + abs(a1 * b2)) * (
        abs(a1 * b0) + abs(a0 * b1)
    )
    return t1 * t1 - t2 * t3, mag


def _axis_restriction(v):
    """Curve restricted to f=0 as a quadratic (a2, a1, a0) in e."""
    return (v[0], v[3], v[5])


def _quartic_disc(coeffs):
    """Closed-form discriminant of a polynomial of degree <= 4 (leading
    coefficients may vanish), with a termwise magnitude reference."""
    cs = list(coeffs)
    while len(cs) < 5:
        cs.insert(0, 0.0)
    a, b, c, d, e = cs[-5:]
    scale = max(abs(x) for x in (a, b, c, d, e)) or 1.0
    a, b, c, d, e = (x / scale for x in (a, b, c, d, e))
    if abs(a) > 1e-12:
        terms = [
            256 * a ** 3 * e ** 3, -192 * a * a * b * d * e * e, -128 * a * a * c * c * e * e,
            144 * a * a * c * d * d * e, -27 * a * a * d ** 4, 144 * a * b * b * c * e * e,
            -6 * a * b * b * d * d * e, -80 * a * b * c * c * d * e, 18 * a * b * c * d ** 3,
            16 * a * c ** 4 * e, -4 * a * c ** 3 * d * d, -27 * b ** 4 * e * e,
            18 * b ** 3 * c * d * e, -4 * b ** 3 * d ** 3, -4 * b * b * c ** 3 * e,
            b * b * c * c * d * d,
        ]
    elif abs(b) > 1e-12:
        terms = [
            18 * b * c * d * e, -4 * c ** 3 * e, c * c * d * d, -4 * b * d ** 3,
            -27 * b * b * e * e,
        ]
    elif abs(c) > 1e-12:
        terms = [d * d, -4 * c * e]
    else:
        return 1.0, 1.0
    return sum(terms), sum(abs(t) for t in terms)


def _pair_resultant_in_e(v1, v2):
    p = [np.poly1d([v1[0]]), np.poly1d([v1[1], v1[3]]), np.poly1d([v1[2], v1[4], v1[5]])]
    q = [np.poly1d([v2[0]]), np.poly1d([v2[1], v2[3]]), np.poly1d([v2[2], v2[4], v2[5]])]
    return (p[0] * q[2] - p[2] * q[0]) ** 2 - (p[0] * q[1] - p[1] * q[0]) * (p[1] * q[2] - p[2] * q[1])


_A_CURVE_NAMES = [
    "S2a", "S2b", "S3a", "S3b", "S3c", "S4a", "S4b", "S4c",
    "S6a", "S6b", "S6c", "S8a", "S8b", "S8c",
]
_BAND = 1e-10


def _banded_sign(value, mag):
    if abs(value) <= _BAND * max(mag, 1e-300):
        return 0
    return 1 if value > 0 else -1


def _line_conic_restriction(line, conic):
    coeffs, pt = _poly_on_line(conic, line)
    return coeffs, pt


def _always_tangent_pairs():
    """Line-conic pairs whose discriminant vanishes identically in c."""
    probes = (0.37, -0.83, 1.91, -2.47, 3.13, -4.59, 0.71)
    out = set()
    names = _A_CURVE_NAMES
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            flags = []
            for c in probes:
                curves = _a_slice_curves(c)
                v1, v2 = curves[n1], curves[n2]
                l1, l2 = _is_line(v1), _is_line(v2)
                if l1 == l2:
                    flags = []
                    break
                line, conic = (v1, v2) if l1 else (v2, v1)
                (p2, p1, p0), _ = _line_conic_restriction(line, conic)
                disc = p1 * p1 - 4 * p2 * p0
                mag = p1 * p1 + abs(4 * p2 * p0)
                flags.append(_banded_sign(disc, mag) == 0)
            if flags and all(flags):
                out.add((n1, n2))
    return out


_ALWAYS_TANGENT = None


def _a_indicators(c: float) -> dict[str, tuple[float, float]]:
    """Scalar indicators of c as (value, magnitude); sign changes mark events."""
    global _ALWAYS_TANGENT
    if _ALWAYS_TANGENT is None:
        _ALWAYS_TANGENT = _always_tangent_pairs()
    curves = _a_slice_curves(c)
    names = _A_CURVE_NAMES
    out: dict[str, tuple[float, float]] = {}
    line_points: dict[tuple[str, str], tuple[float, float]] = {}
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            v1, v2 = curves[n1], curves[n2]
            key = f"{n1}|{n2}"
            out[f"axis:{key}"] = _res2(_axis_restriction(v1), _axis_restriction(v2))
            l1, l2 = _is_line(v1), _is_line(v2)
            if l1 and l2:
                a1, b1, d1 = v1[3], v1[4], v1[5]
                a2, b2, d2 = v2[3], v2[4], v2[5]
                det = a1 * b2 - a2 * b1
                out[f"parallel:{key}"] = (det, abs(a1 * b2) + abs(a2 * b1))
                n1n = math.hypot(a1, b1)
                n2n = math.hypot(a2, b2)
                if n1n > 0 and n2n > 0:
                    s = 1.0 if (a1 * a2 + b1 * b2) >= 0 else -1.0
                    out[f"offset:{key}"] = (
                        d1 / n1n - s * d2 / n2n,
                        abs(d1) / n1n + abs(d2) / n2n,
                    )
                pts = _line_points(v1, v2)
                if pts:
                    line_points[(n1, n2)] = pts[0]
            elif l1 != l2:
                line, conic = (v1, v2) if l1 else (v2, v1)
                (p2, p1, p0), pt = _line_conic_restriction(line, conic)
                if (n1, n2) in _ALWAYS_TANGENT:
                    if abs(p2) > 1e-14 * (abs(p1) + abs(p0) + 1):
                        t = -p1 / (2 * p2)
                        e, f = pt(t)
                        out[f"tangpt:{key}"] = (f, 1 + abs(e) + abs(f))
                    out[f"escape:{key}"] = (p2, abs(p2) + abs(p1) + abs(p0))
                else:
                    out[f"tangency:{key}"] = (p1 * p1 - 4 * p2 * p0, p1 * p1 + abs(4 * p2 * p0))
                    out[f"escape:{key}"] = (p2, abs(p2) + abs(p1) + abs(p0))
            else:
                res = _pair_resultant_in_e(v1, v2)
                out[f"tangency:{key}"] = _quartic_disc(res.coeffs)
                cs = res.coeffs
                out[f"escape:{key}"] = (
                    (cs[0], max(abs(x) for x in cs) or 1.0) if len(cs) == 5 else (1.0, 1.0)
                )
    # triple concurrencies: a third curve passing through a line-line point
    for (n1, n2), (e, f) in line_points.items():
        if abs(e) > 1e4 or abs(f) > 1e4:
            continue
        for n3 in names:
            if n3 in (n1, n2):
                continue
            x = curves[n3]
            terms = (x[0] * e * e, x[1] * e * f, x[2] * f * f, x[3] * e, x[4] * f, x[5])
            out[f"concur:{n1}|{n2}|{n3}"] = (sum(terms), sum(abs(t) for t in terms))
    for n in names:
        v = curves[n]
        if _is_line(v):
            continue
        a2, a1, a0 = _axis_restriction(v)
        out[f"axis-tangency:{n}"] = (a1 * a1 - 4 * a2 * a0, a1 * a1 + abs(4 * a2 * a0))
        aee, aef, aff, be, bf, d = v
        terms = (
            aee * aff * d, aef / 2 * bf / 2 * be / 2 * 2, -aee * bf * bf / 4,
            -aef * aef / 4 * d, -be * be / 4 * aff,
        )
        out[f"degenerate:{n}"] = (sum(terms), sum(abs(t) for t in terms))
        A = aef * aef - 4 * aee * aff
        B = 2 * aef * be - 4 * aee * bf
        C = be * be - 4 * aee * d
        out[f"appear:{n}"] = (B * B - 4 * A * C, B * B + abs(4 * A * C))
    return out


def _a_indicator_value(c: float, key: str) -> tuple[float, float]:
    return _a_indicators(c)[key]


def _scan_indicator_events(cs, table, indicators_fn, grid):
    """Bisect every banded sign change of every indicator over the grid."""
    keys = set()
    for t in table:
        keys.update(t.keys())
    candidates = []
    for key in sorted(keys):
        signs = []
        for idx, t in enumerate(table):
            if key not in t:
                signs.append((idx, None))
                continue
            v, m = t[key]
            signs.append((idx, _banded_sign(v, m) if np.isfinite(v) else None))
        nz = [(i, s) for i, s in signs if s not in (None, 0)]
        if not nz:
            continue
        for (i0, s0), (i1, s1) in zip(nz, nz[1:]):
            if s0 == s1 or i1 - i0 > max(4, grid // 64):
                continue
            a, b = cs[i0], cs[i1]
            fa = table[i0][key][0]
            for _ in range(60):
                m = 0.5 * (a + b)
                got = indicators_fn(m).get(key)
                fm = got[0] if got else 0.0
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
                if b - a <= 1e-10:
                    break
            candidates.append((0.5 * (a + b), key))
    return candidates




def _b_escape_indicator(g: float, u_probe: float = 1e6) -> float:
    """Value of the node-focus discriminant along the parabola surface at
    large u; its sign change marks the interception at infinity."""
    w = 1 + u_probe * u_probe
    ell = 2 * u_probe * (1 + g) / w
    return (ell - 2 * g * u_probe / w) ** 2 + 8 * g / w


def _b_weak_multiplicity_gap(g: float) -> float:
    """Min over the trace-zero curve of the second weak-singularity factor;
    dips to zero where the surface's multiplicity jumps."""
    if g == 0:
        return 0.0
    us = np.linspace(0.0, 6.0, 121)
    w = 1 + us * us
    ell = 2 * g * us / w
    quart = 4 + ell * (ell - 4 * us + ell * us * us)
    vals = np.abs(4 * g * (g - 2) / (w * w) + quart / w)
    return float(vals.min())


def _a_pair_observable(c: float, n1: str, n2: str) -> tuple:
    curves = _a_slice_curves(c)
    v1, v2 = curves[n1], curves[n2]
    if _coincident(v1, v2):
        return ("coincident",)
    pts = _pair_points(v1, v2)
    interior = axis = 0
    for e, f in pts:
        if abs(e) > _WINDOW or abs(f) > _WINDOW:
            continue
        if f > 1e-7 * (1 + abs(f)):
            interior += 1
        elif f >= -1e-7 * (1 + abs(f)):
            axis += 1
    return (interior, axis)


def _a_conic_observable(c: float, n: str) -> tuple:
    v = _a_slice_curves(c)[n]
    a2, a1, a0 = _axis_restriction(v)
    axis_roots = _real_roots([a2, a1, a0], cluster=1e-5)
    n_axis = len(axis_roots) if axis_roots is not None else -1
    return (_conic_nonempty_in_domain(v), n_axis)


def _conc_value(c, n1, n2, n3):
    curves = _a_slice_curves(c)
    pts = _line_points(curves[n1], curves[n2])
    if not pts:
        return None
    e, f = pts[0]
    if abs(e) > 1e4 or abs(f) > 1e4:
        return None
    x = curves[n3]
    return x[0] * e * e + x[1] * e * f + x[2] * f * f + x[3] * e + x[4] * f + x[5]


def _tangpt_f(c, n1, n2):
    curves = _a_slice_curves(c)
    v1, v2 = curves[n1], curves[n2]
    line, conic = (v1, v2) if _is_line(v1) else (v2, v1)
    (p2, p1, p0), pt = _line_conic_restriction(line, conic)
    if abs(p2) <= 1e-14 * (abs(p1) + abs(p0) + 1):
        return None
    return pt(-p1 / (2 * p2))[1]


def _a_concur_touches(lo, hi, grid, table, cs):
    """Even-order contacts of concurrency indicators: |value| dips to zero
    without a sign change (a region shrinking to a point and regrowing)."""
    out = []
    keys = set()
    for t in table:
        keys.update(k for k in t if k.startswith("concur:"))
    for key in sorted(keys):
        ratios = []
        for t in table:
            got = t.get(key)
            if got is None or not np.isfinite(got[0]) or got[1] <= 0:
                ratios.append(np.inf)
            else:
                ratios.append(abs(got[0]) / got[1])
        finite = [r for r in ratios if np.isfinite(r)]
        if not finite or max(finite) < 1e-3:
            continue  # identically-degenerate triple
        _, _, name = key.partition(":")
        n1, n2, n3 = name.split("|")
        for i in range(1, len(cs) - 1):
            if not (ratios[i] < ratios[i - 1] and ratios[i] <= ratios[i + 1] and ratios[i] < 1e-4):
                continue
            a, b = cs[i - 1], cs[i + 1]
            if a < 0 < b:
                continue
            va = table[i - 1].get(key)
            vb = table[i + 1].get(key)
            if va is None or vb is None or va[0] * vb[0] <= 0:
                continue  # simple roots are handled by the sign-change scan

            def ratio(c):
                v = _conc_value(c, n1, n2, n3)
                if v is None:
                    return np.inf
                x = _a_slice_curves(c)[n3]
                mag = sum(abs(t) for t in x) or 1.0
                return abs(v) / mag

            for _ in range(70):
                m1 = a + (b - a) / 3
                m2 = b - (b - a) / 3
                if ratio(m1) < ratio(m2):
                    b = m2
                else:
                    a = m1
            v = 0.5 * (a + b)
            if ratio(v) < 1e-12 and min(ratio(v - 0.01), ratio(v + 0.01)) > 1e-7:
                out.append((v, key))
    return out


def _a_validate(c0: float, key: str) -> bool:
    """Check that a candidate event visibly changes the in-slice arrangement."""
    kind, _, name = key.partition(":")
    delta = max(1e-5, 1e-7 * abs(c0))
    lo, hi = c0 - delta, c0 + delta
    if abs(c0) < 1e-6 or lo < -5.01 or hi > 5.01 or lo < 0 < hi:
        return False
    if kind == "concur":
        n1, n2, n3 = name.split("|")
        va, vb = _conc_value(lo, n1, n2, n3), _conc_value(hi, n1, n2, n3)
        return va is not None and vb is not None and va * vb < 0
    if kind == "tangpt":
        n1, n2 = name.split("|")
        fa, fb = _tangpt_f(lo, n1, n2), _tangpt_f(hi, n1, n2)
        return fa is not None and fb is not None and fa * fb < 0
    if "|" in name:
        n1, n2 = name.split("|")
        return _a_pair_observable(lo, n1, n2) != _a_pair_observable(hi, n1, n2)
    return _a_conic_observable(lo, name) != _a_conic_observable(hi, name)


_A_KIND_LABEL = {
    "axis": "axis-intersection",
    "parallel": "intersection-escape",
    "offset": "coincidence",
    "tangency": "tangency",
    "tangpt": "axis-intersection",
    "escape": "intersection-escape",
    "concur": "triple-intersection",
    "axis-tangency": "axis-tangency",
    "degenerate": "curve-degeneracy",
    "appear": "curve-appearance",
}


def detect_slice_events(
    family: Family, c_range: tuple[float, float], grid: int = 2048
) -> list[tuple[float, str]]:
    """Numerically locate the parameter values where the in-slice curve
    arrangement changes; each value refined by bisection.

    Returns (value, event-kind) pairs sorted by value.
    """
    family = Family(family)
    if grid < 64:
        raise ValueError("grid must be >= 64")
    lo, hi = min(c_range), max(c_range)
    if family is Family.A:
        cs = np.linspace(lo, hi, grid)
        table = [_a_indicators(c) for c in cs]
        candidates = _scan_indicator_events(cs, table, _a_indicators, grid)
        touches = _a_concur_touches(lo, hi, grid, table, cs)
        events: list[tuple[float, str]] = []
        # whole-plane surfaces: the infinity-type transition and the infinite
        # coalescence occupy entire slices
        for v, kind in ((-1.0, "surface-plane"), (-2.0, "surface-plane")):
            if lo <= v <= hi:
                events.append((v, kind))
        for v, key in sorted(candidates):
            if any(abs(v - x) < 5e-6 for x, _ in events):
                continue
            if _a_validate(v, key):
                events.append((v, _A_KIND_LABEL[key.partition(":")[0]]))
        for v, key in sorted(touches):
            if not any(abs(v - x) < 5e-6 for x, _ in events):
                events.append((v, "triple-intersection"))
        events.sort()
        return events
    if family is Family.B:
        events: list[tuple[float, str]] = []
        for v, kind in ((0.0, "surface-plane"), (-1.0, "surface-plane"), (-2.0, "surface-plane")):
            if lo <= v <= hi:
                events.append((v, kind))
        # S6/S8 interception escaping to infinity: bisect the sign change of
        # the discriminant along the parabola curve at a large-u probe
        gs = np.linspace(lo, hi, grid)
        vals = [_b_escape_indicator(g) for g in gs]
        for i in range(len(gs) - 1):
            if vals[i] == 0 or vals[i] * vals[i + 1] < 0:
                a, b = gs[i], gs[i + 1]
                fa = vals[i]
                while b - a > 1e-9:
                    m = 0.5 * (a + b)
                    fm = _b_escape_indicator(m)
                    if fa * fm <= 0:
                        b = m
                    else:
                        a, fa = m, fm
                v = 0.5 * (a + b)
                if not any(abs(v - x) < 1e-6 for x, _ in events):
                    events.append((v, "intersection-at-infinity"))
        # multiplicity jump of the weak-singularity surface: minimize the gap
        gaps = np.array([_b_weak_multiplicity_gap(g) for g in gs])
        for i in range(1, len(gs) - 1):
            if gaps[i] < gaps[i - 1] and gaps[i] < gaps[i + 1] and gaps[i] < 1e-2:
                a, b = gs[i - 1], gs[i + 1]
                for _ in range(80):
                    m1 = a + (b - a) / 3
                    m2 = b - (b - a) / 3
                    if _b_weak_multiplicity_gap(m1) < _b_weak_multiplicity_gap(m2):
                        b = m2
                    else:
                        a = m1
                v = 0.5 * (a + b)
                if _b_weak_multiplicity_gap(v) < 1e-10 and not any(
                    abs(v - x) < 1e-6 for x, _ in events
                ):
                    events.append((v, "coincidence"))
        events.sort()
        return events
    raise UnsupportedFamily("family C has a 2-D diagram; no slicing")
