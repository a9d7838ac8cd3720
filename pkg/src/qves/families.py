"""Normal forms for the three quadratic families and their symmetries.

Coefficient layout used everywhere in this package: a quadratic polynomial
in (x, y) is a length-6 vector ordered as (1, x, y, x^2, xy, y^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MONOMIALS = ("1", "x", "y", "x^2", "xy", "y^2")


class Family(str, Enum):
    A = "A"
    B = "B"
    C = "C"


class DegenerateSystemError(ValueError):
    """Raised when a parameter point sits on the degeneracy locus and
    degenerate mode was not requested."""


PARAM_NAMES = {Family.A: ("c", "e", "f"), Family.B: ("g", "u", "l"), Family.C: ("g", "l")}


@dataclass(frozen=True)
class FamilyPoint:
    """A tagged parameter point: A=(c,e,f), B=(g,u,l), C=(g,l)."""

    family: Family
    params: tuple[float, ...]
    degenerate_ok: bool = False

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        params = tuple(float(v) for v in self.params)
        if len(params) != len(PARAM_NAMES[fam]):
            raise ValueError(f"family {fam.value} takes {len(PARAM_NAMES[fam])} parameters")
        if not all(np.isfinite(params)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "params", params)
        if not self.degenerate_ok and self.is_degenerate:
            raise DegenerateSystemError(
                f"family {fam.value} point {params} is degenerate; "
                "construct with degenerate_ok=True for degenerate-analysis mode"
            )

    @property
    def is_degenerate(self) -> bool:
        # A degenerates at c=0, B and C at g=0 (the leading parameter).
        return self.params[0] == 0.0

    def as_dict(self) -> dict:
        return {"family": self.family.value, "params": list(self.params)}


@dataclass(frozen=True)
class QuadSystem:
    """Planar quadratic vector field x' = p(x,y), y' = q(x,y)."""

    p: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        q = tuple(float(v) for v in self.q)
        if len(p) != 6 or len(q) != 6:
            raise ValueError("p and q need 6 coefficients each (1, x, y, x^2, xy, y^2)")
        if not (all(np.isfinite(p)) and all(np.isfinite(q))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return evaluate(self, x, y)

    def p_parts(self):
        """Homogeneous pieces (p0, p1 coeffs (x,y), p2 coeffs (x^2,xy,y^2))."""
        p = self.p
        return p[0], (p[1], p[2]), (p[3], p[4], p[5])

    def q_parts(self):
        q = self.q
        return q[0], (q[1], q[2]), (q[3], q[4], q[5])

    def jacobian(self, x: float, y: float) -> np.ndarray:
        p, q = self.p, self.q
        return np.array(
            [
                [p[1] + 2 * p[3] * x + p[4] * y, p[2] + p[4] * x + 2 * p[5] * y],
                [q[1] + 2 * q[3] * x + q[4] * y, q[2] + q[4] * x + 2 * q[5] * y],
            ]
        )

    def time_reversed(self) -> "QuadSystem":
        return QuadSystem(tuple(-v for v in self.p), tuple(-v for v in self.q))

    def as_dict(self) -> dict:
        return {"p": list(self.p), "q": list(self.q)}


@dataclass(frozen=True)
class SymmetryTransform:
    """Affine/time change (x,y,t) -> (ax+b, y, st) conjugating the two systems."""

    x_scale: float
    x_shift: float
    time_sign: float

    def apply_xy(self, x: float, y: float) -> tuple[float, float]:
        return self.x_scale * x + self.x_shift, y

    @property
    def is_identity(self) -> bool:
        return self.x_scale == 1.0 and self.x_shift == 0.0 and self.time_sign == 1.0

    def describe(self) -> str:
        if self.is_identity:
            return "(x,y,t)->(x,y,t)"
        sx = {1.0: "x", -1.0: "-x"}[self.x_scale]
        if self.x_shift:
            sx += f"{self.x_shift:+g}"
        st = {1.0: "t", -1.0: "-t"}[self.time_sign]
        return f"(x,y,t)->({sx},y,{st})"


IDENTITY = SymmetryTransform(1.0, 0.0, 1.0)


def instantiate(point: FamilyPoint) -> QuadSystem:
    """Build the normal-form quadratic system for a parameter point."""
    fam = point.family
    if fam is Family.A:
        c, e, f = point.params
        if c == 0.0:
            raise DegenerateSystemError("family A requires c != 0")
        p = (0.0, c, 1.0, -c, 0.0, 0.0)
        q = (0.0, e, -1.0 + (e + f) / c, -e, 2.0, 0.0)
        return QuadSystem(p, q)
    if fam is Family.B:
        g, u, ell = point.params
        p = (0.0, -2 * g * u, g * (1 + u * u), g, 0.0, 0.0)
        q = (0.0, -2 * (ell * u - 1), ell * (1 + u * u), ell, -2.0, 0.0)
        return QuadSystem(p, q)
    g, ell = point.params
    p = (0.0, 0.0, g, g, 0.0, 0.0)
    q = (0.0, 0.0, ell, ell, 2.0, 0.0)
    return QuadSystem(p, q)


def apply_symmetry(point: FamilyPoint) -> tuple[FamilyPoint, SymmetryTransform]:
    """Map a point to its canonical-domain representative.

    Returns the representative together with the (x,y,t) change realizing the
    conjugacy.  Applying the map twice is the identity on parameters.
    """
    fam = point.family
    if fam is Family.A:
        c, e, f = point.params
        if f < 0:
            out = FamilyPoint(fam, (c, -e, -f), point.degenerate_ok)
            return out, SymmetryTransform(-1.0, 1.0, -1.0)
        return point, IDENTITY
    if fam is Family.B:
        g, u, ell = point.params
        if u < 0:
            out = FamilyPoint(fam, (g, -u, -ell), point.degenerate_ok)
            return out, SymmetryTransform(-1.0, 0.0, -1.0)
        return point, IDENTITY
    g, ell = point.params
    if ell < 0:
        out = FamilyPoint(fam, (g, -ell), point.degenerate_ok)
        return out, SymmetryTransform(-1.0, 0.0, -1.0)
    return point, IDENTITY


def mirror_point(point: FamilyPoint) -> FamilyPoint:
    """The involution image regardless of canonical domain (A: (c,-e,-f), ...)."""
    fam = point.family
    if fam is Family.A:
        c, e, f = point.params
        return FamilyPoint(fam, (c, -e, -f), point.degenerate_ok)
    if fam is Family.B:
        g, u, ell = point.params
        return FamilyPoint(fam, (g, -u, -ell), point.degenerate_ok)
    g, ell = point.params
    return FamilyPoint(fam, (g, -ell), point.degenerate_ok)


def evaluate(sys: QuadSystem, x: float, y: float) -> tuple[float, float]:
    """Evaluate (p, q) at a phase point by direct polynomial evaluation."""
    mono = (1.0, x, y, x * x, x * y, y * y)
    p = sum(c * m for c, m in zip(sys.p, mono))
    q = sum(c * m for c, m in zip(sys.q, mono))
    return p, q


def pushforward_check(point: FamilyPoint, n_samples: int = 128, seed: int = 0) -> float:
    """Verify numerically that the symmetry transform conjugates the fields.

    Samples phase points and compares the field of the transformed system
    against the pushforward of the original; returns the max absolute residual.
    """
    mirror = mirror_point(point)
    sys0 = instantiate(point)
    sys1 = instantiate(mirror)
    if point.family is Family.A:
        tr = SymmetryTransform(-1.0, 1.0, -1.0)
    else:
        tr = SymmetryTransform(-1.0, 0.0, -1.0)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3.0, 3.0, size=(max(n_samples, 100), 2))
    worst = 0.0
    for X, Y in pts:
        # x = (X - shift)/scale maps the new chart back to the old one
        x = (X - tr.x_shift) / tr.x_scale
        p_old, q_old = evaluate(sys0, x, Y)
        p_new, q_new = evaluate(sys1, X, Y)
        # (x,y,t) -> (sx*x+b, y, -t): dX/dT = sx * (-1) * p_old, dY/dT = -q_old
        rp = p_new - tr.x_scale * tr.time_sign * p_old
        rq = q_new - tr.time_sign * q_old
        worst = max(worst, abs(rp), abs(rq))
    return worst
