"""Family-restricted algebraic invariants and comitants, transcribed as printed.

Scalar quantities are plain floats; quantities that are polynomials in the
phase variables are stored as coefficient tuples over an explicit monomial
basis.  Identically-zero quantities are represented structurally by ZERO so
callers can distinguish "exact zero by construction" from "numerically small".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .families import Family, FamilyPoint, instantiate


class _ZeroInvariant:
    """Structural exact zero (the paper asserts these as identities)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO"

    def __float__(self):
        return 0.0

    def __eq__(self, other):
        if isinstance(other, _ZeroInvariant):
            return True
        if isinstance(other, (int, float)):
            return float(other) == 0.0
        return NotImplemented

    def __hash__(self):
        return hash(0.0)


ZERO = _ZeroInvariant()

Scalar = Union[float, _ZeroInvariant]


@dataclass(frozen=True)
class LinForm:
    """a*x + b*y"""

    x: float
    y: float = 0.0

    def __call__(self, xv, yv):
        return self.x * xv + self.y * yv


@dataclass(frozen=True)
class QuadForm:
    """a*x^2 + b*xy + c*y^2"""

    xx: float
    xy: float = 0.0
    yy: float = 0.0

    def __call__(self, xv, yv):
        return self.xx * xv * xv + self.xy * xv * yv + self.yy * yv * yv


@dataclass(frozen=True)
class CubicForm:
    """Binary cubic a*x^3 + b*x^2 y + c*x y^2 + d*y^3"""

    x3: float
    x2y: float = 0.0
    xy2: float = 0.0
    y3: float = 0.0

    def __call__(self, xv, yv):
        return ((self.x3 * xv + self.x2y * yv) * xv + self.xy2 * yv * yv) * xv + self.y3 * yv ** 3

    def coeffs(self):
        return (self.x3, self.x2y, self.xy2, self.y3)


@dataclass(frozen=True)
class SigmaForm:
    """Trace polynomial sigma = const + slope*x (linear in x for these families)."""

    const: float
    slope: float

    def __call__(self, xv):
        return self.const + self.slope * xv

    @property
    def is_identically_zero(self) -> bool:
        return self.const == 0.0 and self.slope == 0.0


@dataclass(frozen=True)
class FactoredScalar:
    """A product kept as its printed factor list (never expanded)."""

    scale: float
    factors: tuple[float, ...]

    @property
    def value(self) -> float:
        out = self.scale
        for f in self.factors:
            out *= f
        return out


@dataclass(frozen=True)
class InvariantSet:
    family: Family
    mu0: Scalar
    mu1: LinForm
    mu2: Optional[Scalar]
    mu3: Optional[Scalar]
    mu4: Optional[Scalar]
    eta: Scalar
    Mtil: QuadForm
    C2: CubicForm
    kappa: Scalar
    Ktil: QuadForm
    Ntil: QuadForm
    D: Scalar
    R: QuadForm
    T1: Scalar
    T2: Scalar
    T3: Scalar
    T4: Scalar
    sigma: Optional[SigmaForm]
    F1: Optional[float]
    H: Optional[Scalar]
    B1: Optional[FactoredScalar]
    B2: Optional[float]
    B2_center_branch: Optional[float]
    W7: Optional[FactoredScalar]
    G9: Optional[Scalar]
    G10: Optional[float]
    L2: Optional[float]
    PR_on_S2: Optional[float]

    def as_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            if isinstance(v, _ZeroInvariant):
                return {"zero": True}
            if isinstance(v, LinForm):
                return {"x": v.x, "y": v.y}
            if isinstance(v, QuadForm):
                return {"xx": v.xx, "xy": v.xy, "yy": v.yy}
            if isinstance(v, CubicForm):
                return {"x3": v.x3, "x2y": v.x2y, "xy2": v.xy2, "y3": v.y3}
            if isinstance(v, SigmaForm):
                return {"const": v.const, "x": v.slope}
            if isinstance(v, FactoredScalar):
                return {"scale": v.scale, "factors": list(v.factors), "value": v.value}
            return float(v)

        return {
            "family": self.family.value,
            "mu0": enc(self.mu0), "mu1": enc(self.mu1), "mu2": enc(self.mu2),
            "mu3": enc(self.mu3), "mu4": enc(self.mu4),
            "eta": enc(self.eta), "Mtil": enc(self.Mtil), "C2": enc(self.C2),
            "kappa": enc(self.kappa), "Ktil": enc(self.Ktil), "Ntil": enc(self.Ntil),
            "D": enc(self.D), "R": enc(self.R),
            "T1": enc(self.T1), "T2": enc(self.T2), "T3": enc(self.T3), "T4": enc(self.T4),
            "sigma": enc(self.sigma), "F1": enc(self.F1), "H": enc(self.H),
            "B1": enc(self.B1), "B2": enc(self.B2), "W7": enc(self.W7),
            "G9": enc(self.G9), "G10": enc(self.G10), "L2": enc(self.L2),
            "PR": enc(self.PR_on_S2),
        }


def eval_invariants(point: FamilyPoint) -> InvariantSet:
    """Evaluate every printed invariant/comitant of the point's family."""
    fam = point.family
    if fam is Family.A:
        return _invariants_A(point)
    if fam is Family.B:
        return _invariants_B(point)
    return _invariants_C(point)


def _invariants_A(point: FamilyPoint) -> InvariantSet:
    c, e, f = point.params
    ef = e + f
    B1 = None
    B2 = None
    sigma = None
    W7 = None
    R = QuadForm(48 * c * c)
    if c != 0.0:
        sigma = SigmaForm((c * (c - 1) + ef) / c, -2 * (c - 1))
        B1 = FactoredScalar(
            2.0 / c,
            (c * (c - 1) + ef, c * (c - 1) - ef, e + c * f),
        )
        B2 = (
            -2 * (c - 1) ** 2 * (c ** 4 - 2 * c ** 3 + c ** 2 - 2 * c * f * ef)
            + 2 * (c - 1) ** 2 * ef * (3 * e + f)
        ) / c
        W7 = FactoredScalar(
            1.0 / c ** 4,
            (
                2 * c ** 3 - e * e - 2 * c * e * f - c * f * f * (2 + c),
                2 * c ** 3 + c ** 4 + c * c * (1 + 2 * e - 2 * f) - 2 * c * ef + ef * ef,
                2 * c ** 3 + c ** 4 + c * c * (1 - 2 * e + 2 * f) + 2 * c * ef + ef * ef,
            ),
        )
    on_s2 = abs((c - f) * (c + f)) <= 1e-9 * max(1.0, c * c, f * f)
    return InvariantSet(
        family=Family.A,
        mu0=ZERO,
        mu1=LinForm(-4 * c),
        mu2=None, mu3=None, mu4=None,
        eta=ZERO,
        Mtil=QuadForm(-8 * (2 + c) ** 2),
        C2=CubicForm(e, -(2 + c)),
        kappa=ZERO,
        Ktil=QuadForm(-4 * c),
        Ntil=QuadForm(-4 * (c + 1)),
        D=-192 * (c - f) ** 2 * (c + f) ** 2,
        R=R,
        T1=ZERO, T2=ZERO, T3=ZERO, T4=ZERO,
        sigma=sigma,
        F1=-2 * (3 * e + (2 + c) * f),
        H=ZERO,
        B1=B1,
        B2=B2,
        B2_center_branch=-8 * (c - 1) ** 4 * c,
        W7=W7,
        G9=ZERO,
        G10=None,
        L2=None,
        PR_on_S2=768 * f ** 4 if on_s2 else None,
    )


def _invariants_B(point: FamilyPoint) -> InvariantSet:
    g, u, ell = point.params
    w = 1 + u * u
    quartic = 4 + ell * (ell - 4 * u + ell * u * u)
    B1 = FactoredScalar(
        2 * g * g * w,
        (2 * g * u - ell * w, 4 * g * (g - 2) + w * quartic),
    )
    B2 = 2 * g ** 3 * (g - 1) ** 2 * w ** 2 * (
        4 * g * g
        + w * (4 - 8 * ell * u + 3 * ell * ell * w)
        - 4 * g * (2 - 2 * u * u + ell * u * w)
    )
    W7 = FactoredScalar(
        12 * g ** 6 * w ** 4,
        (
            4 * g * g * u * u - 4 * g * (ell * u - 2) * w + ell * ell * w * w,
            16 * g * w * (4 + 4 * ell * u - 3 * ell * ell * w)
            + 64 * g ** 3
            + 16 * g ** 4
            + w * w * quartic ** 2
            + 8 * g * g * (ell * ell * w * w + 4 * (3 + u * u) + 12 * ell * u * w),
        ),
    )
    degenerate = g == 0.0
    L2 = -6 * ell * w * quartic  # x^4 coefficient, defined on the g=0 locus
    return InvariantSet(
        family=Family.B,
        mu0=ZERO,
        mu1=LinForm(4 * g * g * w),
        mu2=ZERO if degenerate else None,
        mu3=ZERO if degenerate else None,
        mu4=ZERO if degenerate else None,
        eta=ZERO,
        Mtil=QuadForm(-32.0 if degenerate else -8 * (2 + g) ** 2),
        C2=CubicForm(-ell, 2 + g),
        kappa=ZERO,
        Ktil=QuadForm(-4 * g),
        Ntil=QuadForm(-4 * (g + 1)),
        D=12288 * g ** 6 * w ** 4,
        R=QuadForm(48 * g ** 4 * w * w),
        T1=ZERO, T2=ZERO, T3=ZERO, T4=ZERO,
        sigma=SigmaForm(ell - 2 * g * u + ell * u * u, 2 * (g - 1)),
        F1=2 * g * g * w * (2 * (2 + g) * u - 3 * ell * w),
        H=ZERO,
        B1=B1,
        B2=B2,
        B2_center_branch=8 * (g - 1) ** 4 * g ** 3,
        W7=W7,
        G9=ZERO,
        G10=None,
        L2=L2 if degenerate else None,
        PR_on_S2=None,
    )


def _invariants_C(point: FamilyPoint) -> InvariantSet:
    g, ell = point.params
    degenerate = g == 0.0
    return InvariantSet(
        family=Family.C,
        mu0=ZERO,
        mu1=LinForm(4 * g * g),
        mu2=ZERO if degenerate else None,
        mu3=ZERO if degenerate else None,
        mu4=ZERO if degenerate else None,
        eta=ZERO,
        Mtil=QuadForm(-32.0 if degenerate else -8 * (g - 2) ** 2),
        C2=CubicForm(-ell, g - 2),
        kappa=ZERO,
        Ktil=QuadForm(4 * g),
        Ntil=QuadForm(4 * (g - 1)),
        D=0.0,
        R=QuadForm(48 * g ** 4),
        T1=ZERO, T2=ZERO, T3=ZERO, T4=ZERO,
        sigma=None,
        F1=6 * g * g * ell,
        H=None,
        B1=None,
        B2=None,
        B2_center_branch=None,
        W7=None,
        G9=None,
        G10=g ** 3 * ell ** 3,
        L2=6 * ell ** 3 if degenerate else None,
        PR_on_S2=None,
    )


def infinite_cubic(point: FamilyPoint) -> CubicForm:
    """The cubic y*p2 - x*q2 of the instantiated system, whose roots are the
    directions of the infinite singular points."""
    sys = instantiate(point)
    _, _, (p20, p11, p02) = sys.p_parts()
    _, _, (q20, q11, q02) = sys.q_parts()
    # y*(p20 x^2 + p11 xy + p02 y^2) - x*(q20 x^2 + q11 xy + q02 y^2)
    return CubicForm(-q20, p20 - q11, p11 - q02, p02)


def invariant_identity_suite(point: FamilyPoint, trials: int = 100, seed: int = 0) -> float:
    """Check the printed C2 against the instantiated field at random samples.

    Returns the max absolute residual of C2(x,y) - (y*p2 - x*q2)(x,y).
    """
    inv = eval_invariants(point)
    cub = infinite_cubic(point)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2.0, 2.0, size=(trials, 2))
    worst = 0.0
    for x, y in pts:
        worst = max(worst, abs(inv.C2(x, y) - cub(x, y)))
    return worst
