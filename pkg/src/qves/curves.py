"""Invariant straight lines and parabolas with their cofactors.

Each lemma item stores the curve polynomial, its cofactor, and the parameter
condition under which the Lie-derivative identity p*fx + q*fy - K*f vanishes
identically.  The identity is verified by exact polynomial expansion in the
monomial basis up to degree 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .families import Family, FamilyPoint, instantiate

# monomial order used for degree-2 polynomials: (1, x, y, x^2, xy, y^2)
# degree-3 expansion basis:
MONO3 = ("1", "x", "y", "x^2", "xy", "y^2", "x^3", "x^2y", "xy^2", "y^3")


class ConditionNotMet(ValueError):
    pass


@dataclass(frozen=True)
class InvariantCurve:
    family: Family
    item: str  # lemma-item tag, e.g. "A-line-i"
    poly: tuple[float, ...]  # 6 coefficients (1, x, y, x^2, xy, y^2)
    cofactor: tuple[float, float, float]  # (1, x, y)
    condition: str

    def as_dict(self) -> dict:
        return {
            "family": self.family.value,
            "item": self.item,
            "poly": list(self.poly),
            "cofactor": list(self.cofactor),
            "condition": self.condition,
        }


def _poly_mul_lin(a6, b3):
    """(degree<=2 poly) * (degree<=1 poly) -> degree<=3 coefficient list."""
    out = np.zeros(10)
    # index maps for products of monomials
    prod = {
        (0, 0): 0, (0, 1): 1, (0, 2): 2,
        (1, 0): 1, (1, 1): 3, (1, 2): 4,
        (2, 0): 2, (2, 1): 4, (2, 2): 5,
        (3, 0): 3, (3, 1): 6, (3, 2): 7,
        (4, 0): 4, (4, 1): 7, (4, 2): 8,
        (5, 0): 5, (5, 1): 8, (5, 2): 9,
    }
    for i, av in enumerate(a6):
        if av == 0:
            continue
        for j, bv in enumerate(b3):
            if bv == 0:
                continue
            out[prod[(i, j)]] += av * bv
    return out


def _partial_x(poly6):
    # d/dx of (1, x, y, x^2, xy, y^2) -> (1, x, y)
    return (poly6[1], 2 * poly6[3], poly6[4])


def _partial_y(poly6):
    return (poly6[2], poly6[4], 2 * poly6[5])


def lie_residual(sys, curve: InvariantCurve) -> np.ndarray:
    """Coefficients of p*fx + q*fy - K*f in the degree-3 monomial basis."""
    fx = _partial_x(curve.poly)
    fy = _partial_y(curve.poly)
    out = _poly_mul_lin(sys.p, fx) + _poly_mul_lin(sys.q, fy)
    out -= _poly_mul_lin(curve.poly, curve.cofactor)
    return out


@dataclass(frozen=True)
class _LemmaItem:
    family: Family
    item: str
    condition: str
    holds: Callable[[tuple], float]  # residual of the condition (0 when met)
    curve: Callable[[tuple], tuple]  # params -> poly6
    cofactor: Callable[[tuple], tuple]  # params -> (1, x, y)
    requires: Callable[[tuple], bool] = lambda p: True  # domain guard

    def build(self, point: FamilyPoint) -> InvariantCurve:
        return InvariantCurve(
            self.family, self.item,
            tuple(float(v) for v in self.curve(point.params)),
            tuple(float(v) for v in self.cofactor(point.params)),
            self.condition,
        )

    def condition_residual(self, point: FamilyPoint) -> float:
        return float(self.holds(point.params))


LEMMA_ITEMS: list[_LemmaItem] = [
    # family A invariant straight lines
    _LemmaItem(
        Family.A, "A-line-i", "e=0",
        lambda p: p[1],
        lambda p: (0, 0, 1, 0, 0, 0),
        lambda p: ((p[2] - p[0]) / p[0], 2, 0),
        lambda p: p[0] != 0,
    ),
    _LemmaItem(
        Family.A, "A-line-ii", "e=(2+c)(c-f)/2",
        lambda p: p[1] - (2 + p[0]) * (p[0] - p[2]) / 2,
        lambda p: (p[0] - p[2], -(p[0] - p[2]), 2, 0, 0, 0),
        lambda p: (0, 2, 0),
    ),
    _LemmaItem(
        Family.A, "A-line-iii", "e=-(2+c)(c+f)/2",
        lambda p: p[1] + (2 + p[0]) * (p[0] + p[2]) / 2,
        lambda p: (0, p[0] + p[2], 2, 0, 0, 0),
        lambda p: (-2, 2, 0),
    ),
    # family A invariant parabolas
    _LemmaItem(
        Family.A, "A-parab-i", "f=-(2c^2+c+2e)",
        lambda p: p[2] + (2 * p[0] * p[0] + p[0] + 2 * p[1]),
        lambda p: (
            -(p[0] + p[0] * p[0] + p[1]) / p[0],
            (2 * p[0] + 2 * p[0] * p[0] + p[1]) / p[0],
            1, -(1 + p[0]), 0, 0,
        ),
        lambda p: (0, -2 * p[0], 0),
        lambda p: p[0] != 0,
    ),
    _LemmaItem(
        Family.A, "A-parab-ii", "f=2c^2+c-2e",
        lambda p: p[2] - (2 * p[0] * p[0] + p[0] - 2 * p[1]),
        lambda p: (0, p[1] / p[0], 1, -(1 + p[0]), 0, 0),
        lambda p: (2 * p[0], -2 * p[0], 0),
        lambda p: p[0] != 0,
    ),
    _LemmaItem(
        Family.A, "A-parab-iii", "e=-f(1+c)",
        lambda p: p[1] + p[2] * (1 + p[0]),
        lambda p: (0, 1 + p[0], 1, -(1 + p[0]), 0, 0),
        lambda p: (p[0] - p[2], -2 * p[0], 0),
    ),
    # family B invariant curves
    _LemmaItem(
        Family.B, "B-curve-i", "l=0",
        lambda p: p[2],
        lambda p: (-1, 0, 1, 0, 0, 0),
        lambda p: (0, -2, 0),
    ),
    _LemmaItem(
        Family.B, "B-curve-ii", "g=(l u^2 + l - 2u)/(2u)",
        lambda p: p[0] - (p[2] * p[1] * p[1] + p[2] - 2 * p[1]) / (2 * p[1]) if p[1] != 0 else 1.0,
        lambda p: (
            2 * p[1] / (p[2] * p[1] * p[1] + p[2] - 2 * p[1]),
            -2 * p[2] * p[1] / (p[2] * p[1] * p[1] + p[2] - 2 * p[1]),
            1,
            p[2] / (p[2] * p[1] * p[1] + p[2] - 2 * p[1]),
            0, 0,
        ),
        lambda p: (0, (p[2] * p[1] * p[1] + p[2] - 2 * p[1]) / p[1], 0),
        lambda p: p[1] != 0 and abs(p[2] * p[1] * p[1] + p[2] - 2 * p[1]) > 1e-12,
    ),
    _LemmaItem(
        Family.B, "B-curve-iii", "l=u=0",
        lambda p: abs(p[2]) + abs(p[1]),
        lambda p: (1 / p[0], 0, 1, (p[0] + 1) / p[0], 0, 0),
        lambda p: (0, 2 * p[0], 0),
        lambda p: p[0] != 0,
    ),
    # family C invariant curves
    _LemmaItem(
        Family.C, "C-curve-i", "l=0",
        lambda p: p[1],
        lambda p: (0, 0, 1, 0, 0, 0),
        lambda p: (0, 2, 0),
    ),
    _LemmaItem(
        Family.C, "C-curve-ii", "l=0",
        lambda p: p[1],
        lambda p: (0, 0, 1, (p[0] - 1) / p[0], 0, 0),
        lambda p: (0, 2 * p[0], 0),
        lambda p: p[0] != 0,
    ),
]


def curves_at(point: FamilyPoint, tol: float = 1e-9) -> list[InvariantCurve]:
    """All lemma curves whose conditions hold at the point (within tol),
    each re-verified through the Lie-derivative identity before emission."""
    sys = instantiate(point)
    scale = max(1.0, max(abs(v) for v in point.params) ** 2)
    out = []
    for item in LEMMA_ITEMS:
        if item.family is not point.family or not item.requires(point.params):
            continue
        if abs(item.condition_residual(point)) > tol * scale:
            continue
        curve = item.build(point)
        res = lie_residual(sys, curve)
        if np.abs(res).max() < 1e-10 * scale:
            out.append(curve)
    return out


def verify_cofactor(curve: InvariantCurve, point: FamilyPoint) -> np.ndarray:
    """Expand the Lie-derivative identity at the point; the condition must
    hold, and all residual coefficients are returned."""
    item = next(
        i for i in LEMMA_ITEMS if i.family is curve.family and i.item == curve.item
    )
    scale = max(1.0, max(abs(v) for v in point.params) ** 2)
    if not item.requires(point.params) or abs(item.condition_residual(point)) > 1e-9 * scale:
        raise ConditionNotMet(f"{curve.item}: condition {curve.condition} fails at {point.params}")
    sys = instantiate(point)
    return lie_residual(sys, item.build(point))


def sample_condition_locus(item: _LemmaItem, rng: np.random.Generator, box=3.0):
    """A random parameter point on the item's condition locus."""
    fam = item.family
    for _ in range(200):
        if fam is Family.A:
            c = rng.uniform(-box, box)
            if abs(c) < 0.05:
                continue
            e = rng.uniform(-box, box)
            f = rng.uniform(-box, box)
            if item.item == "A-line-i":
                pt = (c, 0.0, f)
            elif item.item == "A-line-ii":
                pt = (c, (2 + c) * (c - f) / 2, f)
            elif item.item == "A-line-iii":
                pt = (c, -(2 + c) * (c + f) / 2, f)
            elif item.item == "A-parab-i":
                pt = (c, e, -(2 * c * c + c + 2 * e))
            elif item.item == "A-parab-ii":
                pt = (c, e, 2 * c * c + c - 2 * e)
            else:
                pt = (c, -f * (1 + c), f)
        elif fam is Family.B:
            g = rng.uniform(-box, box)
            u = rng.uniform(0.05, box)
            ell = rng.uniform(-box, box)
            if abs(g) < 0.05:
                continue
            if item.item == "B-curve-i":
                pt = (g, u, 0.0)
            elif item.item == "B-curve-ii":
                denom = ell * u * u + ell - 2 * u
                if abs(denom) < 1e-3:
                    continue
                pt = (denom / (2 * u), u, ell)
                if abs(pt[0]) < 0.05:
                    continue
            else:
                pt = (g, 0.0, 0.0)
        else:
            g = rng.uniform(-box, box)
            if abs(g) < 0.05:
                continue
            pt = (g, 0.0)
        try:
            point = FamilyPoint(fam, pt)
        except Exception:
            continue
        if item.requires(point.params):
            return point
    raise RuntimeError(f"could not sample the condition locus of {item.item}")
