"""Topological invariant tuples and the portrait-label decision diagrams.

The three decision diagrams are transcribed as nested data (one table per
family) and walked component by component; every leaf is a portrait label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import Family, FamilyPoint
from .portrait import SeparatrixSkeleton, SkeletonOptions, compute_skeleton
from .singularities import is_certified_center


class UnclassifiedTuple(ValueError):
    """No leaf matches: either a numeric misclassification upstream or an
    island candidate; both reportable."""


class IncompleteSkeleton(RuntimeError):
    pass


@dataclass(frozen=True)
class InvariantTuple:
    family: Family
    components: tuple

    def as_dict(self) -> dict:
        names = _COMPONENT_NAMES[self.family]
        return {"family": self.family.value, **dict(zip(names, self.components))}

    def __iter__(self):
        return iter(self.components)


_COMPONENT_NAMES = {
    Family.A: ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8", "I9", "I10"),
    Family.B: ("I1", "I2", "I3", "I4", "I5", "I6", "I7"),
    Family.C: ("I1", "I2", "I3", "I4", "I5", "I6"),
}


def _circle_counts(skeleton: SeparatrixSkeleton) -> list[tuple[float, int]]:
    """(angle, separatrix count) for each infinite node, sorted by angle."""
    out = []
    for name, node in skeleton.nodes.items():
        if not node.is_infinite:
            continue
        ang = math.atan2(node.pos[1], node.pos[0]) % (2 * math.pi)
        out.append((ang, skeleton.incidence(name)))
    return sorted(out)


def canonical_sequence(counts: list[int]) -> str:
    """Start at a maximal entry; read the cyclic sequence in the direction
    that maximizes it lexicographically."""
    if not counts:
        return ""
    n = len(counts)
    best = None
    m = max(counts)
    for i in range(n):
        if counts[i] != m:
            continue
        fwd = tuple(counts[(i + k) % n] for k in range(n))
        bwd = tuple(counts[(i - k) % n] for k in range(n))
        for cand in (fwd, bwd):
            if best is None or cand > best:
                best = cand
    return "".join(str(v) for v in best)


def sequence_variants(counts: list[int]) -> set[str]:
    n = len(counts)
    m = max(counts) if counts else 0
    out = set()
    for i in range(n):
        if counts[i] != m:
            continue
        out.add("".join(str(counts[(i + k) % n]) for k in range(n)))
        out.add("".join(str(counts[(i - k) % n]) for k in range(n)))
    return out


_ELLIPTIC_TYPES = {"PEP-H", "E-PHP", "E-H"}


def _infinite_pair_count(skeleton: SeparatrixSkeleton):
    recs = {}
    for node in skeleton.nodes.values():
        if node.is_infinite:
            recs[node.record.location] = node.record
    if skeleton.degenerate_kind == "line-at-infinity" or any(
        r.local_type == "line-at-infinity" for r in recs.values()
    ):
        return "inf"
    return len(recs)


def _finite_antisaddles(skeleton):
    return [
        (name, n)
        for name, n in sorted(skeleton.nodes.items())
        if n.side == 0 and n.record.local_type in ("node", "focus", "weak-focus", "center", "n3")
    ]


def _isolated_graphics(skeleton):
    return [g for g in skeleton.graphics if g.cardinality == "one"]


def _family_base(skeleton) -> int:
    ntypes = {n.record.local_type for n in skeleton.nodes.values() if n.is_infinite}
    return 1 if ntypes & _ELLIPTIC_TYPES else 0


def tuple_of(skeleton: SeparatrixSkeleton) -> InvariantTuple:
    """Compute the family-specific invariant tuple from a skeleton."""
    if not skeleton.complete:
        raise IncompleteSkeleton("skeleton has budget-exceeded separatrices")
    fam = skeleton.point.family
    if fam is Family.A:
        return _tuple_a(skeleton)
    if fam is Family.B:
        return _tuple_b(skeleton)
    return _tuple_c(skeleton)


def _degenerate_symbol(skeleton) -> str:
    if skeleton.degenerate_kind == "hyperbola":
        return ")("
    if skeleton.degenerate_kind == "two-crossing-lines":
        return "x"
    return "empty"


def _index_sum(skeleton) -> int:
    return sum(
        n.record.index for n in skeleton.nodes.values() if n.side == 0
    )


def _i4(skeleton) -> str:
    i3 = _infinite_pair_count(skeleton)
    if i3 == "inf":
        return "0"
    return canonical_sequence([c for _, c in _circle_counts(skeleton)])


def _cycle_count(skeleton) -> int:
    return len(skeleton.cycles)


def _finite_multiple_symbol(skeleton) -> str:
    for n in skeleton.nodes.values():
        if n.side == 0 and n.record.multiplicity == 2:
            return n.record.local_type  # "sn2" | "cp2"
    return "empty"


def _connection_symbol(skeleton) -> str:
    if "loop" in skeleton.connection_flags:
        return "l"
    if "finite-infinite" in skeleton.connection_flags:
        return "f-i"
    return "empty"


def _i9(skeleton):
    anti = _finite_antisaddles(skeleton)
    if len(anti) == 2:
        pair = tuple(sorted(skeleton.incidence(name) for name, _ in anti))
        return pair
    if len(anti) == 1:
        return skeleton.incidence(anti[0][0])
    return 0


def _i10(skeleton) -> str:
    for g in _isolated_graphics(skeleton):
        if g.enclosed is None:
            continue
        node = skeleton.nodes[g.enclosed]
        if node.record.local_type == "center" or is_certified_center(skeleton.point):
            return "c"
        if node.record.trace < 0:
            return "f(s)"
        return "f(u)"
    return "empty"


def _tuple_a(sk) -> InvariantTuple:
    i1 = sum(1 for n in sk.nodes.values() if n.side == 0)
    i2 = _index_sum(sk)
    i3 = _infinite_pair_count(sk)
    i4 = _i4(sk)
    i5 = _family_base(sk) + len(_isolated_graphics(sk))
    i6 = _finite_multiple_symbol(sk)
    i7 = _connection_symbol(sk)
    i8 = _cycle_count(sk)
    i9 = _i9(sk)
    i10 = _i10(sk)
    return InvariantTuple(Family.A, (i1, i2, i3, i4, i5, i6, i7, i8, i9, i10))


def _tuple_b(sk) -> InvariantTuple:
    i1 = _degenerate_symbol(sk)
    if i1 != "empty":
        return InvariantTuple(Family.B, (i1, None, None, None, None, None, None))
    i2 = _index_sum(sk)
    i3 = _infinite_pair_count(sk)
    i4 = _i4(sk)
    i5 = _cycle_count(sk)
    anti = _finite_antisaddles(sk)
    i6 = "c" if (anti and (anti[0][1].record.local_type == "center" or is_certified_center(sk.point))) else "f"
    i7 = _php_pair(sk)
    return InvariantTuple(Family.B, (i1, i2, i3, i4, i5, i6, i7))


def _php_pair(sk):
    """Separatrices arriving at the two parabolic sectors flanking the
    hyperbolic sector of the PHP-side infinite point."""
    tri = [
        (name, n) for name, n in sk.nodes.items()
        if n.is_infinite and n.record.local_type in _ELLIPTIC_TYPES
    ]
    if not tri:
        return None
    # the PHP side is the endpoint whose own hyperbolic-sector borders exist:
    # identified as the endpoint with the larger separatrix incidence
    best = max(tri, key=lambda t: sk.incidence(t[0]))
    name, node = best
    # split incident separatrices by which side of the point they approach
    u = np.array([-node.pos[1], node.pos[0], 0.0])
    left = right = 0
    for s in sk.separatrices:
        for endpoint, pts in ((s.source, s.points[: max(2, len(s.points) // 8)]),
                              (s.target, s.points[-max(2, len(s.points) // 8):])):
            if endpoint != name:
                continue
            probe = min(pts, key=lambda p: np.linalg.norm(p - node.pos) if True else 0)
            near = pts[int(np.argmin(np.linalg.norm(pts - node.pos, axis=1)))]
            k = len(s.points) // 4
            mid = s.points[k] if endpoint == s.source else s.points[-k - 1]
            if float((mid - node.pos) @ u) >= 0:
                left += 1
            else:
                right += 1
    return tuple(sorted((left, right)))


def _tuple_c(sk) -> InvariantTuple:
    i1 = _degenerate_symbol(sk)
    if i1 != "empty":
        return InvariantTuple(Family.C, (i1, None, None, None, None, None))
    i2 = _index_sum(sk)
    i3 = _infinite_pair_count(sk)
    i4 = _i4(sk)
    ntypes = {n.record.local_type for n in sk.nodes.values() if n.is_infinite}
    i5 = "y" if ntypes & _ELLIPTIC_TYPES else "n"
    i6 = "n"
    if i5 == "y":
        # is the elliptic sector bordered by separatrices connecting the
        # finite nilpotent point with the infinite multiple point
        finite_nilp = [
            name for name, n in sk.nodes.items()
            if n.side == 0 and n.record.local_type in ("es3", "shat3")
        ]
        tri = {
            name for name, n in sk.nodes.items()
            if n.is_infinite and n.record.local_type in _ELLIPTIC_TYPES
        }
        for s in sk.separatrices:
            if (s.source in finite_nilp and s.target in tri) or (
                s.source in tri and s.target in finite_nilp
            ):
                i6 = "y"
                break
    return InvariantTuple(Family.C, (i1, i2, i3, i4, i5, i6))


# ----------------------------------------------------------------------------
# Decision diagrams (data), walked in component order
# ----------------------------------------------------------------------------

TABLE_C = {
    "I1": {
        ")(": "1L1",
        "x": "P3",
        "empty": {"I2": {
            -1: "S4",
            1: {"I3": {
                1: "5L1",
                "inf": "P1",
                2: {"I4": {
                    "1010": "P2",
                    "1110": "S3",
                    "2100": "S1",
                    "2121": "S2",
                    "2101": {"I5": {
                        "n": "8L1",
                        "y": {"I6": {"n": "8L2", "y": "8L3"}},
                    }},
                }},
            }},
        }},
    }
}

TABLE_B = {
    "I1": {
        ")(": "1S1",
        "x": "1.1L1",
        "empty": {"I2": {
            -1: "V1",
            1: {"I3": {
                1: {"I4": {
                    "20": "5.8L2",
                    "21": {"I5": {0: "5S1", 1: "5S4"}},
                    "30": "5S3",
                }},
                2: {"I4": {
                    "1010": {"I5": {0: {"I6": {"c": "4.8L3", "f": "4S2"}}}},
                    "1110": {"I5": {0: "V5", 1: "V9"}},
                    "2000": {"I5": {0: {"I6": {"c": "4.8L5", "f": "8S5"}}}},
                    "2100": {"I5": {0: "V20", 1: "V24"}},
                    "2101": "4.8L4",
                    "2111": {"I5": {0: "7S1", 1: "7S2"}},
                    "2121": {"I5": {0: "V12", 1: "V17"}},
                    "3101": "4S3",
                    "3111": "8S4",
                    "4111": {"I5": {
                        0: {"I6": {"f": {"I7": {(2, 2): "V14", (1, 3): "V15"}}}},
                        1: "V16",
                    }},
                }},
                "inf": {"I4": {"0": {"I5": {0: {"I6": {"f": "4.5L1", "c": "P4"}}}}}},
            }},
        }},
    }
}

TABLE_A = {
    "I1": {
        2: {"I2": {
            -1: {"I3": {2: {"I4": {
                "2210": "2.4L1",
                "3101": "2.8L2",
                "3201": {"I5": {
                    1: {"I6": {"cp2": "2.3L2", "sn2": "2S6"}},
                    2: "2S1",
                }},
                "3310": "2S4",
                "4201": "2S5",
            }}}},
            1: {"I3": {
                1: {"I4": {
                    "21": {"I5": {0: "P43", 1: "P45"}},
                    "22": {"I5": {
                        0: {"I6": {"cp2": "P42", "sn2": "2.5L2"}},
                        1: {"I6": {"sn2": {"I7": {"empty": "2.5L5", "l": "P46"}}}},
                    }},
                    "31": {"I5": {0: "2.5L3", 1: "2.5L4"}},
                    "32": {"I5": {0: {"I6": {"sn2": {"I7": {"empty": {"I8": {
                        0: {"I9": {1: "2.5L8", 2: "2.5L1"}},
                        1: "2.5L6",
                    }}}}}}}},
                }},
                2: {"I4": {
                    "1110": {"I5": {1: "2.4L4", 3: "2.4L5"}},
                    "2100": {"I5": {0: "2.8L10", 1: "2.8L11"}},
                    "2101": {"I5": {
                        0: "2S35",
                        1: {"I6": {"cp2": "2.3L7", "sn2": "2S12"}},
                        2: {"I6": {"sn2": {"I7": {
                            "empty": {"I8": {0: {"I9": {1: "2S17", 2: "2S13"}}}},
                            "l": "2.7L1",
                        }}}},
                    }},
                    "2111": {"I5": {1: "2.4L6", 4: "2.4L7"}},
                    "2121": {"I5": {1: "2.8L8", 2: "2S26", 3: "2.8L9"}},
                    "2200": {"I5": {
                        0: {"I6": {"cp2": "2.3L11", "sn2": "2S34"}},
                        1: {"I6": {"sn2": {"I7": {"empty": "2S39", "l": "2.7L3"}}}},
                    }},
                    "3101": {"I5": {1: {"I6": {"sn2": {"I7": {"empty": {"I8": {
                        0: {"I9": {1: "2S20", 2: "2S11"}},
                        1: "2S18",
                    }}}}}}}},
                    "3121": {"I5": {
                        1: {"I6": {
                            "cp2": "2.3L9",
                            "sn2": {"I7": {"empty": {"I8": {0: {"I9": {3: "2S25", 4: "2S24"}}}}}},
                        }},
                        2: {"I6": {"sn2": {"I7": {"empty": "2S29", "l": "2.7L2"}}}},
                        3: "2S28",
                    }},
                    "3200": {"I5": {0: {"I6": {"sn2": {"I7": {"empty": {"I8": {
                        0: {"I9": {1: "2S42", 2: "2S33"}},
                        1: "2S40",
                    }}}}}}}},
                    "4121": {"I5": {1: {"I6": {"sn2": {"I7": {"empty": {"I8": {
                        0: {"I9": {1: "2S32", 3: "2S23"}},
                        1: "2S30",
                    }}}}}}}},
                }},
                "inf": "P44",
            }},
        }},
        3: {"I2": {
            -1: {"I3": {2: {"I4": {
                "2101": "4.8L2",
                "2210": "4S5",
                "3101": "8S7",
                "3201": {"I5": {
                    1: "V1",
                    2: {"I10": {"c": "3.7L1", "f(s)": "7S1", "f(u)": "7S4"}},
                }},
                "3310": {"I8": {0: "V9", 1: "V11"}},
                "4201": {"I8": {0: "V12", 1: "V66"}},
            }}}},
            1: {"I3": {
                1: {"I4": {
                    "21": "5.8L3",
                    "22": {"I5": {0: "5S6", 1: "5.7L1"}},
                    "31": "5S9",
                    "32": {"I8": {0: "5S1", 1: "5S3"}},
                }},
                2: {"I4": {
                    "1110": "4S34",
                    "2100": "8S99",
                    "2101": {"I5": {
                        0: "V240",
                        1: {"I9": {(1, 3): "V94", (2, 2): "V101"}},
                        2: "7S7",
                    }},
                    "2111": "4S59",
                    "2121": {"I7": {"empty": "V188", "f-i": "8S77"}},
                    "2200": {"I5": {0: "V238", 1: "7S15"}},
                    "3101": {"I8": {0: "V89", 1: "V91"}},
                    "3121": {"I5": {
                        1: {"I9": {(1, 3): "V173", (2, 2): "V176"}},
                        2: "7S11",
                    }},
                    "3200": {"I8": {0: "V233", 1: "V235"}},
                    "4121": {"I8": {0: "V168", 1: "V170"}},
                }},
                "inf": "4.5L1",
            }},
        }},
    }
}

_TABLES = {Family.A: TABLE_A, Family.B: TABLE_B, Family.C: TABLE_C}


@dataclass(frozen=True)
class PortraitLabel:
    family: Family
    label: str

    def as_dict(self) -> dict:
        return {"family": self.family.value, "label": self.label}


def label_of(tup: InvariantTuple) -> PortraitLabel:
    """Walk the family's decision diagram to the unique leaf."""
    fam = tup.family
    values = dict(zip(_COMPONENT_NAMES[fam], tup.components))
    node = _TABLES[fam]
    while isinstance(node, dict):
        (comp, cases), = node.items()
        val = values.get(comp)
        if val in cases:
            node = cases[val]
            continue
        # sequences admit symmetric variants; retry I4 against all of them
        if comp == "I4" and isinstance(val, str):
            hit = None
            for cand in cases:
                if isinstance(cand, str) and len(cand) == len(val):
                    if cand in _seq_variants_str(val):
                        hit = cand
                        break
            if hit is not None:
                node = cases[hit]
                continue
        raise UnclassifiedTuple(
            f"family {fam.value}: no leaf for {comp}={val!r} in tuple {tup.components}"
        )
    return PortraitLabel(fam, node)


def _seq_variants_str(seq: str) -> set[str]:
    counts = [int(ch) for ch in seq]
    return sequence_variants(counts)


def classify_point(point: FamilyPoint, opts: SkeletonOptions | None = None):
    """Full pipeline: skeleton -> tuple -> label."""
    sk = compute_skeleton(point, opts)
    tup = tuple_of(sk)
    lab = label_of(tup)
    return sk, tup, lab


_B_TO_C_EQUIV = {
    "V1": "S4",
    "V5": "S3",
    "V12": "S2",
    "V20": "S1",
    "1S1": "1L1",
    "5S1": "5L1",
    "1.1L1": "P3",
}


def equivalent(point_a: FamilyPoint, point_b: FamilyPoint) -> bool:
    """Topological equivalence decided by tuple equality (same family) or via
    the cross-family correspondence between families B and C."""
    _, tup_a, lab_a = classify_point(point_a)
    _, tup_b, lab_b = classify_point(point_b)
    if point_a.family == point_b.family:
        return tup_a.components == tup_b.components
    labs = {point_a.family: lab_a.label, point_b.family: lab_b.label}
    if set(labs) == {Family.B, Family.C}:
        return _B_TO_C_EQUIV.get(labs[Family.B]) == labs[Family.C]
    return False
