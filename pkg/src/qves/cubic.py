"""Closed-form real root solver for cubics, with a Newton polish.

Follows the trigonometric/Cardano split to stay stable for the well-separated
and the nearly-multiple root cases alike.
"""

from __future__ import annotations

import math

import numpy as np


def _polish(coeffs, x, iters=3):
    a, b, c, d = coeffs
    for _ in range(iters):
        f = ((a * x + b) * x + c) * x + d
        fp = (3 * a * x + 2 * b) * x + c
        if fp == 0:
            break
        step = f / fp
        if not math.isfinite(step):
            break
        x -= step
    return x


def real_roots_cubic(a: float, b: float, c: float, d: float) -> list[float]:
    """All real roots of a x^3 + b x^2 + c x + d = 0, multiplicities repeated.

    Handles degree degeneration (a = 0, quadratic/linear) gracefully.
    """
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0.0:
        return []
    a, b, c, d = a / scale, b / scale, c / scale, d / scale
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return [] if abs(c) < 1e-14 else [-d / c]
        disc = c * c - 4 * b * d
        if disc < 0:
            return []
        s = math.sqrt(disc)
        # stable quadratic formula
        q = -(c + math.copysign(s, c)) / 2
        roots = []
        if q != 0:
            roots = [q / b, d / q]
        else:
            roots = [0.0, -c / b]
        return sorted(roots)

    # depressed cubic t^3 + p t + q with x = t - b/(3a)
    b1, c1, d1 = b / a, c / a, d / a
    shift = b1 / 3.0
    p = c1 - b1 * b1 / 3.0
    q = 2.0 * b1 ** 3 / 27.0 - b1 * c1 / 3.0 + d1
    disc = -4 * p ** 3 - 27 * q * q
    roots = []
    if disc > 0:
        # three distinct real roots: trigonometric form
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        for k in range(3):
            roots.append(m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift)
    elif disc == 0:
        if p == 0:
            roots = [-shift] * 3
        else:
            r1 = 3.0 * q / p
            r2 = -3.0 * q / (2.0 * p)
            roots = [r1 - shift, r2 - shift, r2 - shift]
    else:
        # one real root: Cardano with a stable cube-root branch
        if p == 0:
            t = math.copysign(abs(q) ** (1.0 / 3.0), -q)
        else:
            u = math.sqrt(q * q / 4.0 + p ** 3 / 27.0)
            w = -q / 2.0 + math.copysign(u, -q)
            t0 = math.copysign(abs(w) ** (1.0 / 3.0), w)
            t = t0 - p / (3.0 * t0) if t0 != 0 else 0.0
        roots = [t - shift]
    return sorted(_polish((a, b, c, d), x) for x in roots)


def cluster_roots(roots: list[float], rel_tol: float = 1e-9) -> list[tuple[float, int]]:
    """Merge nearby roots into (value, multiplicity) clusters."""
    out: list[tuple[float, int]] = []
    for r in sorted(roots):
        if out and abs(r - out[-1][0]) <= rel_tol * max(1.0, abs(r), abs(out[-1][0])):
            v, m = out[-1]
            out[-1] = ((v * m + r) / (m + 1), m + 1)
        else:
            out.append((r, 1))
    return out


def real_roots_oracle(a, b, c, d, lo=-1e3, hi=1e3, n=200001):
    """Dense sign-change bracketing oracle, independent of the closed form."""
    xs = np.linspace(lo, hi, n)
    vals = ((a * xs + b) * xs + c) * xs + d
    roots = []
    for i in range(len(xs) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            roots.append(xs[i])
        elif v0 * v1 < 0:
            x0, x1 = xs[i], xs[i + 1]
            f0 = v0
            for _ in range(80):
                xm = 0.5 * (x0 + x1)
                fm = ((a * xm + b) * xm + c) * xm + d
                if f0 * fm <= 0:
                    x1 = xm
                else:
                    x0, f0 = xm, fm
            roots.append(0.5 * (x0 + x1))
    if len(vals) and vals[-1] == 0.0:
        roots.append(xs[-1])
    return roots
