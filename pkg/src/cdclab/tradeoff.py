"""Closed-form optimal storage-computation-communication tradeoff.

All functions take and return exact rationals. ``r`` is the storage space,
``c`` the computation load and ``K`` the number of nodes; the admissible
region is ``1 <= c <= r < K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class CornerPoint:
    g: Fraction
    c: Fraction
    L: Fraction
    terminal: bool = False


@dataclass(frozen=True)
class SurfacePoint:
    r: Fraction
    c: Fraction
    L: Fraction


def _storage(r: Rational, K: int) -> Fraction:
    r = Fraction(r)
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    if not 1 <= r < K:
        raise ValueError(f"storage space r={r} outside [1, {K})")
    return r


def _floor_ceil(x: Fraction) -> tuple[int, int]:
    return math.floor(x), math.ceil(x)


def g_r(r: Rational, K: int) -> Fraction:
    r = _storage(r, K)
    lo, hi = _floor_ceil(r)
    return lo + (r - lo) * (K - hi) / (K - r)


def c_at(r: Rational, g: Rational, K: int) -> Fraction:
    """Computation load of the corner with multicast multiplicity ``g``."""
    r = Fraction(r)
    return r / K + (1 - r / K) * g


def corner_load(r: Rational, c: Rational, K: int) -> Fraction:
    """``(1 - r/K)^2 / (c - r/K)``, the optimal load at a corner abscissa."""
    r, c = Fraction(r), Fraction(c)
    return (1 - r / K) ** 2 / (c - r / K)


def c_star(r: Rational, K: int) -> Fraction:
    return c_at(r, g_r(r, K), K)


def L_star_storage(r: Rational, K: int) -> Fraction:
    """Optimal communication load when computation is unconstrained."""
    r = _storage(r, K)
    lo, hi = _floor_ceil(r)
    return Fraction(lo + hi - r, lo * hi) - Fraction(1, K)


def corner_points(r: Rational, K: int) -> list[CornerPoint]:
    """Integer-multiplicity corners ``g = 1..floor(r)`` followed by the terminal point.

    For integer ``r`` the terminal point coincides with ``g = r``; that corner
    is flagged terminal instead of being listed twice.
    """
    r = _storage(r, K)
    points = [
        CornerPoint(Fraction(g), c_at(r, g, K), Fraction(K - r, g * K))
        for g in range(1, math.floor(r) + 1)
    ]
    if r.denominator == 1:
        last = points[-1]
        points[-1] = CornerPoint(last.g, last.c, last.L, terminal=True)
    else:
        points.append(CornerPoint(g_r(r, K), c_star(r, K), L_star_storage(r, K), terminal=True))
    return points


def _check_admissible(r: Fraction, c: Fraction) -> None:
    if not 1 <= c <= r:
        raise ValueError(f"computation load c={c} outside [1, r={r}]")


def optimal_load(r: Rational, c: Rational, K: int) -> Fraction:
    """``L*(r, c)``: lower convex envelope of the corners, flat beyond ``c*(r)``."""
    r, c = _storage(r, K), Fraction(c)
    _check_admissible(r, c)
    points = corner_points(r, K)
    if c >= points[-1].c:
        return points[-1].L
    # corner loads are convex and decreasing in c, so the envelope is the polyline
    for left, right in zip(points, points[1:]):
        if left.c <= c <= right.c:
            t = (c - left.c) / (right.c - left.c)
            return left.L + t * (right.L - left.L)
    raise AssertionError(f"no envelope segment covers c={c}")


def region(r: Rational, c: Rational, K: int) -> str:
    """``"flat"`` when extra computation cannot lower the load, else ``"envelope"``."""
    r, c = _storage(r, K), Fraction(c)
    _check_admissible(r, c)
    return "flat" if c >= c_star(r, K) else "envelope"


def rational_grid(lo: Fraction, hi: Fraction, step: Fraction, include_hi: bool = True) -> list[Fraction]:
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    out = []
    x = Fraction(lo)
    while x < hi or (include_hi and x == hi):
        out.append(x)
        x += step
    return out


def storage_grid(K: int, step: Rational = Fraction(1, 10)) -> list[Fraction]:
    return rational_grid(Fraction(1), Fraction(K), Fraction(step), include_hi=False)


def ocp_curve(K: int, step: Rational = Fraction(1, 10)) -> list[SurfacePoint]:
    return [SurfacePoint(r, Fraction(1), 1 - r / K) for r in storage_grid(K, step)]


def ocm_curve(K: int, step: Rational = Fraction(1, 10)) -> list[SurfacePoint]:
    return [SurfacePoint(r, c_star(r, K), L_star_storage(r, K)) for r in storage_grid(K, step)]


def surface(K: int, r_step: Rational = Fraction(1, 10), c_step: Rational = Fraction(1, 10)) -> list[SurfacePoint]:
    """Sample ``L*(r, c)`` on a rational grid over ``1 <= c <= r < K``."""
    return [
        SurfacePoint(r, c, optimal_load(r, c, K))
        for r in storage_grid(K, r_step)
        for c in rational_grid(Fraction(1), r, Fraction(c_step))
    ]
