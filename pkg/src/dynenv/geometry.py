"""Exact geometric primitives: planes, vertical lines, lifting, levels, disk gaps.

All predicates are exact for int / Fraction inputs.  Structure code feeds
integer coefficients (bounded inputs) so the hot paths stay in plain int
arithmetic; Fractions appear only in derived quantities such as cell
vertices and witness points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional

Rational = int | Fraction

#: tolerance for <= comparisons on irrational (float) distances
EPS_DIST = 1e-9


class VerticalLine(NamedTuple):
    """A line parallel to the z-axis, identified by its xy coordinates."""

    x: Rational
    y: Rational


class Point3(NamedTuple):
    x: Rational
    y: Rational
    z: Rational


@dataclass(frozen=True, slots=True)
class Plane:
    """Non-vertical plane z = a*x + b*y + c with a unique id.

    Duplicate coefficient triples are allowed as long as ids differ; all
    tie-breaking is by smaller id.
    """

    id: int
    a: Rational
    b: Rational
    c: Rational

    def height_at(self, x: Rational, y: Rational) -> Rational:
        return self.a * x + self.b * y + self.c


@dataclass(frozen=True, slots=True)
class Disk:
    """Weighted planar point: center (x, y) with nonnegative radius."""

    id: int
    x: float
    y: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError(f"disk {self.id}: negative radius {self.radius}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)


def plane_height(plane: Plane, line: VerticalLine) -> Rational:
    """Exact height of ``plane`` above the xy-point of ``line``."""
    return plane.a * line.x + plane.b * line.y + plane.c


def lower_plane(line: VerticalLine, p1: Plane, p2: Plane) -> Plane:
    """The plane with strictly smaller height at ``line``; ties go to the smaller id."""
    h1 = plane_height(p1, line)
    h2 = plane_height(p2, line)
    if h1 < h2:
        return p1
    if h2 < h1:
        return p2
    return p1 if p1.id < p2.id else p2


def level_of(point: Point3, planes: Iterable[Plane]) -> int:
    """Number of planes strictly below ``point``."""
    x, y, z = point
    return sum(1 for h in planes if h.a * x + h.b * y + h.c < z)


def lift_point(point_id: int, x: Rational, y: Rational) -> Plane:
    """Lift a planar point onto the paraboloid dual plane.

    The lifted plane is z = -2*x*X - 2*y*Y + (x^2 + y^2); for lifted sets the
    lowest plane over a query (qx, qy) belongs to the Euclidean nearest
    neighbor of (qx, qy).
    """
    return Plane(point_id, -2 * x, -2 * y, x * x + y * y)


def _is_rational(v) -> bool:
    return isinstance(v, (int, Fraction))


def disk_edge(d1: Disk, d2: Disk, r: float) -> bool:
    """Edge predicate of the proximity graph: gap between the disks <= r.

    The gap is ||p - p'|| - r1 - r2.  With rational inputs the comparison is
    done exactly on squared forms; otherwise within EPS_DIST.
    """
    if d1.id == d2.id:
        raise ValueError(f"self-loop query on disk id {d1.id}")
    dx = d2.x - d1.x
    dy = d2.y - d1.y
    bound = r + d1.radius + d2.radius
    exact = all(_is_rational(v) for v in (d1.x, d1.y, d2.x, d2.y, d1.radius, d2.radius, r))
    if exact:
        # bound >= 0 always (radii and r nonnegative), so squaring is safe
        return dx * dx + dy * dy <= bound * bound
    return math.hypot(dx, dy) <= bound + EPS_DIST


def disk_gap(d1: Disk, d2: Disk) -> float:
    """max(0, ||p - p'|| - r1 - r2), the distance between the two disks."""
    return max(0.0, math.hypot(d2.x - d1.x, d2.y - d1.y) - d1.radius - d2.radius)


def lowest_of(planes: Iterable[Plane], x: Rational, y: Rational) -> Optional[Plane]:
    """Exact argmin of height over ``planes`` at (x, y), ties by id; None if empty."""
    best: Optional[Plane] = None
    best_h: Optional[Rational] = None
    for h in planes:
        v = h.a * x + h.b * y + h.c
        if best is None or v < best_h or (v == best_h and h.id < best.id):
            best, best_h = h, v
    return best
