"""Dynamic planar nearest-neighbor frontends.

Contents:

* a reference additively-weighted nearest-neighbor (AWNN) backend that does an
  exhaustive scan,
* an insertion-only wrapper built from power-of-two buckets rebuilt on carry
  (the logarithmic dynamization method),
* a deletion pool supporting repeated nearest-pop queries with tombstones,
* Euclidean dynamic NN via lifting points onto a two-tier envelope.

Weighted distances use floats with tolerance EPS_DIST; ties collapse to the
smaller id so results are deterministic and oracle-comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import EPS_DIST, lift_point
from .two_tier import TwoTierEnvelope


@dataclass(frozen=True, slots=True)
class WeightedPoint:
    id: int
    x: float
    y: float
    w: float = 0.0


def weighted_distance(q: tuple[float, float], p: WeightedPoint) -> float:
    return math.hypot(p.x - q[0], p.y - q[1]) + p.w


def better_candidate(d: float, pid: int, best_d: float, best_id: Optional[int]) -> bool:
    """Tolerance-then-id rule: strictly closer wins, near-ties go to smaller id."""
    if best_id is None:
        return True
    if d < best_d - EPS_DIST:
        return True
    if d <= best_d + EPS_DIST and pid < best_id:
        return True
    return False


class ScanNearest:
    """Reference AWNN backend: exhaustive scan over an immutable point set."""

    def __init__(self, points: Sequence[WeightedPoint]):
        self.points = list(points)

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, q: tuple[float, float]) -> WeightedPoint:
        if not self.points:
            raise ValueError("nearest() on empty backend")
        best = None
        best_d = math.inf
        for p in self.points:
            d = weighted_distance(q, p)
            if better_candidate(d, p.id, best_d, None if best is None else best.id):
                best, best_d = p, d
        return best


class InsertOnlyNearest:
    """Insertion-only AWNN via buckets of sizes that are distinct powers of two.

    An insert merges equal-size buckets like a binary-counter carry; each merge
    rebuilds one backend from scratch.  ``nearest`` returns the best candidate
    over all buckets.
    """

    def __init__(self, backend_factory=ScanNearest):
        self._factory = backend_factory
        self.buckets: list[ScanNearest] = []
        self._ids: set[int] = set()

    def __len__(self) -> int:
        return len(self._ids)

    def bucket_sizes(self) -> list[int]:
        return sorted((len(b) for b in self.buckets), reverse=True)

    def insert(self, p: WeightedPoint) -> None:
        if p.id in self._ids:
            raise KeyError(f"duplicate point id {p.id}")
        self._ids.add(p.id)
        carry = [p]
        size = 1
        while True:
            same = [b for b in self.buckets if len(b) == size]
            if not same:
                break
            b = same[0]
            self.buckets.remove(b)
            carry.extend(b.points)
            size *= 2
        self.buckets.append(self._factory(carry))
        self.buckets.sort(key=len, reverse=True)

    def nearest(self, q: tuple[float, float]) -> Optional[WeightedPoint]:
        best: Optional[WeightedPoint] = None
        best_d = math.inf
        for b in self.buckets:
            p = b.nearest(q)
            d = weighted_distance(q, p)
            if better_candidate(d, p.id, best_d, None if best is None else best.id):
                best, best_d = p, d
        return best


class DeletionPool:
    """Pool of weighted points supporting nearest-pop within a distance bound.

    Members are tombstoned on pop; the backing list is compacted whenever
    tombstones outnumber the live members (mirrors the half-deleted rebuild
    rule used by the deletion-only reporting structure).
    """

    def __init__(self, points: Sequence[WeightedPoint] = ()):
        self._live: dict[int, WeightedPoint] = {p.id: p for p in points}
        self._members: list[WeightedPoint] = list(self._live.values())
        self._tombstones = 0
        self.rebuilds = 0

    def __len__(self) -> int:
        return len(self._live)

    def pop_within(self, q: tuple[float, float], bound: float) -> Optional[WeightedPoint]:
        """Remove and return the nearest live member with weighted distance <= bound."""
        best: Optional[WeightedPoint] = None
        best_d = math.inf
        for p in self._members:
            if p.id not in self._live:
                continue
            d = weighted_distance(q, p)
            if better_candidate(d, p.id, best_d, None if best is None else best.id):
                best, best_d = p, d
        if best is None or best_d > bound + EPS_DIST:
            return None
        del self._live[best.id]
        self._tombstones += 1
        if self._tombstones > len(self._live):
            self._members = list(self._live.values())
            self._tombstones = 0
            self.rebuilds += 1
        return best


class DynamicNearestNeighbor:
    """Euclidean dynamic NN over integer points, lifted onto a corrected envelope."""

    def __init__(self):
        self._env = TwoTierEnvelope.build([], mode="corrected")
        self._points: dict[int, tuple[int, int]] = {}

    def __len__(self) -> int:
        return len(self._points)

    def insert(self, point_id: int, x: int, y: int) -> None:
        if point_id in self._points:
            raise KeyError(f"duplicate point id {point_id}")
        self._points[point_id] = (x, y)
        self._env.insert(lift_point(point_id, x, y))

    def delete(self, point_id: int) -> None:
        if point_id not in self._points:
            raise KeyError(f"unknown point id {point_id}")
        del self._points[point_id]
        self._env.delete(point_id)

    def nearest(self, qx: int, qy: int) -> Optional[int]:
        h = self._env.lowest_at(qx, qy)
        return None if h is None else h.id
