"""Brute-force reference implementations used by property and acceptance tests.

Everything here is a plain scan or textbook algorithm over the raw input,
sharing nothing with the envelope structures beyond the geometry predicates.
"""

from __future__ import annotations

import heapq
import math
from typing import Iterable, Optional, Sequence

from .geometry import Disk, Plane, Point3, VerticalLine, disk_edge


def naive_lowest(planes: Iterable[Plane], line: VerticalLine) -> Optional[Plane]:
    """Lowest plane at ``line`` by linear scan; ties by smaller id."""
    x, y = line
    best: Optional[Plane] = None
    best_h = None
    for h in planes:
        v = h.a * x + h.b * y + h.c
        if best is None or v < best_h or (v == best_h and h.id < best.id):
            best, best_h = h, v
    return best


def naive_k_lowest(planes: Iterable[Plane], line: VerticalLine, k: int) -> list[Plane]:
    """The min(k, n) lowest planes at ``line``, sorted by (height, id)."""
    if k <= 0:
        raise ValueError("k must be positive")
    x, y = line
    ranked = sorted(planes, key=lambda h: (h.a * x + h.b * y + h.c, h.id))
    return ranked[:k]


def naive_below(planes: Iterable[Plane], point: Point3) -> set[int]:
    """Ids of planes strictly below ``point``."""
    x, y, z = point
    return {h.id for h in planes if h.a * x + h.b * y + h.c < z}


def naive_awnn(points, q: tuple[float, float]) -> Optional[int]:
    """Exhaustive additively-weighted nearest neighbor; ties within EPS by id.

    ``points`` is an iterable of objects with .id, .x, .y, .w attributes.
    """
    from .nn import weighted_distance, better_candidate

    best_id = None
    best_d = math.inf
    for p in points:
        d = weighted_distance(q, p)
        if better_candidate(d, p.id, best_d, best_id):
            best_d, best_id = d, p.id
    return best_id


def dijkstra_explicit(disks: Sequence[Disk], r: float, source: int) -> dict[int, float]:
    """Textbook Dijkstra on the materialized proximity graph.

    Edges use the exact/tolerance gap predicate; weights are center distances.
    Unreachable vertices keep distance inf.
    """
    by_id = {d.id: d for d in disks}
    if source not in by_id:
        raise KeyError(f"unknown source id {source}")
    adj: dict[int, list[tuple[int, float]]] = {d.id: [] for d in disks}
    items = list(disks)
    for i, d1 in enumerate(items):
        for d2 in items[i + 1 :]:
            if disk_edge(d1, d2, r):
                w = math.hypot(d2.x - d1.x, d2.y - d1.y)
                adj[d1.id].append((d2.id, w))
                adj[d2.id].append((d1.id, w))
    dist = {d.id: math.inf for d in disks}
    dist[source] = 0.0
    heap = [(0.0, source)]
    done: set[int] = set()
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u]:
            nd = du + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist
