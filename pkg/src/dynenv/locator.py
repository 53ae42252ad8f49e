"""Planar point location over a triangulation by slab decomposition.

Slabs are the intervals between consecutive distinct x-coordinates of the
triangulation vertices; inside a slab the non-vertical edges crossing it are
vertically ordered and searched by binary search.  Queries are resolved with
exact integer arithmetic; floats are used only to presort edges within a slab
(near-ties are repaired exactly).

Boundary rules, fixed and deterministic:
  * a query with x on a slab boundary belongs to the slab on the right;
  * a query exactly on an edge belongs to the cell above the edge;
  * queries outside the triangulated box clamp to the nearest slab / cell.
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np


def _orient(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the cross product (b - a) x (c - a), exact."""
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


class SlabLocator:
    def __init__(self, xs: list, ys: list, triangles: list[tuple[int, int, int]]):
        """Build the slab structure for triangles over vertices (xs[i], ys[i]).

        Triangles must form a tiling (pairwise-disjoint interiors); vertex
        coordinates are exact ints (arbitrary precision).
        """
        self._xs = xs
        self._ys = ys
        # dedupe undirected edges, remembering the cell above / below each
        edge_index: dict[tuple[int, int], int] = {}
        e_u: list[int] = []
        e_v: list[int] = []  # oriented so xs[u] < xs[v]
        above: list[int] = []
        below: list[int] = []
        for t, (i, j, k) in enumerate(triangles):
            for u, v, w in ((i, j, k), (j, k, i), (k, i, j)):
                if xs[u] == xs[v]:
                    continue  # vertical edge, never crossed by a slab interior
                if xs[u] > xs[v]:
                    u, v = v, u
                key = (u, v) if u < v else (v, u)
                idx = edge_index.get(key)
                if idx is None:
                    idx = len(e_u)
                    edge_index[key] = idx
                    e_u.append(u)
                    e_v.append(v)
                    above.append(-1)
                    below.append(-1)
                side = _orient(xs[u], ys[u], xs[v], ys[v], xs[w], ys[w])
                if side > 0:
                    above[idx] = t
                elif side < 0:
                    below[idx] = t
                else:
                    raise ValueError("degenerate triangle in locator input")
        self._eu = e_u
        self._ev = e_v
        self._above = above
        self._below = below

        bounds = sorted(set(xs))
        self._bounds = bounds
        self._bounds_f = np.array([float(b) for b in bounds])
        nslabs = max(1, len(bounds) - 1)

        # sweep: edge active in slabs [idx(x_u), idx(x_v))
        pos = {b: i for i, b in enumerate(bounds)}
        starts: list[list[int]] = [[] for _ in range(len(bounds))]
        ends: list[list[int]] = [[] for _ in range(len(bounds))]
        for e in range(len(e_u)):
            starts[pos[xs[e_u[e]]]].append(e)
            ends[pos[xs[e_v[e]]]].append(e)

        self._slab_edges: list[np.ndarray] = []
        active: set[int] = set()
        for s in range(nslabs):
            for e in ends[s]:
                active.discard(e)
            for e in starts[s]:
                active.add(e)
            self._slab_edges.append(self._sorted_slab(sorted(active), s))

    # -- build helpers -------------------------------------------------

    def _edge_y_num_den(self, e: int, x_num: int, x_den: int):
        """y of edge e at x = x_num / x_den as (numerator, denominator), den > 0."""
        xs, ys = self._xs, self._ys
        u, v = self._eu[e], self._ev[e]
        dx = xs[v] - xs[u]
        num = ys[u] * dx * x_den + (ys[v] - ys[u]) * (x_num - xs[u] * x_den)
        return num, dx * x_den

    def _sorted_slab(self, edges: list[int], s: int) -> np.ndarray:
        if not edges:
            return np.empty(0, dtype=np.int64)
        xs, ys = self._xs, self._ys
        lo, hi = self._bounds[s], self._bounds[min(s + 1, len(self._bounds) - 1)]
        cx2 = lo + hi  # 2 * slab center
        keys = []
        for e in edges:
            u, v = self._eu[e], self._ev[e]
            fx1, fy1 = float(xs[u]), float(ys[u])
            fdx, fdy = float(xs[v]) - fx1, float(ys[v]) - fy1
            keys.append(fy1 + fdy * (float(cx2) / 2.0 - fx1) / fdx)
        order = sorted(range(len(edges)), key=lambda i: keys[i])
        ranked = [edges[i] for i in order]
        ranked_keys = [keys[i] for i in order]
        # exact repair of float near-ties: insertion pass with exact comparator
        for i in range(1, len(ranked)):
            scale = max(1.0, abs(ranked_keys[i]), abs(ranked_keys[i - 1]))
            if ranked_keys[i] - ranked_keys[i - 1] > 1e-9 * scale:
                continue
            j = i
            while j > 0 and self._edge_below(ranked[j], ranked[j - 1], cx2):
                ranked[j], ranked[j - 1] = ranked[j - 1], ranked[j]
                ranked_keys[j], ranked_keys[j - 1] = ranked_keys[j - 1], ranked_keys[j]
                j -= 1
        return np.array(ranked, dtype=np.int64)

    def _edge_below(self, e1: int, e2: int, cx2: int) -> bool:
        """Exact: y of e1 strictly below y of e2 at x = cx2 / 2."""
        n1, d1 = self._edge_y_num_den(e1, cx2, 2)
        n2, d2 = self._edge_y_num_den(e2, cx2, 2)
        return n1 * d2 < n2 * d1

    # -- queries -------------------------------------------------------

    def _slab_of(self, x) -> int:
        i = int(np.searchsorted(self._bounds_f, float(x), side="right")) - 1
        b = self._bounds
        while i + 1 < len(b) - 1 and x >= b[i + 1]:
            i += 1
        while i > 0 and x < b[i]:
            i -= 1
        return min(max(i, 0), max(0, len(b) - 2))

    def _edge_at_or_below(self, e: int, x, y) -> bool:
        """Exact: y_e(x) <= y."""
        xs, ys = self._xs, self._ys
        u, v = self._eu[e], self._ev[e]
        dx = xs[v] - xs[u]
        return ys[u] * dx + (ys[v] - ys[u]) * (x - xs[u]) <= y * dx

    def locate(self, x, y) -> int:
        """Id of the triangle whose footprint contains (x, y); clamped outside."""
        edges = self._slab_edges[self._slab_of(x)]
        if len(edges) == 0:
            raise ValueError("slab with no edges; locator input did not tile")
        lo, hi = 0, len(edges) - 1
        best = -1
        while lo <= hi:
            mid = (lo + hi) // 2
            if self._edge_at_or_below(int(edges[mid]), x, y):
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        if best < 0:
            return self._above[int(edges[0])]  # below the bottom boundary: clamp up
        e = int(edges[best])
        cell = self._above[e]
        if cell < 0:
            cell = self._below[e]  # on or above the top boundary: clamp down
        return cell
