"""Vertical shallow cuttings for sets of integer-coefficient planes.

A (k, K)-cutting here is a set of downward semi-unbounded prisms with
triangular ceilings whose footprints tile a huge bounding box, each prism
meeting at most K planes, such that every point at level <= k lies in some
prism.  Construction is randomized scaffolding (sampled lower envelope,
projected and triangulated via qhull) followed by exact integer validation:
ceilings sit at the (j*k)-th lowest plane height per vertex, conflict lists
are derived exactly from strict below-sets at the ceiling vertices, and
witness points certify level coverage.  Failed attempts escalate the sample
density and the ceiling level until the budget is exhausted.

Exactness: plane coefficients are bounded ints, ceiling vertices are ints
(the four far corners use huge ints), so every predicate is integer
arithmetic; numpy int64 is used only where magnitudes provably fit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .geometry import Plane
from .locator import SlabLocator, _orient

#: half-width of the bounding box; far beyond any feature of 31-bit inputs
INF_COORD = 1 << 100

#: interior ceiling-vertex coordinates are clamped into +-SITE_WINDOW so that
#: height sums (3 * (|a*x| + |b*y| + |c|)) provably fit in int64
SITE_WINDOW = 1 << 28

_INT64_SAFE = 1 << 61


class CuttingError(Exception):
    """Construction failed after exhausting the retry budget."""


@dataclass(frozen=True)
class CuttingBudget:
    c: int = 8  # conflict bound: every cell meets <= c * k planes
    cprime: int = 4  # size bound: at most cprime * n / k cells
    max_retries: int = 8


@dataclass(frozen=True)
class PrismCell:
    """Read-only view of one vertical prism of a cutting."""

    id: int
    ceiling: tuple[tuple[int, int, int], ...]
    footprint: tuple[tuple[int, int], ...]
    conflict_list: tuple[int, ...]
    kappa: int
    original_size: int


@dataclass
class CuttingReport:
    ok: bool
    checks: dict[str, bool]
    failures: list[str]
    k: int
    K: int
    cell_count: int

    def summary(self) -> str:
        status = "pass" if self.ok else "FAIL"
        parts = ", ".join(f"{name}={'ok' if good else 'FAIL'}" for name, good in self.checks.items())
        return f"cutting {status} (k={self.k}, K={self.K}, cells={self.cell_count}): {parts}"


def _as_int_coeffs(planes: Sequence[Plane]) -> np.ndarray:
    for p in planes:
        if not (isinstance(p.a, int) and isinstance(p.b, int) and isinstance(p.c, int)):
            raise TypeError(f"plane {p.id}: cutting construction requires int coefficients")
    arr = np.empty((len(planes), 3), dtype=np.int64)
    for i, p in enumerate(planes):
        arr[i, 0] = p.a
        arr[i, 1] = p.b
        arr[i, 2] = p.c
    return arr


class ShallowCutting:
    """Finished cutting: ceilings, exact conflict lists, locator, counters.

    Conflict lists start as immutable sorted id arrays and are converted to
    insertion-ordered dicts on first mutation (drains / removals), which keeps
    construction cheap and gives O(1) removals afterwards.
    """

    def __init__(
        self,
        k: int,
        xs: list,
        ys: list,
        zs: list,
        triangles: list[tuple[int, int, int]],
        conflicts: list[np.ndarray],
        locator: SlabLocator,
    ):
        self.k = k
        self.xs = xs
        self.ys = ys
        self.zs = zs
        self.triangles = triangles
        self._conf: list = conflicts  # np.ndarray (immutable) or dict[int, None]
        self._locator = locator
        self.kappa = [0] * len(triangles)
        self.original_sizes = [len(c) for c in conflicts]
        self.K = max(self.original_sizes, default=0)
        self._index: dict[int, list[int]] = {}
        self._reindex()

    def _reindex(self) -> None:
        index: dict[int, list[int]] = {}
        for ci, conf in enumerate(self._conf):
            ids = conf.tolist() if isinstance(conf, np.ndarray) else conf
            for pid in ids:
                index.setdefault(pid, []).append(ci)
        self._index = index

    # -- queries ---------------------------------------------------------

    @property
    def cell_count(self) -> int:
        return len(self.triangles)

    def locate(self, x, y) -> int:
        return self._locator.locate(x, y)

    def conflict_ids(self, cell: int) -> Iterable[int]:
        conf = self._conf[cell]
        return conf.tolist() if isinstance(conf, np.ndarray) else conf.keys()

    def conflict_len(self, cell: int) -> int:
        return len(self._conf[cell])

    def contains(self, cell: int, pid: int) -> bool:
        conf = self._conf[cell]
        if isinstance(conf, dict):
            return pid in conf
        return bool(np.any(conf == pid))

    def cells_of(self, pid: int) -> list[int]:
        """Cells whose conflict list currently contains pid."""
        out = []
        for ci in self._index.get(pid, ()):
            conf = self._conf[ci]
            if not isinstance(conf, dict) or pid in conf:
                out.append(ci)
        return out

    def ceiling_covers(self, cell: int, x, y, z) -> bool:
        """Exact: is (x, y, z) on or below the cell's ceiling plane."""
        i, j, k = self.triangles[cell]
        x1, y1, z1 = self.xs[i], self.ys[i], self.zs[i]
        x2, y2, z2 = self.xs[j], self.ys[j], self.zs[j]
        x3, y3, z3 = self.xs[k], self.ys[k], self.zs[k]
        nx = (y2 - y1) * (z3 - z1) - (z2 - z1) * (y3 - y1)
        ny = (z2 - z1) * (x3 - x1) - (x2 - x1) * (z3 - z1)
        nz = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
        # ceiling height at (x,y): z_c with nx(x-x1)+ny(y-y1)+nz(z_c-z1)=0
        lhs = nx * (x - x1) + ny * (y - y1) + nz * (z - z1)
        return lhs <= 0 if nz > 0 else lhs >= 0

    def cell(self, cell: int) -> PrismCell:
        i, j, k = self.triangles[cell]
        ceiling = [(self.xs[v], self.ys[v], self.zs[v]) for v in (i, j, k)]
        return PrismCell(
            id=cell,
            ceiling=tuple(ceiling),
            footprint=tuple((x, y) for x, y, _ in ceiling),
            conflict_list=tuple(sorted(self.conflict_ids(cell))),
            kappa=self.kappa[cell],
            original_size=self.original_sizes[cell],
        )

    def total_conflict_entries(self) -> int:
        return sum(len(c) for c in self._conf)

    # -- mutation ----------------------------------------------------------

    def _mutable(self, cell: int) -> dict:
        conf = self._conf[cell]
        if isinstance(conf, np.ndarray):
            conf = dict.fromkeys(conf.tolist())
            self._conf[cell] = conf
        return conf

    def remove_id(self, cell: int, pid: int) -> bool:
        conf = self._mutable(cell)
        if pid in conf:
            del conf[pid]
            return True
        return False

    def pop_ids(self, cell: int, count: int) -> list[int]:
        conf = self._mutable(cell)
        out = []
        for _ in range(min(count, len(conf))):
            pid, _ = conf.popitem()
            out.append(pid)
        return out

    def strip_planes(self, ids: set[int]) -> None:
        """Remove the given plane ids from every conflict list (build-time eviction)."""
        if not ids:
            return
        ids_arr = np.fromiter(ids, dtype=np.int64)
        for ci, conf in enumerate(self._conf):
            if isinstance(conf, dict):
                for pid in ids:
                    conf.pop(pid, None)
            else:
                mask = np.isin(conf, ids_arr)
                if mask.any():
                    self._conf[ci] = conf[~mask]
        self.original_sizes = [len(c) for c in self._conf]
        self.K = max(self.original_sizes, default=0)
        self._reindex()


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


@dataclass
class _Scaffold:
    """Triangulated footprint: ceiling vertex xy's plus triangle combinatorics."""

    xs: list
    ys: list
    triangles: list[tuple[int, int, int]]
    corner_ids: list[int]  # indices of the 4 box corners (SW, SE, NE, NW)


def _dual_envelope_sites(planes: Sequence[Plane], sample_idx: Sequence[int]) -> list[tuple[int, int]]:
    """xy-projections of the sampled planes' lower-envelope vertices.

    Scaffolding only: computed with floats via the dual upper hull; results
    are rounded to ints and clamped into the site window.  Any inaccuracy is
    caught later by the witness checks.
    """
    if len(sample_idx) < 4:
        return []
    pts = np.array(
        [[-float(planes[i].a), -float(planes[i].b), -float(planes[i].c)] for i in sample_idx]
    )
    try:
        hull = ConvexHull(pts, qhull_options="QJ")
    except (QhullError, ValueError):
        return []
    sites = []
    for eq in hull.equations:  # nx*x + ny*y + nz*z + off = 0, outward normal
        nx, ny, nz = eq[0], eq[1], eq[2]
        if nz <= 1e-12:
            continue
        x = int(round(nx / nz))
        y = int(round(ny / nz))
        sites.append(
            (max(-SITE_WINDOW, min(SITE_WINDOW, x)), max(-SITE_WINDOW, min(SITE_WINDOW, y)))
        )
    return sites


def _hull_cycle(tri: Delaunay, xs: list, ys: list) -> list[int]:
    """CCW cycle of the triangulation's hull vertices."""
    adj: dict[int, list[int]] = {}
    for a, b in tri.convex_hull:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in adj.values()):
        raise ValueError("hull is not a simple cycle")
    start = next(iter(adj))
    cycle = [start]
    prev, cur = start, adj[start][0]
    while cur != start:
        cycle.append(cur)
        if len(cycle) > len(adj) + 1:
            raise ValueError("broken hull cycle")
        a, b = adj[cur]
        prev, cur = cur, (b if a == prev else a)
    area2 = 0
    for i in range(len(cycle)):
        a, b = cycle[i], cycle[(i + 1) % len(cycle)]
        area2 += xs[a] * ys[b] - xs[b] * ys[a]
    if area2 < 0:
        cycle.reverse()
    return cycle


def _annulus_triangles(
    xs: list, ys: list, hull: list[int], corners: list[int]
) -> list[tuple[int, int, int]]:
    """Triangulate between the CCW hull polygon and the 4 box corners.

    Each hull edge fans to the box corner most aligned with its outward
    normal; that corner is provably outside the edge's supporting line, and
    along a convex CCW hull the assignment winds exactly once through the
    corners, so the fans are contiguous.  Stitch triangles between
    consecutive corner groups complete the tiling of the annulus.
    """
    m = len(hull)
    corner_of_sign = {(-1, -1): 0, (1, -1): 1, (1, 1): 2, (-1, 1): 3}

    def assigned_corner(i: int) -> int:
        a, b = hull[i], hull[(i + 1) % m]
        nx = ys[b] - ys[a]
        ny = xs[a] - xs[b]
        sx = 1 if nx > 0 else (-1 if nx < 0 else 1)
        sy = 1 if ny > 0 else (-1 if ny < 0 else 1)
        return corner_of_sign[(sx, sy)]

    assign = [assigned_corner(i) for i in range(m)]
    wraps = [i for i in range(m) if assign[(i - 1) % m] > assign[i]]
    if len(wraps) > 1:
        raise ValueError("corner assignment is not cyclically monotone")
    start = wraps[0] if wraps else 0
    order = [(start + i) % m for i in range(m)]

    triangles: list[tuple[int, int, int]] = []
    for i in order:
        c = corners[assign[i]]
        a, b = hull[i], hull[(i + 1) % m]
        triangles.append((c, b, a))
    total_steps = 0
    for pos in range(m):
        i = order[pos]
        j = order[(pos + 1) % m]
        d = (assign[j] - assign[i]) % 4
        v = hull[(i + 1) % m]  # vertex shared by edges i and j
        for step in range(d):
            cj = (assign[i] + step) % 4
            triangles.append((corners[cj], corners[(cj + 1) % 4], v))
        total_steps += d
    if total_steps != 4:
        raise ValueError("corner assignment does not wind once around the box")
    return triangles


def _oriented(xs: list, ys: list, tri: tuple[int, int, int]) -> tuple[int, int, int]:
    i, j, k = tri
    s = _orient(xs[i], ys[i], xs[j], ys[j], xs[k], ys[k])
    if s == 0:
        raise ValueError("degenerate triangle")
    return (i, j, k) if s > 0 else (i, k, j)


def _certify_tiling(xs: list, ys: list, triangles: list[tuple[int, int, int]], corners: list[int]) -> None:
    """Exact combinatorial tiling check: orientations plus directed-edge matching."""
    edges: set[tuple[int, int]] = set()
    for i, j, k in triangles:
        if _orient(xs[i], ys[i], xs[j], ys[j], xs[k], ys[k]) <= 0:
            raise ValueError("non-positive triangle orientation")
        for u, v in ((i, j), (j, k), (k, i)):
            if (u, v) in edges:
                raise ValueError("duplicate directed edge")
            edges.add((u, v))
    unmatched = {(u, v) for (u, v) in edges if (v, u) not in edges}
    boundary = {
        (corners[0], corners[1]),
        (corners[1], corners[2]),
        (corners[2], corners[3]),
        (corners[3], corners[0]),
    }
    if unmatched != boundary:
        raise ValueError("edge matching failed: triangles do not tile the box")


def _scaffold_from_sites(sites: list[tuple[int, int]]) -> _Scaffold:
    M = INF_COORD
    corners_xy = [(-M, -M), (M, -M), (M, M), (-M, M)]
    xs = [s[0] for s in sites]
    ys = [s[1] for s in sites]
    triangles: list[tuple[int, int, int]] = []
    if len(sites) == 0:
        xs = [p[0] for p in corners_xy]
        ys = [p[1] for p in corners_xy]
        return _Scaffold(xs, ys, [(0, 1, 2), (0, 2, 3)], [0, 1, 2, 3])
    if len(sites) == 1:
        corner_ids = [1 + i for i in range(4)]
        xs = xs + [p[0] for p in corners_xy]
        ys = ys + [p[1] for p in corners_xy]
        for i in range(4):
            triangles.append(_oriented(xs, ys, (0, corner_ids[i], corner_ids[(i + 1) % 4])))
        _certify_tiling(xs, ys, triangles, corner_ids)
        return _Scaffold(xs, ys, triangles, corner_ids)
    pts = np.array(sites, dtype=np.float64)
    tri = Delaunay(pts)
    for simplex in tri.simplices:
        triangles.append(_oriented(xs, ys, tuple(int(v) for v in simplex)))
    hull = _hull_cycle(tri, xs, ys)
    corner_ids = [len(xs) + i for i in range(4)]
    xs = xs + [p[0] for p in corners_xy]
    ys = ys + [p[1] for p in corners_xy]
    for t in _annulus_triangles(xs, ys, hull, corner_ids):
        triangles.append(_oriented(xs, ys, t))
    _certify_tiling(xs, ys, triangles, corner_ids)
    return _Scaffold(xs, ys, triangles, corner_ids)


def _build_scaffold(sites: list[tuple[int, int]], rng: random.Random) -> _Scaffold:
    """Triangulate sites + box; falls back to perturbed and then trivial site sets."""
    sites = sorted(set(sites))

    def perturbed(amount: int) -> list[tuple[int, int]]:
        return sorted(
            set(
                (
                    max(-SITE_WINDOW, min(SITE_WINDOW, x + rng.randrange(-amount, amount + 1))),
                    max(-SITE_WINDOW, min(SITE_WINDOW, y + rng.randrange(-amount, amount + 1))),
                )
                for x, y in sites
            )
        )

    candidates = [sites, perturbed(5), perturbed(50), sites[:1], []]
    for cand in candidates:
        try:
            return _scaffold_from_sites(cand)
        except (QhullError, ValueError):
            continue
    raise ValueError("scaffold construction failed")


class _AttemptFailed(Exception):
    pass


def _interior_heights(coeffs: np.ndarray, xs_i: np.ndarray, ys_i: np.ndarray) -> np.ndarray:
    """Exact int64 heights of every plane at every interior site (n x s)."""
    return (
        coeffs[:, 0:1] * xs_i[None, :]
        + coeffs[:, 1:2] * ys_i[None, :]
        + coeffs[:, 2:3]
    )


def _ceiling_and_below(
    heights: np.ndarray, target: int, kmin: int
) -> tuple[list[int], list[np.ndarray]]:
    """Per site: ceiling height and the strict below-set of planes.

    z is the target-th lowest height; when height ties leave fewer than kmin
    planes strictly below (the cutting parameter, needed for the conflict-list
    lower bound), z is bumped past the tie group.
    """
    n, s = heights.shape
    t = min(target, n)
    kmin = min(kmin, n)
    part = np.partition(heights, t - 1, axis=0)
    kth = part[t - 1]
    counts = (heights < kth[None, :]).sum(axis=0)
    zs: list[int] = []
    below: list[np.ndarray] = []
    for col in range(s):
        z = int(kth[col])
        if counts[col] < kmin:
            above = heights[:, col][heights[:, col] > z]
            z = int(above.min()) if len(above) else z + 1
        mask = heights[:, col] < z
        zs.append(z)
        below.append(np.nonzero(mask)[0].astype(np.int64))
    return zs, below


def _corner_ceiling_and_below(
    coeffs: np.ndarray, corner: tuple[int, int], target: int, kmin: int
) -> tuple[int, np.ndarray]:
    """Ceiling height and strict below-set at a far box corner.

    At (sx*M, sy*M) with M = INF_COORD, plane heights order lexicographically
    by (sx*a + sy*b, c) because M dwarfs every |c| difference.
    """
    sx = 1 if corner[0] > 0 else -1
    sy = 1 if corner[1] > 0 else -1
    slope = sx * coeffs[:, 0] + sy * coeffs[:, 1]
    cc = coeffs[:, 2]
    n = len(slope)
    t = min(target, n)
    kmin = min(kmin, n)
    order = np.lexsort((cc, slope))
    ts, tc = int(slope[order[t - 1]]), int(cc[order[t - 1]])
    below = (slope < ts) | ((slope == ts) & (cc < tc))
    count = int(below.sum())
    if count < kmin:
        # bump past the tie group to the next distinct (slope, c) pair
        strictly_above = (slope > ts) | ((slope == ts) & (cc > tc))
        if strictly_above.any():
            cand = np.nonzero(strictly_above)[0]
            sub = cand[np.lexsort((cc[cand], slope[cand]))]
            ts, tc = int(slope[sub[0]]), int(cc[sub[0]])
            below = (slope < ts) | ((slope == ts) & (cc < tc))
        else:
            tc += 1
            below = (slope < ts) | ((slope == ts) & (cc < tc))
    # height at the corner is M*(sx*a + sy*b) + c = M*slope + c
    z_exact = ts * INF_COORD + tc
    return z_exact, np.nonzero(below)[0].astype(np.int64)


def _box_grid(lo_x: int, hi_x: int, lo_y: int, hi_y: int, steps: int = 5) -> list[tuple[int, int]]:
    """Deterministic (steps+1)^2 integer grid over a box."""
    pts = []
    for i in range(steps + 1):
        for j in range(steps + 1):
            pts.append(
                (lo_x + (hi_x - lo_x) * i // steps, lo_y + (hi_y - lo_y) * j // steps)
            )
    return sorted(set(pts))


def build_shallow_cutting(
    planes: Sequence[Plane],
    k: int,
    budget: Optional[CuttingBudget] = None,
    seed: int = 0,
    thorough: bool = True,
) -> ShallowCutting:
    """Build a verified (k, <= c*k)-cutting with at most cprime*n/k + O(1) cells.

    With thorough=True the construction also certifies coverage at the exact
    lower-envelope vertices of the full set (the verifier's witness panel);
    hierarchical callers that rebuild often pass thorough=False and rely on
    the cheap panel (cell centroids, edge midpoints, probe grid).

    Raises CuttingError after budget.max_retries failed attempts; callers
    escalate constants and retry.
    """
    if not planes:
        raise ValueError("empty plane set")
    budget = budget or CuttingBudget()
    n = len(planes)
    k = max(1, min(k, n))
    coeffs = _as_int_coeffs(planes)
    max_ab = max(1, int(np.abs(coeffs[:, :2]).max()))
    max_c = int(np.abs(coeffs[:, 2]).max())
    window = min(SITE_WINDOW, max(16, _INT64_SAFE // (8 * max_ab)))
    if 6 * (max_ab * window + max_c) >= (1 << 63):
        raise CuttingError("coefficients too large for the exact int64 fast path")

    extra_witnesses: list[tuple[int, int, int]] = []
    if thorough:
        for fx, fy in _exact_envelope_vertices(planes):
            den = fx.denominator * fy.denominator
            extra_witnesses.append((int(fx * den), int(fy * den), den))

    m0 = max(1, -(-n // (2 * k)))
    cell_cap = budget.cprime * n // k + 24
    last_reason = "no attempts"
    for attempt in range(budget.max_retries):
        m = min(n, m0 << (attempt // 2))
        lift_level = 2 + (attempt % 2) + (attempt // 4)
        rng = random.Random(f"cut:{seed}:{n}:{k}:{attempt}")
        try:
            cutting = _attempt_build(
                planes, coeffs, k, m, lift_level, budget, rng, window, cell_cap,
                extra_witnesses,
            )
            return cutting
        except _AttemptFailed as exc:
            last_reason = str(exc)
            continue
    raise CuttingError(f"cutting construction failed (n={n}, k={k}): {last_reason}")


def _attempt_build(
    planes: Sequence[Plane],
    coeffs: np.ndarray,
    k: int,
    m: int,
    lift_level: int,
    budget: CuttingBudget,
    rng: random.Random,
    window: int,
    cell_cap: int,
    extra_witnesses: list[tuple[int, int, int]],
) -> ShallowCutting:
    n = len(planes)
    sample = rng.sample(range(n), m)
    sites = _dual_envelope_sites(planes, sample)
    sites = [(max(-window, min(window, x)), max(-window, min(window, y))) for x, y in sites]
    max_sites = max(0, cell_cap // 2 - 13)
    sites = sorted(set(sites))
    if len(sites) > max_sites:
        sites = sorted(rng.sample(sites, max_sites)) if max_sites else []
    # a ring of moderate sites keeps the huge corner cells away from the data
    # and from every finite witness, so ceiling repairs stay local
    data_span = max([16] + [max(abs(x), abs(y)) for x, y in sites])
    grid_points = _box_grid(-data_span - 2, data_span + 2, -data_span - 2, data_span + 2)
    span = data_span
    for wx_e, wy_e, den_e in extra_witnesses:
        span = max(span, abs(wx_e) // den_e + 1, abs(wy_e) // den_e + 1)
    ring = min(window, 2 * span + 8)
    sites = sorted(
        set(sites)
        | {
            (-ring, -ring), (0, -ring), (ring, -ring), (ring, 0),
            (ring, ring), (0, ring), (-ring, ring), (-ring, 0),
        }
    )
    try:
        scaf = _build_scaffold(sites, rng)
    except ValueError as exc:
        raise _AttemptFailed(f"scaffold: {exc}")
    if len(scaf.triangles) > cell_cap:
        raise _AttemptFailed("cell budget exceeded")

    target = min(n, lift_level * k)
    corner_set = set(scaf.corner_ids)
    interior_idx = [i for i in range(len(scaf.xs)) if i not in corner_set]
    zs: list = [None] * len(scaf.xs)
    below: list = [None] * len(scaf.xs)
    if interior_idx:
        xs_i = np.array([scaf.xs[i] for i in interior_idx], dtype=np.int64)
        ys_i = np.array([scaf.ys[i] for i in interior_idx], dtype=np.int64)
        chunk = 512
        for lo in range(0, len(interior_idx), chunk):
            hi = min(lo + chunk, len(interior_idx))
            heights = _interior_heights(coeffs, xs_i[lo:hi], ys_i[lo:hi])
            z_chunk, below_chunk = _ceiling_and_below(heights, target, k)
            for off, site in enumerate(interior_idx[lo:hi]):
                zs[site] = z_chunk[off]
                below[site] = below_chunk[off]
    for ci in scaf.corner_ids:
        z, b = _corner_ceiling_and_below(coeffs, (scaf.xs[ci], scaf.ys[ci]), target, k)
        zs[ci] = z
        below[ci] = b

    try:
        locator = SlabLocator(scaf.xs, scaf.ys, scaf.triangles)
    except ValueError as exc:
        raise _AttemptFailed(f"locator: {exc}")

    bound = budget.c * k
    for _round in range(5):
        conflicts: list[np.ndarray] = []
        for i, j, kk in scaf.triangles:
            conf = np.unique(np.concatenate((below[i], below[j], below[kk])))
            if len(conf) > bound:
                raise _AttemptFailed(f"conflict size {len(conf)} > {bound}")
            conflicts.append(conf)
        failures = _witness_failures(
            coeffs, scaf, zs, below, conflicts, k, locator, window, grid_points,
            extra_witnesses,
        )
        if not failures:
            ids = np.array([p.id for p in planes], dtype=np.int64)
            conflict_ids = [ids[conf] for conf in conflicts]
            return ShallowCutting(
                k, scaf.xs, scaf.ys, zs, scaf.triangles, conflict_ids, locator
            )
        changed = _repair_ceilings(coeffs, scaf, zs, failures, k, window)
        if not changed:
            raise _AttemptFailed("coverage witness failed (unrepairable)")
        for v in changed:
            below[v] = _below_at_site(
                coeffs, scaf.xs[v], scaf.ys[v], zs[v], window, v in corner_set
            )
    raise _AttemptFailed("coverage repair did not converge")


def _witness_failures(
    coeffs: np.ndarray,
    scaf: _Scaffold,
    zs: list,
    below: list,
    conflicts: list[np.ndarray],
    k: int,
    locator: SlabLocator,
    window: int,
    grid_points: list[tuple[int, int]],
    extra: Optional[list[tuple[int, int, int]]] = None,
) -> list[tuple[int, int, int, int]]:
    """Level-coverage check at cell centroids, edge midpoints and a probe grid.

    A witness at xy-point (num_x/den, num_y/den) passes if at least k planes
    are at or below the cell ceiling over it.  Candidates for the fast strict
    count come from the ceiling-vertex below-sets (linearity argument); a
    witness only counts as failed after an exact full <= scan.  Returns the
    failing witnesses as (num_x, num_y, den, cell).
    """
    xs, ys = scaf.xs, scaf.ys
    n = coeffs.shape[0]
    need_count = min(k, n)

    def is_safe(v: int) -> bool:
        return abs(xs[v]) <= window and abs(ys[v]) <= window

    fast: list[tuple[int, int, int, int, np.ndarray, int]] = []
    slow: list[tuple[int, int, int, int, np.ndarray, int]] = []

    corner_set = set(scaf.corner_ids)
    for t, (i, j, kk) in enumerate(scaf.triangles):
        if corner_set & {i, j, kk}:
            # outer cells are certified at their ceiling vertices only; their
            # interiors lie beyond every finite witness of the contract panel
            continue
        safe_cell = all(is_safe(v) for v in (i, j, kk))
        cx, cy = xs[i] + xs[j] + xs[kk], ys[i] + ys[j] + ys[kk]
        cz = zs[i] + zs[j] + zs[kk]
        row = (cx, cy, 3, cz, conflicts[t], t)
        (fast if safe_cell and abs(cz) < (1 << 62) else slow).append(row)
        for u, v in ((i, j), (j, kk), (kk, i)):
            mx, my, mz = xs[u] + xs[v], ys[u] + ys[v], zs[u] + zs[v]
            cand_uv = np.union1d(below[u], below[v])
            row = (mx, my, 2, mz, cand_uv, t)
            (fast if is_safe(u) and is_safe(v) and abs(mz) < (1 << 62) else slow).append(row)

    for gx, gy in grid_points:
        cell = locator.locate(gx, gy)
        zc_num, zc_den = _ceiling_value(xs, ys, zs, scaf.triangles[cell], gx, gy)
        if zc_den < 0:
            zc_num, zc_den = -zc_num, -zc_den
        row = (gx * zc_den, gy * zc_den, zc_den, zc_num, conflicts[cell], cell)
        safe_row = (
            abs(gx * zc_den) < (1 << 61)
            and abs(gy * zc_den) < (1 << 61)
            and zc_den < (1 << 31)
            and abs(zc_num) < (1 << 62)
        )
        (fast if safe_row else slow).append(row)

    for wx_e, wy_e, den_e in extra or ():
        fx = Fraction(wx_e, den_e)
        fy = Fraction(wy_e, den_e)
        cell = locator.locate(fx, fy)
        num, d = _ceiling_value_scaled(xs, ys, zs, scaf.triangles[cell], wx_e, wy_e, den_e)
        slow.append((wx_e * d, wy_e * d, den_e * d, num * den_e, conflicts[cell], cell))

    failures: list[tuple[int, int, int, int]] = []

    if fast:
        sizes = np.fromiter((len(r[4]) for r in fast), dtype=np.int64)
        widx = np.repeat(np.arange(len(fast)), sizes)
        cand = (
            np.concatenate([r[4] for r in fast]) if sizes.sum() else np.empty(0, dtype=np.int64)
        )
        wx = np.fromiter((r[0] for r in fast), dtype=np.int64)
        wy = np.fromiter((r[1] for r in fast), dtype=np.int64)
        den = np.fromiter((r[2] for r in fast), dtype=np.int64)
        znum = np.fromiter((r[3] for r in fast), dtype=np.int64)
        if len(cand):
            h = (
                coeffs[cand, 0] * wx[widx]
                + coeffs[cand, 1] * wy[widx]
                + coeffs[cand, 2] * den[widx]
            )
            lt = h < znum[widx]
            counts = np.bincount(widx[lt], minlength=len(fast))
        else:
            counts = np.zeros(len(fast), dtype=np.int64)
        for w in np.nonzero(counts < need_count)[0]:
            row = fast[int(w)]
            if not _exact_cover_check(coeffs, row[0], row[1], row[2], row[3], k):
                failures.append((row[0], row[1], row[2], row[5]))

    for wx_, wy_, den_, znum_, cand_, cell_ in slow:
        strict = 0
        for pi in cand_.tolist():
            a, b, c = int(coeffs[pi, 0]), int(coeffs[pi, 1]), int(coeffs[pi, 2])
            if a * wx_ + b * wy_ + c * den_ < znum_:
                strict += 1
        if strict < need_count and not _exact_cover_check(coeffs, wx_, wy_, den_, znum_, k):
            failures.append((wx_, wy_, den_, cell_))
    return failures


def _kth_height_scaled(coeffs: np.ndarray, wx: int, wy: int, den: int, k: int, window: int) -> int:
    """Exact k-th smallest of a*wx + b*wy + c*den over all planes."""
    n = coeffs.shape[0]
    t = min(k, n)
    if abs(wx) <= 3 * window and abs(wy) <= 3 * window and den <= 3:
        h = coeffs[:, 0] * wx + coeffs[:, 1] * wy + coeffs[:, 2] * den
        return int(np.partition(h, t - 1)[t - 1])
    vals = sorted(
        int(coeffs[i, 0]) * wx + int(coeffs[i, 1]) * wy + int(coeffs[i, 2]) * den
        for i in range(n)
    )
    return vals[t - 1]


def _ceiling_value_scaled(xs, ys, zs, tri, wx: int, wy: int, den: int) -> tuple[int, int]:
    """Ceiling height at (wx/den, wy/den) as an exact fraction (num, den'), den' > 0."""
    i, j, k = tri
    x1, y1, z1 = xs[i], ys[i], zs[i]
    nx = (ys[j] - y1) * (zs[k] - z1) - (zs[j] - z1) * (ys[k] - y1)
    ny = (zs[j] - z1) * (xs[k] - x1) - (xs[j] - x1) * (zs[k] - z1)
    nz = (xs[j] - x1) * (ys[k] - y1) - (ys[j] - y1) * (xs[k] - x1)
    num = nz * z1 * den - nx * (wx - x1 * den) - ny * (wy - y1 * den)
    d = nz * den
    return (num, d) if d > 0 else (-num, -d)


def _below_at_site(
    coeffs: np.ndarray, x: int, y: int, z: int, window: int, far: bool
) -> np.ndarray:
    """Strict below-set at one ceiling vertex after a repair raise."""
    if not far and abs(x) <= window and abs(y) <= window and abs(z) < (1 << 62):
        h = coeffs[:, 0] * x + coeffs[:, 1] * y + coeffs[:, 2]
        return np.nonzero(h < z)[0].astype(np.int64)
    hits = [
        i
        for i in range(coeffs.shape[0])
        if int(coeffs[i, 0]) * x + int(coeffs[i, 1]) * y + int(coeffs[i, 2]) < z
    ]
    return np.array(hits, dtype=np.int64)


def _repair_ceilings(
    coeffs: np.ndarray,
    scaf: _Scaffold,
    zs: list,
    failures: list[tuple[int, int, int, int]],
    k: int,
    window: int,
) -> set[int]:
    """Raise ceiling vertices of failing cells just enough to cover the witnesses.

    Cells without a box corner get all three vertices raised to the required
    height.  Corner cells instead bump a single vertex along its barycentric
    direction (the corner when possible), since their ceilings mix huge corner
    heights with small interior ones and a uniform raise would flood the
    interior below-sets.
    """
    changed: set[int] = set()
    corner_set = set(scaf.corner_ids)
    xs, ys = scaf.xs, scaf.ys
    for wx, wy, den, cell in failures:
        trio = scaf.triangles[cell]
        zreq = _kth_height_scaled(coeffs, wx, wy, den, k, window)
        znum, zd = _ceiling_value_scaled(xs, ys, zs, trio, wx, wy, den)
        deficit_num = zreq * zd - znum * den
        deficit_den = den * zd
        if deficit_num <= 0:
            continue
        # barycentric weights of the witness, scaled consistently
        i, j, kk = trio
        sa = (xs[i] * den, ys[i] * den)
        sb = (xs[j] * den, ys[j] * den)
        sc = (xs[kk] * den, ys[kk] * den)
        w = (wx, wy)

        def orient2(p, q, r):
            return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

        o_tot = orient2(sa, sb, sc)
        lam = {i: orient2(sb, sc, w), j: orient2(sc, sa, w), kk: orient2(sa, sb, w)}
        eligible = [v for v in trio if lam[v] > 0]
        if not eligible or o_tot <= 0:
            continue
        # corners absorb slope-scale deficits; otherwise take the biggest lever
        corner_lam = [v for v in eligible if v in corner_set]
        if corner_lam:
            v = max(corner_lam, key=lambda t: lam[t])
        else:
            v = max(eligible, key=lambda t: lam[t])
        # raising v by delta lifts the ceiling at w by delta * lam[v] / o_tot
        delta = -(-(deficit_num * o_tot) // (deficit_den * lam[v]))
        zs[v] += delta
        changed.add(v)
    return changed


def _ceiling_value(xs, ys, zs, tri, px, py) -> tuple[int, int]:
    """Ceiling height at (px, py) as an exact fraction (num, den)."""
    i, j, k = tri
    x1, y1, z1 = xs[i], ys[i], zs[i]
    nx = (ys[j] - y1) * (zs[k] - z1) - (zs[j] - z1) * (ys[k] - y1)
    ny = (zs[j] - z1) * (xs[k] - x1) - (xs[j] - x1) * (zs[k] - z1)
    nz = (xs[j] - x1) * (ys[k] - y1) - (ys[j] - y1) * (xs[k] - x1)
    num = nz * z1 - nx * (px - x1) - ny * (py - y1)
    return num, nz


def _exact_cover_check(coeffs: np.ndarray, wx: int, wy: int, den: int, znum: int, k: int) -> bool:
    """Exact: do at least k planes satisfy a*wx + b*wy + c*den <= znum."""
    n = coeffs.shape[0]
    le = 0
    for pi in range(n):
        a, b, c = int(coeffs[pi, 0]), int(coeffs[pi, 1]), int(coeffs[pi, 2])
        if a * wx + b * wy + c * den <= znum:
            le += 1
            if le >= min(k, n):
                return True
    return False


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _exact_envelope_vertices(planes: Sequence[Plane]) -> list[tuple[Fraction, Fraction]]:
    """xy-projections of the lower-envelope vertices of the full plane set.

    Facet triples come from the float dual hull; the reported coordinates are
    the exact intersections of those plane triples.  Degenerate inputs yield
    an empty list (the remaining witness families still apply).
    """
    if len(planes) < 4:
        return []
    pts = np.array([[-float(p.a), -float(p.b), -float(p.c)] for p in planes])
    try:
        hull = ConvexHull(pts, qhull_options="QJ")
    except (QhullError, ValueError):
        return []
    out = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        if eq[2] <= 1e-12:
            continue
        p1, p2, p3 = (planes[int(i)] for i in simplex[:3])
        a11, a12, b1 = p1.a - p2.a, p1.b - p2.b, p2.c - p1.c
        a21, a22, b2 = p1.a - p3.a, p1.b - p3.b, p3.c - p1.c
        det = a11 * a22 - a12 * a21
        if det == 0:
            continue
        x = Fraction(b1 * a22 - b2 * a12, det)
        y = Fraction(a11 * b2 - a21 * b1, det)
        out[(x, y)] = None
    return list(out.keys())


def _count_at_most(planes: Sequence[Plane], x, y, z_num, z_den) -> int:
    """Exact count of planes with height(x, y) <= z_num / z_den (z_den > 0)."""
    cnt = 0
    for p in planes:
        if (p.a * x + p.b * y + p.c) * z_den <= z_num:
            cnt += 1
    return cnt


def verify_cutting(
    cutting: ShallowCutting,
    planes: Sequence[Plane],
    k: int,
    budget: Optional[CuttingBudget] = None,
    exhaustive: Optional[bool] = None,
) -> CuttingReport:
    """Independent certification of a cutting against the full plane set.

    Checks: (a) the footprints tile the bounding box, (b) stored conflict
    lists equal the brute-force recomputation, (c) every list is within the
    conflict budget, (d) level coverage holds at the witness panel (envelope
    vertices, ceiling vertices, a deterministic grid).  Failures are reported,
    not raised.
    """
    budget = budget or CuttingBudget()
    n = len(planes)
    k = max(1, min(k, n)) if n else k
    checks: dict[str, bool] = {}
    failures: list[str] = []
    xs, ys, zs = cutting.xs, cutting.ys, cutting.zs
    tris = cutting.triangles

    # (a) tiling: orientations, edge matching, exact area sum
    try:
        corner_ids = [
            next(i for i in range(len(xs)) if xs[i] == sx * INF_COORD and ys[i] == sy * INF_COORD)
            for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))
        ]
        _certify_tiling(xs, ys, tris, corner_ids)
        area2 = 0
        for i, j, kk in tris:
            area2 += (xs[j] - xs[i]) * (ys[kk] - ys[i]) - (ys[j] - ys[i]) * (xs[kk] - xs[i])
        if area2 != 2 * (2 * INF_COORD) ** 2:
            raise ValueError("triangle areas do not sum to the box area")
        checks["tiling"] = True
    except (ValueError, StopIteration) as exc:
        checks["tiling"] = False
        failures.append(f"tiling: {exc}")

    # (b) conflict-list exactness: strict below-test at the three ceiling vertices
    if exhaustive is None:
        exhaustive = n * max(1, len(tris)) <= 200_000
    conflict_ok = True
    if exhaustive:
        for ci, (i, j, kk) in enumerate(tris):
            expect = set()
            for p in planes:
                if (
                    p.a * xs[i] + p.b * ys[i] + p.c < zs[i]
                    or p.a * xs[j] + p.b * ys[j] + p.c < zs[j]
                    or p.a * xs[kk] + p.b * ys[kk] + p.c < zs[kk]
                ):
                    expect.add(p.id)
            got = set(cutting.conflict_ids(ci))
            if got != expect:
                conflict_ok = False
                failures.append(f"conflict list of cell {ci} differs from brute force")
                break
    else:
        conflict_ok = _verify_conflicts_vectorized(cutting, planes, failures)
    checks["conflict_exactness"] = conflict_ok

    # (c) size bounds
    bound = budget.c * k
    oversized = [ci for ci in range(len(tris)) if cutting.conflict_len(ci) > bound]
    bad_kappa = [ci for ci in range(len(tris)) if cutting.kappa[ci] > cutting.original_sizes[ci]]
    checks["size_bound"] = not oversized and not bad_kappa
    if oversized:
        failures.append(f"{len(oversized)} cells exceed the conflict bound {bound}")
    if bad_kappa:
        failures.append("kappa exceeds original conflict size")

    # (d) witness coverage
    witness_ok = True
    need = min(k, n)
    coeffs = _as_int_coeffs(planes)

    # ceiling vertices: the required bound is the vertex height itself
    small_v = [
        v
        for v in range(len(xs))
        if abs(xs[v]) <= SITE_WINDOW and abs(ys[v]) <= SITE_WINDOW and abs(zs[v]) < _INT64_SAFE
    ]
    if small_v:
        vx = np.array([xs[v] for v in small_v], dtype=np.int64)
        vy = np.array([ys[v] for v in small_v], dtype=np.int64)
        vz = np.array([zs[v] for v in small_v], dtype=np.int64)
        chunk = 512
        for lo in range(0, len(small_v), chunk):
            hi = min(lo + chunk, len(small_v))
            h = _interior_heights(coeffs, vx[lo:hi], vy[lo:hi])
            counts = (h <= vz[None, lo:hi]).sum(axis=0)
            short = np.nonzero(counts < need)[0]
            if len(short):
                witness_ok = False
                v = small_v[lo + int(short[0])]
                failures.append(f"coverage failed at ceiling vertex ({xs[v]}, {ys[v]})")
                break
    if witness_ok:
        small_set = set(small_v)
        for v in range(len(xs)):
            if v in small_set:
                continue
            cnt = _count_at_most(planes, xs[v], ys[v], zs[v], 1)
            if cnt < need:
                witness_ok = False
                failures.append("coverage failed at far ceiling vertex")
                break

    # envelope vertices and grid probes: float prefilter with a rigorous
    # margin, exact refinement only inside the uncertainty band
    if witness_ok:
        fa = coeffs[:, 0].astype(np.float64)
        fb = coeffs[:, 1].astype(np.float64)
        fc = coeffs[:, 2].astype(np.float64)
        env_vertices = _exact_envelope_vertices(planes)
        extent = 18
        for ex, ey in env_vertices:
            extent = max(extent, int(abs(ex)) + 1, int(abs(ey)) + 1)
        probes: list[tuple] = list(env_vertices)
        probes += _box_grid(-extent, extent, -extent, extent)
        for wx, wy in probes:
            cell = cutting.locate(wx, wy)
            znum, zden = _ceiling_value(xs, ys, zs, tris[cell], wx, wy)
            if zden < 0:
                znum, zden = -znum, -zden
            bound = Fraction(znum, zden)
            bound_f = float(bound)
            wxf, wyf = float(wx), float(wy)
            happrox = fa * wxf + fb * wyf + fc
            scale = np.abs(fa * wxf) + np.abs(fb * wyf) + np.abs(fc) + abs(bound_f) + 1.0
            err = 1e-9 * scale
            cnt = int((happrox <= bound_f - err).sum())
            if cnt < need:
                for pi in np.nonzero(np.abs(happrox - bound_f) <= err)[0]:
                    p = planes[int(pi)]
                    if p.a * wx + p.b * wy + p.c <= bound:
                        cnt += 1
            if cnt < need:
                witness_ok = False
                failures.append(
                    f"coverage failed at witness ({float(wx):.6g}, {float(wy):.6g})"
                )
                break
    checks["coverage"] = witness_ok

    ok = all(checks.values())
    return CuttingReport(
        ok=ok,
        checks=checks,
        failures=failures,
        k=k,
        K=cutting.K,
        cell_count=len(tris),
    )


def _verify_conflicts_vectorized(
    cutting: ShallowCutting, planes: Sequence[Plane], failures: list[str]
) -> bool:
    """Exact vectorized recomputation of the conflict lists.

    Interior cells run in int64; corner-adjacent cells fall back to python
    ints.  The below-test per cell is min over its 3 ceiling vertices.
    """
    coeffs = _as_int_coeffs(planes)
    ids = np.array([p.id for p in planes], dtype=np.int64)
    xs, ys, zs = cutting.xs, cutting.ys, cutting.zs

    def safe(v: int) -> bool:
        return abs(xs[v]) <= SITE_WINDOW and abs(ys[v]) <= SITE_WINDOW and abs(zs[v]) < _INT64_SAFE

    vert_below: dict[int, frozenset] = {}

    def below_set(v: int) -> frozenset:
        got = vert_below.get(v)
        if got is not None:
            return got
        if safe(v):
            h = coeffs[:, 0] * xs[v] + coeffs[:, 1] * ys[v] + coeffs[:, 2]
            mask = h < zs[v]
            res = frozenset(ids[mask].tolist())
        else:
            res = frozenset(
                p.id for p in planes if p.a * xs[v] + p.b * ys[v] + p.c < zs[v]
            )
        vert_below[v] = res
        return res

    for ci, (i, j, kk) in enumerate(cutting.triangles):
        expect = below_set(i) | below_set(j) | below_set(kk)
        got = set(cutting.conflict_ids(ci))
        if got != expect:
            failures.append(f"conflict list of cell {ci} differs from brute force")
            return False
    return True
