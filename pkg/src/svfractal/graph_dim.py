"""Graphs of set-valued maps and their dimensions.

Two graph notions are supported:

* the plane graph G_F = {(u, y) : y in F(u)}, sampled as a point cloud and
  measured by mesh box counting;
* the graph G(F) = {(u, F(u))} as a subset of I x K(R) with the metric
  D(p, q) = |u - w| + H_d(F(u), F(w)), measured by greedy eta-nets (there is
  no ambient mesh in that space).

The module also hosts the graph-space IFS W_j(u, A) = (L_j(u), alpha A +
F(L_j u) - alpha S(u)), its Hutchinson iteration, and Moran-equation bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from .compact_set import CompactSet, hausdorff, minkowski_add, scale
from .errors import CapacityExceeded, DegenerateFit
from .rb_fractal import FractalSystem, GridFunction
from .sv_map import SetValuedMap, _bounds, evaluate

DEFAULT_MAX_CLOUD = 5_000_000
SNAP = 1e-9


# --------------------------------------------------------------------------
# clouds

@dataclass
class PlaneCloud:
    points: np.ndarray  # shape (M, 2): columns u, y
    grid_n: int = 0
    set_spacing: float = 0.0

    def __len__(self):
        return len(self.points)


@dataclass
class GraphCloud:
    """Finite sample of pairs (u, A). ``metric`` is ``"D"`` or ``"frak"``."""

    u: np.ndarray
    sets: list[CompactSet]
    metric: str = "D"
    reference: GridFunction | None = field(default=None, repr=False)
    keys: list[Fraction] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if len(self.u) != len(self.sets):
            raise ValueError("u and sets differ in length")
        if self.metric not in ("D", "frak"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "frak" and self.reference is None:
            raise ValueError("the frak metric needs the reference grid function")

    def __len__(self):
        return len(self.u)

    def distances_from(self, i: int) -> np.ndarray:
        """Metric distance from point i to every point of the cloud."""
        return _distances(self, self.u[i], self.sets[i], self._ref_at(i))

    def _ref_at(self, i):
        if self.metric == "D":
            return None
        return self.reference.value_at(self.u[i])

    def csv_rows(self) -> list[tuple]:
        return [(float(u), k, p.lo, p.hi) for u, s in zip(self.u, self.sets) for k, p in enumerate(s.parts)]


def _ref_sets(cloud: GraphCloud) -> list[CompactSet]:
    cache = getattr(cloud, "_ref_cache", None)
    if cache is None:
        cache = [cloud.reference.value_at(u) for u in cloud.u]
        cloud._ref_cache = cache
    return cache


def _distances(cloud: GraphCloud, u: float, A: CompactSet, ref_u: CompactSet | None) -> np.ndarray:
    du = np.abs(cloud.u - u)
    if cloud.metric == "D":
        b = _bounds(cloud.sets)
        if b is not None and A.is_convex:
            return du + np.maximum(np.abs(b[0] - A.lo), np.abs(b[1] - A.hi))
        return du + np.array([hausdorff(A, B) for B in cloud.sets])
    # frak: |u-w| + H_d(A + Fa(w), B + Fa(u))
    refs = _ref_sets(cloud)
    b, r = _bounds(cloud.sets), _bounds(refs)
    if b is not None and r is not None and A.is_convex and ref_u.is_convex:
        lo1, hi1 = A.lo + r[0], A.hi + r[1]
        lo2, hi2 = b[0] + ref_u.lo, b[1] + ref_u.hi
        return du + np.maximum(np.abs(lo1 - lo2), np.abs(hi1 - hi2))
    return du + np.array([hausdorff(minkowski_add(A, Fw), minkowski_add(B, ref_u))
                          for B, Fw in zip(cloud.sets, refs)])


def _grid(F: SetValuedMap, grid_n: int) -> np.ndarray:
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    return F.grid(grid_n)


def standard_graph_cloud(F: SetValuedMap, grid_n: int, set_spacing: float,
                         max_points: int = DEFAULT_MAX_CLOUD) -> PlaneCloud:
    """Lattice sample of {(u, y): y in F(u)}; each interval sampled at <= set_spacing, endpoints included."""
    if set_spacing <= 0:
        raise ValueError("set_spacing must be > 0")
    chunks = []
    total = 0
    for u in _grid(F, grid_n):
        for p in evaluate(F, float(u)).parts:
            k = max(1, math.ceil((p.hi - p.lo) / set_spacing - SNAP))
            ys = np.linspace(p.lo, p.hi, k + 1) if p.hi > p.lo else np.array([p.lo])
            total += len(ys)
            if total > max_points:
                raise CapacityExceeded(f"plane cloud exceeds {max_points} points")
            chunks.append(np.column_stack([np.full(len(ys), u), ys]))
    return PlaneCloud(np.vstack(chunks), grid_n, set_spacing)


def new_graph_cloud(F: SetValuedMap, grid_n: int) -> GraphCloud:
    us = _grid(F, grid_n)
    return GraphCloud(us, F.sample(us), "D")


def graph_cloud_of(grid_fun: GridFunction, metric: str = "D") -> GraphCloud:
    """The sampled graph {(u, F^alpha(u))} of a grid function."""
    return GraphCloud(grid_fun.u.copy(), list(grid_fun.sets), metric,
                      grid_fun if metric == "frak" else None, list(grid_fun.keys))


def dg_distance(p: tuple[float, CompactSet], q: tuple[float, CompactSet]) -> float:
    return abs(p[0] - q[0]) + hausdorff(p[1], q[1])


def frak_distance(p: tuple[float, CompactSet], q: tuple[float, CompactSet], Fa: GridFunction) -> float:
    """|u - w| + H_d(A + F^alpha(w), B + F^alpha(u)); u, w must be grid points of Fa."""
    (u, A), (w, B) = p, q
    return abs(u - w) + hausdorff(minkowski_add(A, Fa.value_at(w)), minkowski_add(B, Fa.value_at(u)))


# --------------------------------------------------------------------------
# covering numbers

def net_cover_count(cloud: GraphCloud, eta: float) -> int:
    """Size of a greedy eta-net: take the first uncovered point, drop everything within eta/2."""
    if eta <= 0:
        raise ValueError("eta must be > 0")
    uncovered = np.ones(len(cloud), dtype=bool)
    count = 0
    while True:
        idx = np.flatnonzero(uncovered)
        if idx.size == 0:
            return count
        i = int(idx[0])
        count += 1
        uncovered &= cloud.distances_from(i) > eta / 2


def _cell_index(x: np.ndarray, eta: float) -> np.ndarray:
    """Half-open mesh cells anchored at min(x); points on the top boundary join the last cell."""
    x0 = x.min()
    q = (x - x0) / eta
    r = np.round(q)
    q = np.where(np.abs(q - r) < SNAP, r, q)
    m = max(1, math.ceil((x.max() - x0) / eta - SNAP))
    return np.minimum(np.floor(q).astype(np.int64), m - 1)


def grid_box_count(cloud: PlaneCloud, eta: float) -> int:
    """Number of eta-mesh cells containing at least one cloud point."""
    if eta <= 0:
        raise ValueError("eta must be > 0")
    pts = cloud.points
    ix = _cell_index(pts[:, 0], eta)
    iy = _cell_index(pts[:, 1], eta)
    width = int(iy.max()) + 1
    return int(np.unique(ix * width + iy).size)


def max_range(F: SetValuedMap, lo: float, hi: float, samples: int = 16) -> float:
    """Sampled R_F[W] = sup over x, y in W of sup over w, z in F(x) u F(y) of |w - z|."""
    xs = np.unique(np.concatenate([np.linspace(lo, hi, samples), [lo, hi]]))
    sets = F.sample(xs)
    return max(s.hi for s in sets) - min(s.lo for s in sets)


def range_sum_bounds(F: SetValuedMap, eta: float, samples: int = 16) -> tuple[float, float, list[float]]:
    """(lower, upper, ranges) with lower = sum R_F[W_i] / eta and upper = 2m + lower.

    Columns W_i = [u_1 + i eta, u_1 + (i+1) eta], i = 0..m-1, m = ceil(|I| / eta),
    the last one clipped to the domain.
    """
    a, b = F.domain
    if not 0 < eta < b - a:
        raise ValueError("eta must lie in (0, |I|)")
    m = max(1, math.ceil((b - a) / eta - SNAP))
    ranges = [max_range(F, a + i * eta, min(a + (i + 1) * eta, b), samples) for i in range(m)]
    lower = sum(ranges) / eta
    return lower, 2 * m + lower, ranges


# --------------------------------------------------------------------------
# dimension fits

@dataclass
class BoxCountTable:
    eta: list[float]
    count: list[float]
    method: str = ""

    def __post_init__(self):
        order = np.argsort(self.eta)[::-1]
        self.eta = [float(self.eta[i]) for i in order]
        self.count = [self.count[i] for i in order]
        if any(b >= a for a, b in zip(self.eta, self.eta[1:])):
            raise ValueError("eta values must be distinct")

    def csv_rows(self) -> list[tuple]:
        return [(e, c, self.method) for e, c in zip(self.eta, self.count)]


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    intercept: float
    r_squared: float
    eta_min: float
    eta_max: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "eta_min": self.eta_min, "eta_max": self.eta_max}


def fit_dimension(table: BoxCountTable) -> DimensionEstimate:
    """Least-squares slope of log N against -log eta."""
    if len(table.eta) < 4:
        raise DegenerateFit("need at least 4 (eta, N) rows")
    counts = np.asarray(table.count, dtype=float)
    if np.all(counts == counts[0]):
        raise DegenerateFit("all counts are equal")
    if np.any(counts <= 0):
        raise DegenerateFit("counts must be positive")
    x = -np.log(np.asarray(table.eta))
    fit = linregress(x, np.log(counts))
    return DimensionEstimate(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2),
                             min(table.eta), max(table.eta))


def eta_schedule(base: float, j_min: int, j_max: int) -> list[float]:
    return [float(base) ** -j for j in range(j_min, j_max + 1)]


def box_count_table(cloud: PlaneCloud, etas: Sequence[float]) -> BoxCountTable:
    return BoxCountTable(list(etas), [grid_box_count(cloud, e) for e in etas], "grid_box")


def net_count_table(cloud: GraphCloud, etas: Sequence[float]) -> BoxCountTable:
    return BoxCountTable(list(etas), [net_cover_count(cloud, e) for e in etas], "net_cover")


def lipschitz_estimate(F: SetValuedMap, grid_n: int = 1001) -> float:
    """max over adjacent grid pairs of H_d(F(u), F(w)) / |u - w| (a lower bound)."""
    us = _grid(F, grid_n)
    sets = F.sample(us)
    b = _bounds(sets)
    if b is not None:
        d = np.maximum(np.abs(np.diff(b[0])), np.abs(np.diff(b[1])))
    else:
        d = np.array([hausdorff(x, y) for x, y in zip(sets[:-1], sets[1:])])
    return float((d / np.diff(us)).max())


# --------------------------------------------------------------------------
# graph-space IFS

@dataclass(frozen=True)
class IFSSystem:
    system: FractalSystem

    def __post_init__(self):
        a = self.system.maps.a
        if not (abs(self.system.alpha) < 1 and np.all(a < 1)):
            raise ValueError("every W_j must be a contraction: |alpha| < 1 and a_j < 1")

    @property
    def n_maps(self) -> int:
        return self.system.n_maps

    @property
    def contraction(self) -> float:
        return float(max(np.max(self.system.maps.a), abs(self.system.alpha)))


def w_apply(ifs: IFSSystem, j: int, p: tuple[float, CompactSet]) -> tuple[float, CompactSet]:
    """W_j(u, A) = (L_j(u), alpha A + F(L_j u) - alpha S(u)), j = 1..N-1."""
    s = ifs.system
    u, A = p
    v = float(s.maps.apply(j, u))
    return v, _w_set(s, A, v, u)


def _w_set(s: FractalSystem, A: CompactSet, v: float, u: float) -> CompactSet:
    return minkowski_add(minkowski_add(scale(s.alpha, A), s.F(v)), scale(-s.alpha, s.S(u)))


def cloud_hausdorff(a: GraphCloud, b: GraphCloud, Fa: GridFunction) -> float:
    """Hausdorff distance between two clouds under the frak metric of Fa."""
    ref_a = GraphCloud(a.u, a.sets, "frak", Fa)
    ref_b = GraphCloud(b.u, b.sets, "frak", Fa)
    d_ab = max(float(_distances(ref_b, u, A, Fa.value_at(u)).min()) for u, A in zip(a.u, a.sets))
    d_ba = max(float(_distances(ref_a, u, B, Fa.value_at(u)).min()) for u, B in zip(b.u, b.sets))
    return max(d_ab, d_ba)


@dataclass
class IFSRun:
    cloud: GraphCloud
    distances: list[float]
    delta_prune: float

    @property
    def ratios(self) -> list[float]:
        return [b / a if a > 0 else math.nan for a, b in zip(self.distances, self.distances[1:])]


def ifs_iterate(ifs: IFSSystem, init: GraphCloud, steps: int, target: GridFunction,
                max_points: int = DEFAULT_MAX_CLOUD) -> IFSRun:
    """Deterministic Hutchinson iteration cloud_{k+1} = union_j W_j(cloud_k), pruned to the target grid.

    Pruning keeps one pair per cell of the target grid: an image landing
    exactly on a grid point is kept (first one wins), images falling between
    grid points are dropped. Every cell of width <= max gap is re-populated
    each step because the grid is the image of its own coarser level, so the
    pruning error is at most ``delta_prune`` = (max grid gap) / 2 in u.

    ``distances[k]`` is the frak-Hausdorff distance from cloud_k to the
    sampled graph of ``target`` (k = 0 is the initial cloud).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    s = ifs.system
    keys = [target.keys[target.index_of(u)] for u in init.u]
    cloud = dict(zip(keys, init.sets))
    target_cloud = graph_cloud_of(target)
    delta = float(np.max(np.diff(target.u))) / 2

    def snapshot(c):
        ks = sorted(c)
        return GraphCloud(np.array([float(k) for k in ks]), [c[k] for k in ks], "D", keys=ks)

    distances = [cloud_hausdorff(snapshot(cloud), target_cloud, target)]
    for _ in range(steps):
        nxt: dict[Fraction, CompactSet] = {}
        for x, A in cloud.items():
            xf = float(x)
            shift = minkowski_add(scale(s.alpha, A), scale(-s.alpha, s.S(xf)))
            for j in range(1, ifs.n_maps + 1):
                y = s.maps.apply_exact(j, x)
                if y in nxt or not target.has_key(y):
                    continue
                nxt[y] = minkowski_add(s.F(float(y)), shift)
                if len(nxt) > max_points:
                    raise CapacityExceeded(f"cloud exceeds {max_points} pairs")
        cloud = nxt
        distances.append(cloud_hausdorff(snapshot(cloud), target_cloud, target))
    return IFSRun(snapshot(cloud), distances, delta)


# --------------------------------------------------------------------------
# Moran bounds

def moran_solve(ratios: Sequence[float], tol: float = 1e-13) -> float:
    """Unique t >= 0 with sum r_i^t = 1, by bisection.

    Zero ratios contribute nothing for t > 0; if every ratio is zero the
    solution degenerates to t = 0.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size == 0:
        raise ValueError("need at least one ratio")
    if np.any((r < 0) | (r >= 1)):
        raise ValueError("ratios must lie in [0, 1)")
    r = r[r > 0]
    if r.size <= 1:
        return 0.0

    def f(t):
        return float(np.sum(r ** t)) - 1.0

    lo, hi = 0.0, 2.0 * r.size
    while f(hi) > 0:
        lo, hi = hi, 2 * hi
    # relative stop: for ratios near 1 the root is large and absolute tol is below its ulp
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class MoranBounds:
    r: tuple[float, ...]
    R: tuple[float, ...]
    t_lower: float
    t_upper: float


def dim_bounds(ifs: IFSSystem) -> MoranBounds:
    """r_j = min(a_j, |alpha|), R_j = max(a_j, |alpha|) and the Moran solutions for each."""
    a = ifs.system.maps.a
    al = abs(ifs.system.alpha)
    r = tuple(float(min(x, al)) for x in a)
    R = tuple(float(max(x, al)) for x in a)
    return MoranBounds(r, R, moran_solve(r), moran_solve(R))
