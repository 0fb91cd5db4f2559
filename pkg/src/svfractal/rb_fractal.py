"""Set-valued alpha-fractal functions.

Given a continuous map F, a partition u_1 < ... < u_N of its domain, a base
map S with S(u_1) - F(u_1) = S(u_N) - F(u_N) and a scale |alpha| < 1, the
fractal function F^alpha is the unique G with

    G(L_n(u)) = F(L_n(u)) + alpha * G(u) - alpha * S(u),    n = 1..N-1,

where L_n is the increasing affine map of [u_1, u_N] onto [u_n, u_{n+1}].

F^alpha is tabulated on the dense address set C_d = { L_w(u_i) : |w| <= d }.
Grid points are kept as exact rationals (``fractions.Fraction``) so that the
same point reached through different addresses is recognised as one key.

Two independent algorithms produce the table: :func:`evaluate_fractal`
(endpoint fixed points, then forward recursion over addresses) and
:func:`picard_oracle` (direct iteration of the Read-Bajraktarevic operator on
the whole grid). Map indices n are 1-based throughout, like the addresses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .compact_set import (
    CompactSet,
    Interval,
    hausdorff,
    minkowski_add,
    minkowski_sub,
    norm,
    scale,
    subset,
    to_rows,
)
from .errors import (
    CapacityExceeded,
    DomainError,
    EndpointNotSingleton,
    IncompatibleBase,
    NoConvergence,
    OrderViolated,
    PointNotOnGrid,
)
from .sv_map import (
    IDENTITY,
    Constant,
    Custom,
    Reparam,
    Scaled,
    ScalarFn,
    SetValuedMap,
    Sum,
    holder_seminorm_samples,
    is_below,
    pointwise_distances,
    variation_samples,
)

DEFAULT_TOL = 1e-9
DEFAULT_TOL_COMPAT = 1e-9
DEFAULT_MAX_POINTS = 1_000_000


# --------------------------------------------------------------------------
# partition and affine maps

@dataclass(frozen=True)
class Partition:
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) < 3:
            raise ValueError("a partition needs N >= 3 points (at least two maps)")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, n_points: int, lo: float = 0.0, hi: float = 1.0) -> "Partition":
        return cls(tuple(np.linspace(lo, hi, n_points)))

    @property
    def exact(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(p) for p in self.points)

    @property
    def n_maps(self) -> int:
        return len(self.points) - 1

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class AffineMaps:
    """L_n(u) = a_n u + b_n with L_n(u_1) = u_n and L_n(u_N) = u_{n+1}."""

    a: np.ndarray
    b: np.ndarray
    a_exact: tuple[Fraction, ...]
    b_exact: tuple[Fraction, ...]

    def apply(self, n: int, u):
        return self.a[n - 1] * u + self.b[n - 1]

    def apply_exact(self, n: int, u: Fraction) -> Fraction:
        return self.a_exact[n - 1] * u + self.b_exact[n - 1]

    def inverse_exact(self, n: int, u: Fraction) -> Fraction:
        return (u - self.b_exact[n - 1]) / self.a_exact[n - 1]

    def __len__(self):
        return len(self.a)


def make_affine_maps(partition: Partition) -> AffineMaps:
    x = partition.exact
    u1, uN = x[0], x[-1]
    a = tuple((x[n + 1] - x[n]) / (uN - u1) for n in range(len(x) - 1))
    b = tuple((x[n] * uN - u1 * x[n + 1]) / (uN - u1) for n in range(len(x) - 1))
    return AffineMaps(np.array([float(v) for v in a]), np.array([float(v) for v in b]), a, b)


# --------------------------------------------------------------------------
# systems and base functions

@dataclass(frozen=True)
class FractalSystem:
    F: SetValuedMap
    S: SetValuedMap
    partition: Partition
    alpha: float

    def __post_init__(self):
        if not abs(self.alpha) < 1:
            raise ValueError(f"|alpha| must be < 1, got {self.alpha}")
        lo, hi = self.F.domain
        p = self.partition.points
        if abs(p[0] - lo) > 1e-12 or abs(p[-1] - hi) > 1e-12:
            raise DomainError(f"partition [{p[0]}, {p[-1]}] does not span the domain [{lo}, {hi}]")
        if self.S.domain != self.F.domain:
            raise DomainError("F and S must share a domain")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "maps", make_affine_maps(self.partition))

    @property
    def n_maps(self) -> int:
        return self.partition.n_maps


@dataclass(frozen=True)
class BaseFunctionSpec:
    """How to build S from F.

    ``kind``: ``"I"`` -- S(u) = F(t(u)) + tails, t(u_1)=u_1, t(u_N)=u_N;
    ``"II"`` -- S(u) = t(u) F(u) + tails, t(u_1)=t(u_N)=1;
    ``"same"`` -- S = F; ``"custom"`` -- S given directly.
    The tails are (u - u_1)(F(u_1) - F(u_1)) + (u_N - u)(F(u_N) - F(u_N)).
    """

    kind: str = "I"
    t: object = None
    S: SetValuedMap | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.t is not None:
            d["t"] = self.t.to_dict()
        if self.S is not None:
            d["S"] = self.S.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BaseFunctionSpec":
        kind = str(d.get("kind", "I"))
        if kind not in ("I", "II", "same", "custom"):
            raise ValueError(f"unknown base kind {kind!r}")
        t = ScalarFn.from_obj(d["t"]) if d.get("t") is not None else None
        S = SetValuedMap.from_dict(d["S"]) if d.get("S") is not None else None
        if kind == "custom" and S is None:
            raise ValueError("custom base needs an explicit S map")
        return cls(kind, t, S)


def build_base(F: SetValuedMap, spec: BaseFunctionSpec, tol_compat: float = DEFAULT_TOL_COMPAT) -> SetValuedMap:
    u1, uN = F.domain
    if spec.kind == "same":
        S = F
    elif spec.kind == "custom":
        S = spec.S
    else:
        t = spec.t
        if spec.kind == "I":
            t = IDENTITY if t is None else t
            if abs(t(u1) - u1) > tol_compat or abs(t(uN) - uN) > tol_compat:
                raise IncompatibleBase("type I reparametrization needs t(u_1)=u_1 and t(u_N)=u_N")
            head = Reparam(F.family, t)
        elif spec.kind == "II":
            t = ScalarFn.const(1.0) if t is None else t
            if abs(t(u1) - 1) > tol_compat or abs(t(uN) - 1) > tol_compat:
                raise IncompatibleBase("type II multiplier needs t(u_1)=t(u_N)=1")
            head = Scaled(t, F.family)
        else:
            raise ValueError(f"unknown base kind {spec.kind!r}")
        d1 = minkowski_sub(F(u1), F(u1))
        dN = minkowski_sub(F(uN), F(uN))
        tails = Sum(Scaled(ScalarFn.poly(-u1, 1.0), Constant(d1)),
                    Scaled(ScalarFn.poly(uN, -1.0), Constant(dN)))
        S = SetValuedMap(Sum(head, tails), F.domain)
    gap = _compat_gap(F, S)
    if gap > tol_compat:
        raise IncompatibleBase(f"base violates S(u_1)-F(u_1) = S(u_N)-F(u_N) (gap {gap:.3g})")
    return S


def _compat_gap(F: SetValuedMap, S: SetValuedMap) -> float:
    u1, uN = F.domain
    return hausdorff(minkowski_sub(S(u1), F(u1)), minkowski_sub(S(uN), F(uN)))


def check_compatibility(system: FractalSystem) -> float:
    """H_d(S(u_1) - F(u_1), S(u_N) - F(u_N)); zero for a compatible system."""
    return _compat_gap(system.F, system.S)


# --------------------------------------------------------------------------
# endpoint fixed points

def _picard_set(F0: CompactSet, S0: CompactSet, alpha: float, tol: float, max_iter: int) -> CompactSet:
    """Fixed point of A -> F0 + alpha A - alpha S0, within tol in H_d."""
    if alpha == 0:
        return F0
    c = minkowski_add(F0, scale(-alpha, S0))
    stop = tol * (1 - abs(alpha)) / abs(alpha)
    A = F0
    for _ in range(max_iter):
        nxt = minkowski_add(c, scale(alpha, A))
        if hausdorff(nxt, A) <= stop:
            return nxt
        A = nxt
    raise NoConvergence(f"endpoint iteration did not reach tol={tol} in {max_iter} steps")


def endpoint_fixed_point(system: FractalSystem, which: str = "first", tol: float = DEFAULT_TOL,
                         max_iter: int = 10_000) -> CompactSet:
    """F^alpha at u_1 (``which='first'``) or u_N (``'last'``)."""
    if which not in ("first", "last"):
        raise ValueError("which must be 'first' or 'last'")
    u = system.F.domain.lo if which == "first" else system.F.domain.hi
    return _picard_set(system.F(u), system.S(u), system.alpha, tol, max_iter)


# --------------------------------------------------------------------------
# grid functions

@dataclass
class GridFunction:
    """F^alpha tabulated on C_depth. Points are sorted; ``keys`` are exact."""

    keys: list[Fraction]
    sets: list[CompactSet]
    depth: int
    levels: list[int]
    addresses: list[str]
    history: tuple[float, ...] = ()

    def __post_init__(self):
        self.u = np.array([float(k) for k in self.keys])
        self._index = {k: i for i, k in enumerate(self.keys)}

    def __len__(self):
        return len(self.keys)

    def index_of(self, u) -> int:
        if isinstance(u, Fraction) and u in self._index:
            return self._index[u]
        u = float(u)
        i = int(np.searchsorted(self.u, u))
        for j in (i - 1, i):
            if 0 <= j < len(self.u) and abs(self.u[j] - u) <= 1e-12 * max(1.0, abs(u)):
                return j
        raise PointNotOnGrid(f"u={u} is not a grid point")

    def value_at(self, u) -> CompactSet:
        return self.sets[self.index_of(u)]

    def has_key(self, key: Fraction) -> bool:
        return key in self._index

    def value_at_key(self, key: Fraction) -> CompactSet:
        return self.sets[self._index[key]]

    def sup_distance(self, other: "GridFunction") -> float:
        if self.keys != other.keys:
            raise PointNotOnGrid("grid functions live on different grids")
        return float(pointwise_distances(self.sets, other.sets).max())

    def sup_distance_to_map(self, F: SetValuedMap) -> float:
        return float(pointwise_distances(self.sets, F.sample(self.u)).max())

    def holder_seminorm(self, sigma: float) -> float:
        return holder_seminorm_samples(self.u, self.sets, sigma)

    def variation(self) -> float:
        return variation_samples(self.sets)

    def max_norm(self) -> float:
        return max(norm(s) for s in self.sets)

    def csv_rows(self) -> list[tuple]:
        rows = []
        for addr, u, s in zip(self.addresses, self.u, self.sets):
            for _, k, lo, hi in to_rows(s, None):
                rows.append((addr, float(u), k, lo, hi))
        return rows


def _address(word: tuple[int, ...], knot: int) -> str:
    return ".".join(map(str, word)) + f":{knot}"


def _grid_size(n_knots: int, depth: int) -> int:
    m = n_knots - 1
    return n_knots * sum(m ** k for k in range(depth + 1))


def dense_set_exact(partition: Partition, depth: int, max_points: int = DEFAULT_MAX_POINTS):
    """C_depth as {exact point: (level, address)} in discovery order."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    bound = _grid_size(len(partition), depth)
    if bound > max_points:
        raise CapacityExceeded(f"grid of up to {bound} points exceeds budget {max_points}")
    maps = make_affine_maps(partition)
    found: dict[Fraction, tuple[int, str]] = {}
    frontier = []
    for i, x in enumerate(partition.exact, start=1):
        found[x] = (0, _address((), i))
        frontier.append((x, (), i))
    for level in range(1, depth + 1):
        nxt = []
        for x, word, knot in frontier:
            for n in range(1, len(maps) + 1):
                y = maps.apply_exact(n, x)
                if y not in found:
                    w = (n,) + word
                    found[y] = (level, _address(w, knot))
                    nxt.append((y, w, knot))
        frontier = nxt
    return found


def dense_set(partition: Partition, depth: int, max_points: int = DEFAULT_MAX_POINTS) -> list[float]:
    """Sorted points of C_depth = union over |w| <= depth of L_w(partition)."""
    return [float(x) for x in sorted(dense_set_exact(partition, depth, max_points))]


def _require_compatible(system: FractalSystem, tol_compat: float):
    gap = check_compatibility(system)
    if gap > tol_compat:
        raise IncompatibleBase(f"S(u_1)-F(u_1) and S(u_N)-F(u_N) differ by {gap:.3g} in H_d")


def evaluate_fractal(system: FractalSystem, depth: int, tol: float = DEFAULT_TOL,
                     tol_compat: float = DEFAULT_TOL_COMPAT, max_points: int = DEFAULT_MAX_POINTS,
                     max_iter: int = 10_000) -> GridFunction:
    """Tabulate F^alpha on C_depth by forward address recursion."""
    _require_compatible(system, tol_compat)
    F, S, alpha, maps = system.F, system.S, system.alpha, system.maps
    knots = system.partition.exact
    A1 = endpoint_fixed_point(system, "first", tol, max_iter)
    AN = endpoint_fixed_point(system, "last", tol, max_iter)
    tail = minkowski_add(scale(alpha, A1), scale(-alpha, S(float(knots[0]))))

    values: dict[Fraction, CompactSet] = {}
    info: dict[Fraction, tuple[int, str]] = {}
    frontier = []
    for i, x in enumerate(knots, start=1):
        if i == 1:
            v = A1
        elif i == len(knots):
            v = AN
        else:
            v = minkowski_add(F(float(x)), tail)
        values[x] = v
        info[x] = (0, _address((), i))
        frontier.append((x, (), i))

    bound = _grid_size(len(knots), depth)
    if bound > max_points:
        raise CapacityExceeded(f"grid of up to {bound} points exceeds budget {max_points}")
    for level in range(1, depth + 1):
        nxt = []
        for x, word, knot in frontier:
            xf = float(x)
            shift = minkowski_add(scale(alpha, values[x]), scale(-alpha, S(xf)))
            for n in range(1, len(maps) + 1):
                y = maps.apply_exact(n, x)
                if y in values:
                    continue
                values[y] = minkowski_add(F(float(y)), shift)
                w = (n,) + word
                info[y] = (level, _address(w, knot))
                nxt.append((y, w, knot))
        frontier = nxt
    return _assemble(values, info, depth)


def _assemble(values, info, depth, history=()) -> GridFunction:
    keys = sorted(values)
    return GridFunction(
        keys=keys,
        sets=[values[k] for k in keys],
        depth=depth,
        levels=[info[k][0] for k in keys],
        addresses=[info[k][1] for k in keys],
        history=tuple(history),
    )


def _piece_index(x: Fraction, knots: Sequence[Fraction]) -> int:
    """Lowest n with u_n <= x <= u_{n+1} (1-based)."""
    for n in range(1, len(knots)):
        if knots[n - 1] <= x <= knots[n]:
            return n
    raise DomainError(f"{x} outside the partition")


def picard_oracle(system: FractalSystem, depth: int, tol: float = DEFAULT_TOL,
                  max_iter: int = 10_000, tol_compat: float = DEFAULT_TOL_COMPAT,
                  max_points: int = DEFAULT_MAX_POINTS) -> GridFunction:
    """Iterate (Phi G)(u) = F(u) + alpha [G(L_n^{-1} u) - S(L_n^{-1} u)] on C_depth from G_0 = F.

    Stops once the sup-H_d change is <= tol (1 - |alpha|) / |alpha|, which
    bounds the distance to the true fixed point by tol. The per-iteration
    changes are kept in ``history``.
    """
    _require_compatible(system, tol_compat)
    F, S, alpha, maps = system.F, system.S, system.alpha, system.maps
    found = dense_set_exact(system.partition, depth, max_points)
    keys = sorted(found)
    index = {k: i for i, k in enumerate(keys)}
    knots = system.partition.exact
    pre = []
    base = []
    for x in keys:
        n = _piece_index(x, knots)
        p = maps.inverse_exact(n, x)
        if p not in index:
            raise PointNotOnGrid(f"grid not closed under L_{n}^-1 at {x}")
        pre.append(index[p])
        base.append(minkowski_add(F(float(x)), scale(-alpha, S(float(p)))))
    G = [F(float(x)) for x in keys]
    history = []
    stop = tol * (1 - abs(alpha)) / abs(alpha) if alpha else math.inf
    for _ in range(max_iter):
        if alpha == 0:
            new = [F(float(x)) for x in keys]
        else:
            new = [minkowski_add(c, scale(alpha, G[j])) for c, j in zip(base, pre)]
        change = float(pointwise_distances(new, G).max())
        history.append(change)
        G = new
        if change <= stop:
            values = dict(zip(keys, G))
            return _assemble(values, found, depth, history)
    raise NoConvergence(f"Picard iteration did not reach tol={tol} in {max_iter} steps")


def sample_on_grid(F: SetValuedMap, like: GridFunction) -> GridFunction:
    """F itself tabulated on the grid of ``like``."""
    return GridFunction(list(like.keys), F.sample(like.u), like.depth, list(like.levels),
                        list(like.addresses))


# --------------------------------------------------------------------------
# diagnostics

def residual(system: FractalSystem, grid_fun: GridFunction) -> float:
    """Max over grid edges u -> L_n(u) of the self-referential defect."""
    F, S, alpha, maps = system.F, system.S, system.alpha, system.maps
    worst = 0.0
    for x, G in zip(grid_fun.keys, grid_fun.sets):
        shift = minkowski_add(scale(alpha, G), scale(-alpha, S(float(x))))
        for n in range(1, len(maps) + 1):
            y = maps.apply_exact(n, x)
            if not grid_fun.has_key(y):
                continue
            rhs = minkowski_add(F(float(y)), shift)
            worst = max(worst, hausdorff(grid_fun.value_at_key(y), rhs))
    return worst


def perturbation_gap(system: FractalSystem, grid_fun: GridFunction) -> tuple[float, float]:
    """(grid ||F^alpha - F||, |a|/(1-|a|) ||F - S|| + 2|a|/(1-|a|) ||F||)."""
    F, S = system.F, system.S
    a = abs(system.alpha)
    Fs = F.sample(grid_fun.u)
    lhs = float(pointwise_distances(grid_fun.sets, Fs).max())
    f_minus_s = float(pointwise_distances(Fs, S.sample(grid_fun.u)).max())
    f_norm = max(norm(s) for s in Fs)
    rhs = a / (1 - a) * f_minus_s + 2 * a / (1 - a) * f_norm
    return lhs, rhs


def fractal_operator_gap(F: SetValuedMap, G: SetValuedMap, partition: Partition, S: SetValuedMap,
                         alpha: float, depth: int, tol: float = DEFAULT_TOL,
                         S_G: SetValuedMap | None = None) -> tuple[float, float]:
    """(grid ||F - G||, grid ||F^alpha - G^alpha||) for a shared partition, base and scale."""
    Fa = evaluate_fractal(FractalSystem(F, S, partition, alpha), depth, tol)
    Ga = evaluate_fractal(FractalSystem(G, S if S_G is None else S_G, partition, alpha), depth, tol)
    input_dist = float(pointwise_distances(F.sample(Fa.u), G.sample(Fa.u)).max())
    return input_dist, Fa.sup_distance(Ga)


def constrained_check(F: SetValuedMap, G: SetValuedMap, partition: Partition, alpha: float, depth: int,
                      slack: float = 1e-8, S_F: SetValuedMap | None = None,
                      S_G: SetValuedMap | None = None, tol: float = DEFAULT_TOL,
                      order_grid_n: int = 201) -> bool:
    """Does F <= G carry over to F^alpha <= G^alpha on C_depth?

    Default bases are S_F = F and S_G = G, which interpolate the endpoints.
    """
    u1, uN = F.domain
    for M, name in ((F, "F"), (G, "G")):
        for u in (u1, uN):
            if not M(u).is_singleton:
                raise EndpointNotSingleton(f"{name}({u}) = {M(u)} is not a singleton")
    S_F = F if S_F is None else S_F
    S_G = G if S_G is None else S_G
    grid = dense_set(partition, depth)
    if not is_below(F, G, order_grid_n, slack) or not all(subset(F(u), G(u), slack) for u in grid):
        raise OrderViolated("F <= G fails on the grid")
    if not all(subset(S_F(u), S_G(u), slack) for u in grid):
        raise OrderViolated("S_F <= S_G fails on the grid")
    Fa = evaluate_fractal(FractalSystem(F, S_F, partition, alpha), depth, tol)
    Ga = evaluate_fractal(FractalSystem(G, S_G, partition, alpha), depth, tol)
    return all(subset(a, b, slack) for a, b in zip(Fa.sets, Ga.sets))


def grid_map(grid_fun: GridFunction, domain: Interval, name: str = "grid") -> SetValuedMap:
    """Read-only map view of a grid function; defined only at grid points."""
    convex = all(s.is_convex for s in grid_fun.sets)
    return SetValuedMap(Custom(grid_fun.value_at, convex, name), domain)
