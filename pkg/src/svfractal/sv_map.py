"""Set-valued maps u -> CompactSet on a closed interval, and grid metrics.

Maps are built from a small catalogue of families (``Constant``, ``Envelope``,
``Singleton``, ``CantorValued`` and the algebraic combinators ``Sum``,
``Scaled``, ``Product``, ``Translate``, ``Reparam``). Scalar functions inside
families are :class:`ScalarFn` descriptors so that every map round-trips
through a plain dict (the CLI config format). Arbitrary Python callables are
accepted too, at the cost of serializability.

Every metric here is a supremum over an uncountable family (points, pairs of
points, partitions). They are estimated on uniform grids and returned as
:class:`MetricReport` with ``is_lower_bound=True``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .compact_set import (
    CompactSet,
    Interval,
    cantor,
    format_set,
    hausdorff,
    minkowski_add,
    product,
    scale,
    set_from_obj,
    subset,
)
from .errors import ConvexityRequired, DomainError

DOMAIN_SLACK = 1e-12


# --------------------------------------------------------------------------
# scalar function catalogue

@dataclass(frozen=True)
class ScalarFn:
    """Serializable scalar function. Works on floats and numpy arrays.

    kinds: const(c), poly(c0, c1, ...), sin(amp, freq, phase),
    sqrt(scale, shift), sin_recip(), abs(center, slope),
    piecewise(xs..., ys...) (linear interpolation), sum(fn, fn, ...).
    """

    kind: str
    params: tuple = ()

    def __call__(self, u):
        k, p = self.kind, self.params
        if k == "const":
            return p[0] + 0.0 * np.asarray(u, dtype=float) if np.ndim(u) else float(p[0])
        if k == "poly":
            acc = 0.0 * np.asarray(u, dtype=float) if np.ndim(u) else 0.0
            for c in reversed(p):
                acc = acc * u + c
            return acc
        if k == "sin":
            amp, freq, phase = p
            return amp * np.sin(freq * np.asarray(u, dtype=float) + phase) if np.ndim(u) \
                else amp * math.sin(freq * u + phase)
        if k == "sqrt":
            s, shift = p
            if np.ndim(u):
                return s * np.sqrt(np.maximum(np.asarray(u, dtype=float) - shift, 0.0))
            return s * math.sqrt(max(u - shift, 0.0))
        if k == "sin_recip":
            if np.ndim(u):
                u = np.asarray(u, dtype=float)
                out = np.zeros_like(u)
                nz = u != 0
                out[nz] = np.sin(1.0 / u[nz])
                return out
            return 0.0 if u == 0 else math.sin(1.0 / u)
        if k == "abs":
            center, slope = p
            return slope * np.abs(np.asarray(u, dtype=float) - center) if np.ndim(u) \
                else slope * abs(u - center)
        if k == "piecewise":
            m = len(p) // 2
            out = np.interp(u, p[:m], p[m:])
            return out if np.ndim(u) else float(out)
        if k == "sum":
            acc = p[0](u)
            for f in p[1:]:
                acc = acc + f(u)
            return acc
        raise ValueError(f"unknown scalar function kind {k!r}")

    # constructors
    @classmethod
    def const(cls, c: float) -> "ScalarFn":
        return cls("const", (float(c),))

    @classmethod
    def poly(cls, *coeffs: float) -> "ScalarFn":
        """Polynomial with ascending coefficients c0 + c1 u + c2 u^2 + ..."""
        return cls("poly", tuple(float(c) for c in coeffs) or (0.0,))

    @classmethod
    def sin(cls, amp: float = 1.0, freq: float = 1.0, phase: float = 0.0) -> "ScalarFn":
        return cls("sin", (float(amp), float(freq), float(phase)))

    @classmethod
    def sqrt(cls, scale: float = 1.0, shift: float = 0.0) -> "ScalarFn":
        return cls("sqrt", (float(scale), float(shift)))

    @classmethod
    def sin_recip(cls) -> "ScalarFn":
        return cls("sin_recip", ())

    @classmethod
    def abs(cls, center: float = 0.0, slope: float = 1.0) -> "ScalarFn":
        return cls("abs", (float(center), float(slope)))

    @classmethod
    def piecewise(cls, xs: Sequence[float], ys: Sequence[float]) -> "ScalarFn":
        if len(xs) != len(ys) or len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("piecewise needs >= 2 strictly increasing knots with matching values")
        return cls("piecewise", tuple(float(x) for x in xs) + tuple(float(y) for y in ys))

    @classmethod
    def sum(cls, *fns: "ScalarFn") -> "ScalarFn":
        return cls("sum", tuple(fns))

    def to_dict(self) -> dict:
        if self.kind == "sum":
            return {"kind": "sum", "terms": [f.to_dict() for f in self.params]}
        if self.kind == "piecewise":
            m = len(self.params) // 2
            return {"kind": "piecewise", "xs": list(self.params[:m]), "ys": list(self.params[m:])}
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_obj(cls, obj) -> "ScalarFn":
        """Accepts a dict, a number (constant) or a list (polynomial coefficients)."""
        if isinstance(obj, ScalarFn):
            return obj
        if isinstance(obj, (int, float)):
            return cls.const(obj)
        if isinstance(obj, (list, tuple)):
            return cls.poly(*obj)
        kind = obj["kind"]
        if kind == "sum":
            return cls.sum(*(cls.from_obj(t) for t in obj["terms"]))
        if kind == "piecewise":
            return cls.piecewise(obj["xs"], obj["ys"])
        params = obj.get("params", [])
        ctor = {"const": cls.const, "poly": cls.poly, "sin": cls.sin, "sqrt": cls.sqrt,
                "sin_recip": cls.sin_recip, "abs": cls.abs}.get(kind)
        if ctor is None:
            raise ValueError(f"unknown scalar function kind {kind!r}")
        return ctor(*params)


IDENTITY = ScalarFn.poly(0.0, 1.0)


def _fn_dict(f) -> dict:
    if not isinstance(f, ScalarFn):
        raise TypeError(f"cannot serialize non-catalogue function {f!r}")
    return f.to_dict()


# --------------------------------------------------------------------------
# map families

class MapFamily:
    """Callable u -> CompactSet plus a convexity flag."""

    convex: bool = False

    def __call__(self, u: float) -> CompactSet:  # pragma: no cover - interface
        raise NotImplementedError

    @property
    def tag(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:  # pragma: no cover - interface
        raise TypeError(f"{self.tag} is not serializable")


@dataclass(frozen=True)
class Constant(MapFamily):
    value: CompactSet

    def __call__(self, u):
        return self.value

    @property
    def convex(self):
        return self.value.is_convex

    def to_dict(self):
        return {"family": "constant", "set": format_set(self.value)}


@dataclass(frozen=True)
class Envelope(MapFamily):
    """u -> [f_lo(u), f_hi(u)]."""

    lo: Callable
    hi: Callable
    convex = True

    def __call__(self, u):
        a, b = float(self.lo(u)), float(self.hi(u))
        if a > b:
            if a - b > 1e-12 * max(1.0, abs(a)):
                raise DomainError(f"envelope has f_lo > f_hi at u={u}: {a} > {b}")
            b = a
        return CompactSet._trusted((Interval(a, b),))

    def to_dict(self):
        return {"family": "envelope", "lo": _fn_dict(self.lo), "hi": _fn_dict(self.hi)}


@dataclass(frozen=True)
class Singleton(MapFamily):
    f: Callable
    convex = True

    def __call__(self, u):
        return CompactSet.point(self.f(u))

    def to_dict(self):
        return {"family": "singleton", "f": _fn_dict(self.f)}


@dataclass(frozen=True)
class CantorValued(MapFamily):
    """u -> t(u) * C_k where C_k is the depth-k pre-Cantor set."""

    depth: int
    factor: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "_base", cantor(self.depth))

    def __call__(self, u):
        if self.factor is None:
            return self._base
        return scale(self.factor(u), self._base)

    @property
    def convex(self):
        return self.depth == 0

    def to_dict(self):
        d = {"family": "cantor", "depth": self.depth}
        if self.factor is not None:
            d["factor"] = _fn_dict(self.factor)
        return d


@dataclass(frozen=True)
class Sum(MapFamily):
    first: MapFamily
    second: MapFamily

    def __call__(self, u):
        return minkowski_add(self.first(u), self.second(u))

    @property
    def convex(self):
        return self.first.convex and self.second.convex

    def to_dict(self):
        return {"family": "sum", "first": self.first.to_dict(), "second": self.second.to_dict()}


@dataclass(frozen=True)
class Scaled(MapFamily):
    """u -> t(u) * F(u); ``factor`` is a number or a scalar function."""

    factor: float | Callable
    inner: MapFamily

    def __call__(self, u):
        lam = self.factor(u) if callable(self.factor) else self.factor
        return scale(lam, self.inner(u))

    @property
    def convex(self):
        return self.inner.convex

    def to_dict(self):
        f = _fn_dict(self.factor) if callable(self.factor) else float(self.factor)
        return {"family": "scaled", "factor": f, "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Product(MapFamily):
    first: MapFamily
    second: MapFamily

    def __call__(self, u):
        return product(self.first(u), self.second(u))

    @property
    def convex(self):
        return self.first.convex and self.second.convex

    def to_dict(self):
        return {"family": "product", "first": self.first.to_dict(), "second": self.second.to_dict()}


@dataclass(frozen=True)
class Translate(MapFamily):
    """u -> F(u) + {g(u)}."""

    inner: MapFamily
    shift: Callable

    def __call__(self, u):
        s = float(self.shift(u))
        return CompactSet._trusted(tuple(Interval(p.lo + s, p.hi + s) for p in self.inner(u).parts))

    @property
    def convex(self):
        return self.inner.convex

    def to_dict(self):
        return {"family": "translate", "inner": self.inner.to_dict(), "shift": _fn_dict(self.shift)}


@dataclass(frozen=True)
class Reparam(MapFamily):
    """u -> F(t(u))."""

    inner: MapFamily
    t: Callable

    def __call__(self, u):
        return self.inner(float(self.t(u)))

    @property
    def convex(self):
        return self.inner.convex

    def to_dict(self):
        return {"family": "reparam", "inner": self.inner.to_dict(), "t": _fn_dict(self.t)}


@dataclass(frozen=True)
class Custom(MapFamily):
    """Wraps an arbitrary callable; not serializable."""

    func: Callable
    convex: bool = False
    name: str = "custom"

    def __call__(self, u):
        return self.func(u)

    @property
    def tag(self):
        return self.name


def family_from_dict(d: dict) -> MapFamily:
    kind = d["family"]
    fn = ScalarFn.from_obj
    if kind == "constant":
        return Constant(set_from_obj(d["set"]))
    if kind == "envelope":
        return Envelope(fn(d["lo"]), fn(d["hi"]))
    if kind == "singleton":
        return Singleton(fn(d["f"]))
    if kind == "cantor":
        return CantorValued(int(d["depth"]), fn(d["factor"]) if "factor" in d else None)
    if kind == "sum":
        return Sum(family_from_dict(d["first"]), family_from_dict(d["second"]))
    if kind == "scaled":
        f = d["factor"]
        return Scaled(float(f) if isinstance(f, (int, float)) else fn(f), family_from_dict(d["inner"]))
    if kind == "product":
        return Product(family_from_dict(d["first"]), family_from_dict(d["second"]))
    if kind == "translate":
        return Translate(family_from_dict(d["inner"]), fn(d["shift"]))
    if kind == "reparam":
        return Reparam(family_from_dict(d["inner"]), fn(d["t"]))
    if kind == "polynomial":
        from .approx import SetPolynomial
        return SetPolynomial.from_dict(d)
    raise ValueError(f"unknown map family {kind!r}")


# --------------------------------------------------------------------------
# the map type

@dataclass(frozen=True)
class SetValuedMap:
    family: MapFamily
    domain: Interval = Interval(0.0, 1.0)

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"domain must be a nondegenerate interval, got {self.domain}")
        object.__setattr__(self, "domain", Interval(float(lo), float(hi)))

    @property
    def is_convex_valued(self) -> bool:
        return self.family.convex

    @property
    def family_tag(self) -> str:
        return self.family.tag

    def __call__(self, u: float) -> CompactSet:
        return evaluate(self, u)

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.domain.lo, self.domain.hi, n)

    def sample(self, us) -> list[CompactSet]:
        return [evaluate(self, float(u)) for u in us]

    def _check_same_domain(self, other: "SetValuedMap"):
        if self.domain != other.domain:
            raise DomainError(f"domains differ: {self.domain} vs {other.domain}")

    def __add__(self, other: "SetValuedMap") -> "SetValuedMap":
        self._check_same_domain(other)
        return SetValuedMap(Sum(self.family, other.family), self.domain)

    def __mul__(self, other: "SetValuedMap") -> "SetValuedMap":
        self._check_same_domain(other)
        return SetValuedMap(Product(self.family, other.family), self.domain)

    def __rmul__(self, factor) -> "SetValuedMap":
        return SetValuedMap(Scaled(factor, self.family), self.domain)

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), **self.family.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SetValuedMap":
        domain = d.get("domain", (0.0, 1.0))
        return cls(family_from_dict(d), Interval(*domain))


def constant(value, domain=(0.0, 1.0)) -> SetValuedMap:
    return SetValuedMap(Constant(set_from_obj(value)), Interval(*domain))


def envelope(lo, hi, domain=(0.0, 1.0)) -> SetValuedMap:
    return SetValuedMap(Envelope(lo, hi), Interval(*domain))


def singleton(f, domain=(0.0, 1.0)) -> SetValuedMap:
    return SetValuedMap(Singleton(f), Interval(*domain))


def cantor_valued(depth: int, factor=None, domain=(0.0, 1.0)) -> SetValuedMap:
    return SetValuedMap(CantorValued(depth, factor), Interval(*domain))


def evaluate(F: SetValuedMap, u: float) -> CompactSet:
    lo, hi = F.domain
    if not (lo - DOMAIN_SLACK <= u <= hi + DOMAIN_SLACK):
        raise DomainError(f"u={u} outside domain [{lo}, {hi}]")
    return F.family(min(max(u, lo), hi))


# --------------------------------------------------------------------------
# grid metrics

@dataclass(frozen=True)
class MetricReport:
    value: float
    grid_resolution: int
    is_lower_bound: bool = True

    def __float__(self):
        return float(self.value)


def _bounds(sets: Sequence[CompactSet]) -> tuple[np.ndarray, np.ndarray] | None:
    """lo/hi arrays when every set is a single interval, else None."""
    if all(len(s.parts) == 1 for s in sets):
        lo = np.fromiter((s.parts[0].lo for s in sets), float, len(sets))
        hi = np.fromiter((s.parts[0].hi for s in sets), float, len(sets))
        return lo, hi
    return None


def _require_convex(*maps: SetValuedMap):
    for F in maps:
        if not F.is_convex_valued:
            raise ConvexityRequired(f"{F.family_tag} is not convex-valued")


def pointwise_distances(a: Sequence[CompactSet], b: Sequence[CompactSet]) -> np.ndarray:
    ba, bb = _bounds(a), _bounds(b)
    if ba is not None and bb is not None:
        return np.maximum(np.abs(ba[0] - bb[0]), np.abs(ba[1] - bb[1]))
    return np.array([hausdorff(x, y) for x, y in zip(a, b)])


def sup_distance(F: SetValuedMap, G: SetValuedMap, grid_n: int = 201) -> MetricReport:
    """Grid estimate of sup_u H_d(F(u), G(u))."""
    F._check_same_domain(G)
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    us = F.grid(grid_n)
    d = pointwise_distances(F.sample(us), G.sample(us))
    return MetricReport(float(d.max()), grid_n)


def _pair_hausdorff_matrix(sets: Sequence[CompactSet]) -> np.ndarray:
    n = len(sets)
    b = _bounds(sets)
    if b is not None:
        lo, hi = b
        return np.maximum(np.abs(lo[:, None] - lo[None, :]), np.abs(hi[:, None] - hi[None, :]))
    M = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            M[i, k] = M[k, i] = hausdorff(sets[i], sets[k])
    return M


def holder_seminorm_samples(us: np.ndarray, sets: Sequence[CompactSet], sigma: float) -> float:
    """max over sample pairs of H_d(F(u), F(w)) / |u - w|^sigma."""
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    us = np.asarray(us, dtype=float)
    H = _pair_hausdorff_matrix(sets)
    D = np.abs(us[:, None] - us[None, :])
    mask = D > 0
    return float((H[mask] / D[mask] ** sigma).max()) if mask.any() else 0.0


def variation_samples(sets: Sequence[CompactSet]) -> float:
    """Sum of H_d between consecutive samples (samples ordered by u)."""
    b = _bounds(sets)
    if b is not None:
        lo, hi = b
        return float(np.maximum(np.abs(np.diff(lo)), np.abs(np.diff(hi))).sum())
    return float(sum(hausdorff(x, y) for x, y in zip(sets[:-1], sets[1:])))


def holder_seminorm(F: SetValuedMap, sigma: float, grid_n: int = 201) -> MetricReport:
    us = F.grid(grid_n)
    return MetricReport(holder_seminorm_samples(us, F.sample(us), sigma), grid_n)


def variation(F: SetValuedMap, grid_n: int = 201) -> MetricReport:
    """Sum_k H_d(F(t_k), F(t_{k-1})) over the uniform grid partition."""
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    return MetricReport(variation_samples(F.sample(F.grid(grid_n))), grid_n)


def _convex_pair(G: SetValuedMap, H: SetValuedMap, us) -> tuple[np.ndarray, ...]:
    glo, ghi = _bounds(G.sample(us))
    hlo, hhi = _bounds(H.sample(us))
    return glo, ghi, hlo, hhi


def holder_metric(G: SetValuedMap, H: SetValuedMap, sigma: float, grid_n: int = 201) -> MetricReport:
    """sup_u H_d(G,H) + sup_{u!=w} H_d(G(u)+H(w), H(u)+G(w)) / |u-w|^sigma on a grid."""
    _require_convex(G, H)
    G._check_same_domain(H)
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    us = G.grid(grid_n)
    glo, ghi, hlo, hhi = _convex_pair(G, H, us)
    first = np.maximum(np.abs(glo - hlo), np.abs(ghi - hhi)).max()
    # G(u)+H(w) vs H(u)+G(w) for intervals reduces to endpoint differences
    dlo, dhi = glo - hlo, ghi - hhi
    cross = np.maximum(np.abs(dlo[:, None] - dlo[None, :]), np.abs(dhi[:, None] - dhi[None, :]))
    D = np.abs(us[:, None] - us[None, :])
    mask = D > 0
    second = (cross[mask] / D[mask] ** sigma).max()
    return MetricReport(float(first + second), grid_n)


def bv_metric(G: SetValuedMap, H: SetValuedMap, grid_n: int = 201) -> MetricReport:
    """sup_u H_d(G,H) + sum_i H_d(G(y_i)+H(y_{i-1}), H(y_i)+G(y_{i-1})) on a grid."""
    _require_convex(G, H)
    G._check_same_domain(H)
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    us = G.grid(grid_n)
    glo, ghi, hlo, hhi = _convex_pair(G, H, us)
    first = np.maximum(np.abs(glo - hlo), np.abs(ghi - hhi)).max()
    dlo, dhi = glo - hlo, ghi - hhi
    second = np.maximum(np.abs(np.diff(dlo)), np.abs(np.diff(dhi))).sum()
    return MetricReport(float(first + second), grid_n)


def is_below(F: SetValuedMap, G: SetValuedMap, grid_n: int = 201, slack: float = 0.0) -> bool:
    """F <= G on the grid: F(u) is contained in G(u) up to ``slack``."""
    F._check_same_domain(G)
    us = F.grid(grid_n)
    return all(subset(a, b, slack) for a, b in zip(F.sample(us), G.sample(us)))


def sample_rows(F: SetValuedMap, grid_n: int) -> list[tuple]:
    """CSV rows (u, part_index, lo, hi) for a uniform sample of F."""
    rows = []
    for u in F.grid(grid_n):
        for k, p in enumerate(evaluate(F, float(u)).parts):
            rows.append((float(u), k, p.lo, p.hi))
    return rows
