"""Nonempty compact subsets of the real line as finite unions of closed intervals.

Every :class:`CompactSet` is stored in canonical form: parts sorted by lower
endpoint, pairwise disjoint, consecutive gaps strictly larger than the merge
tolerance. All operations return new canonical sets; nothing mutates.

Set subtraction is Minkowski: ``A - B == A + (-1) * B``. In particular
``A - A`` is the symmetric interval ``[-w, w]`` for ``A = [x, x + w]``, not
``{0}``.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from typing import Iterable, NamedTuple, Sequence

from .errors import CapacityExceeded, EmptySet

DEFAULT_TAU = 1e-12
DEFAULT_MAX_PARTS = 4096


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


def _merge_sorted(parts: Sequence[tuple[float, float]], tau: float, max_parts: int) -> tuple[Interval, ...]:
    out: list[Interval] = []
    cur_lo, cur_hi = parts[0]
    for lo, hi in parts[1:]:
        if lo <= cur_hi + tau:
            if hi > cur_hi:
                cur_hi = hi
        else:
            out.append(Interval(cur_lo, cur_hi))
            cur_lo, cur_hi = lo, hi
    out.append(Interval(cur_lo, cur_hi))
    if len(out) > max_parts:
        raise CapacityExceeded(f"set needs {len(out)} intervals, budget is {max_parts}")
    return tuple(out)


def canonicalize(raw: Iterable[Sequence[float]], tau: float = DEFAULT_TAU,
                 max_parts: int = DEFAULT_MAX_PARTS) -> "CompactSet":
    """Sort and merge raw intervals; gaps of width <= tau are closed."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    parts = []
    for item in raw:
        lo, hi = float(item[0]), float(item[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"non-finite interval [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"interval with lo > hi: [{lo}, {hi}]")
        parts.append((lo, hi))
    if not parts:
        raise EmptySet("a compact set needs at least one interval")
    parts.sort()
    return CompactSet._trusted(_merge_sorted(parts, tau, max_parts))


class CompactSet:
    """Canonical finite union of disjoint closed intervals (immutable)."""

    __slots__ = ("parts",)

    def __init__(self, intervals: Iterable[Sequence[float]], tau: float = DEFAULT_TAU,
                 max_parts: int = DEFAULT_MAX_PARTS):
        object.__setattr__(self, "parts", canonicalize(intervals, tau, max_parts).parts)

    @classmethod
    def _trusted(cls, parts: tuple[Interval, ...]) -> "CompactSet":
        obj = cls.__new__(cls)
        object.__setattr__(obj, "parts", parts)
        return obj

    @classmethod
    def interval(cls, lo: float, hi: float) -> "CompactSet":
        if lo > hi:
            raise ValueError(f"interval with lo > hi: [{lo}, {hi}]")
        return cls._trusted((Interval(float(lo), float(hi)),))

    @classmethod
    def point(cls, c: float) -> "CompactSet":
        c = float(c)
        return cls._trusted((Interval(c, c),))

    def __setattr__(self, name, value):
        raise AttributeError("CompactSet is immutable")

    # -- basic properties -------------------------------------------------
    @property
    def lo(self) -> float:
        return self.parts[0].lo

    @property
    def hi(self) -> float:
        return self.parts[-1].hi

    @property
    def is_convex(self) -> bool:
        return len(self.parts) == 1

    @property
    def is_singleton(self) -> bool:
        return len(self.parts) == 1 and self.parts[0].lo == self.parts[0].hi

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    @property
    def measure(self) -> float:
        return sum(p.hi - p.lo for p in self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __contains__(self, x: float) -> bool:
        return distance_to(x, self) == 0.0

    def __eq__(self, other) -> bool:
        return isinstance(other, CompactSet) and self.parts == other.parts

    def __hash__(self) -> int:
        return hash(self.parts)

    def __repr__(self) -> str:
        return f"CompactSet({format_set(self)})"

    def __str__(self) -> str:
        return format_set(self)

    # -- operators ---------------------------------------------------------
    def __add__(self, other: "CompactSet") -> "CompactSet":
        return minkowski_add(self, other)

    def __sub__(self, other: "CompactSet") -> "CompactSet":
        return minkowski_sub(self, other)

    def __neg__(self) -> "CompactSet":
        return scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, CompactSet):
            return product(self, other)
        return scale(other, self)

    def __rmul__(self, other):
        return scale(other, self)

    def isclose(self, other: "CompactSet", tol: float = 1e-12) -> bool:
        return hausdorff(self, other) <= tol


# -- algebra -----------------------------------------------------------------

def minkowski_add(A: CompactSet, B: CompactSet, tau: float = DEFAULT_TAU,
                  max_parts: int = DEFAULT_MAX_PARTS) -> CompactSet:
    if len(A.parts) == 1 and len(B.parts) == 1:
        a, b = A.parts[0], B.parts[0]
        return CompactSet._trusted((Interval(a.lo + b.lo, a.hi + b.hi),))
    raw = [(a.lo + b.lo, a.hi + b.hi) for a in A.parts for b in B.parts]
    raw.sort()
    return CompactSet._trusted(_merge_sorted(raw, tau, max_parts))


def scale(lam: float, A: CompactSet, tau: float = DEFAULT_TAU) -> CompactSet:
    lam = float(lam)
    if lam == 0.0:
        return CompactSet.point(0.0)
    if lam > 0:
        parts = [(lam * p.lo, lam * p.hi) for p in A.parts]
    else:
        parts = [(lam * p.hi, lam * p.lo) for p in reversed(A.parts)]
    if len(parts) == 1:
        return CompactSet._trusted((Interval(*parts[0]),))
    return CompactSet._trusted(_merge_sorted(parts, tau, len(parts)))


def minkowski_sub(A: CompactSet, B: CompactSet, tau: float = DEFAULT_TAU,
                  max_parts: int = DEFAULT_MAX_PARTS) -> CompactSet:
    return minkowski_add(A, scale(-1.0, B), tau, max_parts)


def product(A: CompactSet, B: CompactSet, tau: float = DEFAULT_TAU,
            max_parts: int = DEFAULT_MAX_PARTS) -> CompactSet:
    """Pointwise product set {ab : a in A, b in B}."""
    raw = []
    for a in A.parts:
        for b in B.parts:
            c = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
            raw.append((min(c), max(c)))
    if len(raw) == 1:
        return CompactSet._trusted((Interval(*raw[0]),))
    raw.sort()
    return CompactSet._trusted(_merge_sorted(raw, tau, max_parts))


def convex_hull(A: CompactSet) -> CompactSet:
    return CompactSet.interval(A.lo, A.hi)


def norm(A: CompactSet) -> float:
    """Hausdorff distance from A to {0}."""
    return max(abs(A.lo), abs(A.hi))


# -- metric geometry -----------------------------------------------------------

def distance_to(x: float, B: CompactSet) -> float:
    parts = B.parts
    i = bisect_right(parts, (x, math.inf)) - 1
    d = math.inf
    if i >= 0:
        hi = parts[i].hi
        d = 0.0 if x <= hi else x - hi
    if i + 1 < len(parts):
        d = min(d, parts[i + 1].lo - x)
    return d


def directed_hausdorff(A: CompactSet, B: CompactSet) -> float:
    """sup over a in A of dist(a, B).

    dist(., B) is piecewise linear; on each part of A its maximum sits at an
    endpoint of that part or at the midpoint of a gap of B lying inside it.
    """
    if len(A.parts) == 1 and len(B.parts) == 1:
        a, b = A.parts[0], B.parts[0]
        return max(b.lo - a.lo, a.hi - b.hi, 0.0)
    best = 0.0
    for p in A.parts:
        best = max(best, distance_to(p.lo, B), distance_to(p.hi, B))
    bp = B.parts
    if len(bp) > 1:
        ap = A.parts
        for k in range(len(bp) - 1):
            m = 0.5 * (bp[k].hi + bp[k + 1].lo)
            i = bisect_right(ap, (m, math.inf)) - 1
            if i >= 0 and ap[i].hi >= m:
                best = max(best, 0.5 * (bp[k + 1].lo - bp[k].hi))
    return best


def hausdorff(A: CompactSet, B: CompactSet) -> float:
    if len(A.parts) == 1 and len(B.parts) == 1:
        a, b = A.parts[0], B.parts[0]
        return max(abs(a.lo - b.lo), abs(a.hi - b.hi))
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))


def subset(A: CompactSet, B: CompactSet, slack: float = 0.0) -> bool:
    """True iff every point of A lies within ``slack`` of B."""
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    return directed_hausdorff(A, B) <= slack


# -- constructors ---------------------------------------------------------------

def cantor(depth: int, max_parts: int = DEFAULT_MAX_PARTS) -> CompactSet:
    """Depth-k middle-thirds pre-Cantor set: 2**k intervals of length 3**-k."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if 2 ** depth > max_parts:
        raise CapacityExceeded(f"cantor({depth}) needs {2 ** depth} intervals, budget is {max_parts}")
    # left endpoints in units of 3**-depth are sums of 2*3**i digits
    lefts = [0]
    for level in range(depth):
        step = 2 * 3 ** (depth - 1 - level)
        lefts = [x for l in lefts for x in (l, l + step)]
    h = 3.0 ** -depth
    return CompactSet._trusted(tuple(Interval(l * h, (l + 1) * h) for l in lefts))


# -- text and CSV forms ---------------------------------------------------------

def format_set(A: CompactSet) -> str:
    return "∪".join(f"[{p.lo!r},{p.hi!r}]" for p in A.parts)


def parse_set(text: str, tau: float = DEFAULT_TAU) -> CompactSet:
    """Parse ``[lo,hi]∪[lo,hi]...``; ``{c}`` is accepted for a singleton."""
    raw = []
    for chunk in text.replace(" ", "").split("∪"):
        if not chunk:
            continue
        if chunk[0] == "{" and chunk[-1] == "}":
            c = float(chunk[1:-1])
            raw.append((c, c))
        elif chunk[0] == "[" and chunk[-1] == "]":
            lo, hi = chunk[1:-1].split(",")
            raw.append((float(lo), float(hi)))
        else:
            raise ValueError(f"cannot parse interval {chunk!r}")
    return canonicalize(raw, tau)


def set_from_obj(obj) -> CompactSet:
    """Build a set from text, a number, a ``[lo, hi]`` pair or a list of pairs."""
    if isinstance(obj, CompactSet):
        return obj
    if isinstance(obj, str):
        return parse_set(obj)
    if isinstance(obj, (int, float)):
        return CompactSet.point(obj)
    obj = list(obj)
    if len(obj) == 2 and all(isinstance(x, (int, float)) for x in obj):
        return CompactSet.interval(*obj)
    return canonicalize(obj)


def to_rows(A: CompactSet, set_id) -> list[tuple]:
    return [(set_id, k, p.lo, p.hi) for k, p in enumerate(A.parts)]


def from_rows(rows: Iterable[Sequence]) -> dict:
    """Inverse of :func:`to_rows` over many sets: {set_id: CompactSet}."""
    groups: dict = {}
    for set_id, _, lo, hi in rows:
        groups.setdefault(set_id, []).append((float(lo), float(hi)))
    return {k: canonicalize(v) for k, v in groups.items()}
