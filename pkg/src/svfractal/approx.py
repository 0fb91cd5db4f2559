"""Bernstein approximation of convex set-valued maps and fractal polynomials.

For convex values the set-valued Bernstein operator

    B_n(F)(u) = sum_k C(n,k) t^k (1-t)^(n-k) F(k/n)     (Minkowski, t in [0,1])

acts endpoint-wise: with F(u) = [f_lo(u), f_hi(u)] it equals
[B_n f_lo(u), B_n f_hi(u)]. A general domain [a, b] is mapped to [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .compact_set import CompactSet, Interval
from .errors import ConvexityRequired, DegreeCapExceeded
from .rb_fractal import (
    BaseFunctionSpec,
    FractalSystem,
    GridFunction,
    Partition,
    build_base,
    evaluate_fractal,
    perturbation_gap,
)
from .sv_map import MapFamily, SetValuedMap, _bounds, pointwise_distances


DEFAULT_BASE = BaseFunctionSpec("II")


def bernstein_weights(n: int, t) -> np.ndarray:
    """Matrix of C(n,k) t^k (1-t)^(n-k), shape (len(t), n+1)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    # scipy's pmf overflows for subnormal t; the weights there are those of t = 0
    t = np.where(np.abs(t) < 1e-300, 0.0, t)
    return binom.pmf(np.arange(n + 1)[None, :], n, t[:, None])


@dataclass(frozen=True)
class SetPolynomial(MapFamily):
    """Set-valued Bernstein polynomial with interval coefficients F(k/n)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    domain: Interval = Interval(0.0, 1.0)
    convex = True

    @property
    def degree(self) -> int:
        return len(self.lo) - 1

    @property
    def coefficients(self) -> list[CompactSet]:
        return [CompactSet.interval(a, b) for a, b in zip(self.lo, self.hi)]

    def _t(self, u):
        a, b = self.domain
        return (np.asarray(u, dtype=float) - a) / (b - a)

    def evaluate_many(self, us) -> tuple[np.ndarray, np.ndarray]:
        W = bernstein_weights(self.degree, np.clip(self._t(us), 0.0, 1.0))
        return W @ np.asarray(self.lo), W @ np.asarray(self.hi)

    def __call__(self, u):
        lo, hi = self.evaluate_many([u])
        a, b = float(lo[0]), float(hi[0])
        return CompactSet._trusted((Interval(a, max(a, b)),))

    def norm_bound(self) -> float:
        """max_k ||F(k/n)||, an upper bound for sup_u ||B_n F(u)|| (weights are a partition of unity)."""
        return float(max(np.max(np.abs(self.lo)), np.max(np.abs(self.hi))))

    def to_dict(self):
        return {"family": "polynomial", "lo": list(self.lo), "hi": list(self.hi),
                "poly_domain": list(self.domain)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(map(float, d["lo"])), tuple(map(float, d["hi"])),
                   Interval(*d.get("poly_domain", (0.0, 1.0))))


def bernstein(F: SetValuedMap, n: int) -> SetPolynomial:
    if not F.is_convex_valued:
        raise ConvexityRequired(f"{F.family_tag} is not convex-valued")
    if n < 1:
        raise ValueError("degree must be >= 1")
    a, b = F.domain
    coeffs = [F(a + (b - a) * k / n) for k in range(n + 1)]
    return SetPolynomial(tuple(c.lo for c in coeffs), tuple(c.hi for c in coeffs), F.domain)


def as_map(P: SetPolynomial) -> SetValuedMap:
    return SetValuedMap(P, P.domain)


def bernstein_error(F: SetValuedMap, P: SetPolynomial, grid_n: int = 257) -> float:
    """Grid estimate of sup_u H_d(F(u), P(u))."""
    us = F.grid(grid_n)
    lo, hi = P.evaluate_many(us)
    f = _bounds(F.sample(us))
    return float(np.maximum(np.abs(f[0] - lo), np.abs(f[1] - hi)).max())


def fractal_polynomial(P: SetPolynomial, partition: Partition, base: BaseFunctionSpec | None,
                       alpha: float, depth: int = 6, tol: float = 1e-9) -> GridFunction:
    """P^alpha on C_depth for the system (P, S_P, partition, alpha).

    The default base is type II with t = 1, i.e. P plus the endpoint tails.
    S_P = P itself is compatible only when P(u_1) and P(u_N) have equal width.
    """
    Pm = as_map(P)
    S = build_base(Pm, base or DEFAULT_BASE)
    return evaluate_fractal(FractalSystem(Pm, S, partition, alpha), depth, tol)


@dataclass
class ApproxReport:
    epsilon: float
    degree: int
    alpha: float
    achieved: float
    partition_points: tuple[float, ...]
    bernstein_error: float
    fractal_gap: float
    perturbation_bound: float
    alpha_budget: float
    fractal: GridFunction | None = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.achieved < self.epsilon

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "n": self.degree,
            "alpha": self.alpha,
            "achieved": self.achieved,
            "partition_points": list(self.partition_points),
            "bernstein_error": self.bernstein_error,
            "fractal_gap": self.fractal_gap,
            "perturbation_bound": self.perturbation_bound,
            "alpha_budget": self.alpha_budget,
            "success": self.success,
        }


def _smallest_degree(F: SetValuedMap, target: float, grid_n: int, n_max: int) -> tuple[int, float]:
    cache = {}

    def err(n):
        if n not in cache:
            cache[n] = bernstein_error(F, bernstein(F, n), grid_n)
        return cache[n]

    n = 1
    while err(n) >= target:
        if n >= n_max:
            raise DegreeCapExceeded(f"Bernstein error {err(n):.3g} still >= {target:.3g} at degree {n}")
        n = min(2 * n, n_max)
    lo, hi = n // 2 + 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if err(mid) < target:
            hi = mid
        else:
            lo = mid + 1
    return hi, err(hi)


def approximate_within(F: SetValuedMap, epsilon: float, base: BaseFunctionSpec | None = None,
                       depth: int = 6, partition: Partition | None = None, grid_n: int = 257,
                       n_max: int = 4096, alpha_fraction: float = 0.9, tol: float = 1e-9) -> ApproxReport:
    """Find a fractal polynomial P^alpha with grid distance < epsilon from F.

    The Bernstein degree is the smallest n with grid error < epsilon/3; alpha
    is ``alpha_fraction`` times
    min{(e/3) / (e/3 + ||P - S_P||), (e/3) / (e/3 + 2 ||P||)}, e = epsilon.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if not F.is_convex_valued:
        raise ConvexityRequired(f"{F.family_tag} is not convex-valued")
    third = epsilon / 3
    n, b_err = _smallest_degree(F, third, grid_n, n_max)
    P = bernstein(F, n)
    Pm = as_map(P)
    partition = partition or Partition.uniform(3, *F.domain)
    S = build_base(Pm, base or DEFAULT_BASE)
    p_minus_s = float(pointwise_distances(Pm.sample(F.grid(grid_n)), S.sample(F.grid(grid_n))).max())
    budget = min(third / (third + p_minus_s), third / (third + 2 * P.norm_bound()))
    alpha = alpha_fraction * budget
    system = FractalSystem(Pm, S, partition, alpha)
    Pa = evaluate_fractal(system, depth, tol)
    achieved = Pa.sup_distance_to_map(F)
    gap, bound = perturbation_gap(system, Pa)
    return ApproxReport(epsilon, n, alpha, achieved, partition.points, b_err, gap, bound, budget, Pa)
