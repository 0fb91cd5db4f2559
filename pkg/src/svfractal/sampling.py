"""Random inputs for property suites: sets, catalogue maps and fractal systems.

Everything takes a ``numpy.random.Generator`` so runs are reproducible from a
seed. Maps live on [0, 1], where the catalogue base functions are always
compatible.
"""
from __future__ import annotations

import numpy as np

from .compact_set import CompactSet, canonicalize
from .rb_fractal import BaseFunctionSpec, FractalSystem, Partition, build_base
from .sv_map import ScalarFn, SetValuedMap, Translate, cantor_valued, envelope, singleton


def random_set(rng: np.random.Generator, max_parts: int = 4, span: float = 10.0) -> CompactSet:
    """Union of 1..max_parts random intervals in [-span, span]; sometimes a singleton."""
    k = int(rng.integers(1, max_parts + 1))
    lo = rng.uniform(-span, span, k)
    width = rng.exponential(span / 8, k) * (rng.random(k) > 0.15)
    return canonicalize(np.column_stack([lo, lo + width]))


def random_convex_set(rng: np.random.Generator, span: float = 10.0) -> CompactSet:
    lo = float(rng.uniform(-span, span))
    return CompactSet.interval(lo, lo + float(rng.exponential(span / 8)))


def _random_poly(rng, degree: int = 3, size: float = 1.0) -> ScalarFn:
    return ScalarFn.poly(*rng.uniform(-size, size, degree + 1))


def random_convex_map(rng: np.random.Generator, size: float = 1.0) -> SetValuedMap:
    """Envelope [g, g + w] with a random polynomial or sine g and a nonnegative width w."""
    if rng.random() < 0.5:
        g = _random_poly(rng, int(rng.integers(0, 4)), size)
    else:
        g = ScalarFn.sin(float(rng.uniform(-size, size)), float(rng.uniform(0.5, 8)), float(rng.uniform(0, 6)))
    w = ScalarFn.poly(*rng.uniform(0, size, 3))
    if rng.random() < 0.2:
        return singleton(g)
    return envelope(g, ScalarFn.sum(g, w))


def random_map(rng: np.random.Generator, size: float = 1.0) -> SetValuedMap:
    """Convex map most of the time, otherwise a scaled pre-Cantor map."""
    if rng.random() < 0.75:
        return random_convex_map(rng, size)
    return cantor_valued(int(rng.integers(1, 3)), ScalarFn.poly(float(rng.uniform(0.5, 2)), float(rng.uniform(-0.4, 0.4))))


def random_partition(rng: np.random.Generator, n_min: int = 3, n_max: int = 5) -> Partition:
    n = int(rng.integers(n_min, n_max + 1))
    inner = np.sort(rng.uniform(0.1, 0.9, n - 2))
    while np.any(np.diff(inner) < 0.05):
        inner = np.sort(rng.uniform(0.1, 0.9, n - 2))
    # round to short binary fractions so exact grid keys stay small
    pts = [0.0] + [round(x * 64) / 64 for x in inner] + [1.0]
    pts = sorted(set(pts))
    return Partition(tuple(pts)) if len(pts) >= 3 else Partition.uniform(3)


def random_base(rng: np.random.Generator) -> BaseFunctionSpec:
    c = float(rng.uniform(-1, 1))
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return BaseFunctionSpec("I", ScalarFn.poly(0.0, 1.0))
    if choice == 1:
        return BaseFunctionSpec("I", ScalarFn.poly(0.0, 1.0 - abs(c) / 2, abs(c) / 2))
    return BaseFunctionSpec("II", ScalarFn.poly(1.0, c, -c))


def random_system(rng: np.random.Generator, alpha_max: float = 0.8, convex: bool = False,
                  alpha: float | None = None) -> FractalSystem:
    F = random_convex_map(rng) if convex else random_map(rng)
    S = build_base(F, random_base(rng))
    a = float(rng.uniform(-alpha_max, alpha_max)) if alpha is None else alpha
    return FractalSystem(F, S, random_partition(rng), a)


def random_shared_base_pair(rng: np.random.Generator, alpha_max: float = 0.8):
    """(F, G, S, partition, alpha) with one base S compatible with both maps.

    G = F + {g(u)} with g(0) = g(1), so S - G differs from S - F by the same
    singleton at both ends.
    """
    F = random_convex_map(rng)
    S = build_base(F, random_base(rng))
    c, d = rng.uniform(-1, 1, 2)
    g = ScalarFn.sum(ScalarFn.const(float(c)), ScalarFn.sin(float(d), float(np.pi * rng.integers(1, 4)), 0.0))
    G = SetValuedMap(Translate(F.family, g), F.domain)
    return F, G, S, random_partition(rng), float(rng.uniform(-alpha_max, alpha_max))
