"""Independent reference computations used by the tests.

Nothing here calls the package's algorithms; inputs are plain tuples and
callables so the oracles stay independent of the code under test.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.sparse import lil_matrix
from scipy.sparse.linalg import spsolve


def sample_set(parts, n_total=10_000):
    """About n_total points spread over the intervals (endpoints included), and the spacing."""
    parts = [tuple(map(float, p)) for p in parts]
    total = sum(hi - lo for lo, hi in parts)
    pts, spacing = [], 0.0
    for lo, hi in parts:
        k = 2 if total == 0 else max(2, int(round(n_total * (hi - lo) / total)))
        pts.append(np.linspace(lo, hi, k))
        spacing = max(spacing, (hi - lo) / (k - 1))
    return np.unique(np.concatenate(pts)), spacing


def directed_sampled(a: np.ndarray, b: np.ndarray) -> float:
    b = np.sort(b)
    i = np.clip(np.searchsorted(b, a), 1, len(b) - 1) if len(b) > 1 else np.zeros(len(a), int)
    if len(b) == 1:
        return float(np.abs(a - b[0]).max())
    d = np.minimum(np.abs(a - b[i - 1]), np.abs(a - b[i]))
    return float(d.max())


def hausdorff_sampled(A_parts, B_parts, n_total=10_000):
    """Brute force over dense samples; error is at most the larger sample spacing."""
    a, ha = sample_set(A_parts, n_total)
    b, hb = sample_set(B_parts, n_total)
    return max(directed_sampled(a, b), directed_sampled(b, a)), max(ha, hb)


def minkowski_sampled(A_parts, B_parts, n=400):
    a, _ = sample_set(A_parts, n)
    b, _ = sample_set(B_parts, n)
    return np.unique((a[:, None] + b[None, :]).ravel())


def covered_by(points: np.ndarray, parts, slack=1e-12) -> bool:
    ok = np.zeros(len(points), bool)
    for lo, hi in parts:
        ok |= (points >= lo - slack) & (points <= hi + slack)
    return bool(ok.all())


# --------------------------------------------------------------------------
# fractal functions with interval values, by one sparse linear solve

def dyadic_grid(points, depth):
    """C_depth for the increasing affine maps of ``points`` (exact rationals)."""
    x = [Fraction(p) for p in points]
    u1, uN = x[0], x[-1]
    maps = [((x[n + 1] - x[n]) / (uN - u1), (x[n] * uN - u1 * x[n + 1]) / (uN - u1)) for n in range(len(x) - 1)]
    level = set(x)
    grid = set(x)
    for _ in range(depth):
        level = {a * u + b for u in level for a, b in maps} - grid
        grid |= level
    return sorted(grid), maps, x


def convex_fractal_linear(points, depth, alpha, f_lo, f_hi, s_lo, s_hi):
    """Endpoint functions (lo, hi) of F^alpha on C_depth for interval-valued F and S.

    With A = [lo, hi], alpha A + F - alpha S is again an interval whose
    endpoints are linear in (lo, hi). Every grid point y other than u_1, u_N
    has a grid preimage x = L_n^{-1}(y) for the lowest n with y in
    [u_n, u_{n+1}]; u_1 and u_N are their own preimages under L_1 and L_{N-1}.
    That gives a square linear system for the 2M endpoint values.
    """
    grid, maps, knots = dyadic_grid(points, depth)
    idx = {g: i for i, g in enumerate(grid)}
    M = len(grid)
    A = lil_matrix((2 * M, 2 * M))
    rhs = np.zeros(2 * M)
    for i, y in enumerate(grid):
        n = next(k for k in range(len(knots) - 1) if knots[k] <= y <= knots[k + 1])
        a, b = maps[n]
        x = (y - b) / a
        j = idx[x]
        yf, xf = float(y), float(x)
        # lo row: lo_y - min(alpha lo_x, alpha hi_x) = f_lo(y) + min(-alpha s_lo, -alpha s_hi)
        A[2 * i, 2 * i] += 1
        A[2 * i + 1, 2 * i + 1] += 1
        if alpha >= 0:
            A[2 * i, 2 * j] -= alpha
            A[2 * i + 1, 2 * j + 1] -= alpha
            rhs[2 * i] = f_lo(yf) - alpha * s_hi(xf)
            rhs[2 * i + 1] = f_hi(yf) - alpha * s_lo(xf)
        else:
            A[2 * i, 2 * j + 1] -= alpha
            A[2 * i + 1, 2 * j] -= alpha
            rhs[2 * i] = f_lo(yf) - alpha * s_lo(xf)
            rhs[2 * i + 1] = f_hi(yf) - alpha * s_hi(xf)
    sol = spsolve(A.tocsr(), rhs)
    return np.array([float(g) for g in grid]), sol[0::2], sol[1::2]


def bernstein_scalar(f, n, t):
    """Scalar Bernstein polynomial by de Casteljau (no binomial coefficients)."""
    c = np.array([f(k / n) for k in range(n + 1)], dtype=float)
    for r in range(n):
        c = (1 - t) * c[:-1] + t * c[1:]
    return float(c[0])


def moran_closed_form(m: int, r: float) -> float:
    return np.log(m) / -np.log(r)
