import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svfractal.compact_set import (
    CompactSet,
    Interval,
    canonicalize,
    cantor,
    convex_hull,
    directed_hausdorff,
    format_set,
    from_rows,
    hausdorff,
    minkowski_sub,
    norm,
    parse_set,
    product,
    scale,
    set_from_obj,
    subset,
    to_rows,
)
from svfractal.errors import CapacityExceeded, EmptySet

from .oracles import covered_by, hausdorff_sampled, minkowski_sampled, sample_set

TAU = 1e-12

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
width = st.one_of(st.just(0.0), st.floats(0, 10, allow_nan=False))


@st.composite
def sets(draw, max_parts=4):
    k = draw(st.integers(1, max_parts))
    raw = [(lo, lo + w) for lo, w in zip(draw(st.lists(coord, min_size=k, max_size=k)),
                                        draw(st.lists(width, min_size=k, max_size=k)))]
    return canonicalize(raw)


@st.composite
def intervals(draw):
    lo = draw(coord)
    return CompactSet.interval(lo, lo + draw(width))


def iv(lo, hi):
    return CompactSet.interval(lo, hi)


def parts(A):
    return [tuple(p) for p in A.parts]


class TestCanonicalize:
    def test_overlap_merges(self):
        assert parts(canonicalize([(0, 1), (0.5, 2)])) == [(0, 2)]

    def test_sort_only(self):
        assert parts(canonicalize([(3, 4), (0, 1)])) == [(0, 1), (3, 4)]

    def test_gap_within_tau_closes(self):
        assert parts(canonicalize([(0, 1), (1 + TAU / 2, 2)], TAU)) == [(0, 2)]

    def test_gap_above_tau_stays(self):
        assert len(canonicalize([(0, 1), (1 + 10 * TAU, 2)], TAU)) == 2

    def test_empty_raises(self):
        with pytest.raises(EmptySet):
            canonicalize([])

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            canonicalize([(1, 0)])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            canonicalize([(0, math.inf)])

    def test_capacity(self):
        raw = [(3 * k, 3 * k + 1) for k in range(10)]
        with pytest.raises(CapacityExceeded):
            canonicalize(raw, max_parts=5)

    @given(st.lists(st.tuples(coord, width), min_size=1, max_size=8))
    def test_invariants(self, raw):
        A = canonicalize([(lo, lo + w) for lo, w in raw])
        ps = A.parts
        assert all(p.lo <= p.hi for p in ps)
        assert all(b.lo - a.hi > TAU for a, b in zip(ps, ps[1:]))
        assert A.is_convex == (len(ps) == 1)
        # union preserved: every input endpoint is in A
        for lo, w in raw:
            assert lo in A and lo + w in A


class TestArithmetic:
    def test_add_intervals(self):
        assert iv(0, 1) + iv(2, 3) == iv(2, 4)

    def test_add_nonconvex_against_samples(self):
        A = canonicalize([(0, 1), (10, 11)])
        C = A + iv(0, 1)
        assert parts(C) == [(0, 2), (10, 12)]
        pts = minkowski_sampled(parts(A), [(0, 1)])
        assert covered_by(pts, parts(C))
        # and C has no spurious mass: its endpoints are near sampled sums
        for p in C.parts:
            assert np.abs(pts - p.lo).min() < 1e-2 and np.abs(pts - p.hi).min() < 1e-2

    def test_add_identity(self):
        A = canonicalize([(0, 1), (3, 5)])
        assert A + CompactSet.point(0) == A

    def test_scale_negative(self):
        assert scale(-0.5, iv(2, 4)) == iv(-2, -1)

    def test_scale_zero(self):
        assert scale(0, canonicalize([(-1, 1), (5, 6)])) == CompactSet.point(0)

    def test_scale_against_samples(self):
        A = canonicalize([(0, 1), (3, 4)])
        B = scale(2, A)
        assert parts(B) == [(0, 2), (6, 8)]
        pts, _ = sample_set(parts(A), 1000)
        assert covered_by(2 * pts, parts(B))

    def test_sub_is_minkowski(self):
        assert iv(0, 1) - iv(0, 1) == iv(-1, 1)
        assert CompactSet.point(3) - CompactSet.point(1) == CompactSet.point(2)
        assert iv(2, 5) - CompactSet.point(2) == iv(0, 3)
        assert minkowski_sub(iv(2, 5), CompactSet.point(2)) == iv(0, 3)

    def test_product(self):
        assert product(iv(1, 2), iv(3, 4)) == iv(3, 8)
        assert product(CompactSet.point(0), canonicalize([(1, 2), (5, 9)])) == CompactSet.point(0)

    def test_product_against_samples(self):
        P = product(iv(-1, 1), iv(2, 3))
        assert P == iv(-3, 3)
        a, _ = sample_set([(-1, 1)], 300)
        b, _ = sample_set([(2, 3)], 300)
        prods = (a[:, None] * b[None, :]).ravel()
        assert prods.min() == pytest.approx(-3) and prods.max() == pytest.approx(3)

    def test_operators(self):
        A = iv(1, 2)
        assert A * 2 == iv(2, 4) and 2 * A == iv(2, 4)
        assert A * iv(1, 2) == iv(1, 4)
        assert -A == iv(-2, -1)

    @given(sets(), sets(), sets())
    def test_add_commutative_associative(self, A, B, C):
        assert hausdorff(A + B, B + A) <= 1e-9
        assert hausdorff((A + B) + C, A + (B + C)) <= 1e-9

    @given(sets(), sets())
    def test_add_against_sample_oracle(self, A, B):
        pts = minkowski_sampled(parts(A), parts(B), n=60)
        assert covered_by(pts, parts(A + B), slack=1e-9)

    def test_convex_hull_and_norm(self):
        assert convex_hull(canonicalize([(0, 1), (4, 5)])) == iv(0, 5)
        assert convex_hull(iv(2, 3)) == iv(2, 3)
        assert convex_hull(cantor(3)) == iv(0, 1)
        assert norm(iv(-1, 1)) == 1
        assert norm(CompactSet.point(0)) == 0
        A = canonicalize([(2, 3), (-7, -6)])
        assert norm(A) == 7
        assert norm(A) == hausdorff(A, CompactSet.point(0))


class TestHausdorff:
    def test_examples(self):
        assert hausdorff(iv(0, 1), iv(0, 1)) == 0
        assert hausdorff(CompactSet.point(0), iv(-1, 1)) == 1
        A = canonicalize([(0, 1), (4, 5)])
        assert hausdorff(A, iv(0, 2)) == 3
        d, h = hausdorff_sampled(parts(A), [(0, 2)])
        assert abs(d - 3) <= 2 * h

    def test_gap_midpoint_candidate(self):
        # the farthest point of [0,10] from {0} u {10} is the gap midpoint 5
        B = canonicalize([(0, 0), (10, 10)])
        assert directed_hausdorff(iv(0, 10), B) == 5
        assert directed_hausdorff(B, iv(0, 10)) == 0

    @settings(max_examples=200)
    @given(sets(), sets())
    def test_matches_dense_sampling(self, A, B):
        d, h = hausdorff_sampled(parts(A), parts(B))
        assert abs(hausdorff(A, B) - d) <= 2 * h + 1e-9

    @given(sets(), sets(), sets())
    def test_metric_axioms(self, A, B, C):
        assert hausdorff(A, B) == hausdorff(B, A)
        assert hausdorff(A, A) == 0
        assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12

    @given(sets(), sets())
    def test_zero_distance_means_equal(self, A, B):
        if hausdorff(A, B) == 0:
            assert A == B

    @given(sets(), sets(), sets(), sets())
    def test_note2_sum(self, A, B, C, D):
        assert hausdorff(A + C, B + D) <= hausdorff(A, B) + hausdorff(C, D) + 1e-10

    @given(sets(), sets(), st.floats(-5, 5, allow_nan=False))
    def test_note2_scale(self, A, B, lam):
        assert abs(hausdorff(scale(lam, A), scale(lam, B)) - abs(lam) * hausdorff(A, B)) <= 1e-12

    @given(intervals(), intervals(), intervals())
    def test_translation_cancellation_convex(self, A, B, D):
        assert abs(hausdorff(A + D, B + D) - hausdorff(A, B)) <= 1e-10

    @given(sets(3), sets(3), sets(3))
    def test_lemma_product(self, A, B, C):
        lhs = hausdorff(product(A, B), product(C, B))
        assert lhs <= norm(B) * hausdorff(A, C) + 1e-9


class TestSubsetAndCantor:
    def test_subset_examples(self):
        assert subset(iv(0, 1), iv(-1, 2))
        assert not subset(iv(0, 1), iv(0.5, 2))
        assert subset(cantor(2), cantor(1))
        assert subset(iv(0, 1), iv(0, 0.99), slack=0.01 + 1e-15)

    def test_negative_slack(self):
        with pytest.raises(ValueError):
            subset(iv(0, 1), iv(0, 1), -1)

    def test_cantor_small(self):
        assert cantor(0) == iv(0, 1)
        assert parts(cantor(1)) == pytest.approx([(0, 1 / 3), (2 / 3, 1)])

    def test_cantor_recursion_oracle(self):
        # direct recursion on intervals as the oracle
        ref = [(0.0, 1.0)]
        for _ in range(5):
            ref = [q for lo, hi in ref for q in ((lo, lo + (hi - lo) / 3), (hi - (hi - lo) / 3, hi))]
        C = cantor(5)
        assert len(C) == 32
        assert np.allclose(np.array(parts(C)), np.array(ref), atol=1e-15)
        assert all(abs(p.length - 3 ** -5) < 1e-15 for p in C.parts)

    def test_cantor_capacity(self):
        with pytest.raises(CapacityExceeded):
            cantor(13)
        assert len(cantor(12)) == 4096


class TestTextForms:
    @given(sets())
    def test_roundtrip(self, A):
        assert parse_set(format_set(A)) == A

    def test_singleton_braces(self):
        assert parse_set("{3}∪[0,1]") == canonicalize([(0, 1), (3, 3)])

    def test_bad_text(self):
        with pytest.raises(ValueError):
            parse_set("(0,1)")

    def test_set_from_obj(self):
        assert set_from_obj(2) == CompactSet.point(2)
        assert set_from_obj([0, 1]) == iv(0, 1)
        assert set_from_obj([[0, 1], [3, 4]]) == canonicalize([(0, 1), (3, 4)])
        assert set_from_obj("[0,1]") == iv(0, 1)

    def test_rows_roundtrip(self):
        A = canonicalize([(0, 1), (3, 4)])
        rows = to_rows(A, "a") + to_rows(iv(5, 6), "b")
        assert rows[0] == ("a", 0, 0.0, 1.0)
        back = from_rows(rows)
        assert back == {"a": A, "b": iv(5, 6)}

    def test_immutable(self):
        A = iv(0, 1)
        with pytest.raises(AttributeError):
            A.parts = ()
        assert isinstance(A.parts[0], Interval)
