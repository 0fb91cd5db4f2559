import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from svfractal.compact_set import CompactSet, cantor, hausdorff
from svfractal.errors import ConvexityRequired, DomainError
from svfractal.sv_map import (
    Custom,
    ScalarFn,
    SetValuedMap,
    bv_metric,
    cantor_valued,
    constant,
    envelope,
    holder_metric,
    holder_seminorm,
    is_below,
    sample_rows,
    singleton,
    sup_distance,
    variation,
)

C0 = ScalarFn.const(0.0)
U = ScalarFn.poly(0, 1)


def iv(lo, hi):
    return CompactSet.interval(lo, hi)


class TestScalarFn:
    @pytest.mark.parametrize("fn,x,expected", [
        (ScalarFn.const(2.5), 0.3, 2.5),
        (ScalarFn.poly(1, 2, 3), 2.0, 17.0),
        (ScalarFn.sin(2, 3, 0.5), 0.2, 2 * math.sin(0.6 + 0.5)),
        (ScalarFn.sqrt(2, 0.1), 0.5, 2 * math.sqrt(0.4)),
        (ScalarFn.sin_recip(), 0.0, 0.0),
        (ScalarFn.sin_recip(), 0.25, math.sin(4)),
        (ScalarFn.abs(0.5, 2), 0.1, 0.8),
        (ScalarFn.piecewise([0, 1, 2], [0, 2, 0]), 1.5, 1.0),
        (ScalarFn.sum(ScalarFn.const(1), ScalarFn.poly(0, 1)), 3.0, 4.0),
    ])
    def test_scalar_and_vector_agree(self, fn, x, expected):
        assert fn(x) == pytest.approx(expected)
        xs = np.array([x, x])
        assert np.allclose(fn(xs), expected)

    @pytest.mark.parametrize("fn", [
        ScalarFn.const(1), ScalarFn.poly(1, -2), ScalarFn.sin(1, 2, 3), ScalarFn.sqrt(),
        ScalarFn.sin_recip(), ScalarFn.abs(), ScalarFn.piecewise([0, 1], [2, 3]),
        ScalarFn.sum(ScalarFn.const(1), ScalarFn.sin()),
    ])
    def test_dict_roundtrip(self, fn):
        assert ScalarFn.from_obj(fn.to_dict()) == fn

    def test_shorthand(self):
        assert ScalarFn.from_obj(3) == ScalarFn.const(3)
        assert ScalarFn.from_obj([0, 1]) == U

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            ScalarFn.from_obj({"kind": "tan"})
        with pytest.raises(ValueError):
            ScalarFn.piecewise([1, 0], [0, 0])


class TestEvaluate:
    def test_examples(self):
        assert envelope(ScalarFn.const(-1), ScalarFn.const(1))(0.3) == iv(-1, 1)
        assert singleton(ScalarFn.poly(0, 0, 1))(0.5) == CompactSet.point(0.25)
        C1 = cantor_valued(1)(0.7)
        assert len(C1) == 2 and C1.parts[0].hi == pytest.approx(1 / 3)

    def test_outside_domain(self):
        F = constant([0, 1])
        with pytest.raises(DomainError):
            F(1.5)
        with pytest.raises(DomainError):
            F(-0.1)
        assert F(1 + 1e-13) == iv(0, 1)

    def test_envelope_order_enforced(self):
        with pytest.raises(DomainError):
            envelope(ScalarFn.const(1), ScalarFn.const(0))(0.5)

    def test_convex_flags(self):
        assert constant([0, 1]).is_convex_valued
        assert not constant([[0, 1], [2, 3]]).is_convex_valued
        assert not cantor_valued(2).is_convex_valued
        assert cantor_valued(0).is_convex_valued
        F = envelope(C0, U) + singleton(U)
        assert F.is_convex_valued and F.family_tag == "Sum"
        assert not (F + cantor_valued(1)).is_convex_valued

    def test_algebra(self):
        F, G = constant([0, 1]), constant([2, 3])
        assert (F + G)(0.5) == iv(2, 4)
        assert (F * G)(0.5) == iv(0, 3)
        assert (2 * F)(0.5) == iv(0, 2)
        assert (ScalarFn.poly(0, 1) * F)(0.5) == iv(0, 0.5)
        with pytest.raises(DomainError):
            F + constant([0, 1], domain=(0, 2))

    def test_cantor_factor(self):
        F = cantor_valued(2, ScalarFn.const(3))
        assert F(0.1) == 3 * cantor(2)

    def test_dict_roundtrip(self):
        maps = [
            constant([[0, 1], [2, 3]]),
            envelope(ScalarFn.sin(1, 2), ScalarFn.poly(2, 1), domain=(0, 2)),
            singleton(ScalarFn.abs(0.5)),
            cantor_valued(3, ScalarFn.poly(1, 1)),
            constant([0, 1]) + singleton(U),
            2.0 * constant([0, 1]),
            U * constant([0, 1]),
            constant([0, 1]) * constant([1, 2]),
        ]
        for F in maps:
            G = SetValuedMap.from_dict(F.to_dict())
            assert G.domain == F.domain
            for u in np.linspace(*F.domain, 7):
                assert G(u) == F(u)

    def test_custom_not_serializable(self):
        F = SetValuedMap(Custom(lambda u: iv(0, u), True))
        assert F(0.5) == iv(0, 0.5)
        with pytest.raises(TypeError):
            F.to_dict()


class TestMetrics:
    def test_sup_distance(self):
        assert sup_distance(constant([0, 1]), constant([0, 1])).value == 0
        assert sup_distance(constant([0, 1]), constant([2, 3])).value == 2
        r = sup_distance(constant(0), constant([-1, 1]), 11)
        assert r.value == 1 and r.is_lower_bound and r.grid_resolution == 11

    def test_holder_metric(self):
        G = constant([0, 1])
        assert holder_metric(G, G, 0.5).value == 0
        assert holder_metric(G, constant([0, 2]), 0.5).value == pytest.approx(1)
        assert holder_metric(singleton(U), singleton(C0), 1.0).value == pytest.approx(2)
        with pytest.raises(ConvexityRequired):
            holder_metric(cantor_valued(1), G, 1.0)

    def test_holder_metric_against_pairwise_oracle(self):
        # brute force over grid pairs with explicit Minkowski sums
        G = envelope(ScalarFn.sin(0.5, 3), ScalarFn.poly(1, 1))
        H = envelope(ScalarFn.poly(0, -1), ScalarFn.sqrt())
        us = G.grid(21)
        sigma = 0.7
        first = max(hausdorff(G(u), H(u)) for u in us)
        second = max(hausdorff(G(u) + H(w), H(u) + G(w)) / abs(u - w) ** sigma
                     for u in us for w in us if u != w)
        assert holder_metric(G, H, sigma, 21).value == pytest.approx(first + second, abs=1e-12)

    def test_bv_metric(self):
        assert bv_metric(constant([0, 1]), constant([0, 1])).value == 0
        assert bv_metric(constant([0, 1]), constant([2, 3])).value == pytest.approx(2)
        assert bv_metric(singleton(U), singleton(C0)).value == pytest.approx(2)
        with pytest.raises(ConvexityRequired):
            bv_metric(cantor_valued(1), constant([0, 1]))

    def test_variation(self):
        assert variation(constant([[0, 1], [3, 4]])).value == 0
        for n in (11, 101, 1001):
            assert variation(envelope(C0, U), n).value == pytest.approx(1)

    def test_variation_nonconvex_oracle(self):
        F = cantor_valued(2, ScalarFn.poly(1, 1))
        us = F.grid(31)
        ref = sum(hausdorff(F(a), F(b)) for a, b in zip(us[:-1], us[1:]))
        assert variation(F, 31).value == pytest.approx(ref)

    def test_sin_recip_variation_unbounded(self):
        # the counterexample map sits below a constant map of zero variation
        F = singleton(ScalarFn.sin_recip())
        T = constant([-1, 1])
        assert is_below(F, T, 10_001)
        assert variation(T, 10_001).value == 0
        vals = [variation(F, n).value for n in (101, 1001, 10_001)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] > 100

    def test_holder_seminorm(self):
        assert holder_seminorm(constant([0, 1]), 0.5).value == 0
        assert holder_seminorm(singleton(U), 1.0).value == pytest.approx(1)
        assert holder_seminorm(envelope(C0, ScalarFn.sqrt()), 0.5, 101).value == pytest.approx(1)

    def test_is_below(self):
        assert is_below(constant(0), constant([-1, 1]))
        assert not is_below(constant([-1, 1]), constant(0))

    def test_refinement_monotone(self):
        # nested grids: 2n-1 points contain the n-point grid
        F = envelope(ScalarFn.sin(1, 7), ScalarFn.sum(ScalarFn.sin(1, 7), ScalarFn.poly(0.5, 0, 1)))
        G = singleton(ScalarFn.poly(0, 1, -2))
        for metric in (lambda n: sup_distance(F, G, n), lambda n: holder_metric(F, G, 0.5, n),
                       lambda n: bv_metric(F, G, n), lambda n: variation(F, n)):
            vals = [metric(n).value for n in (5, 9, 17, 33)]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_first_summand_dominance(self):
        F = envelope(ScalarFn.sin(1, 3), ScalarFn.poly(2, 1))
        G = envelope(C0, ScalarFn.poly(1, 0, 1))
        d = sup_distance(F, G, 51).value
        assert d <= holder_metric(F, G, 0.5, 51).value
        assert d <= bv_metric(F, G, 51).value

    def test_sample_rows(self):
        rows = sample_rows(cantor_valued(1), 3)
        assert len(rows) == 6 and rows[1][:2] == (0.0, 1)


coef = st.floats(-2, 2, allow_nan=False)


@st.composite
def convex_maps(draw):
    g = ScalarFn.poly(draw(coef), draw(coef), draw(coef))
    w = ScalarFn.poly(abs(draw(coef)), abs(draw(coef)))
    return envelope(g, ScalarFn.sum(g, w))


class TestMetricAxioms:
    @given(convex_maps(), convex_maps(), convex_maps())
    def test_symmetry_and_triangle(self, F, G, H):
        for m in (lambda a, b: sup_distance(a, b, 21).value,
                  lambda a, b: holder_metric(a, b, 0.6, 21).value,
                  lambda a, b: bv_metric(a, b, 21).value):
            assert abs(m(F, G) - m(G, F)) <= 1e-10
            assert m(F, H) <= m(F, G) + m(G, H) + 1e-10
            assert m(F, F) == 0
