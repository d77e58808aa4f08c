"""Tests for min-convex functions: values, envelopes, prox, classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unionfix import minconvex as mc
from unionfix.core_ops import check_averaged
from unionfix.minconvex import MinConvexFn


def two_singletons():
    return MinConvexFn(
        [mc.indicator_singleton([0.0]), mc.indicator_singleton([2.0])],
        label="two-singletons",
    )


def two_quadratics():
    # min(x^2, (x-2)^2) = min(x^2, x^2 - 4x + 4)
    return MinConvexFn(
        [mc.quadratic([[2.0]], [0.0]), mc.quadratic([[2.0]], [-4.0], c=4.0)],
        label="two-quadratics",
    )


class TestValue:
    def test_singleton_member(self):
        assert mc.value(two_singletons(), [0.0]) == 0.0

    def test_quadratic_tie(self):
        assert mc.value(two_quadratics(), [1.0]) == pytest.approx(1.0)

    def test_outside_all_domains(self):
        assert mc.value(two_singletons(), [1.0]) == math.inf


class TestEnvelope:
    def test_quadratic_at_min(self):
        assert mc.envelope(two_quadratics(), 1.0, [0.0]) == pytest.approx(0.0)

    def test_singleton_is_half_squared_distance(self):
        f = MinConvexFn([mc.indicator_singleton([3.0])])
        x = 1.0
        assert mc.envelope(f, 2.0, [x]) == pytest.approx((3.0 - x) ** 2 / 4.0)

    def test_tie_point(self):
        assert mc.envelope(two_singletons(), 1.0, [1.0]) == pytest.approx(0.5)

    def test_minorizes_value(self):
        f = two_quadratics()
        rng = np.random.default_rng(3)
        for x in rng.uniform(-4, 4, size=50):
            assert mc.envelope(f, 1.0, [x]) <= mc.value(f, [x]) + 1e-12

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(ValueError):
            mc.envelope(two_singletons(), 0.0, [1.0])


class TestActiveSelector:
    def test_symmetric_tie(self):
        assert mc.active_selector(two_singletons(), 1.0, [1.0]) == [0, 1]

    def test_envelope_comparison(self):
        assert mc.active_selector(two_singletons(), 1.0, [0.9]) == [0]

    def test_single_piece(self):
        f = MinConvexFn([mc.scaled_l1(1.0)])
        assert mc.active_selector(f, 1.0, [5.0]) == [0]


class TestProxUnion:
    def test_tie_evaluates_to_both_points(self):
        T = mc.prox_union(two_singletons(), 1.0)
        np.testing.assert_allclose(T.evaluate_points([1.0]), [[0.0], [2.0]])

    def test_off_tie_single_point(self):
        T = mc.prox_union(two_singletons(), 1.0)
        np.testing.assert_allclose(T.evaluate_points([0.9]), [[0.0]])

    def test_two_quadratics_tie(self):
        T = mc.prox_union(two_quadratics(), 1.0)
        np.testing.assert_allclose(
            T.evaluate_points([1.0]), [[1.0 / 3.0], [5.0 / 3.0]]
        )

    def test_firmly_nonexpansive(self):
        T = mc.prox_union(two_quadratics(), 1.0)
        rng = np.random.default_rng(0)
        pairs = list(zip(rng.normal(size=(300, 1)), rng.normal(size=(300, 1))))
        assert check_averaged(T, 0.5, pairs).passed(1e-9)


class TestClassifyPoint:
    def test_strong_fixed(self):
        c = mc.classify_point(two_singletons(), 1.0, [0.0])
        assert c.kind == "strong-fixed"
        assert c.envelope_gap == pytest.approx(0.0, abs=1e-12)

    def test_tie_point_not_fixed(self):
        assert mc.classify_point(two_singletons(), 1.0, [1.0]).kind == "not-fixed"

    def test_quadratic_tie_not_fixed(self):
        c = mc.classify_point(two_quadratics(), 1.0, [1.0])
        assert c.kind == "not-fixed"
        assert c.active == [0, 1]

    def test_envelope_gap_zero_iff_fixed(self):
        f = two_quadratics()
        fixed = mc.classify_point(f, 1.0, [0.0])
        moving = mc.classify_point(f, 1.0, [0.7])
        assert fixed.is_fixed and abs(fixed.envelope_gap) <= 1e-12
        assert not moving.is_fixed and moving.envelope_gap < -1e-3


class TestIsLocalMin:
    def test_isolated_feasible_point(self):
        assert mc.is_local_min(two_singletons(), [2.0])

    def test_quadratic_min(self):
        assert mc.is_local_min(two_quadratics(), [0.0])

    def test_quadratic_tie_is_not(self):
        assert not mc.is_local_min(two_quadratics(), [1.0])

    def test_infinite_value_rejected(self):
        with pytest.raises(ValueError):
            mc.is_local_min(two_singletons(), [1.0])


class TestOscProbe:
    def test_continuous_pieces(self):
        rep = mc.osc_probe(two_quadratics(), [1.0], radius=0.05, samples=500)
        assert rep.passed and rep.samples_checked == 500

    def test_indicator_pieces_skip_infinite(self):
        rep = mc.osc_probe(two_singletons(), [0.0], radius=0.5, samples=200)
        assert rep.passed
        assert rep.samples_checked == 0  # no nearby point has finite value


class TestCatalog:
    def test_quadratic_prox_optimality(self):
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        b = np.array([1.0, -2.0])
        piece = mc.quadratic(Q, b)
        x = np.array([0.3, -0.7])
        gamma = 0.8
        p = piece.prox(gamma, x)
        # first-order optimality: p + gamma (Qp + b) = x
        np.testing.assert_allclose(p + gamma * (Q @ p + b), x, atol=1e-12)

    def test_quadratic_constant_shifts_value_not_prox(self):
        plain = mc.quadratic([[2.0]], [0.0])
        shifted = mc.quadratic([[2.0]], [0.0], c=5.0)
        x = np.array([1.3])
        assert shifted.value(x) == pytest.approx(plain.value(x) + 5.0)
        np.testing.assert_allclose(shifted.prox(1.0, x), plain.prox(1.0, x))

    def test_l1_soft_threshold(self):
        piece = mc.scaled_l1(0.5)
        np.testing.assert_allclose(
            piece.prox(1.0, np.array([2.0, -0.3, 0.6])), [1.5, 0.0, 0.1]
        )

    def test_l2_block_threshold(self):
        piece = mc.scaled_l2(1.0)
        np.testing.assert_allclose(piece.prox(1.0, np.array([0.6, 0.8])), [0, 0])
        np.testing.assert_allclose(
            piece.prox(1.0, np.array([3.0, 4.0])), [2.4, 3.2]
        )

    def test_indicator_box(self):
        piece = mc.indicator_box([-1.0, -1.0], [1.0, 1.0])
        assert piece.value(np.array([0.5, -0.5])) == 0.0
        assert piece.value(np.array([2.0, 0.0])) == math.inf
        np.testing.assert_allclose(
            piece.prox(1.0, np.array([2.0, 0.0])), [1.0, 0.0]
        )

    def test_indicator_affine(self):
        piece = mc.indicator_affine([[1.0, 1.0]], [2.0])
        p = piece.prox(1.0, np.array([0.0, 0.0]))
        np.testing.assert_allclose(p, [1.0, 1.0])


@given(
    st.floats(min_value=-10, max_value=10),
    st.floats(min_value=0.1, max_value=5.0),
)
@settings(max_examples=300, deadline=None)
def test_envelope_is_min_of_piece_envelopes(x, gamma):
    f = two_quadratics()
    envs = [mc.piece_envelope(p, gamma, [x]) for p in f.pieces]
    assert mc.envelope(f, gamma, [x]) == pytest.approx(min(envs), abs=1e-12)


@given(st.floats(min_value=-10, max_value=10))
@settings(max_examples=300, deadline=None)
def test_prox_satisfies_envelope_inequality(x):
    # value(prox) + dist^2/(2 gamma) <= value(y) + |x-y|^2/(2 gamma) for probes y
    piece = mc.scaled_l1(1.0)
    gamma = 1.0
    xv = np.array([x])
    p = piece.prox(gamma, xv)
    lhs = piece.value(p) + float(np.dot(xv - p, xv - p)) / (2 * gamma)
    for y in np.linspace(x - 3, x + 3, 25):
        yv = np.array([y])
        rhs = piece.value(yv) + float(np.dot(xv - yv, xv - yv)) / (2 * gamma)
        assert lhs <= rhs + 1e-10
