import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import B1, B1B2, B2, EX2_B, G2, f
from delaysync.errors import InvalidInputError, PreconditionError
from delaysync.matrix import (charpoly, delta_matrix, from_json, hajnal_diameter, is_analog, left_product,
                              pattern, pattern_product, scramblingness, to_json, validate_stochastic)


def brute_diameter(a):
    return max(sum(abs(x - y) for x, y in zip(r, s)) for r in a for s in a)


def brute_eta(a):
    return min(sum(min(x, y) for x, y in zip(r, s)) for r in a for s in a)


@st.composite
def stochastic(draw, n=None):
    n = n or draw(st.integers(2, 8))
    raw = draw(arrays(np.float64, (n, n), elements=st.floats(0, 1)))
    raw[np.arange(n), np.arange(n)] += 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


class TestValidateStochastic:
    def test_examples(self):
        assert validate_stochastic(np.eye(2), 1e-12)
        assert validate_stochastic(f(G2), 1e-12)
        assert not validate_stochastic([[0.6, 0.6], [0, 1]], 1e-12)

    def test_rectangular_and_negative(self):
        assert validate_stochastic([[0.25, 0.25, 0.5]])
        assert not validate_stochastic([[1.5, -0.5], [0, 1]])

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            validate_stochastic([[np.nan, 1], [0, 1]])


class TestDiameter:
    def test_examples(self):
        assert hajnal_diameter([[0.3, 0.7]] * 3) == 0
        assert hajnal_diameter(np.eye(2)) == 2
        assert hajnal_diameter(f(G2)) == pytest.approx(1.0)
        assert hajnal_diameter([[0.1, 0.9]]) == 0

    @given(stochastic())
    def test_matches_brute_force(self, a):
        assert hajnal_diameter(a) == pytest.approx(brute_diameter(a.tolist()), abs=1e-12)

    @given(stochastic())
    def test_zero_iff_identical_rows(self, a):
        same = np.allclose(a, a[0], atol=1e-13, rtol=0)
        assert (hajnal_diameter(a) < 1e-12) == same


class TestScramblingness:
    def test_examples(self):
        assert scramblingness(np.eye(2)) == 0
        assert scramblingness([[0.2, 0.8]] * 3) == pytest.approx(1.0)
        assert scramblingness(f(G2)) == pytest.approx(0.5)

    def test_requires_stochastic(self):
        with pytest.raises(PreconditionError):
            scramblingness([[2, 0], [0, 1]])

    @given(stochastic())
    def test_range_and_brute_force(self, a):
        eta = scramblingness(a)
        assert 0 <= eta <= 1
        assert eta == pytest.approx(brute_eta(a.tolist()), abs=1e-12)

    @given(stochastic())
    def test_one_iff_identical_rows(self, a):
        assert (scramblingness(a) > 1 - 1e-12) == (hajnal_diameter(a) < 1e-12)


@settings(max_examples=300)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(stochastic(n), stochastic(n))))
def test_hajnal_inequality(pair):
    a, b = pair
    assert hajnal_diameter(a @ b) <= (1 - scramblingness(a)) * hajnal_diameter(b) + 1e-10


class TestDeltaMatrix:
    def test_examples(self):
        m = f(G2)
        assert not delta_matrix(m, 1.5).result.any()
        np.testing.assert_array_equal(delta_matrix(m, 0.5).result, [[0.5, 0.5], [0, 0.5]])
        np.testing.assert_array_equal(delta_matrix(m, 0.6).result, [[0, 0], [0, 0.6]])

    def test_bad_delta(self):
        with pytest.raises(PreconditionError):
            delta_matrix(np.eye(2), 0)

    @given(stochastic(), st.floats(0.01, 1))
    def test_idempotent_pattern(self, a, d):
        once = delta_matrix(a, d).result
        assert is_analog(once, delta_matrix(once, d).result)


class TestLeftProduct:
    def test_example_one_product(self):
        np.testing.assert_array_equal(left_product([f(B2), f(B1)]), f(B1B2))

    def test_order_is_last_leftmost(self):
        a, b = np.array([[0, 1], [1, 0.0]]), np.array([[1, 0], [0.5, 0.5]])
        np.testing.assert_array_equal(left_product([a, b]), b @ a)

    def test_trivial(self):
        np.testing.assert_array_equal(left_product([np.eye(3)] * 4), np.eye(3))
        m = f(G2)
        np.testing.assert_array_equal(left_product([m]), m)

    def test_mismatch(self):
        with pytest.raises(InvalidInputError):
            left_product([np.eye(2), np.eye(3)])

    @given(st.integers(2, 6).flatmap(lambda n: st.lists(stochastic(n), min_size=1, max_size=12)))
    def test_closure(self, seq):
        prod = left_product(seq)
        assert np.all(prod >= 0)
        assert np.allclose(prod.sum(axis=1), 1, atol=len(seq) * 1e-9)


class TestAnalog:
    def test_examples(self):
        m = f(G2)
        assert is_analog(m, m)
        assert not is_analog(np.eye(2), np.zeros((2, 2)))
        with pytest.raises(InvalidInputError):
            is_analog(np.eye(2), np.eye(3))


def test_pattern_product_matches_float_product():
    rng = np.random.default_rng(3)
    for _ in range(50):
        mats = [rng.random((4, 4)) * (rng.random((4, 4)) < 0.4) for _ in range(5)]
        assert np.array_equal(pattern_product(pattern(a) for a in mats), left_product(mats) > 0)


def test_charpoly_matches_eigenvalues():
    rng = np.random.default_rng(0)
    for n in range(1, 9):
        a = rng.random((n, n))
        np.testing.assert_allclose(charpoly(a), np.real(np.poly(np.linalg.eigvals(a))), atol=1e-9)


def test_charpoly_example_two_exact():
    sympy = pytest.importorskip("sympy")
    lam = sympy.Symbol("lam")
    exact = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) if hasattr(x, "numerator") else x
                           for x in row] for row in EX2_B]).charpoly(lam)
    assert exact.eval(1) == 0 and exact.eval(-1) == 0
    coeffs = [float(c) for c in exact.all_coeffs()]
    np.testing.assert_allclose(charpoly(f(EX2_B)), coeffs, atol=1e-12)


def test_json_roundtrip():
    m = f(G2)
    assert json.loads(to_json(m)) == [[0.5, 0.5], [0.0, 1.0]]
    np.testing.assert_array_equal(from_json(to_json(m)), m)
    with pytest.raises(InvalidInputError):
        from_json("[[1, 2], [3]")
