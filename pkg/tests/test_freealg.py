from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fockopa.freealg import (FreePoly, MatrixTuple, ParseError, ShapeError, evaluate, format_poly,
                             from_json, inner, mul, norm_sq, parse, to_json, truncate, tuple_from_json,
                             tuple_to_json, words_up_to)

E11 = np.array([[1.0, 0], [0, 0]])
E12 = np.array([[0.0, 1], [0, 0]])
E21 = np.array([[0.0, 0], [1, 0]])


def test_words_graded_lex():
    assert words_up_to(2, 2) == [(), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert len(words_up_to(3, 4)) == (3 ** 5 - 1) // 2


def test_mul_noncommutative():
    x, y = parse("x1", d=2), parse("x2", d=2)
    assert mul(x, y) != mul(y, x)
    assert mul(x, y) == parse("x1*x2")
    p = mul(parse("1 - x1*x2"), parse("1 + x1*x2"))
    assert p == parse("1 - x1*x2*x1*x2")


def test_inner_and_norm():
    p = parse("1 - x1*x2 + x2", exact=True)
    q = parse("2*x2 + 3*x1", d=2, exact=True)
    assert inner(p, q) == 2
    assert norm_sq(parse("1 + x1 - x2 + x1*x2")) == 4


def test_matrix_poly_norm_is_frobenius_sum():
    F = FreePoly.linear([E12, 2 * E21], const=np.eye(2))
    assert norm_sq(F) == pytest.approx(2 + 1 + 4)


def test_evaluate_planted_point():
    F = parse("1 - x1*x2")
    X = MatrixTuple.of(E12, E21)
    np.testing.assert_array_equal(evaluate(F, X), np.diag([0.0, 1.0]))


def test_evaluate_respects_direct_sums():
    rng = np.random.default_rng(5)
    F = parse("1 - 2*x1*x2 + x2^3")
    X = MatrixTuple(rng.standard_normal((2, 2, 2)))
    Y = MatrixTuple(rng.standard_normal((2, 3, 3)))
    Z = evaluate(F, X.direct_sum(Y))
    np.testing.assert_allclose(Z[:2, :2], evaluate(F, X), atol=1e-12)
    np.testing.assert_allclose(Z[2:, 2:], evaluate(F, Y), atol=1e-12)
    np.testing.assert_allclose(Z[:2, 2:], 0, atol=1e-12)


def test_evaluate_similarity():
    rng = np.random.default_rng(6)
    F = parse("1 - x1*x2*x1 + 0.5*x2")
    X = MatrixTuple(rng.standard_normal((2, 3, 3)))
    S = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    lhs = evaluate(F, X.conjugate_by(S))
    rhs = np.linalg.solve(S, evaluate(F, X)) @ S
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_matrix_evaluation_kron():
    F = FreePoly.linear([E12, E21], const=np.eye(2))
    X = MatrixTuple.of(np.array([[2.0]]), np.array([[3.0]]))
    np.testing.assert_array_equal(evaluate(F, X), np.eye(2) + 2 * E12 + 3 * E21)


@pytest.mark.parametrize("text", ["1 - x1*x2", "(0.5+0.5i)*x2", "1/3*x1^2 - x2", "-x1", "2"])
def test_format_parse_round_trip(text):
    exact = "i" not in text
    p = parse(text, d=2, exact=exact)
    assert parse(format_poly(p), d=2, exact=exact) == p


def test_parse_expands_products():
    assert parse("(1 - x1)*(1 - x2)") == parse("1 - x1 - x2 + x1*x2")
    assert parse("(x1 + x2)^2") == parse("x1^2 + x1*x2 + x2*x1 + x2^2")


def test_parse_exact_fractions():
    p = parse("1/3*x1 + 0.25", exact=True)
    assert p.coeff((1,))[0, 0] == Fraction(1, 3)
    assert p.constant_term()[0, 0] == Fraction(1, 4)


@pytest.mark.parametrize("bad,offset", [("1 - x1 +", 8), ("x0", 0), ("1 + * x1", 4), ("x1 ∗ x2", 3)])
def test_parse_errors_report_byte_offset(bad, offset):
    with pytest.raises(ParseError) as info:
        parse(bad)
    assert info.value.offset == offset


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        FreePoly.identity(2, 1) + FreePoly.identity(3, 1)


def test_json_round_trips():
    F = FreePoly.from_entries([[parse("1 - x1"), parse("x2", d=2)], [None, parse("1 + x1*x2")]])
    assert from_json(to_json(F)) == F
    X = MatrixTuple(np.array([[[1 + 2j, 0], [0, 1]]]))
    np.testing.assert_array_equal(tuple_from_json(tuple_to_json(X)).mats, X.mats)


def test_truncate_pythagoras():
    p = parse("1 + 2*x1 - x1*x2 + 3*x2*x2*x1")
    low = truncate(p, 1)
    assert norm_sq(p) == pytest.approx(norm_sq(low) + norm_sq(p - low))


def test_shift_is_isometry_on_polys():
    p = parse("1 + 2*x1 - x1*x2 + 3*x2*x2*x1")
    for j in (1, 2):
        assert norm_sq(mul(parse(f"x{j}", d=2), p)) == pytest.approx(norm_sq(p))


def test_zero_degree():
    assert FreePoly.zero().degree == -float("inf")
    assert parse("x1*x2 + 1").degree == 2


# --- properties, exact arithmetic -----------------------------------------

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)
words = st.lists(st.integers(1, 2), max_size=3).map(tuple)
polys = st.dictionaries(words, coeffs, max_size=5).map(
    lambda t: FreePoly(t, (1, 1), 2, exact=True))


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms_exact(p, q, r):
    assert mul(mul(p, q), r) == mul(p, mul(q, r))
    assert mul(p, q + r) == mul(p, q) + mul(p, r)
    assert mul(p + q, r) == mul(p, r) + mul(q, r)


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_degree_is_additive(p, q):
    if p.is_zero or q.is_zero:
        assert mul(p, q).is_zero
    else:
        assert mul(p, q).degree == p.degree + q.degree


@settings(max_examples=40, deadline=None)
@given(polys, polys)
def test_evaluation_is_multiplicative(p, q):
    X = MatrixTuple(np.random.default_rng(0).standard_normal((2, 3, 3)))
    np.testing.assert_allclose(evaluate(mul(p, q), X), evaluate(p, X) @ evaluate(q, X),
                               atol=1e-8 * (1 + np.abs(evaluate(mul(p, q), X)).max()))
