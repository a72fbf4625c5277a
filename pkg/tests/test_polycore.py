from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from stlccheck.polycore import DimensionError, MultiPoly, poly_arith, poly_eval, poly_partial
from stlccheck.sysio import parse_poly

from conftest import polys, small_fractions

X, Y = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)


def test_difference_of_squares():
    assert poly_arith(X + Y, X - Y, "mul") == X ** 2 - Y ** 2


def test_additive_identity():
    p = X ** 2 * Y - 3
    assert poly_arith(p, MultiPoly.zero(2), "add") == p


def test_merge_of_equal_monomials():
    got = poly_arith(Y ** 2, Y * Y, "add")
    assert got.terms == {(0, 2): Fraction(2)}


def test_zero_coefficients_dropped():
    assert (X - X).is_zero()
    assert (X - X).terms == {}
    assert MultiPoly(2, {(1, 0): 0}).terms == {}


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        poly_arith(X, MultiPoly.variable(3, 0), "add")
    with pytest.raises(DimensionError):
        poly_partial(X, 2)
    with pytest.raises(DimensionError):
        poly_eval(X, [1, 2, 3])


def test_partials():
    assert poly_partial(X ** 3 + Y ** 2, 1) == 2 * Y
    assert poly_partial(MultiPoly.constant(2, 5), 0).is_zero()
    assert poly_partial(X ** 2 * Y, 0) == 2 * X * Y


def test_eval_exact_and_float():
    assert poly_eval(X ** 2 * Y, [2, 3]) == 12
    v = poly_eval(X ** 3 + Y ** 2, [Fraction(1, 2), Fraction(1, 3)])
    assert v == Fraction(17, 72) and isinstance(v, Fraction)
    assert poly_eval(X ** 3 + Y ** 2, [0.5, 0.25]) == pytest.approx(0.1875)


def test_eval_at_origin_is_constant_term():
    p = 3 * X ** 2 - Y + Fraction(7, 3)
    assert poly_eval(p, [0, 0]) == Fraction(7, 3) == p.constant_term()


def test_display_is_grlex():
    p = parse_poly("y - 2/3*x*y + x^2", ["x", "y"])
    assert p.to_string(["x", "y"]) == "x^2 - 2/3*x*y + y"


def test_float_coefficients_rejected():
    with pytest.raises(TypeError):
        MultiPoly(1, {(1,): 0.5})


@given(polys(3), polys(3), polys(3))
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(polys(4, 5, 5))
def test_ring_axioms_four_variables(a):
    assert a - a == MultiPoly.zero(4)
    assert a * 1 == a


@given(polys(3, 5, 5), st.integers(0, 2), st.integers(0, 2))
def test_schwarz_symmetry(p, i, j):
    assert p.partial(i).partial(j).terms == p.partial(j).partial(i).terms


@given(polys(2), polys(2), st.tuples(small_fractions, small_fractions))
def test_eval_is_multiplicative(a, b, pt):
    assert poly_eval(a * b, pt) == poly_eval(a, pt) * poly_eval(b, pt)
