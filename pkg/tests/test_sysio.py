import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stlccheck import fixtures
from stlccheck.polycore import DimensionError, MultiPoly
from stlccheck.sysio import (
    ControlAffineSystem,
    ControlSignal,
    EquilibriumError,
    ParseError,
    UnknownIdentifierError,
    parse_controls,
    parse_poly,
    parse_system,
    serialize_system,
)

V = ["x", "y"]
X, Y = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)

EX0 = """
dim = 2
vars = [x, y]
f0 = ["y^2", "2*y"]   # drift
f1 = ["y", "-1"]
f2 = ["0", "x"]
"""


def test_parse_poly_examples():
    assert parse_poly("y^2", V) == Y ** 2
    assert parse_poly("x^3 + y^2", V) == X ** 3 + Y ** 2
    assert parse_poly("-2/1*x*y", V) == -2 * X * Y
    assert parse_poly("(x - y)^2", V) == X * X - 2 * X * Y + Y * Y


@pytest.mark.parametrize(
    "text",
    ["x^-1", "x^y", "x^1.5", "2 x", "x +", "(x", "x/y", "0.5*x", "sin(x)"],
)
def test_parse_poly_rejects(text):
    with pytest.raises(ParseError):
        parse_poly(text, V)


def test_unknown_identifier_has_position():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_poly("x + w", V)
    assert (info.value.line, info.value.column) == (1, 5)


def test_parse_system_example0():
    s = parse_system(EX0)
    assert s.dim == 2 and not s.single_input
    assert s.f0.to_strings(V) == ["y^2", "2*y"]
    assert s.f2.to_strings(V) == ["0", "x"]


def test_f2_nonzero_at_origin_rejected():
    with pytest.raises(EquilibriumError) as info:
        parse_system(EX0.replace('f2 = ["0", "x"]', 'f2 = ["0", "1"]'))
    assert info.value.field == "f2" and info.value.component == 1
    assert "f2(0)" in str(info.value)


def test_f1_vanishing_rejected():
    with pytest.raises(EquilibriumError) as info:
        parse_system(EX0.replace('f1 = ["y", "-1"]', 'f1 = ["0", "0"]'))
    assert info.value.field == "f1"


def test_f0_nonzero_at_origin_rejected():
    with pytest.raises(EquilibriumError):
        parse_system(EX0.replace('"2*y"]', '"2*y + 1"]'))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        parse_system(EX0.replace('f1 = ["y", "-1"]', 'f1 = ["y", "-1", "x"]'))


def test_syntax_error_location():
    with pytest.raises(ParseError) as info:
        parse_system(EX0.replace('"2*y"', '"2**y"'))
    assert info.value.line == 4


def test_single_input_when_f2_absent():
    s = fixtures.load("sussmann_cubic")
    assert s.single_input and s.alphabet == (0, 1)
    with pytest.raises(ValueError):
        s.field(2)


@pytest.mark.parametrize("name", [n for n in fixtures.names() if n.endswith(".sys") and "bad" not in n])
def test_round_trip_fixtures(name):
    s = fixtures.load(name)
    text = serialize_system(s)
    assert parse_system(text) == s
    assert serialize_system(parse_system(text)) == text


coef = st.integers(-3, 3)


@given(st.lists(coef, min_size=12, max_size=12))
def test_random_files_validate_exactly(c):
    # affine terms decide the equilibrium conditions; quadratic ones never do
    f0 = [f"{c[0]} + {c[1]}*x + {c[2]}*y^2", f"{c[3]}*x*y + {c[4]}*y"]
    f1 = [f"{c[5]} + x", f"{c[6]} + {c[7]}*y"]
    f2 = [f"{c[8]} + x^2", f"{c[9]}*y + {c[10]}*x*y"]
    text = "dim = 2\nvars = [x, y]\n" + "\n".join(
        f"{k} = [" + ", ".join(f'"{e}"' for e in v) + "]" for k, v in (("f0", f0), ("f1", f1), ("f2", f2))
    )
    valid = c[0] == 0 and c[8] == 0 and (c[5], c[6]) != (0, 0)
    if valid:
        s = parse_system(text)
        assert not any(s.f0.at_origin()) and not any(s.f2.at_origin())
        assert any(s.f1.at_origin())
    else:
        with pytest.raises(EquilibriumError):
            parse_system(text)


LOOP = """
param eps = 0.1
u1 = 1/4*eps^2*sin(t/eps) - 1/2*eps^2*sin(2*t/eps)
u2 = 5/16*eps^2*cos(t/eps) - 3/4*eps^2*cos(2*t/eps)
"""


def test_loop_controls_parse():
    u1, u2 = parse_controls(LOOP)
    assert [a.kind for a in u1.atoms] == ["sin", "sin"]
    assert sorted(a.omega for a in u1.atoms) == pytest.approx([10.0, 20.0])
    t = 0.37
    assert u1(t) == pytest.approx(0.0025 * math.sin(t / 0.1) - 0.005 * math.sin(2 * t / 0.1), abs=1e-16)
    assert u2(t) == pytest.approx(0.1 ** 2 * (5 / 16 * math.cos(t / 0.1) - 3 / 4 * math.cos(2 * t / 0.1)), abs=1e-16)


def test_parameters_override_file():
    u1, _ = parse_controls(LOOP, {"eps": 0.2})
    assert sorted(a.omega for a in u1.atoms) == pytest.approx([5.0, 10.0])


def test_zero_and_missing_signals():
    u1, u2 = parse_controls("u1 = 0")
    assert u1.is_zero and u2.is_zero
    assert u1(1.5) == 0.0


def test_polynomial_perturbation():
    eps = 0.1
    u1, _ = parse_controls("u1 = a + b*t + c*t^3", {"a": eps, "b": eps, "c": eps})
    assert len(u1.atoms) == 3 and u1.is_piecewise_polynomial
    assert u1(2.0) == pytest.approx(0.1 + 0.2 + 0.8)


def test_piecewise_signal():
    u1, _ = parse_controls("u1 @ [0, 0.5] = 1\nu1 @ [0.5, 1] = -t")
    assert u1(0.25) == 1.0 and u1(0.75) == -0.75
    assert u1.breakpoints() == (0.5,)
    np.testing.assert_allclose(u1(np.array([0.1, 0.6])), [1.0, -0.6])


@pytest.mark.parametrize("text", ["u1 = foo*t", "u1 = sin(t^2)", "u3 = 1", "u1 = t^-1", "u1 @ [0, 1 = 1"])
def test_control_errors(text):
    with pytest.raises(ParseError):
        parse_controls(text)


def test_polynomial_atoms_exact_at_rational_times():
    u1, _ = parse_controls("u1 = 1/2 + 3*t^2")
    for t in (Fraction(1, 4), Fraction(2, 3)):
        assert u1(float(t)) == float(Fraction(1, 2) + 3 * t * t)


def test_from_strings_matches_file():
    s = ControlAffineSystem.from_strings(V, ["y^2", "2*y"], ["y", "-1"], ["0", "x"])
    assert s == parse_system(EX0)
    assert s.digest() == fixtures.load("example0").digest()


def test_shifted_drift():
    s = fixtures.example1(1).shifted(1)
    assert s.f0.to_strings(V) == ["-y^2", "y"]
