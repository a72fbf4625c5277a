import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stlccheck import fixtures
from stlccheck.chenfliess import (
    DiffOperator,
    IteratedIntegrals,
    MultiIndex,
    QuadConfig,
    QuadratureError,
    adaptive_simpson,
    apply_operator,
    build_W_operator,
    iterated_integral,
    operator_for_index,
    series_terms,
    series_truncated,
    w_r_compare,
    w_r_direct,
    w_r_ibp,
)
from stlccheck.conditions import F_WORDS
from stlccheck.liealg import B2, BracketEvaluator, Word, lie_bracket
from stlccheck.numsim import integrate_rk4
from stlccheck.polycore import DimensionError, MultiPoly
from stlccheck.ratlinalg import span_from_vectors
from stlccheck.sysio import Atom, ControlAffineSystem, ControlSignal

from conftest import fields, polys

ONE = ControlSignal.constant(1.0)
ZERO = ControlSignal.zero()
INTEGRATOR = ControlAffineSystem.from_strings(["x"], ["0"], ["1"])


def piecewise_constants():
    return st.tuples(
        st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
        st.lists(st.floats(-1.0, 1.0), min_size=5, max_size=5),
    ).map(_pc)


def _pc(args):
    widths, values = args
    breaks = np.concatenate([[0.0], np.cumsum(widths)])
    breaks = breaks / breaks[-1] * 1.2
    return ControlSignal.piecewise_constant(breaks, values[: len(widths)])


# -- operators ----------------------------------------------------------------

def test_directional_derivative():
    s = fixtures.load("sussmann_cubic")
    x = MultiPoly.variable(3, 0)
    assert apply_operator(s.f1, x ** 3) == 3 * x ** 2


def test_composition_vs_bracket_for_t4():
    s = fixtures.example21("0", "x^2")
    z = MultiPoly.variable(3, 2)
    lhs = apply_operator(operator_for_index(s, (1, 1, 0)), z).constant_term()
    br = lie_bracket(lie_bracket(s.f1, s.f0), s.f1)
    assert lhs == -br.apply(z).constant_term()


@settings(max_examples=60)
@given(fields(2, 2, 3), fields(2, 2, 3), polys(2, 3, 4))
def test_commutator_identity(f, g, phi):
    lhs = apply_operator(DiffOperator((lie_bracket(f, g),)), phi)
    rhs = apply_operator(DiffOperator((f, g)), phi) - apply_operator(DiffOperator((g, f)), phi)
    assert lhs == rhs


def test_operator_dimension_mismatch():
    s = fixtures.load("example0")
    with pytest.raises(DimensionError):
        apply_operator(DiffOperator((s.f0,)), MultiPoly.variable(3, 0))


def test_multi_index_validation():
    assert MultiIndex("110") == (1, 1, 0)
    with pytest.raises(ValueError):
        MultiIndex(())
    with pytest.raises(ValueError):
        MultiIndex((0, 3))


# -- iterated integrals --------------------------------------------------------

def test_drift_only_index():
    assert iterated_integral((0,), (ONE, ONE), 0.7) == pytest.approx(0.7, abs=1e-15)


def test_t4_pairing():
    assert iterated_integral((1, 1, 0), (ONE, None), 1.0) == pytest.approx(1 / 6, abs=1e-15)
    # first letter is innermost: (1,0) -> int t^2/2 dt, (0,1) -> int t * t dt
    u = ControlSignal.from_atoms([Atom("poly", 1.0, power=1)])  # u1(t) = t
    assert iterated_integral((1, 0), (u, None), 1.0) == pytest.approx(1 / 6)
    assert iterated_integral((0, 1), (u, None), 1.0) == pytest.approx(1 / 3)


def test_sine_integral():
    u = ControlSignal.from_atoms([Atom("sin", 1.0, omega=1.0)])
    assert iterated_integral((1,), (u, None), math.pi) == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("k", range(1, 7))
def test_pure_drift_closed_form(k):
    assert iterated_integral((0,) * k, (ZERO, ZERO), 0.9) == pytest.approx(0.9 ** k / math.factorial(k), rel=1e-14)


def test_numeric_path_matches_closed_form():
    u = ControlSignal.from_atoms([Atom("sin", 0.7, omega=3.0, phase=0.2), Atom("cos", -0.4, omega=1.0)])
    from scipy.integrate import quad

    v1 = lambda t: quad(u, 0, t, epsabs=1e-14)[0]
    ref = quad(lambda t: 0.5 * v1(t) ** 2, 0, 0.8, epsabs=1e-14)[0]
    assert iterated_integral((1, 1, 0), (u, None), 0.8) == pytest.approx(ref, abs=1e-11)


def test_quadrature_failure_reports_estimate():
    u = ControlSignal.from_atoms([Atom("sin", 1.0, omega=5000.0)])
    with pytest.raises(QuadratureError) as info:
        iterated_integral((1, 1), (u, None), 1.0, QuadConfig(tol=1e-14, max_depth=2))
    assert math.isfinite(info.value.estimate)


def test_adaptive_simpson():
    assert adaptive_simpson(math.exp, 0.0, 1.0) == pytest.approx(math.e - 1, abs=1e-12)


@settings(max_examples=30)
@given(piecewise_constants(), st.floats(0.1, 1.2))
def test_t4_identity(u1, T):
    ints = IteratedIntegrals((u1, None), T)
    from scipy.integrate import quad

    grid = sorted({0.0, T, *[b for b in u1.breakpoints() if b < T]})
    v1 = lambda t: sum(quad(u1, a, min(b, t))[0] for a, b in zip(grid, grid[1:]) if a < t)
    ref = 0.5 * sum(quad(lambda t: v1(t) ** 2, a, b, epsabs=1e-13)[0] for a, b in zip(grid, grid[1:]))
    assert ints((1, 1, 0)) == pytest.approx(ref, abs=1e-10)


# -- series ---------------------------------------------------------------------

def test_linear_integrator_series():
    x = MultiPoly.variable(1, 0)
    u = ControlSignal.from_atoms([Atom("poly", 0.5), Atom("poly", 2.0, power=2)])
    exact = 0.5 * 0.7 + 2.0 * 0.7 ** 3 / 3
    for L in (1, 2, 5):
        assert series_truncated(INTEGRATOR, x, (u, None), 0.7, L) == pytest.approx(exact, abs=1e-14)
    assert series_terms(INTEGRATOR, x, 5) == [((1,), Fraction(1))]


def test_zero_controls_give_zero():
    s = fixtures.load("example0")
    phi = MultiPoly.variable(2, 0) + MultiPoly.variable(2, 1) ** 2
    for L in (1, 3, 6):
        assert series_truncated(s, phi, (ZERO, ZERO), 0.3, L) == 0.0


def test_nilpotent_series_is_stable():
    s = fixtures.load("double_integrator")
    y = MultiPoly.variable(2, 1)
    u = ControlSignal.from_atoms([Atom("cos", 1.0, omega=2.0)])
    vals = [series_truncated(s, y, (u, None), 0.5, L) for L in (2, 3, 5)]
    assert vals[1] == pytest.approx(vals[0], abs=1e-12) and vals[2] == pytest.approx(vals[0], abs=1e-12)
    ref = (1 - math.cos(1.0)) / 4  # y(T) = int_0^T sin(2t)/2 dt
    assert vals[0] == pytest.approx(ref, abs=1e-10)


def test_example0_series_close_to_rk4():
    s = fixtures.load("example0")
    x = MultiPoly.variable(2, 0)
    half = ControlSignal.constant(0.5)
    ser = series_truncated(s, x, (half, half), 0.1, 6)
    ref = integrate_rk4(s, (half, half), [0, 0], 0.1, 4000).endpoint[0]
    assert abs(ser - ref) <= 1e-6
    worse = abs(series_truncated(s, x, (half, half), 0.1, 1) - ref)
    assert worse > 100 * abs(ser - ref)


# -- w_r ------------------------------------------------------------------------

def test_w_r_constant_control():
    assert w_r_compare(ONE, 0, 1.0) == pytest.approx((0.5, 0.5))
    assert w_r_compare(ONE, 1, 1.0) == pytest.approx((1 / 6, 1 / 6))
    # direct formula: s^{r+2} / (r+2)!
    for r in range(5):
        d, i = w_r_compare(ONE, r, 1.0)
        assert d == pytest.approx(1 / math.factorial(r + 2), rel=1e-12)
        assert i == pytest.approx(d, rel=1e-12)


@settings(max_examples=20)
@given(piecewise_constants(), st.integers(0, 4), st.floats(0.05, 1.0))
def test_w_r_identity(u1, r, s):
    d, i = w_r_compare(u1, r, s)
    assert abs(d - i) <= 1e-8


def test_w_r_numeric_fallback_agrees():
    u = ControlSignal.from_atoms([Atom("sin", 1.0, omega=3.0), Atom("cos", 0.3, omega=7.0)])
    for r in range(5):
        assert w_r_ibp(u, r, 0.6) == pytest.approx(w_r_direct(u, r, 0.6), abs=1e-9)


def test_w_r_rejects_nonpositive_s():
    with pytest.raises(ValueError):
        w_r_compare(ONE, 1, 0.0)


# -- W operators -----------------------------------------------------------------

def test_w1_forms():
    assert build_W_operator(1, 2, "00").factors == (Word.parse("[0,[0,1]]"),)
    assert build_W_operator(1, 1, "2").factors == (Word.parse("[2,1]"),)


def test_w21_recovers_b2_up_to_sign():
    op = build_W_operator(2, 3, "000", mu=2)
    (w,) = op.factors
    assert w == Word.parse("[[0,1],[[0,1],0]]")
    s = fixtures.example21()
    ev = BracketEvaluator(s)
    assert ev.value(w) == tuple(-x for x in ev.value(B2))


def test_w22_and_overlap():
    op = build_W_operator(2, 3, "020", mu=3)
    assert op.factors == (Word.parse("[0,[2,1]]"), Word.parse("[0,1]"))
    # mu = 2 with l = 3 satisfies both conditions; the bracket form wins
    assert len(build_W_operator(2, 3, mu=2).factors) == 1
    assert len(build_W_operator(2, 3, mu=2, variant="w22").factors) == 2


def test_w3_forms_slot_counts():
    for variant, nu, mu in (("w31", 0, 1), ("w32", 1, 0), ("w33", 1, 1)):
        op = build_W_operator(3, 4, "0202", nu=nu, mu=mu, variant=variant)
        assert sum(w.count(0) + w.count(2) for w in op.words()) == 4
        assert sum(w.count(1) for w in op.words()) == 3
    assert build_W_operator(3, 4, nu=0, mu=1, variant="w31").coeff == -1


@pytest.mark.parametrize(
    "kw",
    [dict(k=2, l=3, mu=5), dict(k=3, l=2, nu=2, mu=1, variant="w31"), dict(k=3, l=3, nu=2, mu=1, variant="w33"),
     dict(k=4, l=1), dict(k=1, l=2, pattern="01"), dict(k=1, l=2, pattern="0")],
)
def test_w_domain_errors(kw):
    with pytest.raises(ValueError):
        build_W_operator(**kw)


def test_quartic_w_patterns_span_f_family():
    # W^{2,3}_{1,2} over all patterns with at least one 2 spans the same space as the F_ijk
    for name in ("example22", "example22_xy", "example21_zero"):
        s = fixtures.load(name)
        ev = BracketEvaluator(s)
        pats = [f"{a}{b}{c}" for a in "02" for b in "02" for c in "02" if "2" in f"{a}{b}{c}"]
        wv = [ev.value(build_W_operator(2, 3, p, mu=2).factors[0]) for p in pats]
        fv = [ev.value(w) for w in F_WORDS.values()]
        assert span_from_vectors(wv, 3) == span_from_vectors(fv, 3)


def test_apply_word_operator_needs_system():
    op = build_W_operator(1, 1)
    with pytest.raises(ValueError):
        apply_operator(op, MultiPoly.variable(2, 0))
    s = fixtures.load("double_integrator")
    assert apply_operator(op, MultiPoly.variable(2, 1), s) == MultiPoly.constant(2, -1)
