import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from stlccheck import fixtures
from stlccheck.liealg import B1, VectorField
from stlccheck.numsim import (
    ChartError,
    DivergenceError,
    build_chart,
    det_closed_form,
    directional_derivative,
    endpoint_rk4,
    endpoint_xyz,
    flow,
    integrate_rk4,
    loop_controls,
    perturbed_u1,
    reproduce_example23,
)
from stlccheck.sysio import Atom, ControlAffineSystem, ControlSignal, parse_poly

ZERO = ControlSignal.zero()
ONE = ControlSignal.constant(1.0)


def vf(*comps):
    return VectorField([parse_poly(c, ("x", "y")) for c in comps])


def loop_exact(eps):
    """Symbolic loop endpoint z(2 pi eps) for the psi = x^2 system."""
    return 3 * math.pi * eps ** 9 * (2 * eps + 3) / 256


def det_exact(eps):
    """Symbolic Jacobian determinant of (a, b, c) -> endpoint for the psi = x^2 system."""
    p2 = math.pi ** 2
    return math.pi ** 5 * eps ** 14 * (-609105 * eps + 39600 * p2 * eps - 759430 + 45312 * p2) / 207360


def det_exact_y2(eps):
    p2 = math.pi ** 2
    poly = (-1194697 * eps ** 2 + 80304 * p2 * eps ** 2 - 1461852 * eps + 95040 * p2 * eps
            - 3919104 + 248832 * p2)
    return math.pi ** 5 * eps ** 14 * poly / 497664


# -- RK4 -----------------------------------------------------------------------

def test_zero_controls_stay_at_equilibrium():
    s = fixtures.load("sussmann_cubic")
    tr = integrate_rk4(s, (ZERO, ZERO), np.zeros(3), 1.0, 100)
    assert np.all(tr.z == 0.0)
    assert tr.steps == 100 and tr.t[-1] == 1.0


def test_integrator():
    s = ControlAffineSystem.from_strings(["x"], ["0"], ["1"])
    assert integrate_rk4(s, (ONE, None), [0.0], 1.0, 10).endpoint[0] == pytest.approx(1.0, abs=1e-15)


def test_double_integrator_exact_for_cubic_input():
    # RK4 is exact for polynomial right-hand sides in t up to degree 3
    s = fixtures.load("double_integrator")
    u = ControlSignal.from_atoms([Atom("poly", 1.0, power=2)])
    tr = integrate_rk4(s, (u, None), [0.0, 0.0], 1.0, 7)
    assert tr.endpoint == pytest.approx([1 / 3, 1 / 12], abs=1e-14)


def test_rk4_order():
    s = ControlAffineSystem.from_strings(["x", "y"], ["-y", "x"], ["1 + x*y", "0"])
    u = ControlSignal.from_atoms([Atom("sin", 1.0, omega=3.0)])
    ref = integrate_rk4(s, (u, None), [1.0, 0.0], 1.0, 4096).endpoint
    errs = [np.max(np.abs(integrate_rk4(s, (u, None), [1.0, 0.0], 1.0, n).endpoint - ref)) for n in (16, 32, 64)]
    slopes = np.diff(np.log2(errs)) * -1
    assert np.all(np.abs(slopes - 4) <= 0.3)


def test_divergence_reported():
    s = ControlAffineSystem.from_strings(["x"], ["x^2"], ["1"])
    with pytest.raises(DivergenceError) as info:
        integrate_rk4(s, (ONE, None), [0.0], 50.0, 500)
    assert 1 <= info.value.step <= 500


def test_rk4_argument_checks():
    s = fixtures.load("double_integrator")
    with pytest.raises(ValueError):
        integrate_rk4(s, (ONE, None), [0.0], 1.0, 10)
    with pytest.raises(ValueError):
        integrate_rk4(s, (ONE, None), [0.0, 0.0], -1.0, 10)
    with pytest.raises(ValueError):
        integrate_rk4(s, (ONE, None), [0.0, 0.0], 1.0, 0)


def test_csv_layout():
    s = fixtures.load("example0")
    tr = integrate_rk4(s, (ONE, ONE), [0.0, 0.0], 0.2, 20)
    text = tr.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == 22
    data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 1:], tr.z)


# -- flows ------------------------------------------------------------------------

def test_constant_flow():
    v = VectorField.constant([1, -2])
    assert flow(v, [0.5, 0.5], 0.25) == pytest.approx([0.75, 0.0], abs=1e-14)


@settings(max_examples=30)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.8, 0.8))
def test_flow_inverse(x, y, s):
    v = vf("y^2", "x - y")
    there = flow(v, [x, y], s)
    back = flow(v, there, -s)
    assert back == pytest.approx([x, y], abs=1e-8)


def test_linear_flow_matches_expm():
    A = np.array([[0.0, 1.0], [-2.0, -0.3]])
    v = vf("y", "-2*x - 3/10*y")
    z0 = np.array([1.0, 0.5])
    assert flow(v, z0, 1.3, steps=400) == pytest.approx(expm(1.3 * A) @ z0, abs=1e-10)


def test_batched_flow():
    v = vf("y", "-x")
    Z = flow(v, np.array([[1.0, 1.0], [0.0, 0.0]]), np.array([0.5, -0.5]))
    assert Z[:, 0] == pytest.approx([math.cos(0.5), -math.sin(0.5)], abs=1e-9)
    assert Z[:, 1] == pytest.approx([math.cos(0.5), math.sin(0.5)], abs=1e-9)


# -- adapted chart -----------------------------------------------------------------

@pytest.fixture(scope="module")
def chart0():
    return build_chart(fixtures.load("example0"))


def test_chart_default_basis(chart0):
    assert chart0.labels == ("1", str(B1))
    assert chart0.distinguished == 1
    assert np.array_equal(chart0.M0, [[0, -6], [-1, 0]])


def test_chart_phi_properties(chart0):
    s = fixtures.load("example0")
    assert chart0.phi([0.0, 0.0]) == 0.0
    assert abs(directional_derivative(chart0, s.f1, [0.0, 0.0])) <= 1e-8
    assert directional_derivative(chart0, chart0.fields[1], [0.0, 0.0]) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=25)
@given(st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_chart_round_trip(a, b):
    chart = build_chart(fixtures.load("example0"))
    s = np.array([a, b])
    assert chart.inverse(chart.forward(s)) == pytest.approx(s, abs=1e-8)


def test_chart_f1_invariance(chart0):
    # Phi is constant along f1 near 0 because f1 is the first field
    s = fixtures.load("example0")
    for z in ([0.02, -0.01], [-0.03, 0.015]):
        assert abs(directional_derivative(chart0, s.f1, z)) <= 1e-8


def test_chart_errors():
    s = fixtures.load("example0")
    with pytest.raises(ChartError):
        build_chart(s, ["[0,1]", "1"])
    with pytest.raises(ChartError):
        build_chart(s, ["1", "[0,1]"])  # dependent at 0 for this system


def test_chart_needs_b1_outside_r1():
    # linear system: R1(0) is already everything
    with pytest.raises(ChartError):
        build_chart(fixtures.load("double_integrator"))


def test_chart_completes_with_coordinates():
    s = ControlAffineSystem.from_strings(["x", "y", "z", "w"], ["0", "x", "x^2", "0"], ["1", "0", "0", "0"])
    chart = build_chart(s)
    assert chart.labels == ("1", "[0,1]", str(B1), "e4")
    assert chart.distinguished == 2


# -- the cubic loop ------------------------------------------------------------------

def test_loop_controls_have_zero_mean():
    u1, u2 = loop_controls(0.1)
    T = 2 * math.pi * 0.1
    t = np.linspace(0, T, 20001)
    assert abs(np.trapezoid(u1(t), t)) < 1e-12 and abs(np.trapezoid(u2(t), t)) < 1e-12
    assert perturbed_u1(0.1, 1.0, 0.0, 0.0)(0.3) == pytest.approx(u1(0.3) + 1.0)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_loop_endpoint_oracle(eps):
    x, y, z = endpoint_xyz(eps)
    assert abs(x) < 1e-15 and abs(y) < 1e-15
    assert z == pytest.approx(loop_exact(eps), rel=1e-9)


def test_loop_endpoint_y2_oracle():
    eps = 0.1
    assert endpoint_xyz(eps, psi="y2")[2] == pytest.approx(math.pi * eps ** 9 * (7 * eps ** 2 + 12 * eps + 40) / 512, rel=1e-9)


def test_rk4_matches_quadrature_endpoint():
    eps = 0.2
    p = np.array([[0.0, 0.0, 0.0], [1e-3, -2e-3, 5e-3]])
    Z = endpoint_rk4(eps, p, steps=4000)
    for row, params in zip(Z, p):
        assert row == pytest.approx(endpoint_xyz(eps, *params), abs=1e-14, rel=1e-8)


def test_endpoint_xyz_psi_check():
    with pytest.raises(ValueError):
        endpoint_xyz(0.1, psi="z2")


def test_reference_determinant_is_nonzero():
    for eps in (0.05, 0.1, 0.2):
        assert det_closed_form(eps) != 0.0
    assert det_closed_form(0.1) == pytest.approx(-1.0407e-10, rel=1e-3)


def test_determinant_oracles():
    r = reproduce_example23(0.2, steps=20_000)
    assert r.det_numeric == pytest.approx(det_exact(0.2), rel=1e-5)
    assert r.det_xyz == pytest.approx(det_exact(0.2), rel=1e-5)
    assert r.loop_residual_xyz == pytest.approx(loop_exact(0.2), rel=1e-8)
    ry = reproduce_example23(0.2, steps=200, psi="y2")
    assert ry.det_xyz == pytest.approx(det_exact_y2(0.2), rel=1e-5)


def test_reproduce_argument_checks():
    with pytest.raises(ValueError):
        reproduce_example23(-0.1)
    with pytest.raises(ValueError):
        reproduce_example23(0.1, fd_step=0.0)
