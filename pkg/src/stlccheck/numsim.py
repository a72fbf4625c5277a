"""Numerical integration of control-affine systems and derived constructions.

* classical RK4 trajectories with CSV export,
* flows of single vector fields,
* the adapted chart ``z -> (s_1, ..., s_n)`` that inverts
  ``(s_1, ..., s_n) -> e^{s_1 g_1} o ... o e^{s_n g_n}(0)``,
* the loop and endpoint map of the three-dimensional cubic example driven by
  ``u1 = eps^2 (sin(t/eps)/4 - sin(2t/eps)/2)`` and
  ``u2 = eps^2 (5 cos(t/eps)/16 - 3 cos(2t/eps)/4)`` on ``[0, 2 pi eps]``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .liealg import B1, BracketEvaluator, VectorField, Word, bracket_span_at_origin
from .sysio.controls import Atom, ControlSignal

__all__ = [
    "DivergenceError",
    "ChartError",
    "Trajectory",
    "integrate_rk4",
    "flow",
    "AdaptedChart",
    "build_chart",
    "phi_eval",
    "directional_derivative",
    "loop_controls",
    "perturbed_u1",
    "endpoint_rk4",
    "endpoint_xyz",
    "det_closed_form",
    "Example23Record",
    "reproduce_example23",
]


class DivergenceError(ArithmeticError):
    """The state became non-finite at ``step``."""

    def __init__(self, step: int):
        super().__init__(f"integration diverged at step {step}")
        self.step = step


class ChartError(ValueError):
    """Chart construction or inversion failed."""


@dataclass(frozen=True)
class Trajectory:
    """Samples ``z[k] = z(t[k])`` on a uniform grid with ``steps + 1`` points."""

    t: np.ndarray
    z: np.ndarray

    @property
    def endpoint(self) -> np.ndarray:
        return self.z[-1]

    @property
    def steps(self) -> int:
        return len(self.t) - 1

    def to_csv(self, target=None) -> Optional[str]:
        """Write ``t,x1,...,xn`` rows with 17 significant digits.

        ``target`` is a path or a text stream; with ``None`` the CSV is returned.
        """
        n = self.z.shape[1]
        buf = io.StringIO()
        buf.write(",".join(["t"] + [f"x{i + 1}" for i in range(n)]) + "\n")
        np.savetxt(buf, np.column_stack([self.t, self.z]), fmt="%.17g", delimiter=",")
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(text)
        return None


# -- RK4 core ---------------------------------------------------------------

def _as_fn(vf: VectorField) -> Callable:
    f = vf.numeric
    return lambda z: np.asarray(f(*z), dtype=float)


def _rk4(rhs: Callable, z0: np.ndarray, h, steps: int, record: bool):
    """Classical RK4; ``rhs(j, z)`` sees half-step index ``j`` (time ``j*h/2``)."""
    z = np.array(z0, dtype=float)
    out = np.empty((steps + 1,) + z.shape) if record else None
    if record:
        out[0] = z
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            j = 2 * k
            k1 = rhs(j, z)
            k2 = rhs(j + 1, z + 0.5 * h * k1)
            k3 = rhs(j + 1, z + 0.5 * h * k2)
            k4 = rhs(j + 2, z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(z).all():
                raise DivergenceError(k + 1)
            if record:
                out[k + 1] = z
    return out if record else z


def _control_grid(u, T: float, steps: int):
    if u is None or (isinstance(u, ControlSignal) and u.is_zero):
        return None
    t = np.linspace(0.0, T, 2 * steps + 1)
    return np.asarray(u(t), dtype=float)


def _system_rhs(system, grids):
    f0 = _as_fn(system.field(0))
    terms = [(_as_fn(system.field(i + 1)), g) for i, g in enumerate(grids) if g is not None]

    def rhs(j, z):
        d = f0(z)
        for f, g in terms:
            d = d + g[j] * f(z)
        return d

    return rhs


def integrate_rk4(system, controls, z0, T: float, steps: int) -> Trajectory:
    """RK4 on ``z' = f0(z) + u1(t) f1(z) + u2(t) f2(z)`` over ``[0, T]``.

    Controls are sampled exactly at the stage times. A missing or zero
    control is skipped; ``u2`` is ignored for single-input systems.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not T > 0:
        raise ValueError("T must be positive")
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (system.dim,):
        raise ValueError(f"z0 must have {system.dim} components")
    controls = list(controls)[: len(system.alphabet) - 1]
    grids = [_control_grid(u, T, steps) for u in controls]
    h = T / steps
    z = _rk4(_system_rhs(system, grids), z0, h, steps, record=True)
    return Trajectory(np.linspace(0.0, T, steps + 1), z)


def flow(vf: VectorField, z0, s: float, steps: int = 100) -> np.ndarray:
    """``e^{s g}(z0)`` by RK4; ``z0`` may be ``(n,)`` or a batch ``(n, m)`` with ``s`` of shape ``(m,)``."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    f = _as_fn(vf)
    h = np.asarray(s, dtype=float) / steps
    if not np.any(h):
        return np.array(z0, dtype=float)
    return _rk4(lambda j, z: f(z), np.asarray(z0, dtype=float), h, steps, record=False)


# -- adapted chart ------------------------------------------------------------

@dataclass
class AdaptedChart:
    """Coordinates ``s(z)`` with ``z = e^{s_1 g_1} o ... o e^{s_n g_n}(0)``.

    ``distinguished`` is the 0-based index whose coordinate defines ``Phi``.
    """

    fields: tuple
    labels: tuple
    distinguished: int
    flow_steps: int = 40
    newton_iters: int = 50
    newton_tol: float = 1e-12
    fd_step: float = 1e-6
    M0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.fields)
        self.M0 = np.column_stack([g(np.zeros(n)) for g in self.fields])
        if np.linalg.cond(self.M0) > 1e10:
            raise ChartError("chart fields are not independent at 0")
        self._fns = [_as_fn(g) for g in self.fields]

    @property
    def dim(self) -> int:
        return len(self.fields)

    def forward(self, s) -> np.ndarray:
        """Composed flows at ``s``; ``s`` of shape ``(n,)`` or ``(n, m)``."""
        s = np.asarray(s, dtype=float)
        z = np.zeros_like(s)
        for i in reversed(range(self.dim)):
            si = s[i]
            if np.any(si):
                f = self._fns[i]
                z = _rk4(lambda j, w: f(w), z, si / self.flow_steps, self.flow_steps, record=False)
        return z

    def jacobian(self, s) -> np.ndarray:
        n = self.dim
        h = self.fd_step * max(1.0, float(np.max(np.abs(s))))
        S = np.repeat(np.asarray(s, dtype=float)[:, None], 2 * n, axis=1)
        for i in range(n):
            S[i, 2 * i] += h
            S[i, 2 * i + 1] -= h
        Z = self.forward(S)
        return (Z[:, 0::2] - Z[:, 1::2]) / (2 * h)

    def inverse(self, z) -> np.ndarray:
        """Damped Newton solve of ``forward(s) = z``."""
        z = np.asarray(z, dtype=float)
        s = np.linalg.solve(self.M0, z)
        r = self.forward(s) - z
        for _ in range(self.newton_iters):
            nr = np.max(np.abs(r))
            if nr <= self.newton_tol:
                return s
            step = np.linalg.solve(self.jacobian(s), r)
            lam = 1.0
            while lam > 1e-4:
                s_new = s - lam * step
                r_new = self.forward(s_new) - z
                if np.max(np.abs(r_new)) < nr:
                    break
                lam /= 2
            s, r = s_new, r_new
        if np.max(np.abs(r)) <= self.newton_tol:
            return s
        raise ChartError(f"Newton did not converge at z={z.tolist()} (residual {np.max(np.abs(r)):.3e})")

    def phi(self, z) -> float:
        return float(self.inverse(z)[self.distinguished])


def build_chart(system, basis_spec: Optional[Sequence] = None, *, distinguished: Optional[int] = None,
                max_length: int = 6, **kw) -> AdaptedChart:
    """Chart for ``system`` from bracket words.

    By default the words are ``1``, further words spanning ``R1(0)`` (brackets
    with at most one ``1``), then ``[1,[0,1]]`` as the distinguished field,
    then coordinate fields to complete a basis.
    """
    n = system.dim
    ev = BracketEvaluator(system)
    if basis_spec is not None:
        words = [Word.parse(w) if isinstance(w, str) else w for w in basis_spec]
        if words[0] != Word.leaf(1):
            raise ChartError("the first chart field must be f1")
        fields = [ev.field(w) for w in words]
        labels = [str(w) for w in words]
        if distinguished is None:
            distinguished = labels.index(str(B1)) if str(B1) in labels else len(words) - 1
        return AdaptedChart(tuple(fields), tuple(labels), distinguished, **kw)
    R1, gens = bracket_span_at_origin(system, system.alphabet, {1: 1}, max_length, return_generators=True)
    gens = sorted(gens, key=lambda wv: wv[0] != Word.leaf(1))
    if not gens or gens[0][0] != Word.leaf(1):
        raise ChartError("f1 must not vanish at 0")
    words = [w for w, _ in gens]
    b1 = ev.value(B1)
    if b1 in R1:
        raise ChartError("[f1,[f0,f1]](0) lies in R1(0)")
    words.append(B1)
    fields = [ev.field(w) for w in words]
    labels = [str(w) for w in words]
    span = R1.with_vectors([b1])
    for j in range(n):
        e = [0] * n
        e[j] = 1
        if span.dim == n:
            break
        if tuple(e) not in span:
            span = span.with_vectors([e])
            fields.append(VectorField.constant(e))
            labels.append(f"e{j + 1}")
    return AdaptedChart(tuple(fields), tuple(labels), len(gens), **kw)


def phi_eval(chart: AdaptedChart, z) -> float:
    return chart.phi(z)


def directional_derivative(chart: AdaptedChart, vf: VectorField, z, h: float = 1e-4) -> float:
    """Central difference of ``Phi`` along ``vf(z)``."""
    z = np.asarray(z, dtype=float)
    d = vf(z)
    return (chart.phi(z + h * d) - chart.phi(z - h * d)) / (2 * h)


# -- the cubic loop example ---------------------------------------------------

def loop_controls(eps: float) -> tuple[ControlSignal, ControlSignal]:
    e2 = eps * eps
    u1 = ControlSignal.from_atoms([Atom("sin", e2 / 4, omega=1 / eps), Atom("sin", -e2 / 2, omega=2 / eps)])
    u2 = ControlSignal.from_atoms([Atom("cos", 5 * e2 / 16, omega=1 / eps), Atom("cos", -3 * e2 / 4, omega=2 / eps)])
    return u1, u2


def perturbed_u1(eps: float, a: float, b: float, c: float) -> ControlSignal:
    base = loop_controls(eps)[0]
    extra = [Atom("poly", v, power=p) for v, p in ((a, 0), (b, 1), (c, 3)) if v]
    return ControlSignal.from_atoms(list(base.atoms) + extra)


def _example23_system(psi: str = "x2"):
    from .fixtures import example21

    return example21("0", {"x2": "x^2", "y2": "y^2"}[psi])


def endpoint_rk4(eps: float, params, steps: int = 100_000, system=None) -> np.ndarray:
    """Endpoints at ``T = 2 pi eps`` for a batch of ``(a, b, c)`` rows, by RK4."""
    system = system or _example23_system()
    P = np.atleast_2d(np.asarray(params, dtype=float))
    m = P.shape[0]
    T = 2 * math.pi * eps
    t = np.linspace(0.0, T, 2 * steps + 1)
    u1b, u2 = loop_controls(eps)
    U1 = u1b(t)[:, None] + P[:, 0] + np.outer(t, P[:, 1]) + np.outer(t ** 3, P[:, 2])
    U2 = u2(t)
    f0, f1, f2 = (_as_fn(system.field(i)) for i in range(3))

    def rhs(j, z):
        return f0(z) + U1[j] * f1(z) + U2[j] * f2(z)

    z = _rk4(rhs, np.zeros((3, m)), T / steps, steps, record=False)
    return z.T if np.ndim(params) > 1 else z[:, 0]


def endpoint_xyz(eps: float, a: float = 0.0, b: float = 0.0, c: float = 0.0, psi: str = "x2") -> np.ndarray:
    """Endpoint from the explicit primitives ``x = int u1``, ``y = int x`` and one quadrature for ``z``.

    ``psi = "x2"`` integrates ``x^3 + y^2 + u2 x^2``; ``psi = "y2"`` integrates
    ``x^3 + (1 + u2) y^2``.
    """
    T = 2 * math.pi * eps
    e3 = eps ** 3

    def x(t):
        return (e3 / 4) * (1 - math.cos(t / eps)) - (e3 / 4) * (1 - math.cos(2 * t / eps)) + a * t + b * t ** 2 / 2 + c * t ** 4 / 4

    def y(t):
        return ((e3 / 4) * (t - eps * math.sin(t / eps)) - (e3 / 4) * (t - eps / 2 * math.sin(2 * t / eps))
                + a * t ** 2 / 2 + b * t ** 3 / 6 + c * t ** 5 / 20)

    u2 = loop_controls(eps)[1]

    if psi == "x2":
        def zdot(t):
            xv, yv = x(t), y(t)
            return xv ** 3 + yv ** 2 + u2(t) * xv ** 2
    elif psi == "y2":
        def zdot(t):
            xv, yv = x(t), y(t)
            return xv ** 3 + (1 + u2(t)) * yv ** 2
    else:
        raise ValueError("psi must be 'x2' or 'y2'")
    z, _ = quad(zdot, 0.0, T, epsabs=1e-22, epsrel=1e-13, limit=400)
    return np.array([x(T), y(T), z])


def det_closed_form(eps: float) -> float:
    """Reference determinant ``-pi^5 eps^14 (12/5 pi^2 eps - 45/4 eps - 184/27 pi^2 + 8102/81)``."""
    p2 = math.pi ** 2
    return -math.pi ** 5 * eps ** 14 * (12 / 5 * p2 * eps - 45 / 4 * eps - 184 / 27 * p2 + 8102 / 81)


@dataclass(frozen=True)
class Example23Record:
    eps: float
    loop_endpoint: np.ndarray
    loop_residual: float
    loop_residual_xyz: float
    F_jacobian: np.ndarray
    F_jacobian_xyz: np.ndarray
    det_numeric: float
    det_xyz: float
    det_closed_form: float

    @property
    def det_relative_deviation(self) -> float:
        return abs(self.det_numeric - self.det_closed_form) / abs(self.det_closed_form)


def reproduce_example23(eps: float = 0.1, steps: int = 100_000, fd_step: Optional[float] = None,
                        psi: str = "x2") -> Example23Record:
    """Loop residual and endpoint-map Jacobian at ``(a, b, c) = 0``.

    The RK4 route differentiates the integrated system; the quadrature route
    differentiates :func:`endpoint_xyz` (with the given ``psi``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    h = fd_step if fd_step is not None else 1e-6 * eps ** 2
    if not h > 0:
        raise ValueError("fd_step must be positive")
    system = _example23_system("x2")
    rows = [np.zeros(3)]
    for i in range(3):
        for sgn in (1.0, -1.0):
            p = np.zeros(3)
            p[i] = sgn * h
            rows.append(p)
    Z = endpoint_rk4(eps, np.array(rows), steps, system)
    loop = Z[0]
    J = np.column_stack([(Z[1 + 2 * i] - Z[2 + 2 * i]) / (2 * h) for i in range(3)])
    if not np.isfinite(J).all():
        raise DivergenceError(steps)
    Zq = [endpoint_xyz(eps, *p, psi=psi) for p in rows]
    Jq = np.column_stack([(Zq[1 + 2 * i] - Zq[2 + 2 * i]) / (2 * h) for i in range(3)])
    return Example23Record(
        eps=eps,
        loop_endpoint=loop,
        loop_residual=float(np.max(np.abs(loop))),
        loop_residual_xyz=float(np.max(np.abs(Zq[0]))),
        F_jacobian=J,
        F_jacobian_xyz=Jq,
        det_numeric=float(np.linalg.det(J)),
        det_xyz=float(np.linalg.det(Jq)),
        det_closed_form=det_closed_form(eps),
    )
