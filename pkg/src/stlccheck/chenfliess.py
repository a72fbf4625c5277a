"""Chen-Fliess expansion of an output along a control-affine system.

For a multi-index ``I = (i1, ..., ik)`` the operator ``f_I = f_{i1} ... f_{ik}``
acts on a polynomial by applying ``f_{ik}`` first, and the matching iterated
integral has ``u_{i1}`` innermost::

    int_0^T u_{ik}(t_k) int_0^{t_k} ... int_0^{t_2} u_{i1}(t_1) dt_1 ... dt_k

with ``u_0 = 1``. With this pairing the term of ``I = (1, 1, 0)`` equals
``1/2 int_0^T v1(s)^2 ds`` where ``v1`` is the primitive of ``u1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import cumulative_simpson

from .liealg import BracketEvaluator, VectorField, Word
from .polycore import DimensionError, MultiPoly
from .sysio.controls import ControlSignal

__all__ = [
    "QuadratureError",
    "QuadConfig",
    "MultiIndex",
    "DiffOperator",
    "apply_operator",
    "operator_for_index",
    "PiecewisePoly",
    "adaptive_simpson",
    "iterated_integral",
    "IteratedIntegrals",
    "series_truncated",
    "series_terms",
    "w_r_direct",
    "w_r_ibp",
    "w_r_compare",
    "build_W_operator",
]


class QuadratureError(ArithmeticError):
    """Quadrature did not reach its tolerance; ``estimate`` is the last value."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (estimate {estimate!r})")
        self.estimate = estimate


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature settings.

    ``max_depth`` bounds the number of grid doublings (or recursion depth for
    the adaptive rule); ``max_points`` bounds the grid size per segment.
    """

    tol: float = 1e-10
    max_depth: int = 24
    initial_points: int = 16
    max_points: int = 1 << 22

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")


# -- multi-indices and operators --------------------------------------------

class MultiIndex(tuple):
    """Nonempty tuple of letters in {0, 1, 2}."""

    def __new__(cls, letters):
        if isinstance(letters, str):
            letters = [int(c) for c in letters if c not in ", ()"]
        t = tuple(int(i) for i in letters)
        if not t:
            raise ValueError("multi-index must be nonempty")
        if any(i not in (0, 1, 2) for i in t):
            raise ValueError(f"letters must be 0, 1 or 2: {t}")
        return super().__new__(cls, t)

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


Factor = Union[VectorField, Word, "DiffOperator"]


@dataclass(frozen=True)
class DiffOperator:
    """Product ``c * A1 A2 ... Am`` of first-order operators, applied right to left.

    Factors are vector fields, bracket words (resolved against a system when
    applied) or nested ``DiffOperator`` products.
    """

    factors: tuple
    coeff: Fraction = Fraction(1)
    label: str = ""

    def __post_init__(self):
        dims = {f.dim for f in self.factors if isinstance(f, VectorField)}
        if len(dims) > 1:
            raise DimensionError("operator factors have different dimensions")

    def __mul__(self, other: "DiffOperator") -> "DiffOperator":
        return DiffOperator(self.factors + other.factors, self.coeff * other.coeff)

    def __neg__(self) -> "DiffOperator":
        return DiffOperator(self.factors, -self.coeff, self.label)

    def words(self) -> tuple:
        return tuple(f for f in self.factors if isinstance(f, Word))

    def __str__(self) -> str:
        if self.label:
            return self.label
        body = " ".join(f"({f})" if isinstance(f, (Word, DiffOperator)) else "f" for f in self.factors)
        return body if self.coeff == 1 else f"{self.coeff} * {body}"


def operator_for_index(system, I: Sequence[int]) -> DiffOperator:
    I = MultiIndex(I)
    return DiffOperator(tuple(system.field(i) for i in I), label="f_" + "".join(map(str, I)))


def apply_operator(op, phi: MultiPoly, system=None) -> MultiPoly:
    """Apply ``op`` to ``phi``, rightmost factor first.

    ``op`` may also be a bare ``VectorField``. Word factors need ``system``.
    """
    if isinstance(op, VectorField):
        return op.apply(phi)
    ev = BracketEvaluator(system) if system is not None else None
    return _apply(op, phi, ev)


def _apply(op: DiffOperator, phi: MultiPoly, ev) -> MultiPoly:
    out = phi
    for f in reversed(op.factors):
        if isinstance(f, DiffOperator):
            out = _apply(f, out, ev)
            continue
        if isinstance(f, Word):
            if ev is None:
                raise ValueError("a system is needed to apply bracket words")
            f = ev.field(f)
        if f.dim != out.nvars:
            raise DimensionError("operator and polynomial dimensions differ")
        out = f.apply(out)
    return out * op.coeff if op.coeff != 1 else out


# -- piecewise polynomials on [0, T] ----------------------------------------

class PiecewisePoly:
    """Piecewise polynomial in the global time variable on consecutive intervals."""

    def __init__(self, breaks: Sequence[float], pieces: Sequence[Polynomial]):
        if len(breaks) != len(pieces) + 1:
            raise ValueError("need one more break than pieces")
        self.breaks = np.asarray(breaks, dtype=float)
        self.pieces = list(pieces)

    @classmethod
    def from_signal(cls, u: Optional[ControlSignal], breaks: Sequence[float]) -> "PiecewisePoly":
        """Restrict ``u`` to the grid ``breaks``; ``None`` means the constant 1."""
        pieces = []
        for a, b in zip(breaks, breaks[1:]):
            if u is None:
                pieces.append(Polynomial([1.0]))
            else:
                seg = u.segments[u.segment_index(0.5 * (a + b))]
                pieces.append(Polynomial(seg.poly_coeffs()))
        return cls(breaks, pieces)

    def __mul__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, [p * q for p, q in zip(self.pieces, other.pieces)])

    def scale_by_power(self, j: int) -> "PiecewisePoly":
        m = Polynomial([0.0] * j + [1.0])
        return PiecewisePoly(self.breaks, [p * m for p in self.pieces])

    def primitive(self) -> "PiecewisePoly":
        """Continuous primitive vanishing at the first break."""
        out, carry = [], 0.0
        for a, b, p in zip(self.breaks, self.breaks[1:], self.pieces):
            P = p.integ()
            P = P - P(a) + carry
            out.append(P)
            carry = P(b)
        return PiecewisePoly(self.breaks, out)

    def end_value(self) -> float:
        return float(self.pieces[-1](self.breaks[-1]))

    def __call__(self, t: float) -> float:
        i = int(np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.pieces) - 1))
        return float(self.pieces[i](t))


def _grid(signals, T: float) -> list[float]:
    pts = {0.0, float(T)}
    for u in signals:
        if u is not None:
            pts.update(b for b in u.breakpoints() if 0.0 < b < T)
    return sorted(pts)


# -- scalar quadrature ------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_depth: int = 24) -> float:
    """Adaptive Simpson rule with Richardson correction."""
    if b == a:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or b - a < 1e-14:
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureError("adaptive Simpson reached its depth limit", left + right)
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


# -- iterated integrals -----------------------------------------------------

class IteratedIntegrals:
    """Iterated integrals of one control pair on ``[0, T]`` with prefix caching.

    Piecewise polynomial controls are integrated in closed form. Otherwise
    every segment is sampled on a uniform grid, integrated with cumulative
    Simpson and refined by doubling until two levels agree to ``cfg.tol``.
    """

    def __init__(self, controls: Sequence[Optional[ControlSignal]], T: float, cfg: QuadConfig = QuadConfig()):
        if not T > 0:
            raise ValueError("T must be positive")
        u1 = controls[0] if len(controls) > 0 else None
        u2 = controls[1] if len(controls) > 1 else None
        self.signals = {0: None, 1: u1 or ControlSignal.zero(), 2: u2 or ControlSignal.zero()}
        self.T = float(T)
        self.cfg = cfg
        self._poly_cache: dict[tuple, PiecewisePoly] = {}
        self._grid_cache: dict[tuple, np.ndarray] = {}

    def vanishes(self, I: Sequence[int]) -> bool:
        return any(i and self.signals[i].is_zero for i in I)

    def exact_path(self, I: Sequence[int]) -> bool:
        return all(i == 0 or self.signals[i].is_piecewise_polynomial for i in I)

    def __call__(self, I: Sequence[int]) -> float:
        I = MultiIndex(I)
        if self.vanishes(I):
            return 0.0
        if self.exact_path(I):
            return self._poly(I).end_value()
        return self._numeric(I)

    # closed form
    def _poly(self, I: tuple) -> PiecewisePoly:
        hit = self._poly_cache.get(I)
        if hit is not None:
            return hit
        grid = _grid(list(self.signals.values()), self.T)
        u = PiecewisePoly.from_signal(self.signals[I[-1]], grid)
        integrand = u if len(I) == 1 else u * self._poly(I[:-1])
        h = integrand.primitive()
        self._poly_cache[I] = h
        return h

    # sampled
    def _nodes(self, m: int) -> list[np.ndarray]:
        grid = _grid(list(self.signals.values()), self.T)
        return [np.linspace(a, b, m + 1) for a, b in zip(grid, grid[1:])]

    def _samples(self, I: tuple, m: int) -> list[np.ndarray]:
        key = (I, m)
        hit = self._grid_cache.get(key)
        if hit is not None:
            return hit
        prev = self._samples(I[:-1], m) if len(I) > 1 else None
        out, carry = [], 0.0
        for k, t in enumerate(self._nodes(m)):
            sig = self.signals[I[-1]]
            y = np.ones_like(t) if sig is None else np.asarray(sig(t), dtype=float)
            if prev is not None:
                y = y * prev[k]
            h = carry + cumulative_simpson(y, x=t, initial=0.0)
            out.append(h)
            carry = float(h[-1])
        self._grid_cache[key] = out
        return out

    def _numeric(self, I: tuple) -> float:
        cfg = self.cfg
        m = max(2, cfg.initial_points)
        last = self._samples(I, m)[-1][-1]
        for _ in range(cfg.max_depth):
            m *= 2
            if m > cfg.max_points:
                break
            cur = self._samples(I, m)[-1][-1]
            if abs(cur - last) <= cfg.tol * max(1.0, abs(cur)):
                return float(cur)
            last = cur
        raise QuadratureError(f"iterated integral {tuple(I)} did not converge", float(last))


def iterated_integral(I: Sequence[int], controls, T: float, cfg: QuadConfig = QuadConfig()) -> float:
    """Iterated integral of ``I`` over ``[0, T]`` with ``u_{i1}`` innermost."""
    return IteratedIntegrals(controls, T, cfg)(I)


# -- truncated series -------------------------------------------------------

def series_terms(system, phi: MultiPoly, L_max: int, *, skip_letters=()) -> list[tuple[tuple, Fraction]]:
    """Exact nonzero coefficients ``(f_I phi)(0)`` for ``len(I) <= L_max``.

    The partial derivative chain for index ``(i, *J)`` reuses ``f_J phi``;
    polynomials are cut to the degree that can still reach the constant
    term within the remaining applications.
    """
    if phi.nvars != system.dim:
        raise DimensionError("phi and system dimensions differ")
    letters = [i for i in system.alphabet if i not in skip_letters]
    fields = {i: system.field(i) for i in letters}
    out = []
    level = [((), phi.truncate(L_max))]
    for j in range(1, L_max + 1):
        nxt = []
        for J, psi in level:
            for i in letters:
                chi = fields[i].apply(psi).truncate(L_max - j)
                if chi.is_zero():
                    continue
                I = (i,) + J
                c = chi.constant_term()
                if c:
                    out.append((I, c))
                nxt.append((I, chi))
        level = nxt
    out.sort()
    return out


def series_truncated(system, phi: MultiPoly, controls, T: float, L_max: int, cfg: QuadConfig = QuadConfig()) -> float:
    """Partial Chen-Fliess sum over multi-indices of length at most ``L_max``, plus ``phi(0)``."""
    if L_max < 0:
        raise ValueError("L_max must be nonnegative")
    ints = IteratedIntegrals(controls, T, cfg)
    skip = tuple(i for i in (1, 2) if ints.signals[i].is_zero)
    total = float(phi.constant_term())
    for I, c in series_terms(system, phi, L_max, skip_letters=skip):
        total += float(c) * ints(I)
    return total


# -- w_r identities ---------------------------------------------------------

def _check_s(s: float) -> None:
    if not s > 0:
        raise ValueError("s must be positive")


def w_r_direct(u1: ControlSignal, r: int, s: float, tol: float = 1e-12) -> float:
    """``1/r! int_0^s u1(tau) int_0^tau (tau - sigma)^r u1(sigma) dsigma dtau`` by nested quadrature."""
    _check_s(s)
    grid = _grid([u1], s)

    def piece(a: float, b: float):
        return u1.segments[u1.segment_index(0.5 * (a + b))]

    def inner(tau: float) -> float:
        pts = [p for p in grid if p < tau] + [tau]
        total = 0.0
        for a, b in zip(pts, pts[1:]):
            seg = piece(a, b)
            if seg.atoms:
                total += adaptive_simpson(lambda sg: (tau - sg) ** r * seg(sg), a, b, tol)
        return total

    total = 0.0
    for a, b in zip(grid, grid[1:]):
        seg = piece(a, b)
        if seg.atoms:
            total += adaptive_simpson(lambda t: seg(t) * inner(t), a, b, tol)
    return total / math.factorial(r)


def w_r_ibp(u1: ControlSignal, r: int, s: float) -> float:
    """Integration-by-parts form of ``w_r(s)`` in terms of ``v1 = int u1``.

    ``r = 0``: ``v1(s)^2 / 2``; ``r = 1``: ``v1(s) int v1 - int v1^2``;
    ``r >= 2``: ``v1(s)/(r-1)! int (s-sigma)^{r-1} v1 - 1/(r-2)! int v1(tau) int (tau-sigma)^{r-2} v1``.
    """
    _check_s(s)
    if r < 0:
        raise ValueError("r must be nonnegative")
    if not u1.is_piecewise_polynomial:
        return _w_r_ibp_numeric(u1, r, s)
    grid = _grid([u1], s)
    v1 = PiecewisePoly.from_signal(u1, grid).primitive()
    vs = v1.end_value()
    if r == 0:
        return 0.5 * vs * vs
    if r == 1:
        return vs * v1.primitive().end_value() - (v1 * v1).primitive().end_value()

    def conv(p: int) -> PiecewisePoly:
        # tau -> int_0^tau (tau - sigma)^p v1(sigma) dsigma
        acc = None
        for j in range(p + 1):
            prim = v1.scale_by_power(j).primitive()
            term = prim.scale_by_power(p - j)
            c = math.comb(p, j) * (-1) ** j
            pieces = [q * c for q in term.pieces]
            acc = pieces if acc is None else [x + y for x, y in zip(acc, pieces)]
        return PiecewisePoly(grid, acc)

    first = vs * conv(r - 1).end_value() / math.factorial(r - 1)
    second = (v1 * conv(r - 2)).primitive().end_value() / math.factorial(r - 2)
    return first - second


def _w_r_ibp_numeric(u1: ControlSignal, r: int, s: float, tol: float = 1e-12) -> float:
    # one shared per-segment grid; (s - sigma)^p is expanded into moments of v1
    grid = _grid([u1], s)

    def cumulate(t, y, carry):
        out, c = [], carry
        for tt, yy in zip(t, y):
            piece = c + cumulative_simpson(yy, x=tt, initial=0.0)
            out.append(piece)
            c = piece[-1]
        return out

    def evaluate(n):
        t = [np.linspace(a, b, n + 1) for a, b in zip(grid, grid[1:])]
        v = cumulate(t, [u1(tt) for tt in t], 0.0)
        vs = v[-1][-1]
        if r == 0:
            return 0.5 * vs * vs
        if r == 1:
            return vs * cumulate(t, v, 0.0)[-1][-1] - cumulate(t, [x * x for x in v], 0.0)[-1][-1]

        def conv(p):
            # int_0^tau (tau - sigma)^p v1(sigma) dsigma on the grid
            total = [np.zeros_like(tt) for tt in t]
            for j in range(p + 1):
                mom = cumulate(t, [tt ** j * vv for tt, vv in zip(t, v)], 0.0)
                c = math.comb(p, j) * (-1) ** j
                total = [acc + c * tt ** (p - j) * m for acc, tt, m in zip(total, t, mom)]
            return total

        first = vs * conv(r - 1)[-1][-1] / math.factorial(r - 1)
        inner = conv(r - 2)
        second = cumulate(t, [vv * cc for vv, cc in zip(v, inner)], 0.0)[-1][-1] / math.factorial(r - 2)
        return first - second

    n, prev = 64, None
    while True:
        val = evaluate(n)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        if n >= 1 << 16:
            raise QuadratureError(f"w_{r} did not converge", val)
        prev, n = val, 2 * n


def w_r_compare(u1: ControlSignal, r: int, s: float) -> tuple[float, float]:
    """``(direct, ibp)`` evaluations of ``w_r(s)``."""
    return w_r_direct(u1, r, s), w_r_ibp(u1, r, s)


# -- W operators -------------------------------------------------------------

class _Slots:
    def __init__(self, pattern: str):
        self._it = iter(pattern)

    def take(self) -> Word:
        return Word.leaf(int(next(self._it)))


def _ad(slots: _Slots, m: int, inner: Callable[[], Word]) -> Word:
    outer = [slots.take() for _ in range(m)]
    w = inner()
    for p in reversed(outer):
        w = Word.br(p, w)
    return w


def _x(slots: _Slots, m: int) -> Callable[[], Word]:
    # ad^m_{f_p} f1
    return lambda: _ad(slots, m, lambda: Word.leaf(1))


def _ad2(slots: _Slots, x: Callable[[], Word]) -> Word:
    # ad^2_X f_p = [X, [X, f_p]]; each copy of X takes its own slots
    a = x()
    b = x()
    return Word.br(a, Word.br(b, slots.take()))


def build_W_operator(
    k: int,
    l: int,
    pattern: Optional[str] = None,
    mu: Optional[int] = None,
    nu: Optional[int] = None,
    variant: Optional[str] = None,
) -> DiffOperator:
    """Operator ``W^{k,l}`` with the ``l`` drift slots filled by ``pattern``.

    ``pattern`` is a word over ``{0, 2}`` of length ``l`` (default all zeros).
    Slots are filled left to right in the fully written expression, where
    ``ad^2_X Y`` means ``[X, [X, Y]]``.

    Forms: ``k = 1``: ``ad^l f1``. ``k = 2`` (``mu``): ``"w21"``
    ``ad^{l-2mu+1}(ad^2_{ad^{mu-1} f1} f0)`` when ``1 <= 2mu-1 <= l``, else
    ``"w22"`` ``(ad^{mu-1} f1)(ad^{l-mu+1} f1)`` when ``l/2 < mu < l+1``.
    ``k = 3`` (``variant`` ``"w31"``, ``"w32"`` or ``"w33"`` with ``nu``, ``mu``):
    ``-ad^{l-1-mu-2nu}[ad^mu f1, ad^2_{ad^nu f1} f0]``,
    ``(ad^{l-1-nu-2mu}(ad^2_{ad^mu f1} f0))(ad^nu f1)`` and
    ``(ad^{l-nu-mu} f1)(ad^mu f1)(ad^nu f1)``.
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    pattern = "0" * l if pattern is None else str(pattern)
    if len(pattern) != l or set(pattern) - {"0", "2"}:
        raise ValueError(f"pattern must be a word over {{0,2}} of length {l}")
    s = _Slots(pattern)
    tag = f"W^{{{k},{l}}}[{pattern}]"

    def need(cond: bool, msg: str):
        if not cond:
            raise ValueError(f"index constraint violated: {msg}")

    if k == 1:
        return DiffOperator((_x(s, l)(),), label=tag)
    if k == 2:
        need(mu is not None, "mu is required")
        if variant is None:
            variant = "w21" if 1 <= 2 * mu - 1 <= l else "w22"
        if variant == "w21":
            need(1 <= 2 * mu - 1 <= l, "1 <= 2mu-1 <= l")
            w = _ad(s, l - 2 * mu + 1, lambda: _ad2(s, _x(s, mu - 1)))
            return DiffOperator((w,), label=f"{tag} w21 mu={mu}")
        if variant == "w22":
            need(l / 2 < mu < l + 1, "l/2 < mu < l+1")
            a = _x(s, mu - 1)()
            b = _x(s, l - mu + 1)()
            return DiffOperator((a, b), label=f"{tag} w22 mu={mu}")
        raise ValueError(f"unknown variant {variant!r}")
    if k == 3:
        need(mu is not None and nu is not None, "mu and nu are required")
        if variant == "w31":
            need(0 <= nu <= mu and 2 * nu + mu <= l - 1, "0 <= nu <= mu, 2nu+mu <= l-1")
            w = _ad(s, l - 1 - mu - 2 * nu, lambda: Word.br(_x(s, mu)(), _ad2(s, _x(s, nu))))
            return DiffOperator((w,), Fraction(-1), label=f"{tag} w31 nu={nu} mu={mu}")
        if variant == "w32":
            need(0 <= nu and 0 <= mu and 2 * mu + nu <= l - 1, "0 <= nu, mu and 2mu+nu <= l-1")
            a = _ad(s, l - 1 - nu - 2 * mu, lambda: _ad2(s, _x(s, mu)))
            b = _x(s, nu)()
            return DiffOperator((a, b), label=f"{tag} w32 nu={nu} mu={mu}")
        if variant == "w33":
            need(0 <= nu <= mu <= l - nu - mu, "0 <= nu <= mu <= l-nu-mu")
            a = _x(s, l - nu - mu)()
            b = _x(s, mu)()
            c = _x(s, nu)()
            return DiffOperator((a, b, c), label=f"{tag} w33 nu={nu} mu={mu}")
        raise ValueError("k = 3 needs variant 'w31', 'w32' or 'w33'")
    raise ValueError("k must be 1, 2 or 3")
