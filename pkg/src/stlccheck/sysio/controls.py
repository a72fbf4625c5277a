"""Control signals built from polynomial and sinusoidal atoms.

A control file assigns ``u1`` and ``u2``; parameters are plain names bound
to floats, either passed by the caller or declared in the file::

    param eps = 0.1
    u1 = 1/4*eps^2*sin(t/eps) - 1/2*eps^2*sin(2*t/eps)
    u2 = 5/16*eps^2*cos(t/eps) - 3/4*eps^2*cos(2*t/eps)

Piecewise signals give one line per segment, ``u1 @ [0, 0.5] = 1``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .grammar import ParseError, Parser

__all__ = ["Atom", "Segment", "ControlSignal", "parse_control_expr", "parse_controls", "load_controls"]


@dataclass(frozen=True)
class Atom:
    """``coeff * t**power`` (kind "poly") or ``coeff * sin/cos(omega*t + phase)``."""

    kind: str
    coeff: float
    power: int = 0
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("poly", "sin", "cos"):
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if not math.isfinite(self.coeff):
            raise ValueError("atom coefficient must be finite")
        if self.kind == "poly" and self.power < 0:
            raise ValueError("polynomial atoms need a nonnegative power")

    def __call__(self, t):
        if self.kind == "poly":
            return self.coeff * t**self.power if self.power else self.coeff + 0 * t
        fn = np.sin if self.kind == "sin" else np.cos
        return self.coeff * fn(self.omega * t + self.phase)


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    atoms: tuple[Atom, ...] = ()

    def __call__(self, t):
        out = 0.0 * np.asarray(t, dtype=float)
        for a in self.atoms:
            out = out + a(t)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def is_polynomial(self) -> bool:
        return all(a.kind == "poly" for a in self.atoms)

    def poly_coeffs(self) -> np.ndarray:
        """Coefficients in increasing powers of t (polynomial segments only)."""
        if not self.is_polynomial:
            raise ValueError("segment has sinusoidal atoms")
        deg = max((a.power for a in self.atoms), default=0)
        c = np.zeros(deg + 1)
        for a in self.atoms:
            c[a.power] += a.coeff
        return c


@dataclass(frozen=True)
class ControlSignal:
    """Scalar control ``u(t)``: atoms summed on consecutive time segments.

    Segment ``i`` is used on ``[start_i, end_i)``; the last one also covers its
    right end. An unsegmented signal has one segment ``[0, inf)``.
    """

    segments: tuple[Segment, ...] = field(default_factory=lambda: (Segment(0.0, math.inf),))

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ValueError("a signal needs at least one segment")
        if segs[0].start != 0.0:
            raise ValueError("segments must start at t = 0")
        for a, b in zip(segs, segs[1:]):
            if a.end != b.start:
                raise ValueError("segments must be contiguous, ordered and disjoint")
        for s in segs:
            if not s.end > s.start:
                raise ValueError("empty or reversed segment")

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_atoms(cls, atoms: Sequence[Atom]) -> "ControlSignal":
        return cls((Segment(0.0, math.inf, tuple(atoms)),))

    @classmethod
    def zero(cls) -> "ControlSignal":
        return cls()

    @classmethod
    def constant(cls, c: float) -> "ControlSignal":
        return cls.from_atoms([Atom("poly", float(c))] if c else [])

    @classmethod
    def piecewise_constant(cls, breaks: Sequence[float], values: Sequence[float]) -> "ControlSignal":
        """``values[i]`` on ``[breaks[i], breaks[i+1])``; ``breaks[0]`` must be 0."""
        if len(breaks) != len(values) + 1:
            raise ValueError("need one more break than values")
        segs = tuple(
            Segment(float(a), float(b), (Atom("poly", float(v)),) if v else ())
            for a, b, v in zip(breaks, breaks[1:], values)
        )
        return cls(segs)

    # -- queries --------------------------------------------------------
    @property
    def atoms(self) -> tuple[Atom, ...]:
        return tuple(a for s in self.segments for a in s.atoms)

    @property
    def horizon(self) -> float:
        return self.segments[-1].end

    @property
    def is_piecewise_polynomial(self) -> bool:
        return all(s.is_polynomial for s in self.segments)

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s.start for s in self.segments[1:])

    def segment_index(self, t: float) -> int:
        for i, s in enumerate(self.segments):
            if t < s.end:
                return i
        return len(self.segments) - 1

    def __call__(self, t):
        if np.ndim(t) == 0:
            if len(self.segments) == 1:
                return self.segments[0](t)
            return self.segments[self.segment_index(float(t))](t)
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for i, s in enumerate(self.segments):
            last = i == len(self.segments) - 1
            mask = (t >= s.start) & ((t <= s.end) if last else (t < s.end))
            if mask.any():
                out[mask] = s(t[mask])
        return out

    def sup_norm(self, T: float, samples: int = 2001) -> float:
        return float(np.max(np.abs(self(np.linspace(0.0, T, samples)))))


# ---------------------------------------------------------------------------
# expression algebra: linear combinations of atoms

def _key(a: Atom):
    return (a.kind, a.power, a.omega, a.phase)


class _Lin:
    """Linear combination of atoms, keyed by atom shape."""

    def __init__(self, terms=None):
        self.terms: dict = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def scalar(cls, c: float) -> "_Lin":
        return cls({("poly", 0, 0.0, 0.0): c})

    def scalar_value(self) -> Optional[float]:
        if all(k == ("poly", 0, 0.0, 0.0) for k in self.terms):
            return self.terms.get(("poly", 0, 0.0, 0.0), 0.0)
        return None

    def poly_degree(self) -> Optional[int]:
        if all(k[0] == "poly" for k in self.terms):
            return max((k[1] for k in self.terms), default=0)
        return None

    def __add__(self, o):
        out = dict(self.terms)
        for k, v in o.terms.items():
            out[k] = out.get(k, 0.0) + v
        return _Lin(out)

    def scale(self, c: float):
        return _Lin({k: v * c for k, v in self.terms.items()})

    def __mul__(self, o):
        s, so = self.scalar_value(), o.scalar_value()
        if s is not None:
            return o.scale(s)
        if so is not None:
            return self.scale(so)
        if self.poly_degree() is not None and o.poly_degree() is not None:
            out: dict = {}
            for (_, p1, _, _), c1 in self.terms.items():
                for (_, p2, _, _), c2 in o.terms.items():
                    k = ("poly", p1 + p2, 0.0, 0.0)
                    out[k] = out.get(k, 0.0) + c1 * c2
            return _Lin(out)
        return None

    def atoms(self) -> list[Atom]:
        return [Atom(k[0], v, k[1], k[2], k[3]) for k, v in sorted(self.terms.items(), key=str)]


def _eval(node, params: Mapping[str, float]) -> _Lin:
    (kind, *args), tok = node
    err = lambda msg: ParseError(msg, tok.line, tok.column)
    if kind == "num":
        return _Lin.scalar(float(args[0]))
    if kind == "id":
        name = args[0]
        if name == "t":
            return _Lin({("poly", 1, 0.0, 0.0): 1.0})
        if name in params:
            return _Lin.scalar(float(params[name]))
        if name == "pi":
            return _Lin.scalar(math.pi)
        raise err(f"unknown parameter {name!r}")
    if kind == "neg":
        return _eval(args[0], params).scale(-1.0)
    if kind in ("add", "sub"):
        a, b = _eval(args[0], params), _eval(args[1], params)
        return a + (b if kind == "add" else b.scale(-1.0))
    if kind == "mul":
        out = _eval(args[0], params) * _eval(args[1], params)
        if out is None:
            raise err("malformed atom: product of two time-dependent factors")
        return out
    if kind == "div":
        den = _eval(args[1], params).scalar_value()
        if den is None:
            raise err("malformed atom: division by a time-dependent quantity")
        if den == 0:
            raise err("division by zero")
        return _eval(args[0], params).scale(1.0 / den)
    if kind == "pow":
        base = _eval(args[0], params)
        ex = _eval(args[1], params).scalar_value()
        if ex is None:
            raise err("malformed atom: time-dependent exponent")
        bs = base.scalar_value()
        if bs is not None:
            return _Lin.scalar(bs**ex)
        if base.poly_degree() is None or ex != int(ex) or ex < 0:
            raise err("malformed atom: only nonnegative integer powers of polynomials in t")
        out = _Lin.scalar(1.0)
        for _ in range(int(ex)):
            out = out * base
        return out
    if kind == "call":
        name, arg = args
        if name not in ("sin", "cos"):
            raise err(f"unknown function {name!r}")
        a = _eval(arg, params)
        deg = a.poly_degree()
        if deg is None or deg > 1:
            raise err(f"argument of {name} must be affine in t")
        omega = a.terms.get(("poly", 1, 0.0, 0.0), 0.0)
        phase = a.terms.get(("poly", 0, 0.0, 0.0), 0.0)
        if omega == 0.0:
            return _Lin.scalar(math.sin(phase) if name == "sin" else math.cos(phase))
        return _Lin({(name, 0, omega, phase): 1.0})
    raise err(f"unsupported construct {kind!r}")


def parse_control_expr(text: str, parameters: Mapping[str, float] | None = None, *, line=1, column=1) -> list[Atom]:
    """Parse one control expression into its atoms."""
    ast = Parser(text, exact=False, line=line, column=column).parse()
    return _eval(ast, parameters or {}).atoms()


def _scalar_expr(text: str, params, line: int, column: int) -> float:
    ast = Parser(text, exact=False, line=line, column=column).parse()
    v = _eval(ast, params).scalar_value()
    if v is None:
        raise ParseError("expected a constant", line, column)
    return v


def parse_constant(text: str, parameters: Mapping[str, float] | None = None) -> float:
    """Evaluate a constant expression such as ``2*pi*eps``."""
    return _scalar_expr(text, dict(parameters or {}), 1, 1)


_ASSIGN = re.compile(r"^\s*(u[12])\s*(?:@\s*\[([^\]]*)\])?\s*=(.*)$")
_PARAM = re.compile(r"^\s*param\s+([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$")


def parse_controls(text: str, parameters: Mapping[str, float] | None = None) -> tuple[ControlSignal, ControlSignal]:
    """Parse a control file into ``(u1, u2)``; missing signals are zero.

    ``parameters`` override ``param`` declarations in the file.
    """
    params: dict[str, float] = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _PARAM.match(line)
        if m:
            name, value = m.group(1), m.group(2)
            params[name] = _scalar_expr(value, params, lineno, m.start(2) + 1)
            continue
        m = _ASSIGN.match(line)
        if not m:
            raise ParseError("expected 'u1 = ...', 'u2 = ...' or 'param name = value'", lineno, 1)
        pending.append((m, lineno))
    if parameters:
        params.update({k: float(v) for k, v in parameters.items()})

    pieces: dict[str, list] = {"u1": [], "u2": []}
    for m, lineno in pending:
        name, interval, expr = m.group(1), m.group(2), m.group(3)
        atoms = parse_control_expr(expr, params, line=lineno, column=m.start(3) + 1)
        if interval is None:
            pieces[name].append((None, atoms, lineno))
        else:
            parts = interval.split(",")
            if len(parts) != 2:
                raise ParseError("interval must read [start, end]", lineno, m.start(2) + 1)
            a = _scalar_expr(parts[0], params, lineno, m.start(2) + 1)
            b = _scalar_expr(parts[1], params, lineno, m.start(2) + 1)
            pieces[name].append(((a, b), atoms, lineno))

    out = []
    for name in ("u1", "u2"):
        items = pieces[name]
        if not items:
            out.append(ControlSignal.zero())
        elif items[0][0] is None:
            if len(items) > 1:
                raise ParseError(f"{name} assigned twice", items[1][2], 1)
            out.append(ControlSignal.from_atoms(items[0][1]))
        else:
            if any(iv is None for iv, _, _ in items):
                raise ParseError(f"{name} mixes plain and piecewise assignments", items[0][2], 1)
            try:
                out.append(ControlSignal(tuple(Segment(a, b, tuple(at)) for (a, b), at, _ in items)))
            except ValueError as exc:
                raise ParseError(f"{name}: {exc}", items[0][2], 1) from None
    return out[0], out[1]


def load_controls(path, parameters: Mapping[str, float] | None = None):
    with open(path, encoding="utf-8") as fh:
        return parse_controls(fh.read(), parameters)
