"""Control-affine systems and the ``.sys`` file format.

A system file holds UTF-8 ``key = value`` lines; ``#`` starts a comment::

    dim = 2
    vars = [x, y]
    f0 = ["y^2", "2*y"]
    f1 = ["y", "-1"]
    f2 = ["0", "x"]      # optional: absent means single input
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..liealg import VectorField
from ..polycore import DimensionError, MultiPoly
from .grammar import ParseError, Parser

__all__ = [
    "ControlAffineSystem",
    "EquilibriumError",
    "UnknownIdentifierError",
    "parse_poly",
    "parse_system",
    "serialize_system",
    "load_system",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class EquilibriumError(ValueError):
    """The fields violate f0(0) = 0, f2(0) = 0, f1(0) != 0."""

    def __init__(self, message: str, field: str, component: Optional[int] = None):
        self.field = field
        self.component = component
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    pass


def _poly_from_ast(node, index: dict[str, int], n: int) -> MultiPoly:
    (kind, *args), tok = node
    if kind == "num":
        return MultiPoly.constant(n, args[0])
    if kind == "id":
        name = args[0]
        if name not in index:
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.line, tok.column)
        return MultiPoly.variable(n, index[name])
    if kind == "neg":
        return -_poly_from_ast(args[0], index, n)
    if kind in ("add", "sub", "mul"):
        a = _poly_from_ast(args[0], index, n)
        b = _poly_from_ast(args[1], index, n)
        return a + b if kind == "add" else a - b if kind == "sub" else a * b
    if kind == "pow":
        base = _poly_from_ast(args[0], index, n)
        (_, k), _ = args[1]
        return base ** int(k)
    raise ParseError(f"unsupported construct {kind!r}", tok.line, tok.column)


def parse_poly(text: str, vars: Sequence[str], *, line: int = 1, column: int = 1) -> MultiPoly:
    """Parse an exact polynomial over the variables ``vars``."""
    index = {v: i for i, v in enumerate(vars)}
    ast = Parser(text, exact=True, line=line, column=column).parse()
    return _poly_from_ast(ast, index, len(vars))


@dataclass(frozen=True)
class ControlAffineSystem:
    """``z' = f0(z) + u1 f1(z) + u2 f2(z)`` with an equilibrium at the origin.

    ``f2`` is ``None`` for a single-input system.
    """

    names: tuple[str, ...]
    f0: VectorField
    f1: VectorField
    f2: Optional[VectorField] = None

    def __post_init__(self):
        n = len(self.names)
        if len(set(self.names)) != n:
            raise ValueError("variable names must be distinct")
        for label, f in (("f0", self.f0), ("f1", self.f1), ("f2", self.f2)):
            if f is not None and f.dim != n:
                raise DimensionError(f"{label} has {f.dim} components, expected {n}")

    @classmethod
    def from_strings(cls, names: Sequence[str], f0, f1, f2=None, *, validate: bool = True):
        names = tuple(names)
        mk = lambda comps: VectorField([parse_poly(c, names) for c in comps])
        sys_ = cls(names, mk(f0), mk(f1), mk(f2) if f2 is not None else None)
        if validate:
            sys_.check_equilibrium()
        return sys_

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def single_input(self) -> bool:
        return self.f2 is None

    @property
    def alphabet(self) -> tuple[int, ...]:
        return (0, 1) if self.f2 is None else (0, 1, 2)

    def f2_vanishes(self) -> bool:
        return self.f2 is None or self.f2.is_zero()

    def field(self, letter: int) -> VectorField:
        if letter == 0:
            return self.f0
        if letter == 1:
            return self.f1
        if letter == 2:
            if self.f2 is None:
                raise ValueError("letter 2 used on a single-input system")
            return self.f2
        raise ValueError(f"no field for letter {letter!r}")

    @property
    def fields(self) -> tuple[VectorField, ...]:
        return (self.f0, self.f1) if self.f2 is None else (self.f0, self.f1, self.f2)

    def check_equilibrium(self) -> None:
        for label, f in (("f0", self.f0), ("f2", self.f2)):
            if f is None:
                continue
            for i, v in enumerate(f.at_origin()):
                if v:
                    raise EquilibriumError(
                        f"{label}(0) != 0: component {i + 1} ({self.names[i]}) equals {v}",
                        label,
                        i,
                    )
        if not any(self.f1.at_origin()):
            raise EquilibriumError("f1(0) = 0: the control field must not vanish at 0", "f1")

    def shifted(self, beta) -> "ControlAffineSystem":
        """The system seen from ``u2 = beta + v2``: drift ``f0 + beta f2``."""
        if self.f2 is None:
            raise ValueError("shift needs a second control")
        return ControlAffineSystem(self.names, self.f0 + self.f2 * Fraction(beta), self.f1, self.f2)

    def without_second_input(self) -> "ControlAffineSystem":
        return ControlAffineSystem(self.names, self.f0, self.f1, None)

    def digest(self) -> str:
        return hashlib.sha256(serialize_system(self).encode("utf-8")).hexdigest()[:16]


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def _split_list(value: str, lineno: int, col: int) -> list[tuple[str, int]]:
    """Split ``[a, "b", ...]`` into items with their column offsets."""
    v = value.rstrip()
    if not (v.startswith("[") and v.endswith("]")):
        raise ParseError("expected a bracketed list", lineno, col)
    items, buf, start, quoted = [], [], None, False
    for j, ch in enumerate(v[1:-1], start=col + 1):
        if ch == '"':
            quoted = not quoted
            buf.append(ch)
            if start is None:
                start = j
        elif ch == "," and not quoted:
            items.append(("".join(buf).strip(), start if start is not None else j))
            buf, start = [], None
        else:
            if start is None and not ch.isspace():
                start = j
            buf.append(ch)
    if quoted:
        raise ParseError("unterminated string", lineno, col)
    tail = "".join(buf).strip()
    if tail or items:
        items.append((tail, start if start is not None else col))
    return items


def parse_system(text: str, *, validate: bool = True) -> ControlAffineSystem:
    """Parse the system file format and check the equilibrium conditions exactly."""
    entries: dict[str, tuple[str, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, 1)
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in ("dim", "vars", "f0", "f1", "f2"):
            raise ParseError(f"unknown key {key!r}", lineno, 1)
        if key in entries:
            raise ParseError(f"duplicate key {key!r}", lineno, 1)
        col = len(line) - len(value.lstrip()) + 1
        entries[key] = (value.strip(), lineno, col)
    for key in ("vars", "f0", "f1"):
        if key not in entries:
            raise ParseError(f"missing key {key!r}", 1, 1)

    value, lineno, col = entries["vars"]
    names = []
    for item, c in _split_list(value, lineno, col):
        name = item.strip('"')
        if not _IDENT.match(name):
            raise ParseError(f"bad variable name {item!r}", lineno, c)
        names.append(name)
    if len(set(names)) != len(names):
        raise ParseError("variable names must be distinct", lineno, col)
    if "dim" in entries:
        dv, dl, dc = entries["dim"]
        if not dv.isdigit() or int(dv) < 1:
            raise ParseError("dim must be a positive integer", dl, dc)
        if int(dv) != len(names):
            raise DimensionError(f"dim = {dv} but {len(names)} variables declared")

    fields = {}
    for key in ("f0", "f1", "f2"):
        if key not in entries:
            continue
        value, lineno, col = entries[key]
        items = _split_list(value, lineno, col)
        if len(items) != len(names):
            raise DimensionError(
                f"{key} has {len(items)} components but the system has dimension {len(names)}"
            )
        comps = []
        for item, c in items:
            if not (len(item) >= 2 and item[0] == item[-1] == '"'):
                raise ParseError("components must be double-quoted strings", lineno, c)
            comps.append(parse_poly(item[1:-1], names, line=lineno, column=c + 1))
        fields[key] = VectorField(comps)
    sys_ = ControlAffineSystem(tuple(names), fields["f0"], fields["f1"], fields.get("f2"))
    if validate:
        sys_.check_equilibrium()
    return sys_


def serialize_system(system: ControlAffineSystem) -> str:
    """Canonical text form; parses back to an identical system."""
    names = list(system.names)
    lines = [f"dim = {system.dim}", f"vars = [{', '.join(names)}]"]
    for label, f in (("f0", system.f0), ("f1", system.f1), ("f2", system.f2)):
        if f is None:
            continue
        comps = ", ".join(f'"{s}"' for s in f.to_strings(names))
        lines.append(f"{label} = [{comps}]")
    return "\n".join(lines) + "\n"


def load_system(path, *, validate: bool = True) -> ControlAffineSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read(), validate=validate)
