"""Exact multivariate polynomials with rational coefficients.

Coefficients are :class:`fractions.Fraction` values, so every bracket value
computed downstream is exact. A polynomial is an immutable map from exponent
tuples to nonzero coefficients.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Sequence

__all__ = [
    "DimensionError",
    "MultiPoly",
    "poly_arith",
    "poly_partial",
    "poly_eval",
]


class DimensionError(ValueError):
    """Raised when operands disagree on the number of variables or components."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, _RationalABC)):
        return Fraction(c)
    raise TypeError(f"exact coefficient required, got {type(c).__name__}")


def _grlex_key(exps: tuple[int, ...]):
    return (sum(exps), exps)


class MultiPoly:
    """Polynomial in ``nvars`` variables with exact rational coefficients.

    Parameters
    ----------
    nvars : int
        Number of variables.
    terms : mapping, optional
        Exponent tuple -> coefficient. Zero coefficients are dropped.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], object] | None = None):
        if nvars < 1:
            raise DimensionError("a polynomial needs at least one variable")
        self.nvars = nvars
        clean: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for exps, c in terms.items():
                exps = tuple(exps)
                if len(exps) != nvars or any(e < 0 for e in exps):
                    raise DimensionError(f"bad exponent vector {exps} for {nvars} variables")
                c = _as_fraction(c)
                if c:
                    clean[exps] = clean.get(exps, 0) + c
                    if not clean[exps]:
                        del clean[exps]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "MultiPoly":
        # terms already canonical: no zeros, correct lengths
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "MultiPoly":
        c = _as_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "MultiPoly":
        if not 0 <= index < nvars:
            raise DimensionError(f"variable index {index} out of range for {nvars} variables")
        exps = tuple(1 if i == index else 0 for i in range(nvars))
        return cls._raw(nvars, {exps: Fraction(1)})

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        """Copy of the term map."""
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    # -- arithmetic -----------------------------------------------------
    def _check(self, other: "MultiPoly") -> None:
        if self.nvars != other.nvars:
            raise DimensionError(f"variable count mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            self._check(other)
            return other
        return MultiPoly.constant(self.nvars, other)

    def __add__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            try:
                c = _as_fraction(other)
            except TypeError:
                return NotImplemented
            if not c:
                return MultiPoly.zero(self.nvars)
            return MultiPoly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})
        self._check(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = MultiPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == MultiPoly.constant(self.nvars, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # -- calculus -------------------------------------------------------
    def partial(self, index: int) -> "MultiPoly":
        """Exact partial derivative with respect to variable ``index``."""
        if not 0 <= index < self.nvars:
            raise DimensionError(f"variable index {index} out of range for {self.nvars} variables")
        out = {}
        for e, c in self._terms.items():
            k = e[index]
            if k:
                e2 = e[:index] + (k - 1,) + e[index + 1:]
                out[e2] = c * k
        return MultiPoly._raw(self.nvars, out)

    def truncate(self, max_degree: int) -> "MultiPoly":
        """Drop every term of total degree above ``max_degree``."""
        if max_degree < 0:
            return MultiPoly.zero(self.nvars)
        return MultiPoly._raw(
            self.nvars, {e: c for e, c in self._terms.items() if sum(e) <= max_degree}
        )

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = point[0]
        return self.eval(point)

    def eval(self, point: Sequence):
        """Evaluate at ``point``.

        Exact for rational points; floats propagate to a float result.
        """
        if len(point) != self.nvars:
            raise DimensionError(f"point has length {len(point)}, expected {self.nvars}")
        if not self._terms:
            return Fraction(0) if _all_exact(point) else 0.0
        # Horner in the first variable, recursing on the rest.
        return _horner(self._terms, tuple(point), 0)

    # -- display --------------------------------------------------------
    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in descending graded-lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if len(names) != self.nvars:
            raise DimensionError("wrong number of variable names")
        if not self._terms:
            return "0"
        pieces = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                (n if e == 1 else f"{n}^{e}") for n, e in zip(names, exps) if e
            )
            mag = abs(c)
            if not mono:
                body = _frac_str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_frac_str(mag)}*{mono}"
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {self.to_string()!r})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _all_exact(point: Iterable) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in point)


def _horner(terms: Mapping[tuple[int, ...], Fraction], point: tuple, var: int):
    """Evaluate ``terms`` (exponents from ``var`` onward) at ``point``."""
    if var == len(point):
        (c,) = terms.values()
        return c if _all_exact(point) else float(c)
    groups: dict[int, dict] = {}
    for e, c in terms.items():
        groups.setdefault(e[var], {})[e] = c
    x = point[var]
    acc = None
    for k in range(max(groups), -1, -1):
        if acc is not None:
            acc = acc * x
        if k in groups:
            sub = groups[k]
            if var + 1 == len(point):
                val = sum(sub.values())
                val = val if _all_exact(point) else float(val)
            else:
                val = _horner(sub, point, var + 1)
            acc = val if acc is None else acc + val
    if acc is None:
        acc = 0
    return acc


def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    """Apply ``op`` in {"add", "sub", "mul"} to two polynomials."""
    if a.nvars != b.nvars:
        raise DimensionError(f"variable count mismatch: {a.nvars} vs {b.nvars}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def poly_partial(p: MultiPoly, var_index: int) -> MultiPoly:
    return p.partial(var_index)


def poly_eval(p: MultiPoly, point: Sequence):
    return p.eval(point)
