"""Exact rational linear algebra: canonical spans and membership tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Optional, Sequence

from .polycore import DimensionError

__all__ = [
    "Subspace",
    "ShiftSolution",
    "span_from_vectors",
    "contains",
    "rank",
    "solve_scalar_shift",
]

Vector = tuple[Fraction, ...]


def _vec(v: Sequence, n: int) -> Vector:
    if len(v) != n:
        raise DimensionError(f"vector of length {len(v)} in ambient dimension {n}")
    return tuple(Fraction(x) for x in v)


def _integer_row(v: Vector) -> list[int]:
    den = lcm(*(x.denominator for x in v)) if v else 1
    row = [int(x * den) for x in v]
    g = 0
    for x in row:
        g = gcd(g, x)
    return [x // g for x in row] if g > 1 else row


def _rref(vectors: Iterable[Vector], n: int) -> tuple[Vector, ...]:
    """Fraction-free elimination on integer rows, normalized at the end."""
    rows = [_integer_row(v) for v in vectors]
    rows = [r for r in rows if any(r)]
    pivots: list[int] = []
    reduced: list[list[int]] = []
    col = 0
    while rows and col < n:
        idx = next((i for i, r in enumerate(rows) if r[col]), None)
        if idx is None:
            col += 1
            continue
        piv = rows.pop(idx)
        p = piv[col]
        new_rows = []
        for r in rows:
            if r[col]:
                q = r[col]
                r = [p * a - q * b for a, b in zip(r, piv)]
                g = 0
                for x in r:
                    g = gcd(g, x)
                if g == 0:
                    continue
                r = [x // g for x in r]
            new_rows.append(r)
        rows = new_rows
        # clear this column from rows already reduced
        for k, r in enumerate(reduced):
            if r[col]:
                q = r[col]
                reduced[k] = [p * a - q * b for a, b in zip(r, piv)]
        reduced.append(piv)
        pivots.append(col)
        col += 1
    out = []
    for r, c in zip(reduced, pivots):
        lead = r[c]
        out.append(tuple(Fraction(x, lead) for x in r))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of rational vectors, stored as a reduced row-echelon basis.

    ``truncation`` and ``saturated`` are bookkeeping for spans of Lie
    brackets computed up to a maximal word length; they do not take part
    in equality.
    """

    n: int
    basis: tuple[Vector, ...] = ()
    truncation: Optional[int] = None
    saturated: Optional[bool] = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x) for row in self.basis)

    def reduce(self, v: Sequence) -> Vector:
        """Residual of ``v`` after eliminating the pivot columns of the basis."""
        r = list(_vec(v, self.n))
        for row, p in zip(self.basis, self.pivots):
            c = r[p]
            if c:
                r = [a - c * b for a, b in zip(r, row)]
        return tuple(r)

    def __contains__(self, v) -> bool:
        return not any(self.reduce(v))

    def __add__(self, other: "Subspace") -> "Subspace":
        if not isinstance(other, Subspace):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError("ambient dimensions differ")
        return span_from_vectors(self.basis + other.basis, self.n)

    def with_vectors(self, vectors: Iterable[Sequence]) -> "Subspace":
        return span_from_vectors(list(self.basis) + [_vec(v, self.n) for v in vectors], self.n)

    def issubspace(self, other: "Subspace") -> bool:
        return all(row in other for row in self.basis)

    def is_full(self) -> bool:
        return self.dim == self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.n == other.n and self.basis == other.basis

    def __hash__(self) -> int:
        return hash((self.n, self.basis))

    def __repr__(self) -> str:
        rows = ", ".join("(" + ", ".join(str(x) for x in r) + ")" for r in self.basis)
        return f"Subspace(n={self.n}, basis=[{rows}])"


def span_from_vectors(vectors: Iterable[Sequence], n: int, *, truncation=None, saturated=None) -> Subspace:
    vecs = [_vec(v, n) for v in vectors]
    return Subspace(n, _rref(vecs, n), truncation, saturated)


def contains(S: Subspace, v: Sequence) -> bool:
    return v in S


def rank(vectors: Sequence[Sequence], n: int) -> int:
    return len(_rref([_vec(v, n) for v in vectors], n))


@dataclass(frozen=True)
class ShiftSolution:
    """Solution set of ``{beta : v + beta*w in S}``.

    ``kind`` is ``"none"``, ``"unique"`` (with ``beta``) or ``"all"``.
    """

    kind: str
    beta: Optional[Fraction] = field(default=None)

    def __post_init__(self):
        if self.kind not in ("none", "unique", "all"):
            raise ValueError(f"bad kind {self.kind!r}")
        if (self.kind == "unique") != (self.beta is not None):
            raise ValueError("beta is given exactly for unique solutions")


def solve_scalar_shift(v: Sequence, w: Sequence, S: Subspace) -> ShiftSolution:
    """Solve ``v + beta*w in S`` for the scalar ``beta``."""
    rv = S.reduce(v)
    rw = S.reduce(w)
    if not any(rw):
        return ShiftSolution("all") if not any(rv) else ShiftSolution("none")
    j = next(i for i, x in enumerate(rw) if x)
    beta = -rv[j] / rw[j]
    if any(a + beta * b for a, b in zip(rv, rw)):
        return ShiftSolution("none")
    return ShiftSolution("unique", beta)
