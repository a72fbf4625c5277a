"""Polynomial vector fields, Lie brackets and bracket spans at the origin.

Bracket convention: ``[f, g] = (Dg) f - (Df) g``, which is the commutator
``fg - gf`` of the fields viewed as first-order differential operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .polycore import DimensionError, MultiPoly
from .ratlinalg import Subspace, span_from_vectors

__all__ = [
    "VectorField",
    "Word",
    "lie_bracket",
    "ad_power",
    "eval_word",
    "lyndon_words",
    "standard_bracketing",
    "all_words",
    "spanning_words",
    "BracketEvaluator",
    "bracket_span_at_origin",
    "numeric_bracket_oracle",
    "B1",
    "B2",
    "NEUTRALIZER",
]


class VectorField:
    """Vector field on R^n whose components are polynomials in n variables."""

    __slots__ = ("components", "__dict__")

    def __init__(self, components: Sequence[MultiPoly]):
        comps = tuple(components)
        if not comps:
            raise DimensionError("a vector field needs at least one component")
        n = len(comps)
        for c in comps:
            if not isinstance(c, MultiPoly):
                raise TypeError("components must be MultiPoly")
            if c.nvars != n:
                raise DimensionError(
                    f"component over {c.nvars} variables in a field of dimension {n}"
                )
        self.components = comps

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls([MultiPoly.zero(n)] * n)

    @classmethod
    def constant(cls, values: Sequence) -> "VectorField":
        n = len(values)
        return cls([MultiPoly.constant(n, Fraction(v)) for v in values])

    @property
    def dim(self) -> int:
        return len(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> MultiPoly:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def _check(self, other: "VectorField") -> None:
        if self.dim != other.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a + b for a, b in zip(self, other)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a - b for a, b in zip(self, other)])

    def __neg__(self) -> "VectorField":
        return VectorField([-a for a in self])

    def __mul__(self, scalar) -> "VectorField":
        return VectorField([a * scalar for a in self])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def apply(self, phi: MultiPoly) -> MultiPoly:
        """Directional derivative ``f phi = sum_k a_k d(phi)/dx_k``."""
        if phi.nvars != self.dim:
            raise DimensionError("function and field live on different spaces")
        out = MultiPoly.zero(self.dim)
        for k, a in enumerate(self.components):
            if a:
                d = phi.partial(k)
                if d:
                    out = out + a * d
        return out

    def at(self, point: Sequence) -> tuple:
        return tuple(c.eval(point) for c in self.components)

    def at_origin(self) -> tuple[Fraction, ...]:
        return tuple(c.constant_term() for c in self.components)

    def truncate(self, max_degree: int) -> "VectorField":
        return VectorField([c.truncate(max_degree) for c in self.components])

    def jacobian(self) -> list[list[MultiPoly]]:
        return [[c.partial(j) for j in range(self.dim)] for c in self.components]

    @cached_property
    def numeric(self) -> Callable:
        """Float evaluator ``f(x_1, ..., x_n) -> tuple``; also works on numpy arrays."""
        names = [f"x{i}" for i in range(self.dim)]
        exprs = []
        for comp in self.components:
            parts = []
            for exps, c in comp.sorted_terms():
                factors = [repr(float(c))]
                for nm, e in zip(names, exps):
                    if e == 1:
                        factors.append(nm)
                    elif e > 1:
                        factors.append(f"{nm}**{e}")
                parts.append("*".join(factors))
            if not parts:
                parts = ["0.0"]
            if comp.degree <= 0:
                parts.append("0.0*x0")  # keep array shape for constant components
            exprs.append(" + ".join(parts))
        src = f"def _vf({', '.join(names)}):\n    return ({', '.join(exprs)},)\n"
        ns: dict = {}
        exec(compile(src, "<vectorfield>", "exec"), ns)
        return ns["_vf"]

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.numeric(*z), dtype=float)

    def to_strings(self, names: Optional[Sequence[str]] = None) -> list[str]:
        return [c.to_string(names) for c in self.components]

    def __repr__(self) -> str:
        return f"VectorField({self.to_strings()})"


def lie_bracket(f: VectorField, g: VectorField) -> VectorField:
    """``[f, g] = (Dg) f - (Df) g``."""
    if f.dim != g.dim:
        raise DimensionError(f"dimension mismatch: {f.dim} vs {g.dim}")
    return VectorField([f.apply(gi) - g.apply(fi) for fi, gi in zip(f, g)])


def ad_power(f: VectorField, g: VectorField, k: int) -> VectorField:
    """``ad_f^k g``, with ``ad_f^0 g = g``."""
    if f.dim != g.dim:
        raise DimensionError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    for _ in range(k):
        g = lie_bracket(f, g)
    return g


# ---------------------------------------------------------------------------
# formal bracket words


@dataclass(frozen=True)
class Word:
    """Formal Lie bracket over the letters 0, 1, 2 (standing for f0, f1, f2).

    A leaf carries ``letter``; an internal node carries ``left`` and ``right``
    and stands for their bracket.
    """

    letter: Optional[int] = None
    left: Optional["Word"] = None
    right: Optional["Word"] = None

    def __post_init__(self):
        leaf = self.letter is not None
        if leaf == (self.left is not None and self.right is not None):
            raise ValueError("a word is either a letter or a pair of words")

    @classmethod
    def leaf(cls, letter: int) -> "Word":
        return cls(letter=int(letter))

    @classmethod
    def br(cls, left, right) -> "Word":
        return cls(left=_as_word(left), right=_as_word(right))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse ``"1"``, ``"[0,1]"``, ``"[[0,1],[0,[0,1]]]"``."""
        s = text.replace(" ", "")
        word, pos = _parse_word(s, 0)
        if pos != len(s):
            raise ValueError(f"trailing characters in bracket word {text!r}")
        return word

    @property
    def is_leaf(self) -> bool:
        return self.letter is not None

    @cached_property
    def length(self) -> int:
        return 1 if self.is_leaf else self.left.length + self.right.length

    @cached_property
    def multidegree(self) -> tuple[int, int, int]:
        if self.is_leaf:
            d = [0, 0, 0]
            d[self.letter] = 1
            return tuple(d)
        return tuple(a + b for a, b in zip(self.left.multidegree, self.right.multidegree))

    def count(self, letter: int) -> int:
        return self.multidegree[letter]

    def letters(self) -> str:
        return str(self.letter) if self.is_leaf else self.left.letters() + self.right.letters()

    def __str__(self) -> str:
        if self.is_leaf:
            return str(self.letter)
        return f"[{self.left},{self.right}]"

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"


def _as_word(w) -> Word:
    if isinstance(w, Word):
        return w
    if isinstance(w, int):
        return Word.leaf(w)
    if isinstance(w, str):
        return Word.parse(w)
    if isinstance(w, (tuple, list)) and len(w) == 2:
        return Word.br(w[0], w[1])
    raise TypeError(f"cannot interpret {w!r} as a bracket word")


def _parse_word(s: str, pos: int) -> tuple[Word, int]:
    if pos >= len(s):
        raise ValueError("unexpected end of bracket word")
    ch = s[pos]
    if ch in "012":
        return Word.leaf(int(ch)), pos + 1
    if ch != "[":
        raise ValueError(f"unexpected {ch!r} at position {pos} of bracket word")
    left, pos = _parse_word(s, pos + 1)
    if pos >= len(s) or s[pos] != ",":
        raise ValueError(f"expected ',' at position {pos} of bracket word")
    right, pos = _parse_word(s, pos + 1)
    if pos >= len(s) or s[pos] != "]":
        raise ValueError(f"expected ']' at position {pos} of bracket word")
    return Word.br(left, right), pos + 1


B1 = Word.parse("[1,[0,1]]")
B2 = Word.parse("[[0,1],[0,[0,1]]]")
NEUTRALIZER = Word.parse("[1,[2,1]]")


def eval_word(w, system) -> VectorField:
    """Evaluate a bracket word on ``system`` (anything with a ``field(letter)`` method)."""
    return BracketEvaluator(system).field(_as_word(w))


# ---------------------------------------------------------------------------
# Lyndon words


def lyndon_words(alphabet: Sequence[int], max_length: int) -> Iterator[str]:
    """Lyndon words of length <= max_length, in lexicographic order (Duval)."""
    letters = sorted(set(alphabet))
    k = len(letters)
    if k == 0 or max_length < 1:
        return
    w = [-1]
    while w:
        w[-1] += 1
        yield "".join(str(letters[i]) for i in w)
        m = len(w)
        while len(w) < max_length:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()


def standard_bracketing(lyndon: str) -> Word:
    """Bracket ``[b(u), b(v)]`` with ``v`` the longest proper Lyndon suffix."""
    if len(lyndon) == 1:
        return Word.leaf(int(lyndon))
    for i in range(1, len(lyndon)):
        suffix = lyndon[i:]
        if _is_lyndon(suffix):
            return Word.br(standard_bracketing(lyndon[:i]), standard_bracketing(suffix))
    raise ValueError(f"{lyndon!r} is not a Lyndon word")


def _is_lyndon(s: str) -> bool:
    return all(s < s[i:] + s[:i] for i in range(1, len(s)))


def _passes(w: Word, multidegree_filter: Optional[Mapping[int, int]]) -> bool:
    if not multidegree_filter:
        return True
    deg = w.multidegree
    return all(deg[letter] <= cap for letter, cap in multidegree_filter.items())


def spanning_words(
    alphabet: Iterable[int],
    max_length: int,
    multidegree_filter: Optional[Mapping[int, int]] = None,
) -> list[Word]:
    """Lyndon brackets of length <= max_length whose letter counts pass the filter.

    ``multidegree_filter`` maps a letter to the maximal number of times it may
    occur; letters not mentioned are unbounded. Their evaluations span, length
    by length, the same space as all brackets obeying the filter.
    """
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    out = []
    for lw in lyndon_words(sorted(set(alphabet)), max_length):
        if multidegree_filter:
            if any(lw.count(str(a)) > cap for a, cap in multidegree_filter.items()):
                continue
        out.append(standard_bracketing(lw))
    out.sort(key=lambda w: (w.length, w.letters()))
    return out


def all_words(
    alphabet: Iterable[int],
    max_length: int,
    multidegree_filter: Optional[Mapping[int, int]] = None,
) -> list[Word]:
    """Every bracket tree of length <= max_length (exponential; for cross-checks)."""
    letters = sorted(set(alphabet))
    by_len: dict[int, list[Word]] = {1: [Word.leaf(a) for a in letters]}
    for L in range(2, max_length + 1):
        by_len[L] = [
            Word.br(u, v)
            for i in range(1, L)
            for u in by_len[i]
            for v in by_len[L - i]
        ]
    return [w for L in sorted(by_len) for w in by_len[L] if _passes(w, multidegree_filter)]


# ---------------------------------------------------------------------------
# evaluation and spans


class BracketEvaluator:
    """Memoized evaluation of bracket words on a system.

    With ``max_length`` set, a word of length ``l`` is kept only up to degree
    ``max_length - l``: enough to get the exact value at 0 of every bracket of
    length <= max_length that contains it, and much cheaper.
    """

    def __init__(self, system, max_length: Optional[int] = None):
        self.system = system
        self.max_length = max_length
        self._cache: dict[Word, VectorField] = {}

    def _leaf(self, letter: int) -> VectorField:
        return self.system.field(letter)

    def field(self, w: Word) -> VectorField:
        w = _as_word(w)
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        if w.is_leaf:
            vf = self._leaf(w.letter)
        else:
            vf = lie_bracket(self.field(w.left), self.field(w.right))
        if self.max_length is not None:
            vf = vf.truncate(self.max_length - w.length)
        self._cache[w] = vf
        return vf

    def value(self, w) -> tuple[Fraction, ...]:
        return self.field(w).at_origin()


def bracket_values(system, words: Iterable[Word], max_length: Optional[int] = None):
    ev = BracketEvaluator(system, max_length)
    return [(w, ev.value(w)) for w in words]


def bracket_span_at_origin(
    system,
    alphabet: Optional[Iterable[int]] = None,
    multidegree_filter: Optional[Mapping[int, int]] = None,
    max_length: int = 8,
    *,
    evaluator: Optional[BracketEvaluator] = None,
    return_generators: bool = False,
):
    """Span at 0 of the brackets obeying ``multidegree_filter``, up to ``max_length``.

    The result records ``truncation=max_length`` and ``saturated``, which is
    true when the span did not grow between lengths ``max_length - 2`` and
    ``max_length``. With ``return_generators`` the words whose values enlarged
    the span are returned alongside, as ``(word, value)`` pairs.
    """
    if alphabet is None:
        alphabet = system.alphabet
    n = system.dim
    ev = evaluator or BracketEvaluator(system, max_length)
    words = spanning_words(alphabet, max_length, multidegree_filter)
    span = Subspace(n)
    gens = []
    for w in words:
        val = ev.value(w)
        if any(val) and val not in span:
            span = span.with_vectors([val])
            gens.append((w, val))
    cut = max(max_length - 2, 0)
    dim_before = span_from_vectors([v for w, v in gens if w.length <= cut], n).dim
    result = Subspace(n, span.basis, max_length, dim_before == span.dim)
    if return_generators:
        return result, gens
    return result


def numeric_bracket_oracle(f: VectorField, g: VectorField, point: Sequence[float], h: float = 1e-5) -> np.ndarray:
    """Central finite-difference estimate of ``(Dg) f - (Df) g`` at ``point``."""
    if h <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(point, dtype=float)
    n = z.size
    Df = np.empty((n, n))
    Dg = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        Df[:, j] = (f(z + e) - f(z - e)) / (2 * h)
        Dg[:, j] = (g(z + e) - g(z - e)) / (2 * h)
    return Dg @ f(z) - Df @ g(z)
