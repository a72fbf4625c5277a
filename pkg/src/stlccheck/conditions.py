"""Bracket-based tests for (non-)controllability at the origin.

Single-input checkers work on ``f0, f1`` and apply only when ``f2`` vanishes.
The two-input classifiers compare the bad bracket ``B1 = [f1,[f0,f1]]`` and
``B2 = [[f0,f1],[f0,[f0,f1]]]`` with ``R1``, the span at 0 of the brackets in
which ``f1`` occurs at most once, and with the neutralizing direction
``w = [f1,[f2,f1]](0)`` produced by a constant second control.

Every verdict records the truncation ``L`` of the spans it relied on and
whether those spans had stopped growing (``saturated``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence, Union

from .liealg import B1, B2, NEUTRALIZER, BracketEvaluator, Word, bracket_span_at_origin
from .ratlinalg import Subspace, solve_scalar_shift, span_from_vectors

__all__ = [
    "Outcome",
    "Notion",
    "Verdict",
    "AnalysisConfig",
    "AnalysisReport",
    "ShiftedAnalysis",
    "F_WORDS",
    "check_larc",
    "check_sussmann_sufficient",
    "check_b1_obstruction",
    "check_kawski",
    "check_beauchard_marbach",
    "theorem1_classify",
    "theorem2_classify",
    "check_even_brackets",
    "analyze",
    "rational_str",
]

DEFAULT_L = 8
DEFAULT_KMAX = 6
SCHEMA_VERSION = 1


class Outcome(str, Enum):
    VIOLATED = "Violated"
    SATISFIED = "Satisfied"
    INCONCLUSIVE = "Inconclusive"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class Notion:
    """A controllability notion.

    ``tag`` is one of ``STLC``, ``AlphaSTLC``, ``WkInfSTLC``, ``HybridSTLC``.
    ``alpha`` is a nonnegative rational or the string ``"all"``.
    """

    tag: str
    k: Optional[int] = None
    alpha: Union[Fraction, str, None] = None

    def __post_init__(self):
        if self.tag not in ("STLC", "AlphaSTLC", "WkInfSTLC", "HybridSTLC"):
            raise ValueError(f"unknown notion {self.tag!r}")
        if self.k is not None and self.k < 0:
            raise ValueError("k must be nonnegative")
        if isinstance(self.alpha, Fraction) and self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    @classmethod
    def stlc(cls) -> "Notion":
        return cls("STLC")

    @classmethod
    def alpha_stlc(cls, alpha="all") -> "Notion":
        return cls("AlphaSTLC", alpha=alpha if alpha == "all" else Fraction(alpha))

    @classmethod
    def wk(cls, k: int) -> "Notion":
        return cls("WkInfSTLC", k=k)

    @classmethod
    def hybrid(cls, k: int, alpha="all") -> "Notion":
        return cls("HybridSTLC", k=k, alpha=alpha if alpha == "all" else Fraction(alpha))

    def __str__(self) -> str:
        a = "for all alpha" if self.alpha == "all" else f"alpha={self.alpha}"
        if self.tag == "STLC":
            return "STLC"
        if self.tag == "AlphaSTLC":
            return f"alpha-STLC ({a})"
        if self.tag == "WkInfSTLC":
            return f"W^{{{self.k},inf}}-STLC"
        return f"(W^{{{self.k},inf}},alpha)-STLC ({a})"


@dataclass(frozen=True)
class Verdict:
    """Outcome of one checker, with an exact certificate.

    ``brackets`` maps bracket names to values at 0, ``subspaces`` maps span
    names to ``Subspace`` objects. Both are kept as tuples of pairs so the
    verdict stays hashable and ordered.
    """

    condition: str
    outcome: Outcome
    truncation: int
    notion: Optional[Notion] = None
    saturated: Optional[bool] = None
    case: Optional[int] = None
    beta: Optional[Fraction] = None
    reason: str = ""
    brackets: tuple = ()
    subspaces: tuple = ()
    witnesses: tuple = ()
    equilibrium: str = "(0,(0,0))"

    @property
    def certificate(self) -> dict:
        cert = {"brackets": dict(self.brackets), "subspaces": dict(self.subspaces)}
        if self.beta is not None:
            cert["beta"] = self.beta
        if self.witnesses:
            cert["witnesses"] = list(self.witnesses)
        return cert

    @property
    def label(self) -> str:
        s = self.outcome.value
        if self.outcome in (Outcome.VIOLATED, Outcome.SATISFIED) and self.saturated is False:
            s += f" (at truncation {self.truncation})"
        return s

    def to_json(self) -> dict:
        d = {
            "condition": self.condition,
            "outcome": self.outcome.value,
            "notion": None if self.notion is None else str(self.notion),
            "truncation": self.truncation,
            "saturated": self.saturated,
            "equilibrium": self.equilibrium,
            "certificate": {
                "brackets": {k: [rational_str(x) for x in v] for k, v in self.brackets},
                "subspaces": {
                    k: {
                        "basis": [[rational_str(x) for x in row] for row in S.basis],
                        "truncation": S.truncation,
                        "saturated": S.saturated,
                    }
                    for k, S in self.subspaces
                },
            },
        }
        if self.case is not None:
            d["case"] = self.case
        if self.beta is not None:
            d["beta"] = rational_str(self.beta)
        if self.witnesses:
            d["certificate"]["witnesses"] = list(self.witnesses)
        if self.reason:
            d["reason"] = self.reason
        return d


def rational_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _vec_str(v) -> str:
    return "(" + ", ".join(str(x) for x in v) + ")"


def _span_str(S: Subspace) -> str:
    if not S.basis:
        return "{0}"
    return "span{" + ", ".join(_vec_str(r) for r in S.basis) + "}"


# -- shared helpers ---------------------------------------------------------

NAMES = {
    B1: "B1=[1,[0,1]]",
    B2: "B2=[[0,1],[0,[0,1]]]",
    NEUTRALIZER: "w=[1,[2,1]]",
}


def _name(w: Word) -> str:
    return NAMES.get(w, str(w))


def _exact_value(system, w: Word):
    return BracketEvaluator(system).value(w)


def _single_input_view(system, condition: str, L: int):
    """Return ``(f0, f1)`` system or a NotApplicable verdict."""
    if system.single_input:
        return system, None
    if system.f2_vanishes():
        return system.without_second_input(), None
    return None, Verdict(condition, Outcome.NOT_APPLICABLE, L, reason="f2 does not vanish identically")


def _S(system, k: int, L: int, ev: BracketEvaluator) -> Subspace:
    return bracket_span_at_origin(system, (0, 1), {1: k}, L, evaluator=ev)


def _R1(system, L: int, ev: BracketEvaluator) -> Subspace:
    return bracket_span_at_origin(system, system.alphabet, {1: 1}, L, evaluator=ev)


# -- single-input checkers --------------------------------------------------

def check_larc(system, L: int = DEFAULT_L) -> Verdict:
    """Rank of the Lie algebra generated by all fields, evaluated at 0."""
    ev = BracketEvaluator(system, L)
    S, gens = bracket_span_at_origin(system, system.alphabet, None, L, evaluator=ev, return_generators=True)
    brackets = tuple((str(w), v) for w, v in gens)
    if S.is_full():
        return Verdict("LARC", Outcome.SATISFIED, L, saturated=True, brackets=brackets,
                       subspaces=(("Lie(0)", S),))
    return Verdict("LARC", Outcome.INCONCLUSIVE, L, saturated=S.saturated, brackets=brackets,
                   subspaces=(("Lie(0)", S),), reason=f"rank {S.dim} < {system.dim} at truncation {L}")


def check_sussmann_sufficient(system, L: int = DEFAULT_L, k_max: int = DEFAULT_KMAX) -> Verdict:
    """Sufficient test: LARC and ``S_{2k+2}(0)`` inside ``S_{2k+1}(0)`` for ``k <= k_max``."""
    cond = "Prop1.Sussmann"
    sys1, na = _single_input_view(system, cond, L)
    if na:
        return na
    larc = check_larc(sys1, L)
    ev = BracketEvaluator(sys1, L)
    exact = BracketEvaluator(sys1)
    for k in range(k_max + 1):
        odd = _S(sys1, 2 * k + 1, L, ev)
        if 2 * k + 1 >= L:
            break
        even, gens = bracket_span_at_origin(sys1, (0, 1), {1: 2 * k + 2}, L, evaluator=ev, return_generators=True)
        if even.issubspace(odd):
            continue
        named = [w for w in (B1, B2) if w.count(1) <= 2 * k + 2 and w.length <= L]
        culprit = next((w for w in named if exact.value(w) not in odd), None)
        if culprit is None:
            culprit = next(w for w, v in gens if v not in odd)
        v = exact.value(culprit) if culprit.length > L else ev.value(culprit)
        return Verdict(
            cond, Outcome.INCONCLUSIVE, L, notion=Notion.stlc(), saturated=odd.saturated,
            brackets=((_name(culprit), v),),
            subspaces=((f"S{2 * k + 1}(0)", odd), (f"S{2 * k + 2}(0)", even)),
            reason=f"{_name(culprit)}(0) = {_vec_str(v)} is not in S{2 * k + 1}(0) = {_span_str(odd)}",
        )
    if larc.outcome is not Outcome.SATISFIED:
        return replace(larc, condition=cond, notion=Notion.stlc(), reason="LARC not met: " + larc.reason)
    return Verdict(cond, Outcome.SATISFIED, L, notion=Notion.stlc(), saturated=True,
                   brackets=larc.brackets, subspaces=larc.subspaces,
                   reason=f"LARC holds and S_(2k+2) lies in S_(2k+1) for k <= {k_max}")


def check_b1_obstruction(system, L: int = DEFAULT_L) -> Verdict:
    """``B1(0)`` outside ``S1(0)`` rules out alpha-STLC for every alpha."""
    cond = "Prop2.B1"
    sys1, na = _single_input_view(system, cond, L)
    if na:
        return na
    S1 = _S(sys1, 1, L, BracketEvaluator(sys1, L))
    b1 = _exact_value(sys1, B1)
    common = dict(notion=Notion.alpha_stlc(), brackets=((_name(B1), b1),), subspaces=(("S1(0)", S1),))
    if b1 not in S1:
        return Verdict(cond, Outcome.VIOLATED, L, saturated=S1.saturated, **common,
                       reason=f"B1(0) = {_vec_str(b1)} is not in S1(0) = {_span_str(S1)}")
    return Verdict(cond, Outcome.INCONCLUSIVE, L, saturated=S1.saturated, **common, reason="B1(0) lies in S1(0)")


def _ad_cube_words(k_max: int) -> list[Word]:
    w = Word.parse("[1,[1,[1,0]]]")
    out = [w]
    for _ in range(k_max):
        w = Word.br(Word.leaf(0), w)
        out.append(w)
    return out


def check_kawski(system, L: int = DEFAULT_L, k_max: int = DEFAULT_KMAX) -> Verdict:
    """``B2(0)`` outside ``S1(0) + S'(0)`` rules out alpha-STLC for every alpha.

    ``S'`` is spanned by ``ad_{f0}^k ad_{f1}^3 f0`` for ``k <= k_max``.
    """
    cond = "Prop3.Kawski"
    sys1, na = _single_input_view(system, cond, L)
    if na:
        return na
    S1 = _S(sys1, 1, L, BracketEvaluator(sys1, L))
    exact = BracketEvaluator(sys1)
    Sp = span_from_vectors([exact.value(w) for w in _ad_cube_words(k_max)], sys1.dim, truncation=k_max)
    total = S1 + Sp
    b2 = exact.value(B2)
    common = dict(notion=Notion.alpha_stlc(), brackets=((_name(B2), b2), ("ad^3_1 0", exact.value(_ad_cube_words(0)[0]))),
                  subspaces=(("S1(0)", S1), ("S'(0)", Sp)))
    if b2 not in total:
        return Verdict(cond, Outcome.VIOLATED, L, saturated=S1.saturated, **common,
                       reason=f"B2(0) = {_vec_str(b2)} is not in S1(0) + S'(0) = {_span_str(total)}")
    return Verdict(cond, Outcome.INCONCLUSIVE, L, saturated=S1.saturated, **common,
                   reason="B2(0) lies in S1(0) + S'(0)")


def check_beauchard_marbach(system, L: int = DEFAULT_L) -> Verdict:
    """``B2(0)`` outside ``S1(0)`` rules out W^{1,inf}-STLC."""
    cond = "Prop4.BeauchardMarbach"
    sys1, na = _single_input_view(system, cond, L)
    if na:
        return na
    S1 = _S(sys1, 1, L, BracketEvaluator(sys1, L))
    b2 = _exact_value(sys1, B2)
    common = dict(notion=Notion.wk(1), brackets=((_name(B2), b2),), subspaces=(("S1(0)", S1),))
    if b2 not in S1:
        return Verdict(cond, Outcome.VIOLATED, L, saturated=S1.saturated, **common,
                       reason=f"B2(0) = {_vec_str(b2)} is not in S1(0) = {_span_str(S1)}")
    return Verdict(cond, Outcome.INCONCLUSIVE, L, saturated=S1.saturated, **common, reason="B2(0) lies in S1(0)")


# -- two-input classifiers --------------------------------------------------

F_WORDS: dict[str, Word] = {
    f"F{i}{j}{k}": Word.parse(f"[[{i},1],[{j},[{k},1]]]")
    for i, j, k in product((0, 2), repeat=3)
    if (i, j, k) != (0, 0, 0)
}


def theorem1_classify(system, L: int = DEFAULT_L) -> Verdict:
    """Classify by whether ``B1(0)`` can be neutralized along ``w``.

    Case 1: a unique shift ``beta`` puts ``B1(0) + beta*w`` in ``R1(0)``, so
    the system is not STLC at ``u2 = u2eq`` for any ``u2eq != beta``.
    Case 2: no shift works and alpha-STLC fails at every constant ``u2eq``.
    """
    cond = "Thm1"
    if system.single_input:
        return Verdict(cond, Outcome.NOT_APPLICABLE, L, reason="single input")
    R1 = _R1(system, L, BracketEvaluator(system, L))
    exact = BracketEvaluator(system)
    b1, w = exact.value(B1), exact.value(NEUTRALIZER)
    brackets = ((_name(B1), b1), (_name(NEUTRALIZER), w))
    subspaces = (("R1(0)", R1),)
    if b1 in R1:
        return Verdict(cond, Outcome.NOT_APPLICABLE, L, saturated=R1.saturated, brackets=brackets,
                       subspaces=subspaces, reason="B1(0) lies in R1(0)")
    sol = solve_scalar_shift(b1, w, R1)
    if sol.kind == "unique":
        return Verdict(cond, Outcome.VIOLATED, L, notion=Notion.stlc(), saturated=R1.saturated, case=1,
                       beta=sol.beta, brackets=brackets, subspaces=subspaces, equilibrium="(0,(0,u2eq))",
                       reason=f"B1(0) + beta*w lies in R1(0) only for beta = {sol.beta}; not STLC for u2eq != {sol.beta}")
    # "all" is impossible here because B1(0) is not in R1(0)
    return Verdict(cond, Outcome.VIOLATED, L, notion=Notion.alpha_stlc(), saturated=R1.saturated, case=2,
                   brackets=brackets, subspaces=subspaces, equilibrium="(0,(0,u2eq))",
                   reason=f"B1(0) = {_vec_str(b1)} is not in R1(0) + span{{w}}")


def theorem2_classify(system, L: int = DEFAULT_L) -> Verdict:
    """Classify by whether ``B2(0)`` is reached by the quartic ``F_ijk`` brackets.

    ``F_ijk = [[f_i,f1],[f_j,[f_k,f1]]]`` for ``(i,j,k)`` in ``{0,2}^3`` other
    than ``000``. Case 1: ``B2(0)`` lies in ``R1(0) + span{F_ijk(0)}``, so the
    system is not (W^{1,inf},0)-STLC at the origin. Case 2: it does not, and
    (W^{1,inf},alpha)-STLC fails for every alpha.
    """
    cond = "Thm2"
    if system.single_input:
        return Verdict(cond, Outcome.NOT_APPLICABLE, L, reason="single input")
    R1 = _R1(system, L, BracketEvaluator(system, L))
    exact = BracketEvaluator(system)
    b1, b2, w = exact.value(B1), exact.value(B2), exact.value(NEUTRALIZER)
    fvals = {name: exact.value(word) for name, word in F_WORDS.items()}
    brackets = ((_name(B1), b1), (_name(B2), b2), (_name(NEUTRALIZER), w)) + tuple(
        (f"{name}={F_WORDS[name]}", v) for name, v in fvals.items()
    )
    subspaces = (("R1(0)", R1),)
    base = dict(saturated=R1.saturated, brackets=brackets, subspaces=subspaces)
    if b1 not in R1:
        return Verdict(cond, Outcome.NOT_APPLICABLE, L, **base, reason="B1(0) is not in R1(0)")
    if b2 in R1.with_vectors([w]):
        return Verdict(cond, Outcome.NOT_APPLICABLE, L, **base,
                       reason="B2(0) lies in Span(R1(0), [f1,[f2,f1]](0)); this case is left open")
    witnesses = tuple(f"{name}={F_WORDS[name]}" for name, v in fvals.items() if v not in R1)
    if b2 in R1.with_vectors(fvals.values()):
        return Verdict(cond, Outcome.VIOLATED, L, notion=Notion.hybrid(1, Fraction(0)), case=1,
                       witnesses=witnesses, **base,
                       reason="B2(0) lies in Span(R1(0), F_ijk(0)) but not in Span(R1(0), w)")
    return Verdict(cond, Outcome.VIOLATED, L, notion=Notion.hybrid(1), case=2, **base,
                   reason="B2(0) is not in Span(R1(0), F_ijk(0))")


def check_even_brackets(system, L: int = 3) -> Verdict:
    """Multi-input heuristic over brackets of length at most 3.

    Satisfied (STLC) when those brackets span R^n and every one with an even
    number of each control letter vanishes at 0. Opt-in, since it only covers
    the low-order instance of the general sufficient condition.
    """
    cond = "EvenBrackets.len3"
    ev = BracketEvaluator(system)
    S, gens = bracket_span_at_origin(system, system.alphabet, None, 3, evaluator=ev, return_generators=True)
    from .liealg import all_words

    bad = [
        (str(w), ev.value(w))
        for w in all_words(system.alphabet, 3)
        if w.count(1) % 2 == 0 and w.count(2) % 2 == 0 and any(ev.value(w))
    ]
    brackets = tuple((str(w), v) for w, v in gens)
    if bad:
        return Verdict(cond, Outcome.INCONCLUSIVE, 3, notion=Notion.stlc(), brackets=tuple(bad[:1]),
                       subspaces=(("Lie3(0)", S),), reason=f"{bad[0][0]}(0) = {_vec_str(bad[0][1])} does not vanish")
    if not S.is_full():
        return Verdict(cond, Outcome.INCONCLUSIVE, 3, notion=Notion.stlc(), brackets=brackets,
                       subspaces=(("Lie3(0)", S),), reason="brackets of length <= 3 do not span")
    return Verdict(cond, Outcome.SATISFIED, 3, notion=Notion.stlc(), saturated=True, brackets=brackets,
                   subspaces=(("Lie3(0)", S),), reason="length <= 3 brackets span and even ones vanish")


# -- orchestration ----------------------------------------------------------

@dataclass(frozen=True)
class AnalysisConfig:
    max_length: int = DEFAULT_L
    k_max: int = DEFAULT_KMAX
    equilibrium_shifts: bool = True
    even_bracket_heuristic: bool = False

    def __post_init__(self):
        if self.max_length < 2:
            raise ValueError("max_length must be at least 2")
        if self.k_max < 0:
            raise ValueError("k_max must be nonnegative")


@dataclass(frozen=True)
class ShiftedAnalysis:
    beta: Fraction
    drift: tuple[str, ...]
    verdicts: tuple[Verdict, ...]

    @property
    def equilibrium(self) -> str:
        return f"(0,(0,{self.beta}))"


@dataclass(frozen=True)
class AnalysisReport:
    system_digest: str
    truncation: int
    k_max: int
    verdicts: tuple[Verdict, ...]
    shifted_analyses: tuple[ShiftedAnalysis, ...] = field(default=())

    def verdict(self, condition: str) -> Verdict:
        return next(v for v in self.verdicts if v.condition == condition)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "system_digest": self.system_digest,
            "truncation": self.truncation,
            "k_max": self.k_max,
            "verdicts": [v.to_json() for v in self.verdicts],
            "shifted_analyses": [
                {
                    "beta": rational_str(s.beta),
                    "equilibrium": s.equilibrium,
                    "drift": list(s.drift),
                    "verdicts": [v.to_json() for v in s.verdicts],
                }
                for s in self.shifted_analyses
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = [f"system {self.system_digest}  truncation L={self.truncation}  k_max={self.k_max}"]
        lines += [_verdict_line(v) for v in self.verdicts]
        for s in self.shifted_analyses:
            lines.append(f"shifted equilibrium {s.equilibrium}, beta = {s.beta}, drift = ({', '.join(s.drift)})")
            lines += ["  " + _verdict_line(v) for v in s.verdicts]
        return "\n".join(lines)


def _verdict_line(v: Verdict) -> str:
    parts = [f"{v.condition}: {v.label}"]
    if v.case is not None:
        parts.append(f"case {v.case}")
    if v.notion is not None and v.outcome in (Outcome.VIOLATED, Outcome.SATISFIED):
        parts.append(("not " if v.outcome is Outcome.VIOLATED else "") + f"{v.notion} at {v.equilibrium}")
    if v.beta is not None:
        parts.append(f"beta = {v.beta}")
    if v.reason:
        parts.append(v.reason)
    return " | ".join(parts)


def _battery(system, cfg: AnalysisConfig, equilibrium: Optional[str] = None) -> list[Verdict]:
    L, k = cfg.max_length, cfg.k_max
    out = [
        check_larc(system, L),
        check_sussmann_sufficient(system, L, k),
        check_b1_obstruction(system, L),
        check_kawski(system, L, k),
        check_beauchard_marbach(system, L),
        theorem1_classify(system, L),
        theorem2_classify(system, L),
    ]
    if cfg.even_bracket_heuristic:
        out.append(check_even_brackets(system))
    if equilibrium is not None:
        out = [replace(v, equilibrium=equilibrium) for v in out]
    return out


def analyze(system, config: Optional[AnalysisConfig] = None) -> AnalysisReport:
    """Run every checker in a fixed order and follow Case 1 shifts of ``u2``."""
    cfg = config or AnalysisConfig()
    verdicts = _battery(system, cfg)
    shifted = []
    t1 = next(v for v in verdicts if v.condition == "Thm1")
    if cfg.equilibrium_shifts and t1.case == 1 and t1.beta is not None:
        sys_b = system.shifted(t1.beta)
        shifted.append(
            ShiftedAnalysis(
                t1.beta,
                tuple(sys_b.f0.to_strings(sys_b.names)),
                tuple(_battery(sys_b, cfg, f"(0,(0,{t1.beta}))")),
            )
        )
    return AnalysisReport(system.digest(), cfg.max_length, cfg.k_max, tuple(verdicts), tuple(shifted))
