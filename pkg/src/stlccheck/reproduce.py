"""Executable checks for the shipped example systems."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import fixtures
from .conditions import (
    Outcome,
    check_b1_obstruction,
    check_beauchard_marbach,
    check_kawski,
    check_sussmann_sufficient,
    theorem1_classify,
    theorem2_classify,
)
from .liealg import B1, B2, NEUTRALIZER, BracketEvaluator, Word, bracket_span_at_origin
from .numsim import reproduce_example23
from .ratlinalg import span_from_vectors

__all__ = ["Check", "FIXTURES", "run_fixture"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    expected: str
    observed: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        s = f"[{mark}] {self.name}: observed {self.observed}"
        return s if self.passed else s + f", expected {self.expected}"


def _show(x) -> str:
    if isinstance(x, tuple):
        return "(" + ", ".join(str(v) for v in x) + ")"
    return str(x)


def _eq(name, expected, observed) -> Check:
    return Check(name, expected == observed, _show(expected), _show(observed))


def _vec(*xs):
    return tuple(Fraction(x) for x in xs)


def _outcome(name, verdict, outcome, case=None) -> Check:
    got = verdict.outcome.value + ("" if verdict.case is None else f" case {verdict.case}")
    want = outcome.value + ("" if case is None else f" case {case}")
    return Check(name, got == want, want, got)


def _example0(opts) -> list[Check]:
    s = fixtures.load("example0")
    ev = BracketEvaluator(s)
    R1 = bracket_span_at_origin(s, s.alphabet, {1: 1}, 6)
    return [
        _eq("[f1,[f0,f1]](0)", _vec(-6, 0), ev.value(B1)),
        _eq("[f1,[f2,f1]](0)", _vec(0, 1), ev.value(NEUTRALIZER)),
        _eq("R1(0) at L=6", span_from_vectors([(0, 1)], 2), R1),
        _eq("R1(0) saturated", True, R1.saturated),
        _outcome("Theorem 1", theorem1_classify(s, opts["max_len"]), Outcome.VIOLATED, 2),
    ]


def _example1(opts) -> list[Check]:
    out = []
    for a in (1, 2, 5):
        v = theorem1_classify(fixtures.load(f"example1_alpha{a}"), opts["max_len"])
        out.append(_outcome(f"Theorem 1 (alpha={a})", v, Outcome.VIOLATED, 1))
        out.append(_eq(f"beta (alpha={a})", Fraction(a), v.beta))
    return out


def _example22(opts) -> list[Check]:
    L = opts["max_len"]
    s = fixtures.load("example22")
    v = theorem2_classify(s, L)
    w = Word.parse("[[0,1],[2,[0,1]]]")
    ev = BracketEvaluator(s)
    out = [
        _outcome("Theorem 2 (psi=y^2)", v, Outcome.VIOLATED, 1),
        _eq("[[f0,f1],[f2,[f0,f1]]](0)", _vec(0, 0, -2), ev.value(w)),
        _eq("B2(0)", _vec(0, 0, -2), ev.value(B2)),
        _eq("[f1,[f2,f1]](0)", _vec(0, 0, 0), ev.value(NEUTRALIZER)),
    ]
    sxy = fixtures.load("example22_xy")
    out.append(_eq("[[f2,f1],[f0,[f2,f1]]](0) (phi=x, psi=xy)", _vec(0, 0, -2),
                   BracketEvaluator(sxy).value(Word.parse("[[2,1],[0,[2,1]]]"))))
    v23 = theorem2_classify(fixtures.load("example23"), L)
    out.append(_outcome("Theorem 2 (psi=x^2)", v23, Outcome.NOT_APPLICABLE))
    out.append(_outcome("Theorem 2 (psi=0)", theorem2_classify(fixtures.load("example21_zero"), L), Outcome.VIOLATED, 2))
    return out


def _example23(opts) -> list[Check]:
    eps, steps = opts["eps"], opts["steps"]
    r = reproduce_example23(eps, steps)
    out = [
        Check("loop residual (RK4)", r.loop_residual <= 1e-6 * eps ** 3, f"<= {1e-6 * eps ** 3:.3e}", f"{r.loop_residual:.6e}"),
        Check("loop residual (quadrature)", r.loop_residual_xyz <= 1e-10, "<= 1.000e-10", f"{r.loop_residual_xyz:.6e}"),
        Check("closed-form determinant nonzero", r.det_closed_form != 0.0, "!= 0", f"{r.det_closed_form:.6e}"),
        Check("determinant vs closed form", r.det_relative_deviation <= 1e-2, "relative deviation <= 1e-2",
              f"{r.det_numeric:.6e} vs {r.det_closed_form:.6e} (relative deviation {r.det_relative_deviation:.4f})"),
    ]
    return out


def _sussmann_cubic(opts) -> list[Check]:
    L, k = opts["max_len"], opts["kmax"]
    s = fixtures.load("sussmann_cubic")
    p1 = check_sussmann_sufficient(s, L, k)
    return [
        _outcome("Prop. 1", p1, Outcome.INCONCLUSIVE),
        _eq("Prop. 1 certificate", _vec(0, 0, -2), dict(p1.brackets).get("B2=[[0,1],[0,[0,1]]]")),
        _outcome("Prop. 2", check_b1_obstruction(s, L), Outcome.INCONCLUSIVE),
        _outcome("Prop. 3", check_kawski(s, L, k), Outcome.INCONCLUSIVE),
        _outcome("Prop. 4", check_beauchard_marbach(s, L), Outcome.VIOLATED),
        _outcome("Prop. 3 on f0=(0,x,y^2)", check_kawski(fixtures.load("kawski_quadratic"), L, k), Outcome.VIOLATED),
    ]


FIXTURES: dict[str, Callable] = {
    "example0": _example0,
    "example1": _example1,
    "example22": _example22,
    "example23": _example23,
    "sussmann_cubic": _sussmann_cubic,
}


def run_fixture(name: str, *, max_len: int = 8, kmax: int = 6, eps: float = 0.1, steps: int = 100_000) -> list[Check]:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return FIXTURES[name](dict(max_len=max_len, kmax=kmax, eps=eps, steps=steps))
