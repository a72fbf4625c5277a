"""Command-line interface: ``stlccheck analyze|simulate|chenfliess|reproduce``.

Exit codes: 0 success, 2 parse or input error, 3 equilibrium violation,
4 numerical divergence, 5 fixture check failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .chenfliess import QuadConfig, QuadratureError, series_truncated
from .conditions import AnalysisConfig, analyze
from .polycore import DimensionError
from .numsim import DivergenceError, integrate_rk4
from .reproduce import FIXTURES, run_fixture
from .sysio import EquilibriumError, ParseError, parse_constant, parse_controls, parse_poly, parse_system

EXIT_OK, EXIT_PARSE, EXIT_EQUILIBRIUM, EXIT_DIVERGENCE, EXIT_FIXTURE = 0, 2, 3, 4, 5


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from None


def _system(path: str):
    try:
        return parse_system(_read(path))
    except EquilibriumError as exc:
        raise _Fail(EXIT_EQUILIBRIUM, f"{path}: {exc}") from None
    except (ParseError, DimensionError) as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc}") from None


def _params(args) -> dict:
    return {} if args.eps is None else {"eps": args.eps}


def _controls(path: str, args):
    try:
        return parse_controls(_read(path), _params(args))
    except ParseError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc}") from None


def _time(args, default: float) -> float:
    if args.T is None:
        return default
    try:
        T = parse_constant(args.T, {"eps": 0.1, **_params(args)})
    except ParseError as exc:
        raise _Fail(EXIT_PARSE, f"--T: {exc}") from None
    if not T > 0:
        raise _Fail(EXIT_PARSE, "--T must be positive")
    return T


def _z0(args, n: int) -> np.ndarray:
    if args.z0 is None:
        return np.zeros(n)
    try:
        z = np.array([float(x) for x in args.z0.split(",")])
    except ValueError:
        raise _Fail(EXIT_PARSE, f"--z0: cannot parse {args.z0!r}") from None
    if z.shape != (n,):
        raise _Fail(EXIT_PARSE, f"--z0 needs {n} comma-separated values")
    return z


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_analyze(args) -> int:
    system = _system(args.system)
    report = analyze(system, AnalysisConfig(args.max_len, args.kmax, even_bracket_heuristic=args.even_brackets))
    print(report.dumps() if args.format == "json" else report.to_text())
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = _system(args.system)
    controls = _controls(args.controls, args)
    T = _time(args, 1.0)
    try:
        traj = integrate_rk4(system, controls, _z0(args, system.dim), T, args.steps)
    except DivergenceError as exc:
        raise _Fail(EXIT_DIVERGENCE, f"divergence at step {exc.step} of {args.steps}") from None
    if args.csv:
        traj.to_csv(args.csv)
    print(f"T = {_fmt(T)}")
    print("endpoint = " + ", ".join(f"{n}={_fmt(v)}" for n, v in zip(system.names, traj.endpoint)))
    print(f"max |endpoint| = {np.max(np.abs(traj.endpoint)):.6e}")
    return EXIT_OK


def cmd_chenfliess(args) -> int:
    system = _system(args.system)
    controls = _controls(args.controls, args)
    T = _time(args, 0.1)
    try:
        phi = parse_poly(args.phi, system.names)
    except ParseError as exc:
        raise _Fail(EXIT_PARSE, f"--phi: {exc}") from None
    try:
        series = series_truncated(system, phi, controls, T, args.max_len, QuadConfig(tol=args.tol))
    except QuadratureError as exc:
        raise _Fail(EXIT_DIVERGENCE, str(exc)) from None
    try:
        end = integrate_rk4(system, controls, np.zeros(system.dim), T, args.steps).endpoint
    except DivergenceError as exc:
        raise _Fail(EXIT_DIVERGENCE, f"divergence at step {exc.step} of {args.steps}") from None
    reference = float(phi.eval([float(v) for v in end]))
    print(f"series    = {_fmt(series)}  (L_max = {args.max_len})")
    print(f"reference = {_fmt(reference)}  (RK4, {args.steps} steps)")
    print(f"diff      = {abs(series - reference):.6e}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    checks = run_fixture(
        args.fixture,
        max_len=args.max_len,
        kmax=args.kmax,
        eps=0.1 if args.eps is None else args.eps,
        steps=args.steps,
    )
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{args.fixture}: {len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FIXTURE if failed else EXIT_OK


def _positive_int(minimum: int):
    def conv(text: str) -> int:
        v = int(text)
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}")
        return v

    return conv


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stlccheck", description="Bracket-based controllability checks for control-affine systems.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run every applicable controllability test")
    a.add_argument("system")
    a.add_argument("--max-len", type=_positive_int(2), default=8)
    a.add_argument("--kmax", type=_positive_int(0), default=6)
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--even-brackets", action="store_true", help="also run the low-order multi-input heuristic")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="integrate the system with RK4")
    s.add_argument("system")
    s.add_argument("controls")
    s.add_argument("--T", help="horizon; may use pi and eps (default 1)")
    s.add_argument("--steps", type=_positive_int(10), default=10_000)
    s.add_argument("--z0", help="comma-separated initial state (default 0)")
    s.add_argument("--eps", type=_positive_float, help="value of the control-file parameter eps")
    s.add_argument("--csv", help="write the trajectory to this CSV file")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("chenfliess", help="compare the truncated series with an RK4 reference")
    c.add_argument("system")
    c.add_argument("controls")
    c.add_argument("--phi", required=True, help="polynomial output, e.g. x")
    c.add_argument("--T", help="horizon; may use pi and eps (default 0.1)")
    c.add_argument("--max-len", type=_positive_int(1), default=6, help="longest multi-index (default 6)")
    c.add_argument("--tol", type=_positive_float, default=1e-10)
    c.add_argument("--steps", type=_positive_int(10), default=10_000)
    c.add_argument("--eps", type=_positive_float)
    c.set_defaults(func=cmd_chenfliess)

    r = sub.add_parser("reproduce", help="run the checks of a shipped example")
    r.add_argument("fixture", choices=sorted(FIXTURES))
    r.add_argument("--max-len", type=_positive_int(2), default=8)
    r.add_argument("--kmax", type=_positive_int(0), default=6)
    r.add_argument("--eps", type=_positive_float)
    r.add_argument("--steps", type=_positive_int(10), default=100_000)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
