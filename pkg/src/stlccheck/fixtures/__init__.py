"""Systems from the worked examples, shipped as ``.sys`` files."""
from __future__ import annotations

from fractions import Fraction
from importlib import resources

from ..sysio import ControlAffineSystem, parse_controls, parse_system

__all__ = ["fixture_path", "load", "example1", "example21", "names"]


def fixture_path(filename: str):
    return resources.files(__name__).joinpath(filename)


def names() -> list[str]:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith((".sys", ".ctl")))


def load(name: str) -> ControlAffineSystem:
    """Load ``name`` (with or without the ``.sys`` suffix)."""
    if not name.endswith(".sys"):
        name += ".sys"
    return parse_system(fixture_path(name).read_text(encoding="utf-8"))


def load_controls(name: str, parameters=None):
    if not name.endswith(".ctl"):
        name += ".ctl"
    return parse_controls(fixture_path(name).read_text(encoding="utf-8"), parameters)


def example1(alpha) -> ControlAffineSystem:
    """Example with ``f2 = -(1/alpha) (2y^2, y)`` for a nonzero rational ``alpha``."""
    a = Fraction(alpha)
    if not a:
        raise ValueError("alpha must be nonzero")
    c = -1 / a
    return ControlAffineSystem.from_strings(
        ("x", "y"),
        ["y^2", "2*y"],
        ["y", "-1"],
        [f"{2 * c}*y^2", f"{c}*y"],
    )


def example21(phi: str = "0", psi: str = "0") -> ControlAffineSystem:
    """``x' = u1, y' = x + phi u2, z' = x^3 + y^2 + psi u2``."""
    return ControlAffineSystem.from_strings(
        ("x", "y", "z"),
        ["0", "x", "x^3 + y^2"],
        ["1", "0", "0"],
        ["0", phi, psi],
    )
