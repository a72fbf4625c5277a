"""Parsing of system and control descriptions."""
from .controls import Atom, ControlSignal, Segment, load_controls, parse_constant, parse_control_expr, parse_controls
from .grammar import ParseError
from .systems import (
    ControlAffineSystem,
    EquilibriumError,
    UnknownIdentifierError,
    load_system,
    parse_poly,
    parse_system,
    serialize_system,
)

__all__ = [
    "Atom",
    "ControlAffineSystem",
    "ControlSignal",
    "EquilibriumError",
    "ParseError",
    "Segment",
    "UnknownIdentifierError",
    "load_controls",
    "load_system",
    "parse_constant",
    "parse_control_expr",
    "parse_controls",
    "parse_poly",
    "parse_system",
    "serialize_system",
]
