"""Exact-arithmetic answer engine: boxed-answer extraction, LaTeX parsing,
canonicalization, and staged equivalence checking."""

from .boxed import extract_boxed
from .canonical import canonicalize
from .equivalence import EquivalenceVerdict, EscalationPolicy, check_equivalence
from .nodes import (
    Add,
    Constant,
    DecimalLit,
    Func,
    Integer,
    Mul,
    Neg,
    Pow,
    Rational,
    Symbol,
    to_latex,
)
from .parser import parse_latex

__all__ = [
    "Add",
    "Constant",
    "DecimalLit",
    "EquivalenceVerdict",
    "EscalationPolicy",
    "Func",
    "Integer",
    "Mul",
    "Neg",
    "Pow",
    "Rational",
    "Symbol",
    "canonicalize",
    "check_equivalence",
    "extract_boxed",
    "parse_latex",
    "to_latex",
]
