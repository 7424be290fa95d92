"""AST node types for competition-math answer expressions.

All nodes are immutable; structural equality is field-by-field. Commutative
node operands are tuples so trees hash and compare cheaply.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

FUNCTION_NAMES = frozenset(
    {"sqrt", "root", "abs", "sin", "cos", "tan", "log", "exp", "binom", "factorial"}
)
CONSTANT_NAMES = frozenset({"pi", "e"})

MathExpr = Union[
    "Integer", "Rational", "DecimalLit", "Symbol", "Constant", "Add", "Mul", "Pow", "Neg", "Func"
]


@dataclass(frozen=True)
class Integer:
    value: int


@dataclass(frozen=True)
class Rational:
    """Exact fraction, always stored reduced with a positive denominator."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator == 0:
            raise ValueError("rational with zero denominator")
        g = math.gcd(self.numerator, self.denominator)
        num, den = self.numerator // g, self.denominator // g
        if den < 0:
            num, den = -num, -den
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)


@dataclass(frozen=True)
class DecimalLit:
    """Decimal literal as written: sign, digit string (no dot), decimal places.

    Value = sign * int(digits) / 10**scale. Keeping the digit string verbatim
    preserves trailing zeros ("2.50") through a parse/print round trip.
    """

    sign: int
    digits: str
    scale: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("decimal sign must be +1 or -1")
        if not self.digits or not self.digits.isdigit():
            raise ValueError("decimal digits must be a non-empty digit string")
        if self.scale < 0:
            raise ValueError("decimal scale must be non-negative")
        # Leading zeros are presentation, not value: "0.5" and ".5" unify.
        object.__setattr__(self, "digits", self.digits.lstrip("0") or "0")


@dataclass(frozen=True)
class Symbol:
    name: str


@dataclass(frozen=True)
class Constant:
    name: str

    def __post_init__(self):
        if self.name not in CONSTANT_NAMES:
            raise ValueError(f"unknown constant {self.name!r}")


@dataclass(frozen=True)
class Add:
    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("add needs at least two operands")
        if any(isinstance(t, Add) for t in self.terms):
            raise ValueError("add operands must be flattened")


@dataclass(frozen=True)
class Mul:
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("mul needs at least two operands")
        if any(isinstance(f, Mul) for f in self.factors):
            raise ValueError("mul operands must be flattened")


@dataclass(frozen=True)
class Pow:
    base: MathExpr
    exponent: MathExpr


@dataclass(frozen=True)
class Neg:
    operand: MathExpr


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple

    def __post_init__(self):
        if self.name not in FUNCTION_NAMES:
            raise ValueError(f"unknown function {self.name!r}")
        arity = 2 if self.name in ("root", "binom") else 1
        if len(self.args) != arity:
            raise ValueError(f"{self.name} takes {arity} argument(s), got {len(self.args)}")


def as_fraction(expr) -> "Fraction | None":
    """Exact rational value of a literal node, None for anything else."""
    if isinstance(expr, Integer):
        return Fraction(expr.value)
    if isinstance(expr, Rational):
        return Fraction(expr.numerator, expr.denominator)
    if isinstance(expr, DecimalLit):
        return Fraction(expr.sign * int(expr.digits), 10**expr.scale)
    return None


def from_fraction(value: Fraction) -> MathExpr:
    if value.denominator == 1:
        return Integer(value.numerator)
    return Rational(value.numerator, value.denominator)


def free_symbols(expr) -> frozenset:
    if isinstance(expr, Symbol):
        return frozenset({expr.name})
    if isinstance(expr, Add):
        return frozenset().union(*(free_symbols(t) for t in expr.terms))
    if isinstance(expr, Mul):
        return frozenset().union(*(free_symbols(f) for f in expr.factors))
    if isinstance(expr, Pow):
        return free_symbols(expr.base) | free_symbols(expr.exponent)
    if isinstance(expr, Neg):
        return free_symbols(expr.operand)
    if isinstance(expr, Func):
        if not expr.args:
            return frozenset()
        return frozenset().union(*(free_symbols(a) for a in expr.args))
    return frozenset()


_RANK = {
    Integer: 0,
    Rational: 0,
    DecimalLit: 0,
    Constant: 1,
    Symbol: 2,
    Func: 3,
    Pow: 4,
    Mul: 5,
    Add: 6,
    Neg: 7,
}


def sort_key(expr) -> tuple:
    """Fixed total order on nodes, used to sort commutative operands.

    Numeric literals order by value (ties broken by node kind), everything
    else structurally within its kind.
    """
    rank = _RANK[type(expr)]
    value = as_fraction(expr)
    if value is not None:
        return (rank, value, type(expr).__name__)
    if isinstance(expr, (Constant, Symbol)):
        return (rank, expr.name)
    if isinstance(expr, Func):
        return (rank, expr.name, tuple(sort_key(a) for a in expr.args))
    if isinstance(expr, Pow):
        return (rank, sort_key(expr.base), sort_key(expr.exponent))
    if isinstance(expr, Mul):
        return (rank, tuple(sort_key(f) for f in expr.factors))
    if isinstance(expr, Add):
        return (rank, tuple(sort_key(t) for t in expr.terms))
    if isinstance(expr, Neg):
        return (rank, sort_key(expr.operand))
    raise TypeError(f"not a MathExpr: {expr!r}")


def _decimal_text(lit: DecimalLit) -> str:
    sign = "-" if lit.sign < 0 else ""
    if lit.scale == 0:
        return sign + lit.digits
    digits = lit.digits.rjust(lit.scale + 1, "0")
    return f"{sign}{digits[:-lit.scale]}.{digits[-lit.scale:]}"


def _needs_parens_as_base(expr) -> bool:
    if isinstance(expr, Integer):
        return expr.value < 0
    return isinstance(expr, (Rational, DecimalLit, Add, Mul, Pow, Neg))


def _needs_parens_as_factor(expr) -> bool:
    return isinstance(expr, (Add, Neg))


def to_latex(expr) -> str:
    """Render a tree back into the grammar subset the parser accepts.

    Guarantee: parse_latex(to_latex(parse_latex(s))) is structurally identical
    to parse_latex(s).
    """
    if isinstance(expr, Integer):
        return str(expr.value)
    if isinstance(expr, Rational):
        if expr.numerator < 0:
            return f"-\\frac{{{-expr.numerator}}}{{{expr.denominator}}}"
        return f"\\frac{{{expr.numerator}}}{{{expr.denominator}}}"
    if isinstance(expr, DecimalLit):
        return _decimal_text(expr)
    if isinstance(expr, Symbol):
        return expr.name
    if isinstance(expr, Constant):
        return "\\pi" if expr.name == "pi" else "e"
    if isinstance(expr, Add):
        parts = [to_latex(expr.terms[0])]
        for term in expr.terms[1:]:
            rendered = to_latex(term)
            if rendered.startswith("-"):
                parts.append(" - " + rendered[1:])
            else:
                parts.append(" + " + rendered)
        return "".join(parts)
    if isinstance(expr, Mul):
        # A reciprocal pair prints as a fraction so parsed \frac round-trips;
        # later reciprocal factors print as "/" to keep operand order.
        if (
            len(expr.factors) == 2
            and isinstance(expr.factors[1], Pow)
            and expr.factors[1].exponent == Integer(-1)
        ):
            return f"\\frac{{{to_latex(expr.factors[0])}}}{{{to_latex(expr.factors[1].base)}}}"
        first = to_latex(expr.factors[0])
        if _needs_parens_as_factor(expr.factors[0]):
            first = f"\\left({first}\\right)"
        parts = [first]
        for factor in expr.factors[1:]:
            if isinstance(factor, Pow) and factor.exponent == Integer(-1):
                base = factor.base
                text = to_latex(base)
                if isinstance(base, (Add, Mul, Neg)):
                    text = f"\\left({text}\\right)"
                parts.append(" / " + text)
                continue
            text = to_latex(factor)
            if _needs_parens_as_factor(factor):
                text = f"\\left({text}\\right)"
            parts.append(" \\cdot " + text)
        return "".join(parts)
    if isinstance(expr, Pow):
        base = to_latex(expr.base)
        if _needs_parens_as_base(expr.base):
            base = f"\\left({base}\\right)"
        return f"{base}^{{{to_latex(expr.exponent)}}}"
    if isinstance(expr, Neg):
        inner = to_latex(expr.operand)
        if isinstance(expr.operand, (Add, Neg)):
            inner = f"\\left({inner}\\right)"
        return "-" + inner
    if isinstance(expr, Func):
        return _func_latex(expr)
    raise TypeError(f"not a MathExpr: {expr!r}")


def _func_latex(expr: Func) -> str:
    if expr.name == "sqrt":
        return f"\\sqrt{{{to_latex(expr.args[0])}}}"
    if expr.name == "root":
        radicand, degree = expr.args
        return f"\\sqrt[{to_latex(degree)}]{{{to_latex(radicand)}}}"
    if expr.name == "abs":
        return f"\\left|{to_latex(expr.args[0])}\\right|"
    if expr.name == "binom":
        n, k = expr.args
        return f"\\binom{{{to_latex(n)}}}{{{to_latex(k)}}}"
    if expr.name == "factorial":
        arg = expr.args[0]
        inner = to_latex(arg)
        if not isinstance(arg, (Integer, Symbol, Constant)) or (
            isinstance(arg, Integer) and arg.value < 0
        ):
            inner = f"\\left({inner}\\right)"
        return inner + "!"
    return f"\\{expr.name}\\left({to_latex(expr.args[0])}\\right)"
