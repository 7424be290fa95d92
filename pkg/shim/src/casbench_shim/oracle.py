"""CAS-backed answer equivalence oracle.

Both answer strings are normalized from competition LaTeX into CAS reader
syntax, parsed exactly (decimal literals become rationals of themselves, not
nearest fractions), and compared by symbolic simplification of the
difference. Failures never raise: anything unparseable or undecidable is
indeterminate.
"""

import re

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication_application,
    parse_expr,
    standard_transformations,
)

EQUIVALENT = "equivalent"
DISTINCT = "distinct"
INDETERMINATE = "indeterminate"

_TRANSFORMATIONS = standard_transformations + (
    implicit_multiplication_application,
    convert_xor,
)

_LOCALS = {"e": sympy.E, "pi": sympy.pi, "S": sympy.S}

_DROP_COMMANDS = (r"\left", r"\right", r"\,", r"\;", r"\!", r"\:", r"\ ")
_FUNC_COMMANDS = ("sin", "cos", "tan", "log", "exp")


def _balanced_group(text: str, start: int):
    """Contents of the brace group opening at text[start], plus end index."""
    if start >= len(text) or text[start] != "{":
        raise ValueError("expected a brace group")
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return text[start + 1 : i], i + 1
    raise ValueError("unbalanced braces")


def _rewrite_frac(text: str) -> str:
    while True:
        idx = text.find("\\frac{")
        if idx == -1:
            return text
        numerator, after = _balanced_group(text, idx + len("\\frac"))
        denominator, end = _balanced_group(text, after)
        text = text[:idx] + f"(({numerator})/({denominator}))" + text[end:]


def _rewrite_sqrt(text: str) -> str:
    while True:
        idx = text.find("\\sqrt")
        if idx == -1:
            return text
        pos = idx + len("\\sqrt")
        degree = None
        if pos < len(text) and text[pos] == "[":
            close = text.index("]", pos)
            degree = text[pos + 1 : close]
            pos = close + 1
        radicand, end = _balanced_group(text, pos)
        if degree is None:
            replacement = f"(sqrt({radicand}))"
        else:
            replacement = f"(({radicand})**(S(1)/({degree})))"
        text = text[:idx] + replacement + text[end:]


def _rewrite_binom(text: str) -> str:
    while True:
        idx = text.find("\\binom{")
        if idx == -1:
            return text
        top, after = _balanced_group(text, idx + len("\\binom"))
        bottom, end = _balanced_group(text, after)
        text = text[:idx] + f"(binomial(({top}),({bottom})))" + text[end:]


def _rewrite_factorials(text: str) -> str:
    while "!" in text:
        mark = text.index("!")
        j = mark - 1
        if j >= 0 and text[j] == ")":
            depth = 1
            j -= 1
            while j >= 0 and depth:
                depth += text[j] == ")"
                depth -= text[j] == "("
                j -= 1
            j += 1
        else:
            while j >= 0 and text[j].isalnum():
                j -= 1
            j += 1
        if j == mark:  # stray bang; leave it for the parser to reject
            return text
        text = text[:j] + f"factorial({text[j:mark]})" + text[mark + 1 :]
    return text


def latex_to_reader_syntax(answer: str) -> str:
    """Normalize a competition-LaTeX answer into CAS string-reader syntax."""
    text = answer.strip().replace("$", "")
    for command in _DROP_COMMANDS:
        text = text.replace(command, "")
    text = text.replace(r"\dfrac", r"\frac").replace(r"\tfrac", r"\frac")
    text = text.replace(r"\cdot", "*").replace(r"\times", "*")
    text = _rewrite_frac(text)
    text = _rewrite_sqrt(text)
    text = _rewrite_binom(text)
    for name in _FUNC_COMMANDS:
        text = text.replace(f"\\{name}", name)
    text = text.replace(r"\pi", "pi")
    text = _rewrite_factorials(text)
    # fixed-width integer conventions: leading zeros carry no value
    text = re.sub(r"(?<![\w.])0+(?=\d)", "", text)
    text = text.replace("{", "(").replace("}", ")")
    if "\\" in text:
        raise ValueError(f"unsupported LaTeX remains in {text!r}")
    return text


def _exactify(expr):
    """Replace float atoms by the rationals their digits denote."""
    return expr.xreplace(
        {f: sympy.Rational(str(f)) for f in expr.atoms(sympy.Float)}
    )


def parse_answer(answer: str):
    """Parse one answer string into an exact CAS expression. Raises on
    anything outside the supported forms."""
    if not answer or not answer.strip():
        raise ValueError("empty answer")
    text = latex_to_reader_syntax(answer)
    expr = parse_expr(text, transformations=_TRANSFORMATIONS, local_dict=dict(_LOCALS))
    return _exactify(expr)


def oracle_equivalent(lhs: str, rhs: str) -> str:
    """Gold equivalence verdict for two answer strings.

    equivalent iff the simplified difference is identically zero; failures
    of parsing or simplification map to indeterminate, never an exception.
    """
    try:
        left = parse_answer(lhs)
        right = parse_answer(rhs)
    except Exception:
        return INDETERMINATE
    try:
        decided = left.equals(right)
        if decided is True:
            return EQUIVALENT
        if decided is False:
            return DISTINCT
        difference = sympy.simplify(left - right)
        if difference == 0:
            return EQUIVALENT
        if difference.is_number and difference.is_nonzero:
            return DISTINCT
    except Exception:
        return INDETERMINATE
    return INDETERMINATE
