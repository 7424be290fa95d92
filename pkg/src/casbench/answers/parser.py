"""Recursive-descent parser for the competition-math LaTeX answer subset.

Supported: integers, decimals, \\frac / \\dfrac, \\sqrt{} and \\sqrt[n]{},
\\pi and e, \\cdot and juxtaposition multiplication, "/" division, ^ with a
braced (or single numeric token) exponent, parentheses and \\left \\right
delimiters, |...| absolute value, unary minus, \\binom, postfix !, and ascii
or backslash function names. Spacing commands (\\, \\; \\! \\:) and $ are
ignored. Anything else raises ParseError with the byte offset and the token
set that would have been accepted.
"""

from ..errors import ParseError
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
)

_FUNC_WORDS = frozenset({"sin", "cos", "tan", "log", "exp", "abs", "sqrt", "factorial"})
_FUNC_COMMANDS = frozenset({"sin", "cos", "tan", "log", "exp"})
_SKIP_COMMANDS = frozenset({"left", "right", ",", ";", "!", ":", " "})

_SINGLE_CHAR_TOKENS = {
    "^": "CARET",
    "!": "BANG",
    "+": "PLUS",
    "-": "MINUS",
    "/": "SLASH",
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    "[": "LBRACKET",
    "]": "RBRACKET",
    "|": "PIPE",
}


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind
        self.text = text
        self.offset = offset

    def __repr__(self):
        return f"_Token({self.kind}, {self.text!r}, {self.offset})"


def _tokenize(source: str) -> list:
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace() or ch == "$":
            i += 1
            continue
        if ch == "\\":
            if i + 1 < n and not source[i + 1].isalpha():
                name = source[i + 1]
                end = i + 2
            else:
                end = i + 1
                while end < n and source[end].isalpha():
                    end += 1
                name = source[i + 1 : end]
            if not name:
                raise ParseError("dangling backslash", i)
            if name in _SKIP_COMMANDS:
                i = end
                continue
            tokens.append(_Token("CMD", name, i))
            i = end
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            end = i
            while end < n and source[end].isdigit():
                end += 1
            if end < n and source[end] == "." and end + 1 < n and source[end + 1].isdigit():
                end += 1
                while end < n and source[end].isdigit():
                    end += 1
                tokens.append(_Token("DECIMAL", source[i:end], i))
            else:
                tokens.append(_Token("INT", source[i:end], i))
            i = end
            continue
        if ch.isalpha():
            end = i
            while end < n and source[end].isalpha():
                end += 1
            run = source[i:end]
            if run in _FUNC_WORDS or run == "pi":
                tokens.append(_Token("NAME", run, i))
            else:
                for j, letter in enumerate(run):
                    tokens.append(_Token("LETTER", letter, i + j))
            i = end
            continue
        kind = _SINGLE_CHAR_TOKENS.get(ch)
        if kind is None:
            raise ParseError(f"unexpected character {ch!r}", i)
        tokens.append(_Token(kind, ch, i))
        i += 1
    tokens.append(_Token("EOF", "", n))
    return tokens


def _make_add(terms):
    flat = []
    for term in terms:
        if isinstance(term, Add):
            flat.extend(term.terms)
        else:
            flat.append(term)
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def _make_mul(factors):
    flat = []
    for factor in factors:
        if isinstance(factor, Mul):
            flat.extend(factor.factors)
        else:
            flat.append(factor)
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def _make_frac(numerator, denominator):
    if isinstance(numerator, (Integer, Rational)) and isinstance(denominator, Integer):
        num = (
            Rational(numerator.value, 1) if isinstance(numerator, Integer) else numerator
        )
        if denominator.value != 0:
            return Rational(num.numerator, num.denominator * denominator.value)
    return _make_mul([numerator, Pow(denominator, Integer(-1))])


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind, expected_label=None):
        token = self.peek()
        if token.kind != kind:
            raise ParseError(
                f"unexpected {token.kind} {token.text!r}",
                token.offset,
                {expected_label or kind},
            )
        return self.advance()

    def parse(self):
        expr = self.parse_expr()
        token = self.peek()
        if token.kind != "EOF":
            raise ParseError(
                f"trailing input {token.text!r}", token.offset, {"end of input", "+", "-"}
            )
        return expr

    def parse_expr(self):
        terms = []
        negate = False
        if self.peek().kind == "MINUS":
            self.advance()
            negate = True
        term = self.parse_term()
        terms.append(Neg(term) if negate else term)
        while self.peek().kind in ("PLUS", "MINUS"):
            op = self.advance()
            term = self.parse_term()
            terms.append(Neg(term) if op.kind == "MINUS" else term)
        return _make_add(terms)

    def parse_term(self):
        factors = [self.parse_factor()]
        while True:
            token = self.peek()
            if token.kind == "CMD" and token.text in ("cdot", "times"):
                self.advance()
                factors.append(self.parse_factor())
            elif token.kind == "SLASH":
                self.advance()
                divisor = self.parse_factor()
                if isinstance(factors[-1], (Integer, Rational)) and isinstance(
                    divisor, Integer
                ) and divisor.value != 0 and len(factors) == 1:
                    factors[-1] = _make_frac(factors[-1], divisor)
                else:
                    factors.append(Pow(divisor, Integer(-1)))
            elif self._starts_juxtaposed_factor(token):
                factors.append(self.parse_factor())
            else:
                break
        return _make_mul(factors)

    def _starts_juxtaposed_factor(self, token) -> bool:
        # A bare numeric literal may open a product but never continue one:
        # in LaTeX "2 3" is the number 23, not a product, so it is rejected.
        # | never continues a product either (open/close ambiguity).
        if token.kind in ("LETTER", "NAME", "LPAREN", "LBRACE"):
            return True
        if token.kind == "CMD":
            return (
                token.text in ("frac", "dfrac", "sqrt", "pi", "binom")
                or token.text in _FUNC_COMMANDS
            )
        return False

    def parse_factor(self):
        node = self.parse_atom()
        saw_caret = False
        while True:
            token = self.peek()
            if token.kind == "CARET":
                if saw_caret:
                    raise ParseError(
                        "double superscript; brace the exponent", token.offset, {"{"}
                    )
                self.advance()
                node = Pow(node, self.parse_exponent())
                saw_caret = True
            elif token.kind == "BANG":
                self.advance()
                node = Func("factorial", (node,))
                saw_caret = False
            else:
                return node

    def parse_exponent(self):
        token = self.peek()
        if token.kind == "LBRACE":
            return self.parse_brace_group()
        if token.kind == "INT":
            self.advance()
            return Integer(int(token.text))
        if token.kind == "DECIMAL":
            self.advance()
            return _decimal_node(token.text)
        raise ParseError(
            f"unexpected {token.kind} {token.text!r} in exponent",
            token.offset,
            {"{", "integer", "decimal"},
        )

    def parse_brace_group(self):
        self.expect("LBRACE", "{")
        expr = self.parse_expr()
        self.expect("RBRACE", "}")
        return expr

    def parse_function_arg(self):
        token = self.peek()
        if token.kind == "LPAREN":
            self.advance()
            expr = self.parse_expr()
            self.expect("RPAREN", ")")
            return expr
        if token.kind == "LBRACE":
            return self.parse_brace_group()
        raise ParseError(
            f"unexpected {token.kind} {token.text!r}; function argument needs ( ) or {{ }}",
            token.offset,
            {"(", "{"},
        )

    def parse_atom(self):
        token = self.advance()
        if token.kind == "INT":
            return Integer(int(token.text))
        if token.kind == "DECIMAL":
            return _decimal_node(token.text)
        if token.kind == "LETTER":
            if token.text == "e":
                return Constant("e")
            return Symbol(token.text)
        if token.kind == "NAME":
            if token.text == "pi":
                return Constant("pi")
            return Func(token.text, (self.parse_function_arg(),))
        if token.kind == "LPAREN":
            expr = self.parse_expr()
            self.expect("RPAREN", ")")
            return expr
        if token.kind == "LBRACE":
            expr = self.parse_expr()
            self.expect("RBRACE", "}")
            return expr
        if token.kind == "PIPE":
            expr = self.parse_expr()
            self.expect("PIPE", "|")
            return Func("abs", (expr,))
        if token.kind == "CMD":
            return self.parse_command(token)
        raise ParseError(
            f"unexpected {token.kind} {token.text!r}",
            token.offset,
            {"number", "symbol", "command", "("},
        )

    def parse_command(self, token):
        name = token.text
        if name in ("frac", "dfrac"):
            numerator = self.parse_brace_group()
            denominator = self.parse_brace_group()
            return _make_frac(numerator, denominator)
        if name == "sqrt":
            if self.peek().kind == "LBRACKET":
                self.advance()
                degree = self.parse_expr()
                self.expect("RBRACKET", "]")
                radicand = self.parse_brace_group()
                return Func("root", (radicand, degree))
            radicand = self.parse_brace_group()
            return Func("sqrt", (radicand,))
        if name == "pi":
            return Constant("pi")
        if name == "binom":
            top = self.parse_brace_group()
            bottom = self.parse_brace_group()
            return Func("binom", (top, bottom))
        if name in _FUNC_COMMANDS:
            return Func(name, (self.parse_function_arg(),))
        raise ParseError(
            f"unsupported command \\{name}",
            token.offset,
            {"\\frac", "\\sqrt", "\\pi", "\\binom", "\\cdot"},
        )


def _decimal_node(text: str) -> DecimalLit:
    whole, _, frac = text.partition(".")
    return DecimalLit(1, whole + frac, len(frac))


def parse_latex(answer: str):
    """Parse a raw answer string into a MathExpr tree.

    Raises ParseError (with byte offset and expected-token set) for anything
    outside the grammar subset; such answers are left to the oracle stage or
    scored indeterminate, never silently string-compared.
    """
    if not answer or not answer.strip():
        raise ParseError("empty answer", 0)
    return _Parser(answer).parse()
