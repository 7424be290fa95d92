"""Canonicalization of answer ASTs.

Rewrites are exact and value-preserving: constant folding over rationals,
maximal square/nth-power extraction from radicals of positive rationals,
like-term and like-base merging, flattening, and a fixed sort order for
commutative operands. canonicalize is idempotent; partial simplification is
acceptable and nothing here fails.

Branch safety rules for principal powers (z != 0):
  z^a * z^b = z^(a+b)            always
  (z^a)^n = z^(a*n)              for integer n
  (q^a)^b = q^(a*b)              for positive rational q
  (c*z)^(1/2) = sqrt(c)*sqrt(z)  for positive rational c
Fractional powers are combined across different bases only when every base
is a positive rational.
"""

import math
from fractions import Fraction

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
    as_fraction,
    from_fraction,
    sort_key,
)

# Exponent / operand size guards so pathological trees cannot fold into huge
# integers; oversized powers simply stay symbolic.
_FOLD_EXP_CAP = 64
_FACTOR_CAP = 10**12
_FACTORIAL_CAP = 2000


def canonicalize(expr):
    """Return the canonical form of a MathExpr. Fixed point: applying it
    twice equals applying it once."""
    return _canon(expr)


def _canon(expr):
    if isinstance(expr, Integer):
        return expr
    if isinstance(expr, Rational):
        return from_fraction(Fraction(expr.numerator, expr.denominator))
    if isinstance(expr, DecimalLit):
        return from_fraction(as_fraction(expr))
    if isinstance(expr, Constant):
        return expr
    if isinstance(expr, Neg):
        return _canon_mul([Integer(-1), _canon(expr.operand)])
    if isinstance(expr, Add):
        return _canon_add([_canon(t) for t in expr.terms])
    if isinstance(expr, Mul):
        return _canon_mul([_canon(f) for f in expr.factors])
    if isinstance(expr, Pow):
        return _canon_pow(_canon(expr.base), _canon(expr.exponent))
    if isinstance(expr, Func):
        return _canon_func(expr.name, tuple(_canon(a) for a in expr.args))
    return expr  # Symbol


# ---------------------------------------------------------------------------
# integer root extraction


def _iroot(n: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if k == 2:
        return math.isqrt(n)
    if n < 2:
        return n
    guess = int(round(n ** (1.0 / k))) if n.bit_length() < 900 else 1 << (n.bit_length() // k + 1)
    while guess**k > n:
        guess -= 1
    while (guess + 1) ** k <= n:
        guess += 1
    return guess


def _extract_power(n: int, k: int):
    """Maximal s with s**k dividing n, as (s, n // s**k). n must be >= 0."""
    if n in (0, 1):
        return 1, n
    if n > _FACTOR_CAP:
        root = _iroot(n, k)
        if root**k == n:
            return root, 1
        return 1, n
    s = 1
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            exp = 0
            while m % d == 0:
                m //= d
                exp += 1
            s *= d ** (exp // k)
            m *= d ** (exp % k)  # residue below k stays under the radical
        d += 1
    return s, n // (s**k)


def _sqrt_number(value: Fraction):
    """sqrt of a positive rational as (coefficient, integer radicand or None)."""
    a, b = value.numerator, value.denominator
    s, r = _extract_power(a * b, 2)
    return Fraction(s, b), (None if r == 1 else r)


def _root_number(value: Fraction, degree: int):
    """degree-th root of a positive rational as (coefficient, radicand or None),
    or None when the fold would blow past the size guards."""
    a, b = value.numerator, value.denominator
    if degree > _FOLD_EXP_CAP:
        return None
    m = a * b ** (degree - 1)
    s, r = _extract_power(m, degree)
    return Fraction(s, b), (None if r == 1 else r)


def _power_factors(base: Fraction, exponent: Fraction):
    """Canonical (coefficient, factor nodes) for base**exponent, base > 0
    rational; None when size guards veto the fold."""
    if base <= 0:
        return None
    if exponent.denominator > _FOLD_EXP_CAP:
        return None
    whole = math.floor(exponent)
    rest = exponent - whole
    if abs(whole) > _FOLD_EXP_CAP or rest.numerator > _FOLD_EXP_CAP:
        return None
    coeff = base**whole
    if rest == 0:
        return coeff, []
    radicand = base**rest.numerator
    if rest.denominator == 2:
        extra, residue = _sqrt_number(radicand)
        coeff *= extra
        return coeff, ([] if residue is None else [Func("sqrt", (Integer(residue),))])
    result = _root_number(radicand, rest.denominator)
    if result is None:
        return None
    extra, residue = result
    coeff *= extra
    factors = (
        []
        if residue is None
        else [Func("root", (Integer(residue), Integer(rest.denominator)))]
    )
    return coeff, factors


# ---------------------------------------------------------------------------
# sums


def _coeff_term(expr):
    """Split a canonical term into (rational coefficient, non-numeric core)."""
    value = as_fraction(expr)
    if value is not None:
        return value, None
    if isinstance(expr, Mul):
        head = as_fraction(expr.factors[0])
        if head is not None:
            rest = expr.factors[1:]
            core = rest[0] if len(rest) == 1 else Mul(rest)
            return head, core
    return Fraction(1), expr


def _scale(core, coeff: Fraction):
    if coeff == 1:
        return core
    number = from_fraction(coeff)
    if isinstance(core, Mul):
        return Mul((number,) + core.factors)
    return Mul((number, core))


def _canon_add(terms):
    flat = []
    for term in terms:
        if isinstance(term, Add):
            flat.extend(term.terms)
        else:
            flat.append(term)
    constant = Fraction(0)
    merged = {}  # sort_key(core) -> [coeff, core]
    for term in flat:
        coeff, core = _coeff_term(term)
        if core is None:
            constant += coeff
            continue
        key = sort_key(core)
        if key in merged:
            merged[key][0] += coeff
        else:
            merged[key] = [coeff, core]
    out = []
    if constant != 0:
        out.append(from_fraction(constant))
    for coeff, core in merged.values():
        if coeff == 0:
            continue
        out.append(_scale(core, coeff))
    if not out:
        return Integer(0)
    out.sort(key=sort_key)
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


# ---------------------------------------------------------------------------
# products


def _compose_safe(inner_base, inner_exp: Fraction, outer_exp: Fraction) -> bool:
    if inner_exp == 1:
        return True
    if outer_exp.denominator == 1:
        return True
    value = as_fraction(inner_base)
    return value is not None and value > 0


def _pow_parts(factor):
    """(base, rational exponent) view of a canonical factor, composing nested
    powers only where branch-safe."""
    if isinstance(factor, Pow):
        exp = as_fraction(factor.exponent)
        if exp is None:
            return factor, Fraction(1)
        inner_base, inner_exp = _pow_parts(factor.base)
        if _compose_safe(inner_base, inner_exp, exp):
            return inner_base, inner_exp * exp
        return factor.base, exp
    if isinstance(factor, Func) and factor.name == "sqrt":
        inner_base, inner_exp = _pow_parts(factor.args[0])
        if _compose_safe(inner_base, inner_exp, Fraction(1, 2)):
            return inner_base, inner_exp * Fraction(1, 2)
        return factor.args[0], Fraction(1, 2)
    if isinstance(factor, Func) and factor.name == "root":
        degree = factor.args[1]
        if isinstance(degree, Integer) and degree.value >= 1:
            outer = Fraction(1, degree.value)
            inner_base, inner_exp = _pow_parts(factor.args[0])
            if _compose_safe(inner_base, inner_exp, outer):
                return inner_base, inner_exp * outer
            return factor.args[0], outer
    return factor, Fraction(1)


def _emit_power(base, exponent: Fraction):
    """Canonical node for base**exponent with a non-numeric base."""
    if exponent == 1:
        return base
    if exponent == Fraction(1, 2):
        return Func("sqrt", (base,))
    return Pow(base, from_fraction(exponent))


def _canon_mul(factors):
    flat = []
    for factor in factors:
        if isinstance(factor, Mul):
            flat.extend(factor.factors)
        else:
            flat.append(factor)
    coeff = Fraction(1)
    rational_pool = {}  # positive rational base -> exponent sum
    opaque_pool = {}  # sort_key(base) -> [base, exponent sum]
    emitted = []
    for factor in flat:
        value = as_fraction(factor)
        if value is not None:
            if value == 0:
                return Integer(0)
            coeff *= value
            continue
        base, exp = _pow_parts(factor)
        base_value = as_fraction(base)
        if base_value is not None and base_value > 0:
            rational_pool[base_value] = rational_pool.get(base_value, Fraction(0)) + exp
        else:
            key = sort_key(base)
            if key in opaque_pool:
                opaque_pool[key][1] += exp
            else:
                opaque_pool[key] = [base, exp]
    # positive rational bases: integer parts fold into the coefficient and
    # fractional parts group per root degree, so sqrt(2)*sqrt(3) -> sqrt(6)
    radicands = {}  # degree -> radicand product
    for base_value, exp in rational_pool.items():
        if exp == 0:
            continue
        whole = math.floor(exp)
        rest = exp - whole
        if (
            abs(whole) > _FOLD_EXP_CAP
            or rest.denominator > _FOLD_EXP_CAP
            or rest.numerator > _FOLD_EXP_CAP
        ):
            emitted.append(Pow(from_fraction(base_value), from_fraction(exp)))
            continue
        coeff *= base_value**whole
        if rest != 0:
            degree = rest.denominator
            radicands[degree] = (
                radicands.get(degree, Fraction(1)) * base_value**rest.numerator
            )
    for degree in sorted(radicands):
        radicand = radicands[degree]
        if degree == 2:
            extra, residue = _sqrt_number(radicand)
            coeff *= extra
            if residue is not None:
                emitted.append(Func("sqrt", (Integer(residue),)))
            continue
        result = _root_number(radicand, degree)
        if result is None:
            emitted.append(Pow(from_fraction(radicand), Rational(1, degree)))
            continue
        extra, residue = result
        coeff *= extra
        if residue is not None:
            emitted.append(Func("root", (Integer(residue), Integer(degree))))
    for base, exp in opaque_pool.values():
        emitted.append(_emit_power(base, exp))
    # emissions that collapsed to plain numbers belong in the coefficient
    leftovers = []
    for node in emitted:
        value = as_fraction(node)
        if value is not None:
            if value == 0:
                return Integer(0)
            coeff *= value
        else:
            leftovers.append(node)
    leftovers.sort(key=sort_key)
    if not leftovers:
        return from_fraction(coeff)
    out = leftovers if coeff == 1 else [from_fraction(coeff)] + leftovers
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


# ---------------------------------------------------------------------------
# powers


def _canon_pow(base, exponent):
    exp_value = as_fraction(exponent)
    if exp_value is None:
        return Pow(base, exponent)
    if exp_value == 1:
        return base
    base_value = as_fraction(base)
    if base_value is not None:
        if exp_value == 0 and base_value != 0:
            return Integer(1)
        if exp_value.denominator == 1:
            n = exp_value.numerator
            if abs(n) <= _FOLD_EXP_CAP and not (base_value == 0 and n < 0):
                return from_fraction(base_value**n)
            return Pow(base, exponent)
        folded = _power_factors(base_value, exp_value)
        if folded is not None:
            extra, factor_nodes = folded
            return _canon_mul([from_fraction(extra)] + factor_nodes)
        if base_value > 0:
            return Pow(base, exponent)
        # negative rational base, fractional exponent: emit via the shared
        # product machinery so the form matches pool emissions
        return _canon_mul([Pow(base, from_fraction(exp_value))])
    # distribute integer exponents over products: (a*b)^n = a^n * b^n
    if exp_value.denominator == 1 and isinstance(base, Mul):
        n = exp_value.numerator
        if abs(n) <= _FOLD_EXP_CAP:
            return _canon_mul([_canon_pow(f, Integer(n)) for f in base.factors])
    # merge nested numeric powers of a positive rational: (q^a)^b = q^(a*b)
    if isinstance(base, Pow):
        inner_value = as_fraction(base.base)
        inner_exp = as_fraction(base.exponent)
        if inner_value is not None and inner_value > 0 and inner_exp is not None:
            return _canon_pow(base.base, from_fraction(inner_exp * exp_value))
    if exp_value == Fraction(1, 2):
        return _canon_sqrt(base)
    if exp_value == 0:
        return Pow(base, Integer(0))  # base could be zero; leave unfolded
    return _canon_mul([Pow(base, from_fraction(exp_value))])


# ---------------------------------------------------------------------------
# functions


def _canon_sqrt(arg):
    value = as_fraction(arg)
    if value is not None and value >= 0:
        if value == 0:
            return Integer(0)
        coeff, residue = _sqrt_number(value)
        if residue is None:
            return from_fraction(coeff)
        node = Func("sqrt", (Integer(residue),))
        return node if coeff == 1 else _canon_mul([from_fraction(coeff), node])
    if isinstance(arg, Mul):
        head = as_fraction(arg.factors[0])
        if head is not None and head > 0:
            rest = arg.factors[1:]
            rest_node = rest[0] if len(rest) == 1 else Mul(rest)
            return _canon_mul(
                [_canon_sqrt(from_fraction(head)), Func("sqrt", (rest_node,))]
            )
    return Func("sqrt", (arg,))


def _canon_root(radicand, degree):
    degree_value = as_fraction(degree)
    if degree_value is None or degree_value.denominator != 1 or degree_value < 1:
        return Func("root", (radicand, degree))
    n = degree_value.numerator
    if n == 1:
        return radicand
    if n == 2:
        return _canon_sqrt(radicand)
    value = as_fraction(radicand)
    if value is not None:
        if value == 0:
            return Integer(0)
        if value > 0:
            result = _root_number(value, n)
            if result is not None:
                coeff, residue = result
                if residue is None:
                    return from_fraction(coeff)
                node = Func("root", (Integer(residue), Integer(n)))
                return node if coeff == 1 else _canon_mul([from_fraction(coeff), node])
        return Func("root", (radicand, Integer(n)))
    return _canon_pow(radicand, Rational(1, n))


_EXACT_FUNC_TABLE = {
    ("sin", Integer(0)): Integer(0),
    ("cos", Integer(0)): Integer(1),
    ("tan", Integer(0)): Integer(0),
    ("exp", Integer(0)): Integer(1),
    ("exp", Integer(1)): Constant("e"),
    ("log", Integer(1)): Integer(0),
    ("log", Constant("e")): Integer(1),
    ("sin", Constant("pi")): Integer(0),
    ("tan", Constant("pi")): Integer(0),
    ("cos", Constant("pi")): Integer(-1),
}


def _canon_abs(arg):
    value = as_fraction(arg)
    if value is not None:
        return from_fraction(abs(value))
    if isinstance(arg, Constant):
        return arg  # pi and e are positive
    if isinstance(arg, Func) and arg.name == "sqrt":
        inner = as_fraction(arg.args[0])
        if inner is not None and inner >= 0:
            return arg
    if isinstance(arg, Mul):
        head = as_fraction(arg.factors[0])
        if head is not None and head < 0:
            rest = arg.factors[1:]
            rest_node = rest[0] if len(rest) == 1 else Mul(rest)
            return _canon_mul([from_fraction(-head), _canon_abs(rest_node)])
    return Func("abs", (arg,))


def _canon_func(name, args):
    if name == "sqrt":
        return _canon_sqrt(args[0])
    if name == "root":
        return _canon_root(args[0], args[1])
    if name == "abs":
        return _canon_abs(args[0])
    if name == "factorial":
        arg = args[0]
        if isinstance(arg, Integer) and 0 <= arg.value <= _FACTORIAL_CAP:
            return Integer(math.factorial(arg.value))
        return Func(name, args)
    if name == "binom":
        top, bottom = args
        if (
            isinstance(top, Integer)
            and isinstance(bottom, Integer)
            and top.value >= 0
            and 0 <= bottom.value <= _FACTORIAL_CAP
        ):
            return Integer(math.comb(top.value, bottom.value))
        return Func(name, args)
    folded = _EXACT_FUNC_TABLE.get((name, args[0]))
    if folded is not None:
        return folded
    return Func(name, args)
