"""Arithmetic expression trees over exact rationals.

Every value in the pipeline is a `fractions.Fraction` (aliased `Rational`),
so evaluation, substitution and linear-form extraction never round.  Trees
are immutable and are never simplified on construction: `x + 0` stays
`x + 0` so that parsed text round-trips exactly.  Simplification belongs to
the solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

Rational = Fraction

RationalLike = Union[Fraction, int]

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Bound on |exponent| during exact evaluation.  Word-problem equations use
# tiny powers; anything near this limit is an adversarial transcript.
MAX_EXPONENT = 10_000


class ExprError(Exception):
    """Base class for expression-level failures."""


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"variable '{name}' is not bound")
        self.name = name


class DivisionByZeroError(ExprError, ZeroDivisionError):
    def __init__(self, message: str = "division by zero"):
        super().__init__(message)


class NonIntegerExponentError(ExprError):
    def __init__(self, exponent: Fraction):
        super().__init__(f"exponent {exponent} is not an integer")
        self.exponent = exponent


class ExponentTooLargeError(ExprError):
    def __init__(self, exponent: int):
        super().__init__(f"exponent {exponent} exceeds the supported magnitude")
        self.exponent = exponent


class NonLinearError(ExprError):
    def __init__(self, message: str = "expression is not linear"):
        super().__init__(message)


@dataclass(frozen=True)
class Expr:
    """Base node.  The eight subclasses below are the only node kinds.

    Operators are overloaded for convenient tree construction in tests and
    demos; ints and Fractions coerce to `Num`.
    """

    def __add__(self, other: Expr | RationalLike) -> Expr:
        return Add(self, as_expr(other))

    def __radd__(self, other: RationalLike) -> Expr:
        return Add(as_expr(other), self)

    def __sub__(self, other: Expr | RationalLike) -> Expr:
        return Sub(self, as_expr(other))

    def __rsub__(self, other: RationalLike) -> Expr:
        return Sub(as_expr(other), self)

    def __mul__(self, other: Expr | RationalLike) -> Expr:
        return Mul(self, as_expr(other))

    def __rmul__(self, other: RationalLike) -> Expr:
        return Mul(as_expr(other), self)

    def __truediv__(self, other: Expr | RationalLike) -> Expr:
        return Div(self, as_expr(other))

    def __rtruediv__(self, other: RationalLike) -> Expr:
        return Div(as_expr(other), self)

    def __pow__(self, other: Expr | RationalLike) -> Expr:
        return Pow(self, as_expr(other))

    def __neg__(self) -> Expr:
        return Neg(self)


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise ValueError(f"invalid variable name: {self.name!r}")


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


def as_expr(value: Expr | RationalLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Num(Fraction(value))
    raise TypeError(f"cannot coerce {type(value).__name__} to Expr")


def eval_exact(expr: Expr, bindings: Mapping[str, RationalLike] | None = None) -> Fraction:
    """Evaluate `expr` to an exact rational under `bindings`.

    Raises UnboundVariableError for a free variable without a binding,
    DivisionByZeroError for a zero denominator (including 0 to a negative
    power), and NonIntegerExponentError when a Pow exponent does not
    evaluate to an integer.
    """
    bindings = bindings or {}
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return Fraction(bindings[expr.name])
        except KeyError:
            raise UnboundVariableError(expr.name) from None
    if isinstance(expr, Neg):
        return -eval_exact(expr.child, bindings)
    if isinstance(expr, Add):
        return eval_exact(expr.left, bindings) + eval_exact(expr.right, bindings)
    if isinstance(expr, Sub):
        return eval_exact(expr.left, bindings) - eval_exact(expr.right, bindings)
    if isinstance(expr, Mul):
        return eval_exact(expr.left, bindings) * eval_exact(expr.right, bindings)
    if isinstance(expr, Div):
        denom = eval_exact(expr.right, bindings)
        if denom == 0:
            raise DivisionByZeroError()
        return eval_exact(expr.left, bindings) / denom
    if isinstance(expr, Pow):
        exponent = eval_exact(expr.exponent, bindings)
        if exponent.denominator != 1:
            raise NonIntegerExponentError(exponent)
        power = int(exponent)
        if abs(power) > MAX_EXPONENT:
            raise ExponentTooLargeError(power)
        base = eval_exact(expr.base, bindings)
        if base == 0 and power < 0:
            raise DivisionByZeroError("zero raised to a negative power")
        return base ** power
    raise TypeError(f"unknown node: {type(expr).__name__}")


def substitute(expr: Expr, var: str, replacement: Expr) -> Expr:
    """Replace every Var(var) node by a copy of `replacement`."""
    if isinstance(expr, Var):
        return replacement if expr.name == var else expr
    if isinstance(expr, (Num,)):
        return expr
    if isinstance(expr, Neg):
        return Neg(substitute(expr.child, var, replacement))
    if isinstance(expr, (Add, Sub, Mul, Div)):
        return type(expr)(
            substitute(expr.left, var, replacement),
            substitute(expr.right, var, replacement),
        )
    if isinstance(expr, Pow):
        return Pow(
            substitute(expr.base, var, replacement),
            substitute(expr.exponent, var, replacement),
        )
    raise TypeError(f"unknown node: {type(expr).__name__}")


def free_vars(expr: Expr) -> set[str]:
    """The set of variable names occurring in the tree."""
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.child)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Pow):
            stack.append(node.base)
            stack.append(node.exponent)
    return out


def iter_numerals(expr: Expr) -> Iterator[Fraction]:
    """Yield the value of every Num leaf, in tree order."""
    if isinstance(expr, Num):
        yield expr.value
    elif isinstance(expr, Neg):
        yield from iter_numerals(expr.child)
    elif isinstance(expr, (Add, Sub, Mul, Div)):
        yield from iter_numerals(expr.left)
        yield from iter_numerals(expr.right)
    elif isinstance(expr, Pow):
        yield from iter_numerals(expr.base)
        yield from iter_numerals(expr.exponent)


@dataclass(frozen=True)
class LinearForm:
    """coefficients . vars + constant, with no zero coefficients stored."""

    coefficients: dict[str, Fraction]
    constant: Fraction

    def evaluate(self, bindings: Mapping[str, RationalLike]) -> Fraction:
        total = self.constant
        for name, coeff in self.coefficients.items():
            total += coeff * Fraction(bindings[name])
        return total


def _lf(coefficients: dict[str, Fraction], constant: Fraction) -> LinearForm:
    return LinearForm({n: c for n, c in coefficients.items() if c != 0}, constant)


def _lf_combine(a: LinearForm, b: LinearForm, sign: int) -> LinearForm:
    coeffs = dict(a.coefficients)
    for name, coeff in b.coefficients.items():
        coeffs[name] = coeffs.get(name, Fraction(0)) + sign * coeff
    return _lf(coeffs, a.constant + sign * b.constant)


def _lf_scale(a: LinearForm, factor: Fraction) -> LinearForm:
    return _lf({n: c * factor for n, c in a.coefficients.items()}, a.constant * factor)


def linear_form(expr: Expr) -> LinearForm:
    """Distribute `expr` into a LinearForm, or raise NonLinearError.

    Division by a constant is linear; division by anything variable-bearing
    is not.  Pow is linear only with a constant integer exponent of 0 or 1
    over a variable-bearing base (constant bases fold to a constant).
    """
    if isinstance(expr, Num):
        return LinearForm({}, expr.value)
    if isinstance(expr, Var):
        return LinearForm({expr.name: Fraction(1)}, Fraction(0))
    if isinstance(expr, Neg):
        return _lf_scale(linear_form(expr.child), Fraction(-1))
    if isinstance(expr, Add):
        return _lf_combine(linear_form(expr.left), linear_form(expr.right), 1)
    if isinstance(expr, Sub):
        return _lf_combine(linear_form(expr.left), linear_form(expr.right), -1)
    if isinstance(expr, Mul):
        left = linear_form(expr.left)
        right = linear_form(expr.right)
        if not left.coefficients:
            return _lf_scale(right, left.constant)
        if not right.coefficients:
            return _lf_scale(left, right.constant)
        raise NonLinearError("product of two variable-bearing expressions")
    if isinstance(expr, Div):
        left = linear_form(expr.left)
        right = linear_form(expr.right)
        if right.coefficients:
            raise NonLinearError("division by a variable-bearing expression")
        if right.constant == 0:
            raise DivisionByZeroError()
        return _lf_scale(left, 1 / right.constant)
    if isinstance(expr, Pow):
        exponent = linear_form(expr.exponent)
        if exponent.coefficients or exponent.constant.denominator != 1:
            raise NonLinearError("unsupported exponent")
        power = int(exponent.constant)
        base = linear_form(expr.base)
        if not base.coefficients:
            if abs(power) > MAX_EXPONENT:
                raise ExponentTooLargeError(power)
            if base.constant == 0 and power < 0:
                raise DivisionByZeroError("zero raised to a negative power")
            return LinearForm({}, base.constant ** power)
        if power == 0:
            return LinearForm({}, Fraction(1))
        if power == 1:
            return base
        raise NonLinearError("variable-bearing power")
    raise TypeError(f"unknown node: {type(expr).__name__}")


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1


def format_rational(value: Fraction) -> str:
    """Minimal decimal for integers, `p/q` otherwise."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _format_literal(value: Fraction) -> str:
    """A parser-grammar numeral when one exists, else `p/q`.

    Denominators of the form 2^a * 5^b have a finite decimal expansion, so
    they print as decimal literals and re-parse to the identical value.
    """
    if value.denominator == 1:
        return str(value.numerator)
    denominator = value.denominator
    twos = fives = 0
    while denominator % 2 == 0:
        denominator //= 2
        twos += 1
    while denominator % 5 == 0:
        denominator //= 5
        fives += 1
    if denominator != 1:
        return format_rational(value)
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    magnitude = abs(scaled.numerator)
    return f"{sign}{magnitude // 10**digits}.{magnitude % 10**digits:0{digits}d}"


_BINOP_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def render(expr: Expr) -> str:
    """Canonical text form: fully parenthesized infix.

    Numerals print as integer or finite-decimal literals when the value
    has one (denominator 2^a * 5^b), else as `p/q`.  A `p/q` or negative
    literal re-parses as a Div or Neg node of the same value, so structural
    round-trips hold exactly on trees whose Num leaves are nonnegative
    integers or finite decimals — the image of the parser's numeral
    grammar.
    """
    if isinstance(expr, Num):
        return _format_literal(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{render(expr.child)})"
    if isinstance(expr, Pow):
        return f"({render(expr.base)} ^ {render(expr.exponent)})"
    symbol = _BINOP_SYMBOL.get(type(expr))
    if symbol is not None:
        return f"({render(expr.left)} {symbol} {render(expr.right)})"
    raise TypeError(f"unknown node: {type(expr).__name__}")
