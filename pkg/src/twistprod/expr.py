"""A tiny closed expression language for metric entries, twist functions
and map components.

Grammar (documented in docs/expression_grammar.md):

    expression := term (("+" | "-") term)*
    term       := factor (("*" | "/") factor)*
    factor     := "-" factor | power
    power      := atom ("^" factor)?
    atom       := NUMBER | IDENT | IDENT "(" expression ("," expression)* ")"
                | "(" expression ")"

"^" binds tighter than unary minus and is right-associative; its exponent
must be a constant subexpression (it is folded to a float at parse time).
pow(a, b) accepts a non-constant exponent and evaluates as exp(b * ln a),
which requires a > 0 at the evaluation point.

ASTs are immutable; parsing the pretty-printed form of an AST returns an
equal AST.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .autodiff import Jet2, JetDomainError

__all__ = [
    "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "Expression", "ExprError", "ExprSyntaxError", "ExprNameError",
    "EvalDomainError", "parse", "pretty_print",
]


class ExprError(ValueError):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    """Malformed source text; carries the byte offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ExprNameError(ExprError):
    """Unknown variable or function, or a bad argument count."""

    def __init__(self, message, name, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.name = name
        self.offset = offset


class EvalDomainError(ArithmeticError):
    """A subexpression left its real domain at the evaluation point."""

    def __init__(self, message, subexpression):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


# ---------------------------------------------------------------- AST nodes

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Sub:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Mul:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Div:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float  # constant by construction


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


_UNARY_FNS = ("exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt")
_FLOAT_FNS = {
    "exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos,
    "tan": math.tan, "sinh": math.sinh, "cosh": math.cosh,
    "tanh": math.tanh, "sqrt": math.sqrt,
}


# ---------------------------------------------------------------- tokenizer

_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[^\W\d]\w*", re.UNICODE)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    pos: int   # character position in the source


def _byte_offset(source, pos):
    return len(source[:pos].encode("utf-8"))


def _tokenize(source):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER_RE.match(source, i)
        if m:
            tokens.append(_Token("num", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            tokens.append(_Token("ident", m.group(), i))
            i = m.end()
            continue
        if ch in "+-*/^(),":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", _byte_offset(source, i))
    tokens.append(_Token("eof", "", n))
    return tokens


# ------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, source, variables):
        self.source = source
        self.variables = variables
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok):
        raise ExprSyntaxError(message, _byte_offset(self.source, tok.pos))

    def match_op(self, *ops):
        tok = self.peek()
        if tok.kind == "op" and tok.text in ops:
            return self.advance()
        return None

    def expression(self):
        node = self.term()
        while True:
            tok = self.match_op("+", "-")
            if tok is None:
                return node
            rhs = self.term()
            node = Add(node, rhs) if tok.text == "+" else Sub(node, rhs)

    def term(self):
        node = self.factor()
        while True:
            tok = self.match_op("*", "/")
            if tok is None:
                return node
            rhs = self.factor()
            node = Mul(node, rhs) if tok.text == "*" else Div(node, rhs)

    def factor(self):
        if self.match_op("-"):
            arg = self.factor()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        return self.power()

    def power(self):
        base = self.atom()
        if self.match_op("^"):
            tok = self.peek()
            exponent = self.factor()
            if used_variables(exponent):
                self.fail("exponent of ^ must be constant; use pow(a, b)", tok)
            try:
                p = _eval_float(exponent, {})
            except (EvalDomainError, ArithmeticError):
                self.fail("constant exponent could not be evaluated", tok)
            return Pow(base, p)
        return base

    def atom(self):
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            if self.match_op("("):
                args = [self.expression()]
                while self.match_op(","):
                    args.append(self.expression())
                closing = self.advance()
                if not (closing.kind == "op" and closing.text == ")"):
                    self.fail("expected ')'", closing)
                return self.call(tok, tuple(args))
            if tok.text in self.variables:
                return Var(tok.text)
            raise ExprNameError(
                f"unknown variable '{tok.text}'", tok.text,
                _byte_offset(self.source, tok.pos))
        if tok.kind == "op" and tok.text == "(":
            node = self.expression()
            closing = self.advance()
            if not (closing.kind == "op" and closing.text == ")"):
                self.fail("expected ')'", closing)
            return node
        self.fail("expected a number, name or '('", tok)

    def call(self, tok, args):
        name = tok.text
        offset = _byte_offset(self.source, tok.pos)
        if name in _UNARY_FNS:
            if len(args) != 1:
                raise ExprNameError(
                    f"{name} expects 1 argument, got {len(args)}", name, offset)
            return Call(name, args)
        if name == "pow":
            if len(args) != 2:
                raise ExprNameError(
                    f"pow expects 2 arguments, got {len(args)}", name, offset)
            return Call(name, args)
        raise ExprNameError(f"unknown function '{name}'", name, offset)


# ------------------------------------------------------------ AST utilities

def used_variables(node):
    """Set of variable names that occur in the subtree."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Num,)):
        return set()
    if isinstance(node, Neg):
        return used_variables(node.arg)
    if isinstance(node, (Add, Sub, Mul, Div)):
        return used_variables(node.lhs) | used_variables(node.rhs)
    if isinstance(node, Pow):
        return used_variables(node.base)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= used_variables(a)
        return out
    raise TypeError(f"not an AST node: {node!r}")


def _fmt_number(value):
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _render(node):
    if isinstance(node, Num):
        return _fmt_number(node.value), _PREC_ATOM
    if isinstance(node, Var):
        return node.name, _PREC_ATOM
    if isinstance(node, Call):
        inner = ", ".join(_wrap(a, _PREC_ADD) for a in node.args)
        return f"{node.fn}({inner})", _PREC_ATOM
    if isinstance(node, Neg):
        return f"-{_wrap(node.arg, _PREC_NEG)}", _PREC_NEG
    if isinstance(node, Pow):
        base = _wrap(node.base, _PREC_ATOM)
        if isinstance(node.base, Num) and node.base.value < 0:
            base = f"({base})"
        return f"{base} ^ {_fmt_number(node.exponent)}", _PREC_POW
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        text = f"{_wrap(node.lhs, _PREC_ADD)} {op} {_wrap(node.rhs, _PREC_ADD + 1)}"
        return text, _PREC_ADD
    if isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        text = f"{_wrap(node.lhs, _PREC_MUL)} {op} {_wrap(node.rhs, _PREC_MUL + 1)}"
        return text, _PREC_MUL
    raise TypeError(f"not an AST node: {node!r}")


def _wrap(node, min_prec):
    text, prec = _render(node)
    if prec < min_prec:
        return f"({text})"
    return text


def pretty_print(node):
    """Render an AST (or Expression) to source text that reparses equal."""
    if isinstance(node, Expression):
        node = node.root
    return _wrap(node, _PREC_ADD)


# --------------------------------------------------------------- evaluation

def _float_pow(v, p, node):
    if v < 0.0 and p != round(p):
        raise EvalDomainError(
            "negative base with a fractional exponent", pretty_print(node))
    if v == 0.0 and p < 0.0:
        raise EvalDomainError("zero raised to a negative power", pretty_print(node))
    return v**p


def _eval_float(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_float(node.arg, env)
    if isinstance(node, Add):
        return _eval_float(node.lhs, env) + _eval_float(node.rhs, env)
    if isinstance(node, Sub):
        return _eval_float(node.lhs, env) - _eval_float(node.rhs, env)
    if isinstance(node, Mul):
        return _eval_float(node.lhs, env) * _eval_float(node.rhs, env)
    if isinstance(node, Div):
        denom = _eval_float(node.rhs, env)
        if denom == 0.0:
            raise EvalDomainError("division by zero", pretty_print(node))
        return _eval_float(node.lhs, env) / denom
    if isinstance(node, Pow):
        return _float_pow(_eval_float(node.base, env), node.exponent, node)
    if isinstance(node, Call):
        if node.fn == "pow":
            base = _eval_float(node.args[0], env)
            if not used_variables(node.args[1]):
                return _float_pow(base, _eval_float(node.args[1], env), node)
            if base <= 0.0:
                raise EvalDomainError(
                    "pow with a non-constant exponent needs a positive base",
                    pretty_print(node))
            return math.exp(_eval_float(node.args[1], env) * math.log(base))
        arg = _eval_float(node.args[0], env)
        try:
            return _FLOAT_FNS[node.fn](arg)
        except ValueError:
            raise EvalDomainError(
                f"{node.fn} left its domain", pretty_print(node)) from None
    raise TypeError(f"not an AST node: {node!r}")


def _eval_jet(node, env, n):
    if isinstance(node, Num):
        return Jet2.constant(node.value, n)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval_jet(node.arg, env, n)
    if isinstance(node, Add):
        return _eval_jet(node.lhs, env, n) + _eval_jet(node.rhs, env, n)
    if isinstance(node, Sub):
        return _eval_jet(node.lhs, env, n) - _eval_jet(node.rhs, env, n)
    if isinstance(node, Mul):
        return _eval_jet(node.lhs, env, n) * _eval_jet(node.rhs, env, n)
    if isinstance(node, Div):
        try:
            return _eval_jet(node.lhs, env, n) / _eval_jet(node.rhs, env, n)
        except JetDomainError as exc:
            raise EvalDomainError(str(exc), pretty_print(node)) from None
    if isinstance(node, Pow):
        try:
            return _eval_jet(node.base, env, n).powc(node.exponent)
        except JetDomainError as exc:
            raise EvalDomainError(str(exc), pretty_print(node)) from None
    if isinstance(node, Call):
        try:
            if node.fn == "pow":
                base = _eval_jet(node.args[0], env, n)
                if not used_variables(node.args[1]):
                    return base.powc(_eval_float(node.args[1], {}))
                return base.pow_jet(_eval_jet(node.args[1], env, n))
            return getattr(_eval_jet(node.args[0], env, n), node.fn)()
        except JetDomainError as exc:
            raise EvalDomainError(str(exc), pretty_print(node)) from None
    raise TypeError(f"not an AST node: {node!r}")


# -------------------------------------------------------- public expression

@dataclass(frozen=True)
class Expression:
    """A parsed expression together with its declared variable tuple."""

    root: object
    variables: tuple

    def evaluate(self, point):
        """Evaluate to a float at a point (sequence ordered like variables)."""
        env = self._env(point)
        return float(_eval_float(self.root, env))

    def jet(self, point):
        """Evaluate to a Jet2 carrying value, gradient and Hessian."""
        n = len(self.variables)
        env = {
            name: Jet2.variable(float(c), i, n)
            for i, (name, c) in enumerate(zip(self.variables, point))
        }
        return _eval_jet(self.root, env, n)

    def _env(self, point):
        if isinstance(point, dict):
            return point
        return dict(zip(self.variables, (float(c) for c in point)))

    def used_variables(self):
        return frozenset(used_variables(self.root))

    def is_constant(self):
        return not self.used_variables()

    def constant_value(self):
        if not self.is_constant():
            raise ExprError("expression is not constant")
        return _eval_float(self.root, {})

    def __str__(self):
        return pretty_print(self.root)


def parse(source, variables):
    """Parse source text over a declared tuple of variable names."""
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ExprError(f"duplicate variable names in {variables!r}")
    parser = _Parser(source, frozenset(variables))
    node = parser.expression()
    tail = parser.peek()
    if tail.kind != "eof":
        parser.fail("unexpected trailing input", tail)
    return Expression(node, variables)
