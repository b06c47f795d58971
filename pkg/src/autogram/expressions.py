"""The sandboxed expression language used inside node instructions.

A closed, python-like grammar: literals, names, arithmetic, comparisons,
boolean operators, indexing/slicing, list/map literals, calls, and a
whitelisted set of methods. There is no attribute access into arbitrary
objects, no imports, and no statements; host capabilities come in only
through registered host functions and (in self-referential mode) the engine
handle bound to the name ``self``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    ArityMismatch,
    DivisionByZero,
    IndexOutOfRange,
    LexError,
    NotACall,
    NotCallable,
    ParseError,
    TypeMismatch,
    UnknownDollarVariable,
    UnknownMethod,
    UnknownName,
)

# ------------------------------------------------------------------ tokenizer

KEYWORDS = {"not", "and", "or", "in", "True", "False", "None"}

_TWO_CHAR_OPS = ("**", "//", "==", "!=", "<=", ">=")
_ONE_CHAR_OPS = "+-*/%<>()[]{},.:="

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"'}


@dataclass
class Token:
    kind: str  # NAME | NUMBER | STRING | OP | END
    text: str
    pos: int
    value: object = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in "'\"":
            text, value, end = _lex_string(source, i)
            tokens.append(Token("STRING", text, i, value))
            i = end
            continue
        m = _NUMBER_RE.match(source, i)
        if m and (ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit())):
            text = m.group(0)
            if "." in text or "e" in text or "E" in text:
                value: object = float(text)
            else:
                value = int(text)
            tokens.append(Token("NUMBER", text, i, value))
            i = m.end()
            continue
        m = _NAME_RE.match(source, i)
        if m:
            tokens.append(Token("NAME", m.group(0), i))
            i = m.end()
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token("OP", two, i))
            i += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token("OP", ch, i))
            i += 1
            continue
        raise LexError(f"illegal character {ch!r}", i)
    tokens.append(Token("END", "", n))
    return tokens


def _lex_string(source: str, start: int) -> tuple[str, str, int]:
    quote = source[start]
    i = start + 1
    out: list[str] = []
    while i < len(source):
        ch = source[i]
        if ch == "\\":
            if i + 1 >= len(source):
                raise LexError("unterminated string", start)
            esc = source[i + 1]
            out.append(_ESCAPES.get(esc, esc))
            i += 2
            continue
        if ch == quote:
            return source[start : i + 1], "".join(out), i + 1
        if ch == "\n":
            raise LexError("unterminated string", start)
        out.append(ch)
        i += 1
    raise LexError("unterminated string", start)


# ------------------------------------------------------------------------ AST


@dataclass
class Expr:
    pass


@dataclass
class Literal(Expr):
    value: object


@dataclass
class Name(Expr):
    id: str


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Call(Expr):
    func: Expr
    args: list[Expr] = field(default_factory=list)
    kwargs: list[tuple[str, Expr]] = field(default_factory=list)


@dataclass
class Attribute(Expr):
    value: Expr
    attr: str


@dataclass
class Index(Expr):
    value: Expr
    index: Expr


@dataclass
class Slice(Expr):
    value: Expr
    start: Expr | None
    stop: Expr | None


@dataclass
class ListLit(Expr):
    items: list[Expr]


@dataclass
class MapLit(Expr):
    items: list[tuple[Expr, Expr]]


# --------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: list[Token], source: str):
        self.tokens = tokens
        self.source = source
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def at_name(self, *names: str) -> bool:
        return self.tok.kind == "NAME" and self.tok.text in names

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise ParseError(f"expected {op!r}, found {self.tok.text or 'end'!r}", self.tok.pos)
        return self.advance()

    def parse(self) -> Expr:
        expr = self.or_expr()
        if self.tok.kind != "END":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return expr

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.at_name("or"):
            self.advance()
            left = Binary("or", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while self.at_name("and"):
            self.advance()
            left = Binary("and", left, self.not_expr())
        return left

    def not_expr(self) -> Expr:
        if self.at_name("not"):
            self.advance()
            return Unary("not", self.not_expr())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.arith()
        if self.at_op("==", "!=", "<", "<=", ">", ">="):
            op = self.advance().text
            return Binary(op, left, self.arith())
        if self.at_name("in"):
            self.advance()
            return Binary("in", left, self.arith())
        return left

    def arith(self) -> Expr:
        left = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.at_op("*", "/", "//", "%"):
            op = self.advance().text
            left = Binary(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        if self.at_op("-", "+"):
            op = self.advance().text
            return Unary(op, self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.postfix()
        if self.at_op("**"):
            self.advance()
            return Binary("**", base, self.factor())
        return base

    def postfix(self) -> Expr:
        expr = self.atom()
        while True:
            if self.at_op("("):
                self.advance()
                args, kwargs = self.call_args()
                expr = Call(expr, args, kwargs)
            elif self.at_op("["):
                self.advance()
                expr = self.subscript(expr)
            elif self.at_op("."):
                self.advance()
                if self.tok.kind != "NAME":
                    raise ParseError("expected attribute name after '.'", self.tok.pos)
                expr = Attribute(expr, self.advance().text)
            else:
                return expr

    def call_args(self) -> tuple[list[Expr], list[tuple[str, Expr]]]:
        args: list[Expr] = []
        kwargs: list[tuple[str, Expr]] = []
        while not self.at_op(")"):
            if (
                self.tok.kind == "NAME"
                and self.tok.text not in KEYWORDS
                and self.tokens[self.i + 1].kind == "OP"
                and self.tokens[self.i + 1].text == "="
            ):
                name = self.advance().text
                self.advance()
                kwargs.append((name, self.or_expr()))
            else:
                if kwargs:
                    raise ParseError(
                        "positional argument after keyword argument", self.tok.pos
                    )
                args.append(self.or_expr())
            if self.at_op(","):
                self.advance()
            elif not self.at_op(")"):
                raise ParseError("expected ',' or ')'", self.tok.pos)
        self.advance()
        return args, kwargs

    def subscript(self, value: Expr) -> Expr:
        start: Expr | None = None
        stop: Expr | None = None
        is_slice = False
        if not self.at_op(":"):
            start = self.or_expr()
        if self.at_op(":"):
            is_slice = True
            self.advance()
            if not self.at_op("]"):
                stop = self.or_expr()
        self.expect_op("]")
        if is_slice:
            return Slice(value, start, stop)
        if start is None:
            raise ParseError("empty subscript", self.tok.pos)
        return Index(value, start)

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUMBER" or t.kind == "STRING":
            self.advance()
            return Literal(t.value)
        if t.kind == "NAME":
            if t.text == "True":
                self.advance()
                return Literal(True)
            if t.text == "False":
                self.advance()
                return Literal(False)
            if t.text == "None":
                self.advance()
                return Literal(None)
            if t.text in KEYWORDS:
                raise ParseError(f"unexpected keyword {t.text!r}", t.pos)
            self.advance()
            return Name(t.text)
        if self.at_op("("):
            self.advance()
            inner = self.or_expr()
            self.expect_op(")")
            return inner
        if self.at_op("["):
            self.advance()
            items: list[Expr] = []
            while not self.at_op("]"):
                items.append(self.or_expr())
                if self.at_op(","):
                    self.advance()
                elif not self.at_op("]"):
                    raise ParseError("expected ',' or ']'", self.tok.pos)
            self.advance()
            return ListLit(items)
        if self.at_op("{"):
            self.advance()
            pairs: list[tuple[Expr, Expr]] = []
            while not self.at_op("}"):
                key = self.or_expr()
                self.expect_op(":")
                pairs.append((key, self.or_expr()))
                if self.at_op(","):
                    self.advance()
                elif not self.at_op("}"):
                    raise ParseError("expected ',' or '}'", self.tok.pos)
            self.advance()
            return MapLit(pairs)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.pos)


def parse_expression(source: str) -> Expr:
    return _Parser(tokenize(source), source).parse()


# ------------------------------------------------------------------ unparsing

_PREC = {
    "or": 1,
    "and": 2,
    "in": 4,
    "==": 4,
    "!=": 4,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "//": 6,
    "%": 6,
    "**": 8,
}


def quote_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace("'", "\\'")
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f"'{out}'"


def _literal_source(value: object) -> str:
    if value is None:
        return "None"
    if value is True:
        return "True"
    if value is False:
        return "False"
    if isinstance(value, str):
        return quote_string(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def expr_source(expr: Expr, parent_prec: float = 0) -> str:
    """Render an Expr back to source. Reparsing the result yields a
    structurally equal tree."""
    if isinstance(expr, Literal):
        text = _literal_source(expr.value)
        if isinstance(expr.value, (int, float)) and not isinstance(expr.value, bool):
            if expr.value < 0:  # negative literal needs parens under tight parents
                return f"({text})" if parent_prec >= 7 else text
        return text
    if isinstance(expr, Name):
        return expr.id
    if isinstance(expr, Unary):
        if expr.op == "not":
            inner = expr_source(expr.operand, 3)
            text = f"not {inner}"
            return f"({text})" if parent_prec > 3 else text
        text = f"{expr.op}{expr_source(expr.operand, 7)}"
        return f"({text})" if parent_prec > 7 else text
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        if expr.op == "**":  # right associative
            left = expr_source(expr.left, prec + 0.5)
            right = expr_source(expr.right, prec)
        else:
            left = expr_source(expr.left, prec)
            right = expr_source(expr.right, prec + 0.5)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(expr, Call):
        parts = [expr_source(a) for a in expr.args]
        parts += [f"{k}={expr_source(v)}" for k, v in expr.kwargs]
        return f"{expr_source(expr.func, 9)}({', '.join(parts)})"
    if isinstance(expr, Attribute):
        return f"{expr_source(expr.value, 9)}.{expr.attr}"
    if isinstance(expr, Index):
        return f"{expr_source(expr.value, 9)}[{expr_source(expr.index)}]"
    if isinstance(expr, Slice):
        start = expr_source(expr.start) if expr.start is not None else ""
        stop = expr_source(expr.stop) if expr.stop is not None else ""
        return f"{expr_source(expr.value, 9)}[{start}:{stop}]"
    if isinstance(expr, ListLit):
        return f"[{', '.join(expr_source(e) for e in expr.items)}]"
    if isinstance(expr, MapLit):
        inner = ", ".join(f"{expr_source(k)}: {expr_source(v)}" for k, v in expr.items)
        return f"{{{inner}}}"
    raise TypeError(f"not an Expr: {expr!r}")


# --------------------------------------------------------------- value model


class ExprObject:
    """Base for opaque values the language can hold but not inspect (the
    engine handle). Subclasses expose whitelisted methods."""

    def expr_methods(self) -> set[str]:
        return set()

    def expr_call(self, method: str, args: list, kwargs: dict):
        raise UnknownMethod(f"no method {method!r}")

    def display(self) -> str:
        return "<engine handle>"


@dataclass
class HostFunction:
    """A registered host capability, addressed by dotted name."""

    name: str
    fn: object = None  # underlying python callable; rebound after deserialize

    def __eq__(self, other):
        return isinstance(other, HostFunction) and other.name == self.name


class _HostNamespace:
    def __init__(self, prefix: str, registry: dict):
        self.prefix = prefix
        self.registry = registry


class _Bound:
    def __init__(self, receiver, method: str):
        self.receiver = receiver
        self.method = method


class _BuiltinFunction:
    def __init__(self, name: str, fn, min_args: int, max_args: int):
        self.name = name
        self.fn = fn
        self.min_args = min_args
        self.max_args = max_args


def truthiness(value) -> bool:
    if value is None:
        return False
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value != 0
    if isinstance(value, (str, list, dict)):
        return len(value) > 0
    raise TypeMismatch(f"value of type {type_name(value)} has no truth value")


def type_name(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "map"
    if isinstance(value, HostFunction):
        return "host_function"
    if isinstance(value, ExprObject):
        return "engine_handle"
    return type(value).__name__


def display_value(value, top: bool = True) -> str:
    """Canonical rendering: bare strings at the top level, literal syntax
    inside containers."""
    if isinstance(value, str):
        return value if top else quote_string(value)
    if value is None or value is True or value is False:
        return _literal_source(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, list):
        return f"[{', '.join(display_value(v, top=False) for v in value)}]"
    if isinstance(value, dict):
        inner = ", ".join(
            f"{display_value(k, top=False)}: {display_value(v, top=False)}"
            for k, v in value.items()
        )
        return f"{{{inner}}}"
    if isinstance(value, HostFunction):
        return f"<host function {value.name}>"
    if isinstance(value, ExprObject):
        return value.display()
    return str(value)


# ------------------------------------------------------------------ evaluator


def _range_builtin(*args):
    return list(range(*args))


def _sorted_builtin(seq):
    if not isinstance(seq, (list, str)):
        raise TypeMismatch(f"sorted() takes a list or string, not {type_name(seq)}")
    try:
        return sorted(seq)
    except TypeError as exc:
        raise TypeMismatch(str(exc)) from exc


def _str_builtin(v):
    return display_value(v)


def _int_builtin(v):
    try:
        if isinstance(v, str):
            return int(v.strip())
        if isinstance(v, (int, float)):
            return int(v)
    except ValueError as exc:
        raise TypeMismatch(f"cannot convert {v!r} to int") from exc
    raise TypeMismatch(f"cannot convert {type_name(v)} to int")


def _float_builtin(v):
    try:
        if isinstance(v, str):
            return float(v.strip())
        if isinstance(v, (int, float)):
            return float(v)
    except ValueError as exc:
        raise TypeMismatch(f"cannot convert {v!r} to float") from exc
    raise TypeMismatch(f"cannot convert {type_name(v)} to float")


def _num_builtin(name, fn):
    def wrapped(*args):
        try:
            return fn(*args)
        except (TypeError, ValueError) as exc:
            raise TypeMismatch(f"{name}(): {exc}") from exc

    return wrapped


# name -> (python fn, min args, max args)
BUILTIN_TABLE: dict[str, tuple] = {
    "len": (_num_builtin("len", len), 1, 1),
    "str": (_str_builtin, 1, 1),
    "int": (_int_builtin, 1, 1),
    "float": (_float_builtin, 1, 1),
    "bool": (truthiness, 1, 1),
    "range": (_num_builtin("range", _range_builtin), 1, 3),
    "sorted": (_sorted_builtin, 1, 1),
    "min": (_num_builtin("min", min), 1, 255),
    "max": (_num_builtin("max", max), 1, 255),
    "abs": (_num_builtin("abs", abs), 1, 1),
    "sum": (_num_builtin("sum", sum), 1, 2),
}

# method name -> (min args, max args)
_STR_METHODS = {
    "lower": (0, 0),
    "upper": (0, 0),
    "strip": (0, 1),
    "split": (0, 2),
    "replace": (2, 3),
    "startswith": (1, 1),
    "endswith": (1, 1),
    "join": (1, 1),
}
_LIST_METHODS = {
    "append": (1, 1),
    "pop": (0, 1),
    "index": (1, 2),
    "extend": (1, 1),
    "insert": (2, 2),
    "remove": (1, 1),
}
_MAP_METHODS = {"keys": (0, 0), "values": (0, 0), "get": (1, 2)}


class EvalContext:
    """Name resolution and capability surface for one evaluation.

    ``resolver`` is any object with ``lookup(name) -> (bool, value)``; the
    runtime passes the memory object, tests can pass a plain dict wrapper.
    """

    def __init__(
        self,
        resolver=None,
        builtins: list[str] | None = None,
        host: dict | None = None,
        engine_handle: ExprObject | None = None,
        dollar_policy: str = "error",
    ):
        self.resolver = resolver
        allowed = BUILTIN_TABLE.keys() if builtins is None else builtins
        self.builtins = {
            name: _BuiltinFunction(name, *BUILTIN_TABLE[name])
            for name in allowed
            if name in BUILTIN_TABLE
        }
        self.host = dict(host or {})
        self.engine_handle = engine_handle
        self.dollar_policy = dollar_policy

    @classmethod
    def from_mapping(cls, variables: dict, **kw) -> "EvalContext":
        return cls(resolver=_DictResolver(variables), **kw)

    def lookup(self, name: str):
        if self.resolver is not None:
            found, value = self.resolver.lookup(name)
            if found:
                return value
        if name == "self" and self.engine_handle is not None:
            return self.engine_handle
        if name in self.host:
            return HostFunction(name, self.host[name])
        prefix = name + "."
        if any(k.startswith(prefix) for k in self.host):
            return _HostNamespace(name, self.host)
        if name in self.builtins:
            return self.builtins[name]
        raise UnknownName(f"name {name!r} is not defined")


class _DictResolver:
    def __init__(self, variables: dict):
        self.variables = variables

    def lookup(self, name: str):
        if name in self.variables:
            return True, self.variables[name]
        return False, None


def evaluate(expr: Expr, ctx: EvalContext):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Name):
        return ctx.lookup(expr.id)
    if isinstance(expr, Unary):
        return _eval_unary(expr, ctx)
    if isinstance(expr, Binary):
        return _eval_binary(expr, ctx)
    if isinstance(expr, ListLit):
        return [evaluate(e, ctx) for e in expr.items]
    if isinstance(expr, MapLit):
        out = {}
        for k_expr, v_expr in expr.items:
            key = evaluate(k_expr, ctx)
            if not isinstance(key, str):
                raise TypeMismatch(f"map keys must be strings, not {type_name(key)}")
            out[key] = evaluate(v_expr, ctx)
        return out
    if isinstance(expr, Attribute):
        return _eval_attribute(expr, ctx)
    if isinstance(expr, Index):
        return _eval_index(expr, ctx)
    if isinstance(expr, Slice):
        return _eval_slice(expr, ctx)
    if isinstance(expr, Call):
        return _eval_call(expr, ctx)
    raise TypeError(f"not an Expr: {expr!r}")


def _eval_unary(expr: Unary, ctx: EvalContext):
    v = evaluate(expr.operand, ctx)
    if expr.op == "not":
        return not truthiness(v)
    if not isinstance(v, (int, float)):
        raise TypeMismatch(f"unary {expr.op!r} needs a number, got {type_name(v)}")
    return -v if expr.op == "-" else +v


_NUMERIC = (int, float)


def _both_numbers(a, b) -> bool:
    return isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC) and not (
        isinstance(a, bool) or isinstance(b, bool)
    )


def _eval_binary(expr: Binary, ctx: EvalContext):
    op = expr.op
    if op == "and":
        left = evaluate(expr.left, ctx)
        return evaluate(expr.right, ctx) if truthiness(left) else left
    if op == "or":
        left = evaluate(expr.left, ctx)
        return left if truthiness(left) else evaluate(expr.right, ctx)
    a = evaluate(expr.left, ctx)
    b = evaluate(expr.right, ctx)
    if op == "==":
        return _equals(a, b)
    if op == "!=":
        return not _equals(a, b)
    if op in ("<", "<=", ">", ">="):
        return _compare(op, a, b)
    if op == "in":
        return _contains(a, b)
    return _arith(op, a, b)


def _equals(a, b) -> bool:
    try:
        return bool(a == b)
    except Exception:
        return False


def _compare(op: str, a, b) -> bool:
    ok = _both_numbers(a, b)
    ok = ok or (isinstance(a, str) and isinstance(b, str))
    ok = ok or (isinstance(a, list) and isinstance(b, list))
    ok = ok or (isinstance(a, bool) and isinstance(b, bool))
    if not ok:
        raise TypeMismatch(
            f"cannot order {type_name(a)} and {type_name(b)} with {op!r}"
        )
    try:
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b
    except TypeError as exc:
        raise TypeMismatch(str(exc)) from exc


def _contains(a, b) -> bool:
    if isinstance(b, str):
        if not isinstance(a, str):
            raise TypeMismatch("'in' on a string needs a string operand")
        return a in b
    if isinstance(b, list):
        return any(_equals(a, item) for item in b)
    if isinstance(b, dict):
        if not isinstance(a, str):
            raise TypeMismatch("map keys are strings")
        return a in b
    raise TypeMismatch(f"'in' needs a string, list, or map, got {type_name(b)}")


def _arith(op: str, a, b):
    if op == "+":
        if _both_numbers(a, b):
            return a + b
        if isinstance(a, str) and isinstance(b, str):
            return a + b
        if isinstance(a, list) and isinstance(b, list):
            return a + b
        raise TypeMismatch(f"cannot add {type_name(a)} and {type_name(b)}")
    if op == "*":
        if _both_numbers(a, b):
            return a * b
        if isinstance(a, (str, list)) and isinstance(b, int) and not isinstance(b, bool):
            return a * b
        if isinstance(b, (str, list)) and isinstance(a, int) and not isinstance(a, bool):
            return a * b
        raise TypeMismatch(f"cannot multiply {type_name(a)} and {type_name(b)}")
    if not _both_numbers(a, b):
        raise TypeMismatch(
            f"operator {op!r} needs numbers, got {type_name(a)} and {type_name(b)}"
        )
    try:
        if op == "-":
            return a - b
        if op == "/":
            return a / b
        if op == "//":
            return a // b
        if op == "%":
            return a % b
        if op == "**":
            return a**b
    except ZeroDivisionError as exc:
        raise DivisionByZero(str(exc)) from exc
    raise TypeError(f"unknown operator {op!r}")


def _eval_attribute(expr: Attribute, ctx: EvalContext):
    # host namespaces resolve through the name, not through a real value
    if isinstance(expr.value, Name):
        try:
            base = evaluate(expr.value, ctx)
        except UnknownName:
            dotted = f"{expr.value.id}.{expr.attr}"
            if dotted in ctx.host:
                return HostFunction(dotted, ctx.host[dotted])
            raise
    else:
        base = evaluate(expr.value, ctx)
    if isinstance(base, _HostNamespace):
        dotted = f"{base.prefix}.{expr.attr}"
        if dotted in base.registry:
            return HostFunction(dotted, base.registry[dotted])
        if any(k.startswith(dotted + ".") for k in base.registry):
            return _HostNamespace(dotted, base.registry)
        raise UnknownName(f"host function {dotted!r} is not registered")
    if isinstance(base, ExprObject):
        if expr.attr in base.expr_methods():
            return _Bound(base, expr.attr)
        raise UnknownMethod(f"engine handle has no method {expr.attr!r}")
    table = _method_table(base)
    if table is None or expr.attr not in table:
        raise UnknownMethod(
            f"{type_name(base)} has no method {expr.attr!r}"
        )
    return _Bound(base, expr.attr)


def _method_table(value) -> dict | None:
    if isinstance(value, str):
        return _STR_METHODS
    if isinstance(value, list):
        return _LIST_METHODS
    if isinstance(value, dict):
        return _MAP_METHODS
    return None


def _eval_index(expr: Index, ctx: EvalContext):
    base = evaluate(expr.value, ctx)
    key = evaluate(expr.index, ctx)
    if isinstance(base, dict):
        if not isinstance(key, str):
            raise TypeMismatch(f"map keys are strings, not {type_name(key)}")
        if key not in base:
            raise IndexOutOfRange(f"key {key!r} not found")
        return base[key]
    if isinstance(base, (str, list)):
        if not isinstance(key, int) or isinstance(key, bool):
            raise TypeMismatch(f"index must be an int, not {type_name(key)}")
        try:
            return base[key]
        except IndexError as exc:
            raise IndexOutOfRange(str(exc)) from exc
    raise TypeMismatch(f"cannot index a {type_name(base)}")


def _eval_slice(expr: Slice, ctx: EvalContext):
    base = evaluate(expr.value, ctx)
    if not isinstance(base, (str, list)):
        raise TypeMismatch(f"cannot slice a {type_name(base)}")

    def bound(e):
        if e is None:
            return None
        v = evaluate(e, ctx)
        if not isinstance(v, int) or isinstance(v, bool):
            raise TypeMismatch(f"slice bounds must be ints, not {type_name(v)}")
        return v

    return base[bound(expr.start) : bound(expr.stop)]


def _eval_call(expr: Call, ctx: EvalContext):
    fn = evaluate(expr.func, ctx)
    args = [evaluate(a, ctx) for a in expr.args]
    kwargs = {}
    for name, v_expr in expr.kwargs:
        kwargs[name] = evaluate(v_expr, ctx)
    if isinstance(fn, _Bound):
        return _call_method(fn, args, kwargs)
    if isinstance(fn, _BuiltinFunction):
        if kwargs:
            raise TypeMismatch(f"{fn.name}() takes no keyword arguments")
        if not (fn.min_args <= len(args) <= fn.max_args):
            raise ArityMismatch(
                f"{fn.name}() takes {fn.min_args}"
                + (f" to {fn.max_args}" if fn.max_args != fn.min_args else "")
                + f" arguments, got {len(args)}"
            )
        return fn.fn(*args)
    if isinstance(fn, HostFunction):
        impl = fn.fn if fn.fn is not None else ctx.host.get(fn.name)
        if impl is None:
            raise UnknownName(f"host function {fn.name!r} is not registered")
        try:
            return impl(*args, **kwargs)
        except TypeError as exc:
            raise ArityMismatch(f"{fn.name}(): {exc}") from exc
    raise NotCallable(f"{type_name(fn)} is not callable")


def _call_method(bound: _Bound, args: list, kwargs: dict):
    recv, name = bound.receiver, bound.method
    if isinstance(recv, ExprObject):
        return recv.expr_call(name, args, kwargs)
    if kwargs:
        raise TypeMismatch("methods take no keyword arguments")
    table = _method_table(recv)
    lo, hi = table[name]
    if not (lo <= len(args) <= hi):
        raise ArityMismatch(f"{name}() takes {lo} to {hi} arguments, got {len(args)}")
    try:
        result = getattr(recv, name)(*args)
    except (IndexError, ValueError) as exc:
        raise IndexOutOfRange(f"{name}(): {exc}") from exc
    except (TypeError, AttributeError) as exc:
        raise TypeMismatch(f"{name}(): {exc}") from exc
    if isinstance(recv, dict) and name in ("keys", "values"):
        return list(result)
    return result


# ------------------------------------------------------ instruction utilities

_ASSIGN_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(?!=)\s?(.*)$", re.DOTALL)


def strip_assignment(instruction: str) -> tuple[str | None, str]:
    """Split a leading ``name =`` off an instruction.

    Returns (target, remainder); target is None when the instruction does not
    start with an assignment.
    """
    m = _ASSIGN_RE.match(instruction)
    if not m:
        return None, instruction
    return m.group(1), m.group(2)


_DOLLAR_RE = re.compile(r"\$(\$|[A-Za-z_][A-Za-z0-9_]*)")


def render_dollar(template: str, ctx: EvalContext) -> str:
    """Substitute ``$name`` references with displayed values; ``$$`` escapes a
    literal dollar sign. A ``$`` not followed by a name stays as-is."""

    def sub(m: re.Match) -> str:
        token = m.group(1)
        if token == "$":
            return "$"
        try:
            value = ctx.lookup(token)
        except UnknownName:
            if ctx.dollar_policy == "literal":
                return m.group(0)
            raise UnknownDollarVariable(f"${token} is not defined") from None
        return display_value(value)

    return _DOLLAR_RE.sub(sub, template)


def parse_call_instruction(text: str) -> tuple[str, list[Expr], list[tuple[str, Expr]]]:
    """Parse an instruction remainder that must be a call of a bare name.
    Returns (callee, positional arg exprs, keyword arg pairs)."""
    expr = parse_expression(text)
    if not isinstance(expr, Call) or not isinstance(expr.func, Name):
        raise NotACall(f"not a plain function call: {text!r}")
    return expr.func.id, expr.args, expr.kwargs
