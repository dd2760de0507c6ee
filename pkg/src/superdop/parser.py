"""Text front-end: a recursive-descent parser for charts and chart objects.

Grammar (one declaration per line, ``#`` starts a comment)::

    line    := 'chart' NAME '=' '(' names? '|' names? ')'
             | [kind] NAME '=' expr
    kind    := 'fn' | 'field' | 'op' | 'form'
    expr    := term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := '-' factor | atom ['^' INT]
    atom    := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

``*`` is the algebra product between functions and composition as soon as
an operator is involved.  ``d_<u>`` is a partial derivative, ``du_<u>`` a
1-form basis element standing left of its coefficient, ``m(f)`` an explicit
multiplication operator and ``d(f)`` the de Rham differential.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .algebra import Chart, ParityError, Superfunction
from .divergence import BerezinianSection, GeneralizedDivergence
from .forms import SuperOneForm, de_rham
from .morphisms import ChartMorphism, D1Automorphism
from .operators import (
    ComposeExpr,
    MulExpr,
    OperatorExpr,
    OrderError,
    PartialExpr,
    ScaleExpr,
    SumExpr,
    SuperDiffOp,
    SuperVectorField,
    normal_form,
)
from .printing import (
    format_automorphism,
    format_berezinian,
    format_field,
    format_form,
    format_function,
    format_gdiv,
    format_morphism,
    format_operator,
    format_scalar,
)

KINDS = ("fn", "field", "op", "form")
CALLS = ("m", "d", "gdiv", "ber", "map", "auto")
RESERVED = set(KINDS) | set(CALLS) | {"chart"}


class ParseError(ValueError):
    """Lexical or syntax error with a 1-based position and the expected tokens."""

    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line, self.col = line, col
        self.expected = tuple(sorted(set(expected)))
        text = f"line {line}, column {col}: {message}"
        if self.expected:
            text += " (expected " + ", ".join(self.expected) + ")"
        super().__init__(text)


class BindingError(ValueError):
    """Unknown identifier, duplicate name, or a value of the wrong kind."""


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, NUMBER, PUNCT, NL, EOF
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "EOF" else repr(self.text)


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)"
    r"|(?P<number>[0-9]+(?:/[0-9]+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<punct>[-+*^(),;:=|])"
)


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            out.append(Token("NL", "\n", line, col))
            line, line_start = line + 1, m.end()
        elif kind == "number":
            out.append(Token("NUMBER", m.group(), line, col))
        elif kind == "name":
            out.append(Token("NAME", m.group(), line, col))
        elif kind == "punct":
            out.append(Token("PUNCT", m.group(), line, col))
        pos = m.end()
    out.append(Token("EOF", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Node:
    line: int
    col: int


@dataclass(frozen=True)
class Num(Node):
    value: Fraction


@dataclass(frozen=True)
class Name(Node):
    name: str


@dataclass(frozen=True)
class Pow(Node):
    base: Name
    exponent: int


@dataclass(frozen=True)
class Neg(Node):
    inner: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple


@dataclass(frozen=True)
class MapLit(Node):
    forward: tuple  # ((name, node), ...)
    backward: tuple


@dataclass(frozen=True)
class ChartDecl:
    name: str
    even: tuple
    odd: tuple


@dataclass(frozen=True)
class Binding:
    kind: Optional[str]
    name: str
    expr: Node


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text == text

    def error(self, expected, what: str | None = None):
        t = self.tok
        raise ParseError(what or f"unexpected {t.describe()}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error([repr(text)])
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "NAME":
            self.error(["identifier"])
        return self.advance()

    def skip_newlines(self):
        while self.tok.kind == "NL":
            self.advance()

    def end_of_line(self):
        if self.tok.kind not in ("NL", "EOF"):
            self.error(["end of line", "'+'", "'-'", "'*'"])

    # entry points

    def parse_program(self) -> list:
        out = []
        self.skip_newlines()
        while self.tok.kind != "EOF":
            out.append(self.parse_line())
            self.end_of_line()
            self.skip_newlines()
        return out

    def parse_single_expr(self) -> Node:
        self.skip_newlines()
        e = self.parse_expr()
        self.skip_newlines()
        if self.tok.kind != "EOF":
            self.error(["end of input", "'+'", "'-'", "'*'"])
        return e

    def parse_line(self):
        t = self.expect_name()
        if t.text == "chart" and self.tok.kind == "NAME":
            return self.parse_chart_rest()
        kind = None
        if t.text in KINDS and self.tok.kind == "NAME":
            kind = t.text
            t = self.advance()
        self.expect("=")
        return Binding(kind, t.text, self.parse_expr())

    def parse_chart_rest(self) -> ChartDecl:
        name = self.expect_name().text
        self.expect("=")
        self.expect("(")
        even = self.parse_names("|")
        self.expect("|")
        odd = self.parse_names(")")
        self.expect(")")
        return ChartDecl(name, tuple(even), tuple(odd))

    def parse_chart_body(self) -> tuple:
        """Names of ``(x | xi1, xi2)`` with the parentheses optional."""
        paren = self.at("(")
        if paren:
            self.advance()
        even = self.parse_names("|")
        self.expect("|")
        odd = self.parse_names(")" if paren else None)
        if paren:
            self.expect(")")
        if self.tok.kind != "EOF":
            self.error(["end of input"])
        return tuple(even), tuple(odd)

    def parse_names(self, stop) -> list:
        names = []
        if (stop and self.at(stop)) or self.tok.kind == "EOF":
            return names
        names.append(self.expect_name().text)
        while self.at(","):
            self.advance()
            names.append(self.expect_name().text)
        return names

    # expressions

    def parse_expr(self) -> Node:
        left = self.parse_term()
        while self.at("+") or self.at("-"):
            t = self.advance()
            left = BinOp(t.line, t.col, t.text, left, self.parse_term())
        return left

    def parse_term(self) -> Node:
        left = self.parse_factor()
        while self.at("*"):
            t = self.advance()
            left = BinOp(t.line, t.col, "*", left, self.parse_factor())
        return left

    def parse_factor(self) -> Node:
        if self.at("-"):
            t = self.advance()
            return Neg(t.line, t.col, self.parse_factor())
        atom = self.parse_atom()
        if self.at("^"):
            t = self.advance()
            if not isinstance(atom, Name):
                raise ParseError("'^' applies only to a coordinate", t.line, t.col)
            e = self.tok
            if e.kind != "NUMBER" or "/" in e.text or int(e.text) < 1:
                self.error(["positive integer exponent"])
            self.advance()
            return Pow(t.line, t.col, atom, int(e.text))
        return atom

    def parse_atom(self) -> Node:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            num, _, den = t.text.partition("/")
            if den and int(den) == 0:
                raise ParseError("zero denominator", t.line, t.col)
            return Num(t.line, t.col, Fraction(int(num), int(den or 1)))
        if t.kind == "NAME":
            self.advance()
            if t.text in CALLS and self.at("("):
                return self.parse_call(t)
            return Name(t.line, t.col, t.text)
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        self.error(["number", "identifier", "'('", "'-'"])

    def parse_call(self, t: Token) -> Node:
        self.expect("(")
        if t.text == "map":
            fwd = self.parse_map_entries()
            self.expect(";")
            back = self.parse_map_entries()
            self.expect(")")
            return MapLit(t.line, t.col, tuple(fwd), tuple(back))
        args = [self.parse_expr()]
        while self.at(","):
            self.advance()
            args.append(self.parse_expr())
        self.expect(")")
        arity = {"m": 1, "d": 1, "ber": 1, "gdiv": 2, "auto": 4}[t.text]
        if len(args) != arity:
            raise ParseError(f"{t.text}() takes {arity} argument(s), got {len(args)}", t.line, t.col)
        return Call(t.line, t.col, t.text, tuple(args))

    def parse_map_entries(self) -> list:
        out = []
        while True:
            n = self.expect_name()
            self.expect(":")
            out.append((n.text, self.parse_expr()))
            if not self.at(","):
                return out
            self.advance()


# ---------------------------------------------------------------------------
# typed values


def kind_of(v) -> str:
    if isinstance(v, Fraction):
        return "scalar"
    if isinstance(v, Superfunction):
        return "fn"
    if isinstance(v, SuperVectorField):
        return "field"
    if isinstance(v, (OperatorExpr, SuperDiffOp)):
        return "op"
    if isinstance(v, SuperOneForm):
        return "form"
    if isinstance(v, GeneralizedDivergence):
        return "gdiv"
    if isinstance(v, BerezinianSection):
        return "ber"
    if isinstance(v, ChartMorphism):
        return "map"
    if isinstance(v, D1Automorphism):
        return "auto"
    raise TypeError(f"not a chart object: {v!r}")


def field_expr(X: SuperVectorField) -> OperatorExpr:
    parts = [
        ComposeExpr((MulExpr(f), PartialExpr(X.chart, k))) for k, f in enumerate(X.coeffs) if f
    ]
    if not parts:
        return MulExpr(X.chart.zero())
    return parts[0] if len(parts) == 1 else SumExpr(tuple(parts))


def as_expr(v, chart: Chart) -> OperatorExpr:
    k = kind_of(v)
    if k == "scalar":
        return MulExpr(Superfunction.constant(chart, v))
    if k == "fn":
        return MulExpr(v)
    if k == "field":
        return field_expr(v)
    if k == "op":
        return v
    raise BindingError(f"a {k} is not an operator")


def coerce(v, kind: str, chart: Chart):
    """Read ``v`` as the requested kind, or raise BindingError."""
    k = kind_of(v)
    if k == kind:
        return v
    if kind == "fn" and k == "scalar":
        return Superfunction.constant(chart, v)
    if kind == "op" and k in ("scalar", "fn", "field"):
        return as_expr(v, chart)
    if kind == "form" and k == "scalar" and v == 0:
        return SuperOneForm.zero(chart)
    if kind == "field":
        if k == "scalar" and v == 0:
            return SuperVectorField.zero(chart)
        if k == "fn" and v.is_zero():
            return SuperVectorField.zero(chart)
        if k == "op":
            try:
                return SuperVectorField.from_op(normal_form(v))
            except OrderError:
                pass
    raise BindingError(f"expected a {kind}, got a {k}")


def value_equal(a, b) -> bool:
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        return False
    if ka == "op":
        return normal_form(a) == normal_form(b)
    if ka == "map":
        return a.images == b.images and a.inverse_images == b.inverse_images
    if ka == "auto":
        return (a.phi.images, a.phi.inverse_images, a.kappa, a.a, a.omega) == (
            b.phi.images, b.phi.inverse_images, b.kappa, b.a, b.omega)
    if ka == "ber":
        return a.rho == b.rho
    return a == b


def format_value(v) -> str:
    k = kind_of(v)
    return {
        "scalar": format_scalar,
        "fn": format_function,
        "field": format_field,
        "op": lambda D: format_operator(normal_form(D)),
        "form": format_form,
        "gdiv": format_gdiv,
        "ber": format_berezinian,
        "map": format_morphism,
        "auto": format_automorphism,
    }[k](v)


# ---------------------------------------------------------------------------
# evaluation


def _scale(v, c: Fraction):
    if isinstance(v, Fraction):
        return v * c
    if isinstance(v, OperatorExpr):
        return ScaleExpr(c, v)
    if hasattr(v, "scale") and kind_of(v) in ("fn", "field", "op", "form"):
        return v.scale(c)
    raise BindingError(f"cannot scale a {kind_of(v)}")


_ADD_RANK = {"scalar": 0, "fn": 1, "field": 2, "op": 3}


def _add(a, b, chart: Chart):
    ka, kb = kind_of(a), kind_of(b)
    if ka == kb and ka in ("scalar", "fn", "field", "form"):
        return a + b
    if ka == "form" or kb == "form":
        other, ko = (b, kb) if ka == "form" else (a, ka)
        if ko == "scalar" and other == 0:
            return a if ka == "form" else b
        raise BindingError(f"cannot add a form and a {ko}")
    if ka not in _ADD_RANK or kb not in _ADD_RANK:
        raise BindingError(f"cannot add a {ka} and a {kb}")
    if {ka, kb} == {"scalar", "fn"}:
        return coerce(a, "fn", chart) + coerce(b, "fn", chart)
    return SumExpr((as_expr(a, chart), as_expr(b, chart)))


def _mul(a, b, chart: Chart):
    ka, kb = kind_of(a), kind_of(b)
    if ka == "scalar":
        return _scale(b, a)
    if kb == "scalar":
        return _scale(a, b)
    if ka == "form":
        if kb == "fn":
            return SuperOneForm(chart, [w * b for w in a.coeffs])
        raise BindingError(f"a 1-form can only be multiplied on the right by a function, not a {kb}")
    if kb == "form":
        raise BindingError("write du_<coordinate> to the left of its coefficient")
    if ka == "fn" and kb == "fn":
        return a * b
    if ka == "fn" and kb == "field":
        return b.left_mul(a)
    if ka in _ADD_RANK and kb in _ADD_RANK:
        return ComposeExpr((as_expr(a, chart), as_expr(b, chart)))
    raise BindingError(f"cannot multiply a {ka} by a {kb}")


class Session:
    """A chart plus named bindings, built from declarations."""

    def __init__(self, chart: Chart | None = None, chart_name: str = "M"):
        self.chart = chart
        self.chart_name = chart_name
        self.bindings: dict = {}
        self.kinds: dict = {}

    # declarations

    def load(self, text: str) -> "Session":
        for item in Parser(text).parse_program():
            if isinstance(item, ChartDecl):
                self.declare_chart(item)
            else:
                self.bind(item)
        return self

    def declare_chart(self, decl: ChartDecl):
        if self.chart is not None and self.bindings:
            raise BindingError("chart must be declared before any binding")
        for n in decl.even + decl.odd:
            if n in RESERVED or n.startswith(("d_", "du_")):
                raise BindingError(f"{n!r} cannot be a coordinate name")
        self.chart = Chart(len(decl.even), len(decl.odd), decl.even + decl.odd)
        self.chart_name = decl.name

    def require_chart(self) -> Chart:
        if self.chart is None:
            raise BindingError("no chart declared (use a 'chart' line or --chart)")
        return self.chart

    def bind(self, b: Binding):
        chart = self.require_chart()
        if b.name in self.bindings:
            raise BindingError(f"{b.name!r} is already bound")
        if b.name in chart.names or b.name in RESERVED or b.name.startswith(("d_", "du_")):
            raise BindingError(f"{b.name!r} is reserved and cannot be bound")
        v = self.evaluate(b.expr)
        if b.kind:
            v = self._coerce_at(v, b.kind, b.expr)
        elif kind_of(v) == "scalar":
            v = Superfunction.constant(chart, v)
        self.bindings[b.name] = v
        self.kinds[b.name] = kind_of(v)

    def _coerce_at(self, v, kind, node):
        try:
            return coerce(v, kind, self.chart)
        except BindingError as exc:
            raise BindingError(f"line {node.line}, column {node.col}: {exc}") from None

    def parse(self, text: str, kind: str | None = None):
        """Evaluate a single expression, optionally coerced to ``kind``."""
        self.require_chart()
        node = Parser(text).parse_single_expr()
        v = self.evaluate(node)
        return self._coerce_at(v, kind, node) if kind else v

    def dumps(self) -> str:
        chart = self.require_chart()
        even = ", ".join(chart.names[: chart.p])
        odd = ", ".join(chart.names[chart.p :])
        lines = [f"chart {self.chart_name} = ({even} | {odd})"]
        for name, v in self.bindings.items():
            k = kind_of(v)
            prefix = f"{k} " if k in KINDS else ""
            lines.append(f"{prefix}{name} = {format_value(v)}")
        return "\n".join(lines) + "\n"

    # evaluation

    def evaluate(self, node: Node):
        try:
            return self._eval(node)
        except BindingError as exc:
            if str(exc).startswith("line "):
                raise
            raise BindingError(f"line {node.line}, column {node.col}: {exc}") from None

    def _eval(self, node: Node):
        chart = self.chart
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Name):
            return self._name(node)
        if isinstance(node, Pow):
            base = node.base.name
            if base not in chart.names:
                raise BindingError(f"'^' needs a coordinate, got {base!r}")
            k = chart.index(base)
            if chart.is_odd(k):
                raise ParityError(
                    f"line {node.line}, column {node.col}: odd coordinate {base} cannot be raised to a power"
                )
            return chart.coordinate(k) ** node.exponent
        if isinstance(node, Neg):
            return _scale(self._eval(node.inner), Fraction(-1))
        if isinstance(node, BinOp):
            a, b = self._eval(node.left), self._eval(node.right)
            try:
                if node.op == "+":
                    return _add(a, b, chart)
                if node.op == "-":
                    return _add(a, _scale(b, Fraction(-1)), chart)
                return _mul(a, b, chart)
            except BindingError as exc:
                raise BindingError(f"line {node.line}, column {node.col}: {exc}") from None
        if isinstance(node, Call):
            return self._call(node)
        if isinstance(node, MapLit):
            return ChartMorphism(chart, chart, self._images(node.forward, node), self._images(node.backward, node))
        raise TypeError(node)

    def _name(self, node: Name):
        chart, n = self.chart, node.name
        if n in self.bindings:
            return self.bindings[n]
        if n in chart.names:
            return chart.coordinate(chart.index(n))
        if n.startswith("du_") and n[3:] in chart.names:
            return SuperOneForm.basis(chart, chart.index(n[3:]))
        if n.startswith("d_") and n[2:] in chart.names:
            return SuperVectorField.basis(chart, chart.index(n[2:]))
        raise BindingError(f"unknown identifier {n!r}")

    def _images(self, entries, node) -> list:
        chart = self.chart
        out = {}
        for name, expr in entries:
            if name not in chart.names:
                raise BindingError(f"{name!r} is not a coordinate")
            if name in out:
                raise BindingError(f"coordinate {name!r} mapped twice")
            out[name] = coerce(self._eval(expr), "fn", chart)
        missing = [n for n in chart.names if n not in out]
        if missing:
            raise BindingError(f"map misses coordinate(s) {', '.join(missing)}")
        return [out[n] for n in chart.names]

    def _call(self, node: Call):
        chart = self.chart
        args = [self._eval(a) for a in node.args]
        if node.fn == "m":
            return MulExpr(coerce(args[0], "fn", chart))
        if node.fn == "d":
            return de_rham(coerce(args[0], "fn", chart))
        if node.fn == "ber":
            return BerezinianSection(coerce(args[0], "fn", chart))
        if node.fn == "gdiv":
            return GeneralizedDivergence.unchecked(coerce(args[0], "scalar", chart), coerce(args[1], "form", chart))
        # auto(phi, kappa, a, omega)
        phi = coerce(args[0], "map", chart)
        return D1Automorphism.unchecked(
            phi, coerce(args[1], "scalar", chart), coerce(args[2], "scalar", chart), coerce(args[3], "form", chart)
        )


def parse_chart_spec(spec: str) -> Chart:
    """'1|2' (default names) or '(x | xi1, xi2)'."""
    m = re.fullmatch(r"\s*(\d+)\s*\|\s*(\d+)\s*", spec)
    if m:
        return Chart(int(m.group(1)), int(m.group(2)))
    even, odd = Parser(spec).parse_chart_body()
    return Chart(len(even), len(odd), even + odd)


__all__ = [
    "BindingError",
    "ParseError",
    "Parser",
    "Session",
    "as_expr",
    "coerce",
    "format_value",
    "kind_of",
    "parse_chart_spec",
    "tokenize",
    "value_equal",
]

