"""Reader and writer for the polynomial system text format.

Example::

    # Griewank-Osborne, two variable groups
    variables z1, z2;
    group H1: z1;
    group H2: z2;
    function (29/16)*z1^3 - 2*z1*z2;
    function z2 - z1^2;
    start_function ((-0.74924187 + 0.13780686*I)*z2 + ...) * ...;
    patch (-0.42423834 + 0.84693089*I)*z1 + H1 - 0.71988539 + 0.59651665*I;
    gamma 1 0

Statements end with ``;`` (optional after ``gamma``).  ``I`` is the imaginary
unit and ``t`` the homotopy parameter.  ``let name = expr;`` binds a
reusable subexpression.  Constants are kept exactly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bounds import expand
from .exact import IMAG, QC, format_qc, format_rational
from .homog import LinearForm
from .program import SlpBuilder, SlpSystem

KEYWORDS = {"variables", "group", "function", "start_function", "patch", "gamma", "let"}


class SlpParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;:=])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SlpParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class Group:
    hvar: str
    members: tuple[str, ...]


@dataclass
class Problem:
    """Everything a system file declares."""

    variables: tuple[str, ...]
    target: SlpSystem
    groups: tuple[Group, ...] = ()
    start: SlpSystem | None = None
    patches: tuple[LinearForm, ...] = ()
    gamma: QC | None = None
    comments: list[str] = field(default_factory=list)

    @property
    def hom_variables(self) -> tuple[str, ...]:
        return tuple(g.hvar for g in self.groups)


# An expression value is either an exact constant (folded) or a builder slot.
class _Expr:
    __slots__ = ("const", "slot")

    def __init__(self, const: QC | None = None, slot: int | None = None):
        self.const, self.slot = const, slot


class _ExprParser:
    def __init__(self, tokens: list[Token], pos: int, builder: SlpBuilder, names: dict[str, int],
                 lets: dict[str, _Expr], allow_t: bool):
        self.toks, self.pos, self.b = tokens, pos, builder
        self.names, self.lets, self.allow_t = names, lets, allow_t

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise SlpParseError(msg, tok.line, tok.col)

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.tok
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text else kind
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            self.error(f"expected {want}, found {got}")
        self.pos += 1
        return tok

    def slot(self, e: _Expr) -> int:
        return self.b.const(e.const) if e.const is not None else e.slot

    def binop(self, op: str, x: _Expr, y: _Expr, tok: Token) -> _Expr:
        if x.const is not None and y.const is not None:
            if op == "+":
                return _Expr(x.const + y.const)
            if op == "-":
                return _Expr(x.const - y.const)
            if op == "*":
                return _Expr(x.const * y.const)
            try:
                return _Expr(x.const / y.const)
            except ZeroDivisionError:
                self.error("division by zero", tok)
        if op == "/":
            if y.const is None:
                self.error("division by a non-constant expression", tok)
            try:
                y = _Expr(QC(Fraction(1)) / y.const)
            except ZeroDivisionError:
                self.error("division by zero", tok)
            op = "*"
        a, c = self.slot(x), self.slot(y)
        fn = {"+": self.b.add, "-": self.b.sub, "*": self.b.mul}[op]
        return _Expr(slot=fn(a, c))

    def expr(self) -> _Expr:
        x = self.term()
        while self.tok.text in ("+", "-"):
            tok = self.take()
            x = self.binop(tok.text, x, self.term(), tok)
        return x

    def term(self) -> _Expr:
        x = self.unary()
        while self.tok.text in ("*", "/"):
            tok = self.take()
            x = self.binop(tok.text, x, self.unary(), tok)
        return x

    def unary(self) -> _Expr:
        if self.tok.text == "-":
            self.take()
            x = self.unary()
            return _Expr(-x.const) if x.const is not None else _Expr(slot=self.b.neg(x.slot))
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> _Expr:
        base = self.atom()
        if self.tok.text != "^":
            return base
        self.take()
        sign = 1
        if self.tok.text in ("-", "+"):
            sign = -1 if self.take().text == "-" else 1
        tok = self.tok
        if tok.kind != "num":
            self.error("exponent must be an integer literal")
        self.take()
        if not re.fullmatch(r"\d+", tok.text):
            self.error(f"non-integer exponent {tok.text}", tok)
        k = sign * int(tok.text)
        if base.const is not None:
            if k < 0 and not base.const:
                self.error("zero to a negative power", tok)
            return _Expr(base.const ** k)
        if k < 0:
            self.error("negative exponent on a non-constant expression", tok)
        if k == 0:
            return _Expr(QC(Fraction(1)))
        return _Expr(slot=self.b.pow(base.slot, k))

    def atom(self) -> _Expr:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return _Expr(QC(Fraction(tok.text)))
        if tok.kind == "name":
            self.take()
            if tok.text == "I":
                return _Expr(IMAG)
            if tok.text == "t":
                if not self.allow_t:
                    self.error("t is not allowed here", tok)
                return _Expr(slot=self.b.t())
            if tok.text in self.lets:
                return self.lets[tok.text]
            if tok.text in self.names:
                return _Expr(slot=self.b.var(self.names[tok.text]))
            if tok.text in KEYWORDS:
                self.error(f"unexpected keyword {tok.text!r}", tok)
            self.error(f"undeclared variable {tok.text!r}", tok)
        if tok.text == "(":
            self.take()
            x = self.expr()
            self.take(")")
            return x
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error(f"expected an expression, found {got}")


def _signed_number(p: _ExprParser) -> Fraction:
    x = p.term()
    if x.const is None or not x.const.is_real:
        p.error("expected a real constant")
    return x.const.re


def parse_problem(text: str) -> Problem:
    """Parse a full system file."""
    toks = tokenize(text)
    variables: list[str] = []
    groups: list[Group] = []
    # statements are collected first and built once all declarations are seen
    statements: list[tuple[str, int]] = []
    gamma = None
    pos = 0

    def expect_names(pos):
        names = []
        while True:
            tok = toks[pos]
            if tok.kind != "name" or tok.text in KEYWORDS or tok.text in ("I", "t"):
                raise SlpParseError("expected a variable name", tok.line, tok.col)
            names.append(tok.text)
            pos += 1
            if toks[pos].text != ",":
                return names, pos
            pos += 1

    def skip_to_semicolon(pos):
        depth = 0
        while toks[pos].text != ";" or depth:
            if toks[pos].kind == "eof":
                raise SlpParseError("missing ';'", toks[pos].line, toks[pos].col)
            if toks[pos].text == "(":
                depth += 1
            elif toks[pos].text == ")":
                depth -= 1
            pos += 1
        return pos + 1

    while toks[pos].kind != "eof":
        tok = toks[pos]
        if tok.kind != "name" or tok.text not in KEYWORDS:
            raise SlpParseError(f"expected a statement keyword, found {tok.text!r}", tok.line, tok.col)
        if tok.text == "variables":
            names, pos = expect_names(pos + 1)
            for nm in names:
                if nm in variables:
                    raise SlpParseError(f"variable {nm!r} declared twice", tok.line, tok.col)
            variables.extend(names)
            pos = _expect(toks, pos, ";")
        elif tok.text == "group":
            (hvar,), pos = expect_names(pos + 1)
            pos = _expect(toks, pos, ":")
            members, pos = expect_names(pos)
            groups.append(Group(hvar, tuple(members)))
            pos = _expect(toks, pos, ";")
        elif tok.text == "gamma":
            p = _ExprParser(toks, pos + 1, SlpBuilder([]), {}, {}, False)
            re_part = _signed_number(p)
            im_part = _signed_number(p)
            gamma = QC(re_part, im_part)
            pos = p.pos + (1 if toks[p.pos].text == ";" else 0)
        else:
            statements.append((tok.text, pos))
            pos = skip_to_semicolon(pos + 1)

    if not variables:
        raise SlpParseError("no variables declared", 1, 1)
    for g in groups:
        for m in g.members:
            if m not in variables:
                raise SlpParseError(f"group {g.hvar} names undeclared variable {m!r}")
        if g.hvar in variables:
            raise SlpParseError(f"homogenizing variable {g.hvar!r} clashes with a variable")
    if groups:
        covered = sorted(m for g in groups for m in g.members)
        if covered != sorted(variables):
            raise SlpParseError("groups must partition the declared variables")

    hvars = [g.hvar for g in groups]
    target_b = SlpBuilder(variables)
    ext_vars = variables + hvars
    start_b = SlpBuilder(ext_vars)
    patch_b = SlpBuilder(ext_vars)
    target_lets: dict[str, _Expr] = {}
    start_lets: dict[str, _Expr] = {}
    patch_lets: dict[str, _Expr] = {}
    f_out, g_out, p_out = [], [], []

    def parse_expr(builder, names, lets, at, allow_t):
        p = _ExprParser(toks, at, builder, names, lets, allow_t)
        e = p.expr()
        p.take(";")
        return e, p

    tnames = {v: i for i, v in enumerate(variables)}
    enames = {v: i for i, v in enumerate(ext_vars)}
    for kind, at in statements:
        if kind == "let":
            name_tok = toks[at + 1]
            if name_tok.kind != "name" or name_tok.text in KEYWORDS or name_tok.text in ext_vars \
                    or name_tok.text in ("I", "t"):
                raise SlpParseError("expected a new name after 'let'", name_tok.line, name_tok.col)
            _expect(toks, at + 2, "=")
            # bind in every builder where the expression makes sense
            errors = []
            for builder, names, lets, allow in ((target_b, tnames, target_lets, True),
                                                (start_b, enames, start_lets, False),
                                                (patch_b, enames, patch_lets, False)):
                try:
                    e, _ = parse_expr(builder, names, lets, at + 3, allow)
                except SlpParseError as exc:
                    errors.append(exc)
                    continue
                lets[name_tok.text] = e
            if len(errors) == 3:
                raise errors[0]
        elif kind == "function":
            e, p = parse_expr(target_b, tnames, target_lets, at + 1, True)
            f_out.append(e if e.slot is not None else _Expr(slot=target_b.const(e.const)))
        elif kind == "start_function":
            e, p = parse_expr(start_b, enames, start_lets, at + 1, False)
            g_out.append(e if e.slot is not None else _Expr(slot=start_b.const(e.const)))
        elif kind == "patch":
            e, p = parse_expr(patch_b, enames, patch_lets, at + 1, False)
            p_out.append(e if e.slot is not None else _Expr(slot=patch_b.const(e.const)))

    if not f_out:
        raise SlpParseError("no functions given")
    target = target_b.build([e.slot for e in f_out])
    start = start_b.build([e.slot for e in g_out]) if g_out else None
    patches: list[LinearForm] = []
    if p_out:
        patch_sys = patch_b.build([e.slot for e in p_out])
        for poly in expand(patch_sys):
            patches.append(_linear_form(poly, ext_vars))
    if patches and len(patches) != len(groups):
        raise SlpParseError(f"{len(patches)} patches for {len(groups)} groups")
    if start is not None and start.n_eqs != target.n_eqs:
        raise SlpParseError(f"{start.n_eqs} start functions for {target.n_eqs} functions")
    return Problem(tuple(variables), target, tuple(groups), start, tuple(patches), gamma)


def _expect(toks: list[Token], pos: int, text: str) -> int:
    tok = toks[pos]
    if tok.text != text:
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise SlpParseError(f"expected {text!r}, found {got}", tok.line, tok.col)
    return pos + 1


def _linear_form(poly: dict, names: Sequence[str]) -> LinearForm:
    coeffs: dict[str, QC] = {}
    constant = QC(Fraction(0))
    for mono, c in poly.items():
        if mono[-1] or sum(mono) > 1:
            raise SlpParseError("patch equations must be linear")
        if sum(mono) == 0:
            constant = c
        else:
            coeffs[names[mono.index(1)]] = c
    return LinearForm(tuple(coeffs.items()), constant)


def parse_system(text: str) -> SlpSystem:
    """Parse a file (or a bare list of ``;``-separated expressions) into the target system.

    Bare expressions are accepted for convenience: the variables are taken
    to be every identifier other than ``I`` and ``t``, in order of first use.
    """
    if not re.search(r"\b(variables|function)\b", text):
        text = _wrap_bare(text)
    return parse_problem(text).target


def _wrap_bare(text: str) -> str:
    names = []
    for tok in tokenize(text):
        if tok.kind == "name" and tok.text not in ("I", "t") and tok.text not in names:
            names.append(tok.text)
    body = "".join(f"function {part.strip()};\n" for part in text.split(";") if part.strip())
    if not body:
        body = "function ;\n"
    header = f"variables {', '.join(names)};\n" if names else "variables _;\n"
    return header + body


# -- writing ---------------------------------------------------------------

def poly_to_text(poly: dict, names: Sequence[str]) -> str:
    """A polynomial from ``bounds.expand`` written as a sum of monomials."""
    if not poly:
        return "0"
    terms = []
    for mono in sorted(poly, key=lambda m: (-sum(m), [-e for e in m])):
        c = poly[mono]
        factors = []
        for name, e in zip(list(names) + ["t"], mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        if not factors:
            terms.append(format_qc(c))
        elif c == QC(Fraction(1)):
            terms.append("*".join(factors))
        else:
            terms.append(format_qc(c) + "*" + "*".join(factors))
    return " + ".join(terms).replace("+ -", "- ")


def linear_form_to_text(p: LinearForm) -> str:
    terms = [f"{format_qc(c)}*{name}" for name, c in p.coeffs]
    if p.constant:
        terms.append(format_qc(p.constant))
    return " + ".join(terms)


def format_problem(problem: Problem, functions: Sequence[str] | None = None,
                   start_functions: Sequence[str] | None = None,
                   header: Sequence[str] = (), lets: Sequence[tuple[str, str]] = ()) -> str:
    """Write ``problem`` in the text format.

    Functions default to monomial expansions of the target/start programs;
    callers may pass hand-formatted text (and ``let`` bindings) instead.
    """
    lines = [f"# {h}" for h in header]
    lines.append(f"variables {', '.join(problem.variables)};")
    for g in problem.groups:
        lines.append(f"group {g.hvar}: {', '.join(g.members)};")
    for name, expr in lets:
        lines.append(f"let {name} = {expr};")
    if functions is None:
        functions = [poly_to_text(p, problem.variables) for p in expand(problem.target)]
    lines += [f"function {f};" for f in functions]
    if start_functions is None and problem.start is not None:
        start_functions = [poly_to_text(p, problem.start.variables) for p in expand(problem.start)]
    lines += [f"start_function {g};" for g in start_functions or ()]
    lines += [f"patch {linear_form_to_text(p)};" for p in problem.patches]
    if problem.gamma is not None:
        lines.append(f"gamma {format_rational(problem.gamma.re)} {format_rational(problem.gamma.im)};")
    return "\n".join(lines) + "\n"
