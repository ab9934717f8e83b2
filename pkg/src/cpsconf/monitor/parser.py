r"""Text syntax for MTL formulas.

Grammar (EBNF, lowest precedence first)::

    formula   ::= disj [ "->" formula ]
    disj      ::= conj { "\/" conj }
    conj      ::= until { "/\" until }
    until     ::= unary [ "U_" interval until ]
    unary     ::= "!" unary
                | "[]_" interval unary
                | "<>_" interval unary
                | primary
    primary   ::= "(" formula ")" | "true" | "false" | atom
    atom      ::= term relop number          relop: < <= > >=
                | name ("==" | "!=") (name | integer)
                | name                       Boolean proposition
    term      ::= name | "|" name [ "-" name ] "|"
    interval  ::= ("[" | "(") number "," (number | "inf") ("]" | ")")

``err`` is shorthand for ``|yM - yI|``.  ``|a - b| < c`` and ``|a| < c``
are norm atoms; ``a < c`` compares a scalar channel.  ``==``/``!=`` compare
mode channels (or a mode channel and an integer label).

Example::

    []_[0,9.5] ((lM != lI) -> <>_[0,0.5] (lM == lI))
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .formula import (
    Always,
    And,
    Atom,
    Compare,
    Custom,
    Eventually,
    Formula,
    Implies,
    Interval,
    ModeDiffers,
    ModeEquals,
    NormLessThan,
    Not,
    Or,
    Prop,
    TrueF,
    TRUE,
    Until,
)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str):
        super().__init__(f"{message} at position {pos}: {text[:pos]}<HERE>{text[pos:]}")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<always>\[\]_)
  | (?P<eventually><>_)
  | (?P<until>U_(?=[\[(]))
  | (?P<implies>->)
  | (?P<or>\\/)
  | (?P<and>/\\)
  | (?P<relop><=|>=|==|!=|<|>)
  | (?P<not>!)
  | (?P<num>[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?))
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],|-])
    """,
    re.VERBOSE,
)

_RESERVED = {"true", "false", "inf"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise FormulaSyntaxError(msg, tok.pos, self.text)

    def accept(self, kind, text=None):
        t = self.tok
        if t.kind == kind and (text is None or t.text == text):
            self.i += 1
            return t
        return None

    def expect(self, kind, text=None, what=None):
        t = self.accept(kind, text)
        if t is None:
            found = self.tok.text or "end of input"
            self.error(f"expected {what or text or kind}, found {found!r}")
        return t

    def parse(self) -> Formula:
        f = self.formula()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return f

    def formula(self) -> Formula:
        left = self.disj()
        if self.accept("implies"):
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        args = [self.conj()]
        while self.accept("or"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self) -> Formula:
        args = [self.until()]
        while self.accept("and"):
            args.append(self.until())
        return args[0] if len(args) == 1 else And(tuple(args))

    def until(self) -> Formula:
        left = self.unary()
        if self.accept("until"):
            iv = self.interval()
            return Until(left, self.until(), iv)
        return left

    def unary(self) -> Formula:
        if self.accept("not"):
            return Not(self.unary())
        if self.accept("always"):
            iv = self.interval()
            return Always(self.unary(), iv)
        if self.accept("eventually"):
            iv = self.interval()
            return Eventually(self.unary(), iv)
        return self.primary()

    def primary(self) -> Formula:
        t = self.tok
        if self.accept("punct", "("):
            f = self.formula()
            if not self.accept("punct", ")"):
                self.error("unmatched parenthesis", t)
            return f
        if self.accept("name", "true"):
            return TRUE
        if self.accept("name", "false"):
            return Not(TRUE)
        return self.atom()

    def number(self) -> float:
        t = self.expect("num", what="number")
        return float(t.text)

    def interval(self) -> Interval:
        start = self.tok
        if self.accept("punct", "["):
            lo_closed = True
        elif self.accept("punct", "("):
            lo_closed = False
        else:
            self.error("malformed interval: expected '[' or '('")
        lo = self.number()
        self.expect("punct", ",")
        if self.accept("name", "inf"):
            hi = math.inf
        else:
            hi = self.number()
        if self.accept("punct", "]"):
            hi_closed = True
        elif self.accept("punct", ")"):
            hi_closed = False
        else:
            self.error("malformed interval: expected ']' or ')'")
        if math.isinf(hi) and hi_closed:
            hi_closed = False
        try:
            return Interval(lo, hi, lo_closed, hi_closed)
        except ValueError as exc:
            self.error(str(exc), start)

    def name(self) -> str:
        t = self.expect("name", what="channel name")
        if t.text in _RESERVED:
            self.error(f"reserved word {t.text!r} used as a name", t)
        return t.text

    def atom(self) -> Formula:
        start = self.tok
        if self.accept("punct", "|"):
            lhs = self.name()
            rhs = None
            if self.accept("punct", "-"):
                rhs = self.name()
            self.expect("punct", "|")
            op = self.expect("relop", what="'<'")
            if op.text != "<":
                self.error("norm atoms only support '<'", op)
            return Atom(NormLessThan(lhs, rhs, self.number()))
        if start.kind != "name":
            self.error(f"expected an atom, found {start.text or 'end of input'!r}")
        name = self.name()
        op = self.accept("relop")
        if op is None:
            return Atom(Prop(name))
        if op.text in ("==", "!="):
            if self.tok.kind == "name":
                other: str | int = self.name()
            else:
                num = self.expect("num", what="mode name or integer label")
                try:
                    other = int(num.text)
                except ValueError:
                    self.error("mode labels are integers", num)
            cls = ModeEquals if op.text == "==" else ModeDiffers
            return Atom(cls(name, other))
        const = self.number()
        if name == "err":
            if op.text != "<":
                self.error("'err' only supports '<'", op)
            return Atom(NormLessThan("yM", "yI", const))
        return Atom(Compare(name, op.text, const))


def parse(text: str) -> Formula:
    """Parse formula text into an AST; raises :class:`FormulaSyntaxError`."""
    return _Parser(text).parse()


# ------------------------------------------------------------------ render


def _num(x: float) -> str:
    return repr(float(x))


def _render_pred(p) -> str:
    if isinstance(p, NormLessThan):
        if p.shift:
            raise ValueError("shifted norm atoms have no text form")
        inner = p.lhs if p.rhs is None else f"{p.lhs} - {p.rhs}"
        return f"|{inner}| < {_num(p.eps)}"
    if isinstance(p, Compare):
        return f"{p.channel} {p.op} {_num(p.const)}"
    if isinstance(p, ModeEquals):
        return f"{p.a} == {p.b}"
    if isinstance(p, ModeDiffers):
        return f"{p.a} != {p.b}"
    if isinstance(p, Prop):
        return p.name
    if isinstance(p, Custom):
        raise ValueError(f"custom predicate {p.name!r} has no text form")
    raise TypeError(f"unknown predicate {p!r}")


def render(phi: Formula) -> str:
    """Fully parenthesised text form; ``parse(render(phi)) == phi``."""
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, Atom):
        return _render_pred(phi.pred)
    if isinstance(phi, Not):
        return f"!({render(phi.arg)})"
    if isinstance(phi, Or):
        return " \\/ ".join(f"({render(a)})" for a in phi.args)
    if isinstance(phi, And):
        return " /\\ ".join(f"({render(a)})" for a in phi.args)
    if isinstance(phi, Implies):
        return f"({render(phi.left)}) -> ({render(phi.right)})"
    if isinstance(phi, Until):
        return f"({render(phi.left)}) U_{phi.interval} ({render(phi.right)})"
    if isinstance(phi, Always):
        return f"[]_{phi.interval} ({render(phi.arg)})"
    if isinstance(phi, Eventually):
        return f"<>_{phi.interval} ({render(phi.arg)})"
    raise TypeError(f"not a formula: {phi!r}")
