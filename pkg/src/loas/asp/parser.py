"""Recursive-descent reader for the rule syntax.

Accepted statements::

    h :- b1, not b2.
    :- b1, b2.
    l {h1; h2} u :- body.         % ',' also accepted between head atoms
    :~ body.[w@l, t1, ..., tn]

Bodies may contain comparisons (``X < Y``), count aggregates
(``l {a; b} u``) and the sum pattern ``#sum{a=W, b=-W} < k``.
``%`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re

from ..errors import ParseError, SafetyError
from .syntax import (
    BOTTOM,
    Aggregate,
    AggregateElement,
    Atom,
    ChoiceRule,
    Comparison,
    Constant,
    Function,
    HardConstraint,
    Integer,
    Literal,
    NormalRule,
    Program,
    Variable,
    WeakConstraint,
    unsafe_variables,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<directive>\#[a-z_]+)
  | (?P<int>[0-9]+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<punct>:-|:~|<=|>=|!=|[.,;(){}\[\]@=<>\-:|])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.pos})"


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError((line, i - line_start + 1), f"unexpected character {text[i]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, (line, i - line_start + 1)))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = i + chunk.rindex("\n") + 1
        i = m.end()
    tokens.append(Token("eof", "", (line, i - line_start + 1)))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        tok = self.tokens[self.i]
        return tok.kind != "eof" and tok.text == text

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.current
        if tok.text != text or tok.kind == "eof":
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.current
        raise ParseError(tok.pos, message)

    def eof(self) -> bool:
        return self.current.kind == "eof"


class RuleParser:
    """Parses rules from a :class:`TokenStream`; subclassed by the task-file reader."""

    def __init__(self, stream: TokenStream, allow_bottom: bool = False):
        self.s = stream
        self.allow_bottom = allow_bottom

    # -- terms ----------------------------------------------------------
    def term(self):
        s = self.s
        tok = s.current
        if tok.kind == "int":
            s.advance()
            return Integer(int(tok.text))
        if tok.text == "-" and s.peek().kind == "int":
            s.advance()
            return Integer(-int(s.advance().text))
        if tok.kind == "var":
            s.advance()
            if tok.text.startswith("_"):
                s.error("anonymous variables are not supported", tok)
            return Variable(tok.text)
        if tok.kind == "ident":
            s.advance()
            if s.at("("):
                s.advance()
                args = [self.term()]
                while s.accept(","):
                    args.append(self.term())
                s.expect(")")
                return Function(tok.text, args)
            return Constant(tok.text)
        s.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def atom(self) -> Atom:
        s = self.s
        tok = s.current
        if tok.kind != "ident" or tok.text == "not":
            s.error(f"expected an atom, found {tok.text or 'end of input'!r}")
        s.advance()
        args = []
        if s.at("("):
            s.advance()
            args.append(self.term())
            while s.accept(","):
                args.append(self.term())
            s.expect(")")
        if tok.text == BOTTOM and not args and not self.allow_bottom:
            s.error(f"'{BOTTOM}' is reserved", tok)
        return Atom(tok.text, args)

    # -- bodies ---------------------------------------------------------
    def _atom_list(self, close: str) -> list:
        s = self.s
        atoms = [self.atom()]
        while s.at(";") or s.at(","):
            s.advance()
            atoms.append(self.atom())
        s.expect(close)
        return atoms

    def _bound(self):
        s = self.s
        if s.current.kind == "int":
            return int(s.advance().text)
        if s.at("-") and s.peek().kind == "int":
            s.advance()
            return -int(s.advance().text)
        return None

    def body_element(self):
        s = self.s
        tok = s.current
        if tok.kind == "directive":
            if tok.text != "#sum":
                s.error(f"unexpected directive {tok.text}")
            return self.sum_aggregate()
        if tok.kind == "ident" and tok.text == "not":
            s.advance()
            return Literal(self.atom(), True)
        if tok.kind == "int" and s.peek().text == "{" or tok.text == "{":
            lower = self._bound()
            s.expect("{")
            atoms = self._atom_list("}")
            upper = self._bound()
            return Aggregate("count", tuple(AggregateElement(a) for a in atoms), lower, upper)
        if tok.kind == "ident":
            start = s.i
            atom = self.atom()
            if s.current.text in ("<", "<=", ">", ">=", "=", "!="):
                s.i = start
            else:
                return Literal(atom, False)
        left = self.term()
        op = s.current.text
        if op not in ("<", "<=", ">", ">=", "=", "!="):
            s.error(f"expected a comparison operator, found {op!r}")
        s.advance()
        right = self.term()
        return Comparison(op, left, right)

    def sum_aggregate(self) -> Aggregate:
        s = self.s
        s.advance()
        s.expect("{")
        elements = [self._sum_element()]
        while s.accept(",") or s.accept(";"):
            elements.append(self._sum_element())
        s.expect("}")
        op = s.advance().text
        bound = self._bound()
        if bound is None:
            s.error("expected an integer bound after #sum")
        lower = upper = None
        if op == "<":
            upper = bound - 1
        elif op == "<=":
            upper = bound
        elif op == ">":
            lower = bound + 1
        elif op == ">=":
            lower = bound
        elif op == "=":
            lower = upper = bound
        else:
            s.error(f"unsupported #sum comparison {op!r}")
        return Aggregate("sum", tuple(elements), lower, upper)

    def _sum_element(self) -> AggregateElement:
        s = self.s
        atom = self.atom()
        s.expect("=")
        negative = s.accept("-")
        weight = self.term()
        if type(weight) is Integer and weight.value < 0 and negative:
            s.error("double negation in #sum weight")
        return AggregateElement(atom, weight, negative)

    def body(self) -> tuple:
        s = self.s
        elements = [self.body_element()]
        while s.accept(","):
            elements.append(self.body_element())
        return tuple(elements)

    # -- statements -----------------------------------------------------
    def rule(self):
        s = self.s
        if s.accept(":~"):
            body = () if s.at(".") else self.body()
            s.expect(".")
            s.expect("[")
            weight = self.term()
            s.expect("@")
            level = self.term()
            terms = []
            while s.accept(","):
                terms.append(self.term())
            s.expect("]")
            return WeakConstraint(body, weight, level, tuple(terms))
        if s.accept(":-"):
            body = self.body()
            s.expect(".")
            return HardConstraint(body)
        tok = s.current
        if tok.text == "{" or (tok.kind == "int" and s.peek().text == "{"):
            lower = self._bound()
            s.expect("{")
            heads = self._atom_list("}")
            upper = self._bound()
            lo = 0 if lower is None else lower
            hi = len(heads) if upper is None else upper
            if not 0 <= lo <= hi <= len(heads):
                s.error(f"choice bounds {lo}..{hi} invalid for {len(heads)} head atoms", tok)
            body = ()
            if s.accept(":-"):
                body = self.body()
            s.expect(".")
            return ChoiceRule(lo, hi, tuple(heads), body)
        head = self.atom()
        body = ()
        if s.accept(":-"):
            body = self.body()
        s.expect(".")
        return NormalRule(head, body)


def check_safety(rules, offset: int = 0):
    for i, r in enumerate(rules):
        bad = unsafe_variables(r)
        if bad:
            raise SafetyError(i + offset, bad[0], r)


def parse_program(text: str, *, allow_bottom: bool = False) -> Program:
    """Parse ``text`` into a :class:`Program`, rejecting unsafe rules."""
    stream = TokenStream(text)
    parser = RuleParser(stream, allow_bottom=allow_bottom)
    rules = []
    while not stream.eof():
        rules.append(parser.rule())
    check_safety(rules)
    return Program(rules)


def parse_rule(text: str):
    prog = parse_program(text)
    if len(prog) != 1:
        raise ValueError(f"expected exactly one rule in {text!r}")
    return prog.rules[0]


def parse_atom(text: str) -> Atom:
    stream = TokenStream(text)
    atom = RuleParser(stream).atom()
    if not stream.eof():
        stream.error("trailing input after atom")
    return atom
