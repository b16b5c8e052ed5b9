"""Lexer, recursive-descent parser and pretty-printer for the ASCII notation.

Expression precedence, loosest to tightest::

    |->                      (left associative)
    -->  +->  >->  <->       (right associative)
    \\/  \\  <+  <<|           (left associative)
    /\\                       (left associative)
    ..                       (non associative)
    +  -                     (left associative)
    **                       (left associative)
    f(x)  f[S]               (postfix)

Predicates, loosest to tightest: ``=>`` (right associative), ``or``, ``&``,
``not``, then comparisons and membership. Quantifier bodies extend as far
right as possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import model as m
from .model import Diagnostic, SourceSpan


class ParseError(m.DiagnosticError):
    """Raised with one or more diagnostics when input cannot be parsed."""


KEYWORDS = {
    "context", "extends", "sets", "constants", "axioms", "theorems", "end",
    "machine", "sees", "variables", "invariants", "events", "any", "where",
    "then", "init", "or", "not", "POW", "dom", "ran", "INT", "NAT", "BOOL",
    "TRUE", "FALSE", "btrue", "bfalse",
}

_SYMBOLS = [
    "<<|", "-->", "+->", ">->", "<->", "|->", ":=", "..", "**", "\\/", "/\\",
    "<+", "<:", "/:", "/=", "<=", ">=", "=>",
    "\\", ":", "=", "<", ">", "+", "-", "(", ")", "{", "}", "[", "]", ",",
    ".", "|", "&", "!", "#",
]
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>//[^\n]*)|(?P<num>[0-9]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>"
    + "|".join(re.escape(s) for s in _SYMBOLS)
    + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", "sym", "eof"
    text: str
    line: int
    col: int

    @property
    def end_col(self):
        return self.col + max(len(self.text), 1)


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if match is None:
            span = SourceSpan(filename, line, col, line, col + 1)
            raise ParseError([Diagnostic("lexical-error", f"unexpected character {text[pos]!r}", span)])
        kind = match.lastgroup
        lexeme = match.group()
        if kind == "ident" and lexeme in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_ARROWS = {"-->": m.TOTAL, "+->": m.PARTIAL, ">->": m.TOTAL_INJ, "<->": m.RELATION}
_SETOPS = {"\\/": m.UNION, "\\": m.DIFF, "<+": m.OVERRIDE, "<<|": m.DOMSUB}
_RELOPS = {"=", "/=", "<", "<=", ">", ">=", ":", "/:", "<:"}


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str, filename: str = "<input>", scope=()):
        self.filename = filename
        self.tokens = tokenize(text, filename)
        self.pos = 0
        # Names visible at the current point; decides the bound variables of
        # the {E | P} comprehension shape.
        self.scope: list[set[str]] = [set(scope)]

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def span(self, start: Token, end: Token | None = None) -> SourceSpan:
        end = end or start
        return SourceSpan(self.filename, start.line, start.col, end.line, end.end_col)

    def error(self, message, tok=None, code="syntax-error"):
        tok = tok or self.tok
        return ParseError([Diagnostic(code, message, self.span(tok))])

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected identifier, found {found!r}")
        return self.advance()

    def in_scope(self, name) -> bool:
        return any(name in frame for frame in self.scope)

    def finish(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- expressions

    def expression(self) -> m.Expression:
        left = self.arrow_expr()
        while self.at("|->"):
            self.advance()
            left = m.Maplet(left, self.arrow_expr())
        return left

    def arrow_expr(self):
        left = self.setop_expr()
        if self.tok.kind == "sym" and self.tok.text in _ARROWS:
            kind = _ARROWS[self.advance().text]
            return m.FunctionSpace(kind, left, self.arrow_expr())
        return left

    def setop_expr(self):
        left = self.inter_expr()
        while self.tok.kind == "sym" and self.tok.text in _SETOPS:
            op = _SETOPS[self.advance().text]
            left = m.BinaryOp(op, left, self.inter_expr())
        return left

    def inter_expr(self):
        left = self.interval_expr()
        while self.at("/\\"):
            self.advance()
            left = m.BinaryOp(m.INTER, left, self.interval_expr())
        return left

    def interval_expr(self):
        left = self.additive_expr()
        if self.at(".."):
            self.advance()
            return m.Interval(left, self.additive_expr())
        return left

    def additive_expr(self):
        left = self.product_expr()
        while self.at("+", "-"):
            op = m.PLUS if self.advance().text == "+" else m.MINUS
            left = m.BinaryOp(op, left, self.product_expr())
        return left

    def product_expr(self):
        left = self.postfix_expr()
        while self.at("**"):
            self.advance()
            left = m.BinaryOp(m.CPROD, left, self.postfix_expr())
        return left

    def postfix_expr(self):
        e = self.primary()
        while self.at("(", "["):
            if self.advance().text == "(":
                arg = self.expression()
                self.expect(")")
                e = m.FunctionApp(e, arg)
            else:
                arg = self.expression()
                self.expect("]")
                e = m.BinaryOp(m.IMAGE, e, arg)
        return e

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return m.IntegerLiteral(int(t.text))
        if self.at("-") and self.peek().kind == "num":
            self.advance()
            return m.IntegerLiteral(-int(self.advance().text))
        if t.kind == "ident":
            self.advance()
            return m.Identifier(t.text)
        if self.at("TRUE", "FALSE"):
            self.advance()
            return m.BoolLiteral(t.text == "TRUE")
        if self.at("INT", "NAT", "BOOL"):
            self.advance()
            return m.BuiltinSet(t.text)
        if self.at("POW", "dom", "ran"):
            self.advance()
            op = {"POW": m.POW, "dom": m.DOM, "ran": m.RAN}[t.text]
            self.expect("(")
            operand = self.expression()
            self.expect(")")
            return m.UnaryOp(op, operand)
        if self.at("("):
            self.advance()
            e = self.expression()
            self.expect(")")
            return e
        if self.at("{"):
            return self.braces()
        found = t.text or "end of input"
        raise self.error(f"expected expression, found {found!r}")

    def _binder_list_ahead(self) -> bool:
        """True if the tokens ahead read ``x, y, ... .``"""
        i = self.pos
        while True:
            if self.tokens[i].kind != "ident":
                return False
            i += 1
            if self.tokens[i].kind == "sym" and self.tokens[i].text == ".":
                return True
            if not (self.tokens[i].kind == "sym" and self.tokens[i].text == ","):
                return False
            i += 1

    def binder_names(self) -> tuple[str, ...]:
        names = [self.ident()]
        while self.at(","):
            self.advance()
            names.append(self.ident())
        seen = set()
        for tok in names:
            if tok.text in seen:
                raise self.error(f"duplicate bound variable {tok.text!r}", tok)
            seen.add(tok.text)
        return tuple(t.text for t in names)

    def braces(self):
        self.expect("{")
        if self.at("}"):
            self.advance()
            return m.EmptySet()
        if self._binder_list_ahead():
            names = self.binder_names()
            self.expect(".")
            self.scope.append(set(names))
            try:
                constraint = self.predicate()
                self.expect("|")
                body = self.expression()
            finally:
                self.scope.pop()
            self.expect("}")
            return m.Comprehension(names, constraint, body)
        first = self.expression()
        if self.at("|"):
            self.advance()
            names = tuple(n for n in _ordered_free(first) if not self.in_scope(n))
            self.scope.append(set(names))
            try:
                constraint = self.predicate()
            finally:
                self.scope.pop()
            self.expect("}")
            return m.Comprehension(names, constraint, first, body_first=True)
        members = [first]
        while self.at(","):
            self.advance()
            members.append(self.expression())
        self.expect("}")
        return m.SetExtension(tuple(members))

    # -- predicates

    def predicate(self) -> m.Predicate:
        left = self.disjunction()
        if self.at("=>"):
            self.advance()
            return m.Implies(left, self.predicate())
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.at("or"):
            self.advance()
            left = m.Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.unary_pred()
        while self.at("&"):
            self.advance()
            left = m.And(left, self.unary_pred())
        return left

    def unary_pred(self):
        if self.at("not"):
            self.advance()
            return m.Not(self.unary_pred())
        if self.at("!", "#"):
            universal = self.advance().text == "!"
            names = self.binder_names()
            self.expect(".")
            self.scope.append(set(names))
            try:
                body = self.predicate()
            finally:
                self.scope.pop()
            return m.ForAll(names, body) if universal else m.Exists(names, body)
        if self.at("btrue"):
            self.advance()
            return m.Truth()
        if self.at("bfalse"):
            self.advance()
            return m.Falsity()
        if self.at("("):
            saved = self.pos
            try:
                self.advance()
                p = self.predicate()
                self.expect(")")
                if self.tok.kind == "sym" and self.tok.text not in (")", "&", "=>", "|", "}"):
                    raise _Backtrack
                return p
            except (ParseError, _Backtrack):
                self.pos = saved
        return self.relation()

    def relation(self):
        left = self.expression()
        t = self.tok
        if not (t.kind == "sym" and t.text in _RELOPS):
            found = t.text or "end of input"
            raise self.error(f"expected a comparison or membership operator, found {found!r}")
        op = self.advance().text
        right = self.expression()
        if op == "=":
            return m.Equal(left, right)
        if op == "/=":
            return m.NotEqual(left, right)
        if op == ":":
            if isinstance(right, m.FunctionSpace):
                return m.FunctionClass(left, right.domain, right.codomain, right.kind)
            return m.Member(left, right)
        if op == "/:":
            return m.NotMember(left, right)
        if op == "<:":
            return m.Subset(left, right)
        return m.Compare(op, left, right)

    # -- units

    def name_list(self) -> list[Token]:
        names = []
        while self.tok.kind == "ident" or self.at(","):
            if self.at(","):
                self.advance()
                continue
            names.append(self.advance())
        return names

    def labelled_predicates(self, spans, labels) -> tuple:
        out = []
        while self.tok.kind == "ident" and self.peek().kind == "sym" and self.peek().text == ":":
            tok = self.advance()
            self.advance()
            if tok.text in labels:
                raise self.error(f"duplicate label {tok.text!r}", tok, code="duplicate-label")
            labels.add(tok.text)
            pred = self.predicate()
            spans[tok.text] = self.span(tok, self.tokens[self.pos - 1])
            out.append((tok.text, pred))
        return tuple(out)

    def context(self) -> m.ContextDef:
        start = self.expect("context")
        name = self.ident()
        spans = {name.text: self.span(start, name)}
        extends, sets, constants = [], [], []
        axioms, theorems = (), ()
        labels: set[str] = set()
        if self.at("extends"):
            self.advance()
            extends = [t.text for t in self.name_list()]
        if self.at("sets"):
            self.advance()
            toks = self.name_list()
            sets = [t.text for t in toks]
            spans.update({t.text: self.span(t) for t in toks})
        if self.at("constants"):
            self.advance()
            toks = self.name_list()
            constants = [t.text for t in toks]
            spans.update({t.text: self.span(t) for t in toks})
        self.scope.append(set(sets) | set(constants))
        if self.at("axioms"):
            self.advance()
            axioms = self.labelled_predicates(spans, labels)
        if self.at("theorems"):
            self.advance()
            theorems = self.labelled_predicates(spans, labels)
        self.scope.pop()
        self.expect("end")
        return m.ContextDef(name.text, tuple(extends), tuple(sets), tuple(constants),
                            axioms, theorems, spans=spans)

    def machine(self) -> m.MachineDef:
        start = self.expect("machine")
        name = self.ident()
        spans = {name.text: self.span(start, name)}
        sees, variables = [], []
        invariants = ()
        events, init = [], None
        labels: set[str] = set()
        if self.at("sees"):
            self.advance()
            sees = [t.text for t in self.name_list()]
        if self.at("variables"):
            self.advance()
            toks = self.name_list()
            variables = [t.text for t in toks]
            spans.update({t.text: self.span(t) for t in toks})
        self.scope.append(set(variables))
        if self.at("invariants"):
            self.advance()
            invariants = self.labelled_predicates(spans, labels)
        if self.at("events"):
            self.advance()
            while self.tok.kind == "ident" or self.at("init"):
                evt = self.event(spans)
                if evt.name == m.INITIALISATION:
                    if init is not None:
                        raise self.error("second INITIALISATION event", code="duplicate-event")
                    init = evt
                else:
                    if any(e.name == evt.name for e in events):
                        raise self.error(f"duplicate event {evt.name!r}", code="duplicate-event")
                    events.append(evt)
        self.scope.pop()
        self.expect("end")
        return m.MachineDef(name.text, tuple(sees), tuple(variables), invariants,
                            tuple(events), init, spans=spans)

    def event(self, spans) -> m.EventDef:
        head = self.advance()
        name = m.INITIALISATION if head.text == "init" else head.text
        spans[name] = self.span(head)
        params: list[str] = []
        guards = ()
        actions = []
        if self.at("any"):
            self.advance()
            params = [t.text for t in self.name_list()]
            if len(set(params)) != len(params):
                raise self.error(f"duplicate parameter in event {name!r}", head)
        self.scope.append(set(params))
        try:
            if self.at("where"):
                self.advance()
                guards = self.labelled_predicates(spans, set())
            if self.at("then"):
                self.advance()
                assigned = set()
                while self.tok.kind == "ident":
                    var_tok = self.advance()
                    index = None
                    if self.at("("):
                        self.advance()
                        index = self.expression()
                        self.expect(")")
                    self.expect(":=")
                    value = self.expression()
                    if var_tok.text in assigned:
                        raise self.error(f"event {name!r} assigns {var_tok.text!r} twice", var_tok,
                                         code="double-assignment")
                    assigned.add(var_tok.text)
                    actions.append(m.Assignment(var_tok.text, value, index))
        finally:
            self.scope.pop()
        self.expect("end")
        return m.EventDef(name, tuple(params), guards, tuple(actions))


def _ordered_free(e) -> list[str]:
    """Free identifiers of ``e`` in left-to-right order of first occurrence."""
    out: list[str] = []

    def walk(node, bound):
        if isinstance(node, m.Identifier):
            if node.name not in bound and node.name not in out:
                out.append(node.name)
            return
        if isinstance(node, m.BINDERS):
            bound = bound | set(node.bound_vars)
        for child in node.children():
            walk(child, bound)

    walk(e, frozenset())
    return out


# ------------------------------------------------------------------ entry points


def parse_expression(text: str, scope=(), filename="<input>") -> m.Expression:
    p = Parser(text, filename, scope)
    e = p.expression()
    p.finish()
    return e


def parse_predicate(text: str, scope=(), filename="<input>") -> m.Predicate:
    p = Parser(text, filename, scope)
    pred = p.predicate()
    p.finish()
    return pred


def parse_type(text: str, carriers, filename="<input>") -> m.TypeExpr:
    """Parse a type expression such as ``POW(INT ** ELEMENT) ** INT``."""
    p = Parser(text, filename)
    start = p.tok
    e = p.expression()
    p.finish()
    t = m.expr_to_type(e, set(carriers))
    if t is None:
        raise ParseError([Diagnostic("not-a-type", f"{text.strip()!r} is not a type expression",
                                     p.span(start, p.tokens[p.pos - 1]))])
    return t


def parse_context(text: str, filename="<input>") -> m.ContextDef:
    p = Parser(text, filename)
    ctx = p.context()
    p.finish()
    return ctx


def parse_machine(text: str, filename="<input>", library=None) -> m.MachineDef:
    """Parse a machine; with ``library`` also resolve identifiers against the
    seen contexts and raise on any well-formedness diagnostic."""
    p = Parser(text, filename)
    mch = p.machine()
    p.finish()
    if library is not None:
        diags = m.well_formed(mch, library)
        if diags:
            raise ParseError(diags)
    return mch


def parse_unit(text: str, filename="<input>"):
    """Parse either a context or a machine, whichever the text starts with."""
    p = Parser(text, filename)
    unit = p.machine() if p.at("machine") else p.context()
    p.finish()
    return unit


# --------------------------------------------------------------- binding files


@dataclass(frozen=True)
class Binding:
    """An instantiation map from abstract carrier sets and constants."""

    abstract_context: str
    concrete_context: str
    set_bindings: dict  # name -> Expression (TypeExpr once validated)
    constant_bindings: dict  # name -> Expression
    spans: dict = None

    def __hash__(self):
        return hash((self.abstract_context, self.concrete_context))


def parse_binding(text: str, filename="<input>") -> Binding:
    p = Parser(text, filename)
    head = p.ident()
    if head.text != "instantiate":
        raise p.error("binding file must start with 'instantiate'", head)
    abstract = p.ident().text
    with_tok = p.ident()
    if with_tok.text != "with":
        raise p.error("expected 'with'", with_tok)
    concrete = p.ident().text
    sets, consts, spans = {}, {}, {}
    while p.tok.kind == "ident":
        kind = p.advance()
        if kind.text not in ("set", "const"):
            raise p.error(f"expected 'set' or 'const', found {kind.text!r}", kind)
        name = p.ident()
        p.expect(":=")
        value = p.expression()
        target = sets if kind.text == "set" else consts
        if name.text in sets or name.text in consts:
            raise p.error(f"{name.text!r} bound twice", name, code="duplicate-binding")
        target[name.text] = value
        spans[name.text] = p.span(kind, p.tokens[p.pos - 1])
    p.finish()
    return Binding(abstract, concrete, sets, consts, spans)


# ------------------------------------------------------------- pretty printing

_LEVEL_MAPLET, _LEVEL_ARROW, _LEVEL_SETOP, _LEVEL_INTER = 1, 2, 3, 4
_LEVEL_INTERVAL, _LEVEL_ADD, _LEVEL_PROD, _LEVEL_POSTFIX, _LEVEL_ATOM = 5, 6, 7, 8, 9

_BINOP_TEXT = {
    m.UNION: ("\\/", _LEVEL_SETOP), m.DIFF: ("\\", _LEVEL_SETOP),
    m.OVERRIDE: ("<+", _LEVEL_SETOP), m.DOMSUB: ("<<|", _LEVEL_SETOP),
    m.INTER: ("/\\", _LEVEL_INTER), m.PLUS: ("+", _LEVEL_ADD),
    m.MINUS: ("-", _LEVEL_ADD), m.CPROD: ("**", _LEVEL_PROD),
}
_ARROW_TEXT = {v: k for k, v in _ARROWS.items()}
_UNARY_TEXT = {m.POW: "POW", m.DOM: "dom", m.RAN: "ran"}


def _level(e) -> int:
    if isinstance(e, m.Maplet):
        return _LEVEL_MAPLET
    if isinstance(e, m.FunctionSpace):
        return _LEVEL_ARROW
    if isinstance(e, m.BinaryOp):
        if e.op == m.IMAGE:
            return _LEVEL_POSTFIX
        return _BINOP_TEXT[e.op][1]
    if isinstance(e, m.Interval):
        return _LEVEL_INTERVAL
    if isinstance(e, m.FunctionApp):
        return _LEVEL_POSTFIX
    if isinstance(e, m.IntegerLiteral) and e.value < 0:
        return _LEVEL_ADD
    return _LEVEL_ATOM


def _wrap(e, min_level) -> str:
    text = show_expr(e)
    return f"({text})" if _level(e) < min_level else text


def show_expr(e: m.Expression) -> str:
    if isinstance(e, m.IntegerLiteral):
        return str(e.value)
    if isinstance(e, m.Identifier):
        return e.name
    if isinstance(e, m.BoolLiteral):
        return "TRUE" if e.value else "FALSE"
    if isinstance(e, m.BuiltinSet):
        return e.which
    if isinstance(e, m.EmptySet):
        return "{}"
    if isinstance(e, m.Maplet):
        return f"{_wrap(e.left, _LEVEL_MAPLET)} |-> {_wrap(e.right, _LEVEL_MAPLET + 1)}"
    if isinstance(e, m.FunctionSpace):
        return f"{_wrap(e.domain, _LEVEL_ARROW + 1)} {_ARROW_TEXT[e.kind]} {_wrap(e.codomain, _LEVEL_ARROW)}"
    if isinstance(e, m.Interval):
        return f"{_wrap(e.lo, _LEVEL_INTERVAL + 1)} .. {_wrap(e.hi, _LEVEL_INTERVAL + 1)}"
    if isinstance(e, m.BinaryOp):
        if e.op == m.IMAGE:
            return f"{_wrap(e.left, _LEVEL_POSTFIX)}[{show_expr(e.right)}]"
        text, level = _BINOP_TEXT[e.op]
        return f"{_wrap(e.left, level)} {text} {_wrap(e.right, level + 1)}"
    if isinstance(e, m.UnaryOp):
        return f"{_UNARY_TEXT[e.op]}({show_expr(e.operand)})"
    if isinstance(e, m.FunctionApp):
        return f"{_wrap(e.fn, _LEVEL_POSTFIX)}({show_expr(e.arg)})"
    if isinstance(e, m.SetExtension):
        return "{" + ", ".join(show_expr(x) for x in e.members) + "}"
    if isinstance(e, m.Comprehension):
        if e.body_first:
            return "{" + f"{show_expr(e.body)} | {show_pred(e.constraint)}" + "}"
        return "{" + f"{', '.join(e.bound_vars)} . {show_pred(e.constraint)} | {show_expr(e.body)}" + "}"
    raise TypeError(f"cannot print {e!r}")


# Predicate levels: 1 implication, 2 or, 3 and, 4 not/quantifier, 5 atom.
def _plevel(p) -> int:
    if isinstance(p, m.Implies):
        return 1
    if isinstance(p, m.Or):
        return 2
    if isinstance(p, m.And):
        return 3
    if isinstance(p, (m.Not, m.ForAll, m.Exists)):
        return 4
    return 5


def _pwrap(p, min_level) -> str:
    text = show_pred(p)
    return f"({text})" if _plevel(p) < min_level else text


def _trailing_binder(p) -> bool:
    """True if printing ``p`` ends inside a quantifier body."""
    while True:
        if isinstance(p, (m.ForAll, m.Exists)):
            return True
        if isinstance(p, (m.And, m.Or, m.Implies)):
            p = p.right
        elif isinstance(p, m.Not):
            p = p.operand
        else:
            return False


def _left_operand(p, level) -> str:
    # A quantifier on the left would swallow the operator that follows it.
    if _trailing_binder(p):
        return f"({show_pred(p)})"
    return _pwrap(p, level)


def show_pred(p: m.Predicate) -> str:
    if isinstance(p, m.Truth):
        return "btrue"
    if isinstance(p, m.Falsity):
        return "bfalse"
    if isinstance(p, m.Equal):
        return f"{show_expr(p.left)} = {show_expr(p.right)}"
    if isinstance(p, m.NotEqual):
        return f"{show_expr(p.left)} /= {show_expr(p.right)}"
    if isinstance(p, m.Compare):
        return f"{show_expr(p.left)} {p.op} {show_expr(p.right)}"
    if isinstance(p, m.Member):
        return f"{show_expr(p.elem)} : {show_expr(p.set)}"
    if isinstance(p, m.NotMember):
        return f"{show_expr(p.elem)} /: {show_expr(p.set)}"
    if isinstance(p, m.Subset):
        return f"{show_expr(p.left)} <: {show_expr(p.right)}"
    if isinstance(p, m.FunctionClass):
        space = m.FunctionSpace(p.kind, p.domain, p.codomain)
        return f"{show_expr(p.fn)} : {show_expr(space)}"
    if isinstance(p, m.And):
        return f"{_left_operand(p.left, 3)} & {_pwrap(p.right, 4)}"
    if isinstance(p, m.Or):
        return f"{_left_operand(p.left, 2)} or {_pwrap(p.right, 3)}"
    if isinstance(p, m.Implies):
        return f"{_left_operand(p.left, 2)} => {_pwrap(p.right, 1)}"
    if isinstance(p, m.Not):
        return f"not {_pwrap(p.operand, 4)}"
    if isinstance(p, m.ForAll):
        return f"!{', '.join(p.bound_vars)} . {show_pred(p.body)}"
    if isinstance(p, m.Exists):
        return f"#{', '.join(p.bound_vars)} . {show_pred(p.body)}"
    raise TypeError(f"cannot print {p!r}")


def show_type(t: m.TypeExpr) -> str:
    return show_expr(m.type_to_expr(t))


def _labelled(items, indent="  ") -> list[str]:
    return [f"{indent}{label}: {show_pred(pred)}" for label, pred in items]


def pretty_print(unit) -> str:
    """Render a context, machine or binding in the surface syntax."""
    if isinstance(unit, m.ContextDef):
        lines = [f"context {unit.name}"]
        if unit.extends:
            lines.append("extends " + " ".join(unit.extends))
        if unit.carrier_sets:
            lines.append("sets " + " ".join(unit.carrier_sets))
        if unit.constants:
            lines.append("constants " + " ".join(unit.constants))
        if unit.axioms:
            lines.append("axioms")
            lines += _labelled(unit.axioms)
        if unit.theorems:
            lines.append("theorems")
            lines += _labelled(unit.theorems)
        lines.append("end")
        return "\n".join(lines) + "\n"
    if isinstance(unit, m.MachineDef):
        lines = [f"machine {unit.name}"]
        if unit.sees:
            lines.append("sees " + " ".join(unit.sees))
        if unit.variables:
            lines.append("variables " + " ".join(unit.variables))
        if unit.invariants:
            lines.append("invariants")
            lines += _labelled(unit.invariants)
        events = ([unit.initialisation] if unit.initialisation else []) + list(unit.events)
        if events:
            lines.append("events")
        for evt in events:
            lines.append(f"  {evt.name}")
            if evt.parameters:
                lines.append("  any " + " ".join(evt.parameters))
            if evt.guards:
                lines.append("  where")
                lines += _labelled(evt.guards, "    ")
            if evt.actions:
                lines.append("  then")
                for act in evt.actions:
                    target = act.variable if act.index is None else f"{act.variable}({show_expr(act.index)})"
                    lines.append(f"    {target} := {show_expr(act.value)}")
            lines.append("  end")
        lines.append("end")
        return "\n".join(lines) + "\n"
    if isinstance(unit, Binding):
        lines = [f"instantiate {unit.abstract_context} with {unit.concrete_context}"]
        for name, value in unit.set_bindings.items():
            text = show_type(value) if isinstance(value, m.TypeExpr) else show_expr(value)
            lines.append(f"set {name} := {text}")
        for name, value in unit.constant_bindings.items():
            lines.append(f"const {name} := {show_expr(value)}")
        return "\n".join(lines) + "\n"
    if isinstance(unit, m.Predicate):
        return show_pred(unit)
    if isinstance(unit, m.Expression):
        return show_expr(unit)
    if isinstance(unit, m.TypeExpr):
        return show_type(unit)
    raise TypeError(f"cannot print {unit!r}")
