"""Concrete syntax: lexer, recursive-descent parser and canonical printer.

Programs (``.cpcf``)::

    fun x:Int => e          mu (f:Int -> Int). e        if c then a else b
    mon^l(C, e)             err^l                       let x = e1 in e2
    e1 e2                   e1 + e2   (* mod > + - > = < <= > >= > and or)

Contracts::

    pred[name]{y := 47}(fun x:Int => x > y)       x:C1 -> C2      (C)

The optional ``{...}`` block is a closing substitution; it only appears in
printed runtime terms.  Rule files (``.impl``) hold lines of the form
``rule <pred> implies <pred> when <condition>``.  ``--`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .ast import (
    BOOL, INT, Abs, App, Arrow, Base, Closing, Const, DepFun, Err, Fix, If, LDepFun,
    LPred, MonC, MonE, Node, Op, OpTag, Pred, Stack, Type, Var,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Iterable[str] = (),
                 origin: str = "<stdin>") -> None:
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        self.origin = origin
        exp = ""
        if self.expected:
            exp = " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(f"{origin}:{line}:{col}: {message}{exp}")


class ArityError(Exception):
    """A rule condition mentions a variable the named predicate does not bind."""


@dataclass(frozen=True)
class SourceText:
    text: str
    origin: str = "<stdin>"

    @classmethod
    def from_file(cls, path) -> "SourceText":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read(), str(path))


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = {
    "fun", "mu", "if", "then", "else", "mon", "err", "let", "in", "pred", "true",
    "false", "and", "or", "mod", "Int", "Bool", "rule", "implies", "when",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$']*)
  | (?P<sym>=>|->|<=|>=|:=|[()\[\]{}:.,^=<>+\-*;@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "sym", "eof"
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(src: SourceText) -> list[Token]:
    text = src.text
    pos, line, line_start = 0, 1, 0
    out: list[Token] = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1,
                             origin=src.origin)
        kind = m.lastgroup
        col = pos - line_start + 1
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            out.append(Token("kw" if tok in KEYWORDS else "ident", tok, line, col))
        elif kind in ("int", "sym"):
            out.append(Token(kind, tok, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# Parser

_LEVELS = (
    ("and", "or"),
    ("=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "mod"),
)


class Parser:
    def __init__(self, src: SourceText, *, runtime: bool = False) -> None:
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.runtime = runtime
        self.scope: list[tuple[str, Optional[Type]]] = []

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text in texts

    def error(self, message: str, expected: Iterable[str] = ()) -> ParseError:
        t = self.tok
        return ParseError(f"{message}, found {t.describe()}", t.line, t.col, expected, self.src.origin)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error("unexpected token", {text})
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error("unexpected token", {"identifier"})
        t = self.tok
        self.i += 1
        return t.text

    def label(self) -> str:
        if self.tok.kind not in ("ident", "int"):
            raise self.error("unexpected token", {"label"})
        t = self.tok
        self.i += 1
        return t.text

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error("trailing input", {"end of input"})

    # -- scope tracking (for let-type inference) ---------------------------
    def _env(self):
        from .types import TypeEnv

        return TypeEnv({n: t for n, t in self.scope if t is not None})

    def _bind(self, name: str, t: Optional[Type]):
        self.scope.append((name, t))

    def _unbind(self):
        self.scope.pop()

    # -- types ---------------------------------------------------------------
    def type_(self) -> Type:
        left = self.type_atom()
        if self.at("->"):
            self.i += 1
            return Arrow(left, self.type_())
        return left

    def type_atom(self) -> Type:
        if self.at("Int"):
            self.i += 1
            return INT
        if self.at("Bool"):
            self.i += 1
            return BOOL
        if self.at("("):
            self.i += 1
            t = self.type_()
            self.expect(")")
            return t
        raise self.error("expected a type", {"Int", "Bool", "("})

    # -- terms ---------------------------------------------------------------
    def term(self) -> Node:
        if self.at("fun"):
            self.i += 1
            x = self.ident()
            self.expect(":")
            t = self.type_()
            self.expect("=>")
            self._bind(x, t)
            body = self.term()
            self._unbind()
            return Abs(x, t, body)
        if self.at("mu"):
            self.i += 1
            self.expect("(")
            x = self.ident()
            self.expect(":")
            t = self.type_()
            self.expect(")")
            self.expect(".")
            self._bind(x, t)
            body = self.term()
            self._unbind()
            return Fix(x, t, body)
        if self.at("if"):
            self.i += 1
            c = self.term()
            self.expect("then")
            a = self.term()
            self.expect("else")
            b = self.term()
            return If(c, a, b)
        if self.at("let"):
            return self.let()
        return self.binop(0)

    def let(self) -> Node:
        start = self.tok
        self.i += 1
        x = self.ident()
        annot: Optional[Type] = None
        if self.at(":"):
            self.i += 1
            annot = self.type_()
        self.expect("=")
        rhs = self.term()
        self.expect("in")
        if annot is None:
            from .types import BOTTOM, TypeCheckError, type_of_term

            try:
                annot = type_of_term(self._env(), rhs)
            except TypeCheckError as exc:
                raise ParseError(f"cannot infer the type of let-bound {x}: {exc}",
                                 start.line, start.col, (), self.src.origin) from exc
            if annot is BOTTOM:
                raise ParseError(f"cannot infer the type of let-bound {x}",
                                 start.line, start.col, (), self.src.origin)
        self._bind(x, annot)
        body = self.term()
        self._unbind()
        return App(Abs(x, annot, body), rhs)

    def binop(self, level: int) -> Node:
        if level == len(_LEVELS):
            return self.application()
        left = self.binop(level + 1)
        while self.at(*_LEVELS[level]):
            sym = self.tok.text
            self.i += 1
            right = self.binop(level + 1)
            left = Op(OpTag.from_symbol(sym), left, right)
        return left

    _ATOM_START = {"(", "mon", "err", "true", "false"}

    def starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("int", "ident") or (t.kind in ("kw", "sym") and t.text in self._ATOM_START)

    def application(self) -> Node:
        if self.at("-") and self.peek().kind == "int":
            self.i += 1
            fn: Node = Const(-int(self.tok.text))
            self.i += 1
        else:
            fn = self.atom()
        while self.starts_atom():
            fn = App(fn, self.atom())
        return fn

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text))
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self.at("true"):
            self.i += 1
            return Const(True)
        if self.at("false"):
            self.i += 1
            return Const(False)
        if self.at("("):
            self.i += 1
            e = self.term()
            self.expect(")")
            return e
        if self.at("mon"):
            self.i += 1
            if self.at("{"):
                raise self.error("labeled monitors are runtime-only and cannot appear in source")
            self.expect("^")
            lab = self.label()
            self.expect("(")
            c = self.contract()
            self.expect(",")
            e = self.term()
            self.expect(")")
            return MonC(lab, c, e)
        if self.at("err"):
            if not self.runtime:
                raise self.error("blame errors are runtime-only and cannot appear in source")
            self.i += 1
            self.expect("^")
            return Err(self.label())
        raise self.error("expected a term",
                         {"integer", "identifier", "true", "false", "(", "mon", "fun", "mu", "if", "let"})

    # -- contracts -----------------------------------------------------------
    def contract(self) -> Node:
        if self.tok.kind == "ident" and self.peek().kind == "sym" and self.peek().text == ":":
            x = self.ident()
            self.expect(":")
            dom = self.contract_atom()
            self.expect("->")
            try:
                from .types import TypeCheckError, type_of_contract

                xt = type_of_contract(self._env(), dom)
            except TypeCheckError:
                xt = None
            self._bind(x, xt)
            cod = self.contract()
            self._unbind()
            return DepFun(x, dom, cod)
        dom = self.contract_atom()
        if self.at("->"):
            # Non-dependent arrow: the binder is never referenced.
            self.i += 1
            self._bind("_", None)
            cod = self.contract()
            self._unbind()
            return DepFun("_", dom, cod)
        return dom

    def contract_atom(self) -> Node:
        if self.at("("):
            self.i += 1
            c = self.contract()
            self.expect(")")
            return c
        if self.at("pred"):
            self.i += 1
            name = None
            if self.at("["):
                self.i += 1
                name = self.ident()
                self.expect("]")
            sigma = Closing()
            if self.at("{"):
                self.i += 1
                while not self.at("}"):
                    k = self.ident()
                    self.expect(":=")
                    sigma = sigma.set(k, self.term())
                    if not self.at("}"):
                        self.expect(",")
                self.expect("}")
            self.expect("(")
            body = self.term()
            self.expect(")")
            return Pred(body, sigma, name)
        raise self.error("expected a contract", {"pred", "identifier ':'", "("})


def parse_term(src: SourceText | str, *, runtime: bool = False) -> Node:
    """Parse a program.  ``runtime=True`` also admits ``err^l`` (used for printed terms)."""
    if isinstance(src, str):
        src = SourceText(src)
    p = Parser(src, runtime=runtime)
    e = p.term()
    p.done()
    return e


def parse_contract(src: SourceText | str) -> Node:
    if isinstance(src, str):
        src = SourceText(src)
    p = Parser(src)
    c = p.contract()
    p.done()
    return c


def parse_type(src: str) -> Type:
    p = Parser(SourceText(src))
    t = p.type_()
    p.done()
    return t


def parse_pool(src: SourceText | str) -> list[Pred]:
    """A predicate pool file: a sequence of predicate contracts."""
    if isinstance(src, str):
        src = SourceText(src)
    p = Parser(src)
    out = []
    while p.tok.kind != "eof":
        c = p.contract_atom()
        if not isinstance(c, Pred):
            raise p.error("pool entries must be predicate contracts", {"pred"})
        out.append(c)
    return out


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True)
class Rule:
    left: str
    right: str
    condition: Node
    line: int = 0

    def __str__(self) -> str:
        return f"rule {self.left} implies {self.right} when {print_term(self.condition)}"


_RULE_VAR = re.compile(r"^(.+?)([12])$")


def split_rule_var(name: str) -> tuple[str, int]:
    m = _RULE_VAR.match(name)
    if m is None:
        raise ArityError(f"rule variable {name!r} must end in 1 (left predicate) or 2 (right predicate)")
    return m.group(1), int(m.group(2))


def parse_rules(src: SourceText | str, catalog: Optional[dict[str, frozenset[str]]] = None):
    """Parse an implication-rule file into a :class:`RuleSet`.

    ``catalog`` optionally maps predicate names to the variables they bind;
    when given, every condition variable is checked against it.
    """
    from .implication import RuleSet

    if isinstance(src, str):
        src = SourceText(src)
    p = Parser(src)
    rules = []
    while p.tok.kind != "eof":
        line = p.tok.line
        p.expect("rule")
        left = p.ident()
        p.expect("implies")
        right = p.ident()
        p.expect("when")
        cond = p.term()
        rule = Rule(left, right, cond, line)
        for v in sorted(cond.fv):
            split_rule_var(v)
        rules.append(rule)
    rs = RuleSet(tuple(rules))
    if catalog is not None:
        rs.check_arity(catalog)
    return rs


# ---------------------------------------------------------------------------
# Printer

_OP_LEVEL = {}
for _lvl, _syms in enumerate(_LEVELS, start=1):
    for _s in _syms:
        _OP_LEVEL[_s] = _lvl
_APP, _ATOM = 5, 6


def print_type(t: Type) -> str:
    return str(t)


def print_term(e: Node) -> str:
    out: list[str] = []
    _pr(e, 0, out)
    return "".join(out)


def _pr(e: Node, level: int, out: list[str]) -> None:
    if isinstance(e, Var):
        out.append(e.name)
    elif isinstance(e, Const):
        v = e.value
        if isinstance(v, bool):
            out.append("true" if v else "false")
        elif v < 0:
            out.append(f"({v})")
        else:
            out.append(str(v))
    elif isinstance(e, Err):
        out.append(f"err^{e.label}")
    elif isinstance(e, MonC):
        out.append(f"mon^{e.label}(")
        _pr_contract(e.contract, out)
        out.append(", ")
        _pr(e.subject, 0, out)
        out.append(")")
    elif isinstance(e, MonE):
        out.append("mon{")
        _pr_labeled(e.contract, out)
        out.append("}(")
        _pr(e.subject, 0, out)
        out.append(")")
    elif isinstance(e, Op):
        lvl = _OP_LEVEL[e.op.symbol]
        paren = level > lvl
        if paren:
            out.append("(")
        _pr(e.left, lvl, out)
        out.append(f" {e.op.symbol} ")
        _pr(e.right, lvl + 1, out)
        if paren:
            out.append(")")
    elif isinstance(e, App):
        paren = level > _APP
        if paren:
            out.append("(")
        _pr(e.fn, _APP, out)
        out.append(" ")
        _pr(e.arg, _ATOM, out)
        if paren:
            out.append(")")
    else:
        paren = level > 0
        if paren:
            out.append("(")
        if isinstance(e, Abs):
            out.append(f"fun {e.param}:{e.param_type} => ")
            _pr(e.body, 0, out)
        elif isinstance(e, Fix):
            out.append(f"mu ({e.param}:{e.param_type}). ")
            _pr(e.body, 0, out)
        elif isinstance(e, If):
            out.append("if ")
            _pr(e.cond, 0, out)
            out.append(" then ")
            _pr(e.then, 0, out)
            out.append(" else ")
            _pr(e.else_, 0, out)
        else:
            raise TypeError(f"cannot print {e!r}")
        if paren:
            out.append(")")


def _pr_sigma(sigma: Closing, out: list[str]) -> None:
    if not sigma.entries:
        return
    out.append("{")
    for i, (k, v) in enumerate(sigma.entries):
        if i:
            out.append(", ")
        out.append(f"{k} := ")
        _pr(v, 0, out)
    out.append("}")


def _pr_contract(c: Node, out: list[str], atom: bool = False) -> None:
    if isinstance(c, Pred):
        out.append("pred")
        if c.name:
            out.append(f"[{c.name}]")
        _pr_sigma(c.sigma, out)
        out.append("(")
        _pr(c.body, 0, out)
        out.append(")")
    elif isinstance(c, DepFun):
        if atom:
            out.append("(")
        out.append(f"{c.param}:")
        _pr_contract(c.domain, out, atom=True)
        out.append(" -> ")
        _pr_contract(c.codomain, out)
        if atom:
            out.append(")")
    else:
        raise TypeError(f"not a contract: {c!r}")


def _pr_labeled(c: Node, out: list[str], atom: bool = False) -> None:
    if isinstance(c, Stack):
        for p in c.preds:
            out.append(f"pred^{p.label}")
            if p.name:
                out.append(f"[{p.name}]")
            _pr_sigma(p.sigma, out)
            out.append("(")
            _pr(p.body, 0, out)
            out.append("); ")
        out.append(f"nil@{c.base}")
    elif isinstance(c, LDepFun):
        if atom:
            out.append("(")
        out.append(f"{c.param}:")
        _pr_labeled(c.domain, out, atom=True)
        out.append(" -> ")
        _pr_labeled(c.codomain, out)
        if atom:
            out.append(")")
    else:
        raise TypeError(f"not a labeled contract: {c!r}")


def print_contract(c: Node) -> str:
    out: list[str] = []
    if isinstance(c, (Stack, LDepFun)):
        _pr_labeled(c, out)
    else:
        _pr_contract(c, out)
    return "".join(out)
