"""Tokenizer, recursive-descent parser and canonical printer for the DSL.

Grammar (``;`` terminates every declaration, ``#`` starts a comment)::

    program    := (decl ";")*
    decl       := "space" ID "=" spaceExpr
                | "map" ID ":" spaceRef "->" spaceRef "=" "(" expr ("," expr)* ")"
                | "bundle" ID "=" call
                | "connection" ID "=" call
    spaceExpr  := "R" "(" INT ")"
                | "submanifold" "(" INT ")" "{" "constraint" ":" expr ("," expr)* ";"
                                               "retraction" ":" ID ";" "}"
    spaceRef   := "R" "(" INT ")" | "T" "(" spaceRef ")" | ID
    call       := ID "(" [arg ("," arg)*] ")" ["{" (ID "=" "(" expr ("," expr)* ")" ";")* "}"]
    arg        := INT | ID | call
    expr       := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | atom
    atom       := NUMBER | "x" "[" INT [":" INT] "]" | FUNC "(" expr ")"
                | "pow" "(" expr "," ["-"] INT ")" | "dot" "(" expr "," expr ")"
                | "vec" "(" expr ("," expr)* ")" | "(" expr ")"
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..errors import ParseError
from .expr import UNARY_OPS, Binary, Dot, Expr, Num, Pow, Slice, Unary, Var, Vec


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, ID, OP, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)"
    r"|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>->|[()\[\]{},;:=+\-*/])"
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "num":
            tokens.append(Token("NUM", chunk, line, col))
        elif kind == "id":
            tokens.append(Token("ID", chunk, line, col))
        elif kind == "op":
            tokens.append(Token("OP", chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# -- declaration AST ---------------------------------------------------------

@dataclass(frozen=True)
class SpaceRef:
    kind: str  # "R", "T" or "id"
    value: Union[int, "SpaceRef", str]


@dataclass(frozen=True)
class Euclidean:
    dim: int


@dataclass(frozen=True)
class Submanifold:
    ambient: int
    constraints: tuple
    retraction: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Name:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple  # of int | Name | Call
    options: tuple = ()  # of (key, tuple of Expr)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SpaceDecl:
    name: str
    body: Union[Euclidean, Submanifold]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MapDecl:
    name: str
    source: SpaceRef
    target: SpaceRef
    exprs: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BundleDecl:
    name: str
    body: Call
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConnectionDecl:
    name: str
    body: Call
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ProgramAST:
    decls: tuple


Decl = Union[SpaceDecl, MapDecl, BundleDecl, ConnectionDecl]


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, expected, message: str | None = None):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(message or f"unexpected {found}", t.line, t.col, tuple(expected))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "ID") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail([repr(text)])
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ID":
            self.fail([what])
        t = self.tok
        self.i += 1
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "NUM" or not t.text.isdigit():
            self.fail(["integer"])
        self.i += 1
        return int(t.text)

    # program -----------------------------------------------------------------
    def program(self) -> ProgramAST:
        decls = []
        while self.tok.kind != "EOF":
            decls.append(self.decl())
            self.expect(";")
        return ProgramAST(tuple(decls))

    def decl(self) -> Decl:
        t = self.tok
        keywords = ["'space'", "'map'", "'bundle'", "'connection'"]
        if t.kind != "ID" or t.text not in ("space", "map", "bundle", "connection"):
            self.fail(keywords)
        self.i += 1
        name = self.ident().text
        if t.text == "space":
            self.expect("=")
            return SpaceDecl(name, self.space_expr(), t.line, t.col)
        if t.text == "map":
            self.expect(":")
            src = self.space_ref()
            self.expect("->")
            dst = self.space_ref()
            self.expect("=")
            return MapDecl(name, src, dst, self.expr_tuple(), t.line, t.col)
        self.expect("=")
        body = self.call()
        cls = BundleDecl if t.text == "bundle" else ConnectionDecl
        return cls(name, body, t.line, t.col)

    def space_expr(self):
        t = self.tok
        if self.at("R"):
            self.i += 1
            self.expect("(")
            n = self.integer()
            self.expect(")")
            return Euclidean(n)
        if self.at("submanifold"):
            self.i += 1
            self.expect("(")
            n = self.integer()
            self.expect(")")
            self.expect("{")
            self.expect("constraint")
            self.expect(":")
            cons = [self.expr()]
            while self.at(","):
                self.i += 1
                cons.append(self.expr())
            self.expect(";")
            self.expect("retraction")
            self.expect(":")
            ret = self.ident("map name").text
            self.expect(";")
            self.expect("}")
            return Submanifold(n, tuple(cons), ret, t.line, t.col)
        self.fail(["'R'", "'submanifold'"])

    def space_ref(self) -> SpaceRef:
        if self.at("R") and self.tokens[self.i + 1].text == "(":
            self.i += 2
            n = self.integer()
            self.expect(")")
            return SpaceRef("R", n)
        if self.at("T") and self.tokens[self.i + 1].text == "(":
            self.i += 2
            inner = self.space_ref()
            self.expect(")")
            return SpaceRef("T", inner)
        if self.tok.kind == "ID":
            return SpaceRef("id", self.ident().text)
        self.fail(["'R'", "'T'", "space name"])

    def call(self) -> Call:
        t = self.ident("constructor")
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.arg())
            while self.at(","):
                self.i += 1
                args.append(self.arg())
        self.expect(")")
        options = []
        if self.at("{"):
            self.i += 1
            while not self.at("}"):
                if self.tok.kind != "ID":
                    self.fail(["option name", "'}'"])
                key = self.ident().text
                self.expect("=")
                options.append((key, self.expr_tuple()))
                self.expect(";")
            self.expect("}")
        return Call(t.text, tuple(args), tuple(options), t.line, t.col)

    def arg(self):
        t = self.tok
        if t.kind == "NUM" and t.text.isdigit():
            self.i += 1
            return int(t.text)
        if t.kind == "ID":
            if self.tokens[self.i + 1].text == "(":
                return self.call()
            self.i += 1
            return Name(t.text, t.line, t.col)
        self.fail(["integer", "identifier", "constructor"])

    def expr_tuple(self) -> tuple:
        self.expect("(")
        items = [self.expr()]
        while self.at(","):
            self.i += 1
            items.append(self.expr())
        self.expect(")")
        return tuple(items)

    # expressions -------------------------------------------------------------
    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "OP" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "OP" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            self.i += 1
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Unary("neg", arg)
        return self.atom()

    _ATOM_EXPECTED = ("number", "'x'", "'('", "'-'", "'pow'", "'dot'", "'vec'") + tuple(
        f"'{f}'" for f in UNARY_OPS if f != "neg")

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.i += 1
            return Num(float(t.text))
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ID":
            if t.text == "x":
                self.i += 1
                self.expect("[")
                a = self.integer()
                if self.at(":"):
                    self.i += 1
                    b = self.integer()
                    self.expect("]")
                    if b <= a:
                        raise ParseError("empty slice", t.line, t.col)
                    return Slice(a, b)
                self.expect("]")
                return Var(a)
            if t.text in UNARY_OPS and t.text != "neg":
                self.i += 1
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Unary(t.text, e)
            if t.text == "pow":
                self.i += 1
                self.expect("(")
                base = self.expr()
                self.expect(",")
                sign = 1
                if self.at("-"):
                    self.i += 1
                    sign = -1
                k = self.integer()
                self.expect(")")
                return Pow(base, sign * k)
            if t.text == "dot":
                self.i += 1
                self.expect("(")
                a = self.expr()
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return Dot(a, b)
            if t.text == "vec":
                self.i += 1
                self.expect("(")
                items = [self.expr()]
                while self.at(","):
                    self.i += 1
                    items.append(self.expr())
                self.expect(")")
                return Vec(tuple(items))
        self.fail(self._ATOM_EXPECTED)


def parse_program(text: str) -> ProgramAST:
    return _Parser(text).program()


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.fail(["end of input"])
    return e


# -- printing -----------------------------------------------------------------

def expr_source(e: Expr) -> str:
    if isinstance(e, Num):
        s = repr(float(e.value))
        return f"({s})" if s.startswith("-") else s
    if isinstance(e, Var):
        return f"x[{e.index}]"
    if isinstance(e, Slice):
        return f"x[{e.start}:{e.stop}]"
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{expr_source(e.arg)})"
        return f"{e.op}({expr_source(e.arg)})"
    if isinstance(e, Binary):
        return f"({expr_source(e.left)} {e.op} {expr_source(e.right)})"
    if isinstance(e, Pow):
        return f"pow({expr_source(e.base)}, {e.exponent})"
    if isinstance(e, Vec):
        return "vec(" + ", ".join(expr_source(i) for i in e.items) + ")"
    if isinstance(e, Dot):
        return f"dot({expr_source(e.left)}, {expr_source(e.right)})"
    raise TypeError(e)


def _ref_source(r: SpaceRef) -> str:
    if r.kind == "R":
        return f"R({r.value})"
    if r.kind == "T":
        return f"T({_ref_source(r.value)})"
    return str(r.value)


def _arg_source(a) -> str:
    if isinstance(a, int):
        return str(a)
    if isinstance(a, Name):
        return a.name
    return _call_source(a)


def _call_source(c: Call) -> str:
    s = f"{c.func}(" + ", ".join(_arg_source(a) for a in c.args) + ")"
    if c.options:
        opts = " ".join(f"{k} = ({', '.join(expr_source(e) for e in v)});" for k, v in c.options)
        s += " { " + opts + " }"
    return s


def decl_source(d: Decl) -> str:
    if isinstance(d, SpaceDecl):
        b = d.body
        if isinstance(b, Euclidean):
            return f"space {d.name} = R({b.dim})"
        cons = ", ".join(expr_source(e) for e in b.constraints)
        return (f"space {d.name} = submanifold({b.ambient}) "
                f"{{ constraint: {cons}; retraction: {b.retraction}; }}")
    if isinstance(d, MapDecl):
        body = ", ".join(expr_source(e) for e in d.exprs)
        return f"map {d.name} : {_ref_source(d.source)} -> {_ref_source(d.target)} = ({body})"
    kw = "bundle" if isinstance(d, BundleDecl) else "connection"
    return f"{kw} {d.name} = {_call_source(d.body)}"


def program_source(p: ProgramAST) -> str:
    """Canonical text; parsing it gives back an equal AST."""
    return "".join(decl_source(d) + ";\n" for d in p.decls)
