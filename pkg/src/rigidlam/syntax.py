"""Concrete syntax for terms.

Grammar:

    term ::= '\\' ident+ '.' term        abstraction (also spelled with a lambda)
           | 'fix' ident '.' term        regular recursion binder
           | app
    app  ::= atom+                       application, left associative
    atom ::= ident | '(' term ')'

``fix X. e`` denotes the unique regular tree equal to its own unfolding;
``X`` occurrences refer back to the whole ``fix`` body.  Binders shadow
inner occurrences in the usual way.
"""

from __future__ import annotations

import itertools
import re

from .terms import Term, UnguardedFix, UnrepresentableTerm, app, fix, lam, var

_TOKEN = re.compile(r"\s*(\\|λ|\.|\(|\)|[A-Za-z_][A-Za-z0-9_']*)")


class ParseError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            if text[i:].strip():
                raise ParseError(f"unexpected character {text[i:].strip()[0]!r}")
            break
        tokens.append(m.group(1))
        i = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def ident(self) -> str:
        tok = self.take()
        if tok in ("\\", "λ", ".", "(", ")", "fix"):
            raise ParseError(f"expected identifier, got {tok!r}")
        return tok

    def term(self):
        tok = self.peek()
        if tok in ("\\", "λ"):
            self.take()
            names = [self.ident()]
            while self.peek() not in (".", None):
                names.append(self.ident())
            self.expect(".")
            body = self.term()
            for name in reversed(names):
                body = ("lam", name, body)
            return body
        if tok == "fix":
            self.take()
            name = self.ident()
            self.expect(".")
            return ("fix", name, self.term())
        return self.application()

    def application(self):
        t = self.atom()
        while True:
            tok = self.peek()
            if tok is None or tok in (")", ".", "\\", "λ", "fix"):
                if tok in ("\\", "λ", "fix"):
                    raise ParseError(
                        "an abstraction used as an argument needs parentheses"
                    )
                return t
            t = ("app", t, self.atom())

    def atom(self):
        tok = self.take()
        if tok == "(":
            t = self.term()
            self.expect(")")
            return t
        if tok in ("\\", "λ", ".", ")", "fix"):
            raise ParseError(f"unexpected {tok!r}")
        return ("var", tok)


def parse_term(text: str) -> Term:
    parser = _Parser(_tokenize(text))
    ast = parser.term()
    if parser.peek() is not None:
        raise ParseError(f"trailing input at {parser.peek()!r}")

    fresh = map("#{}".format, itertools.count())

    def compile_(node, env: dict[str, str]) -> Term:
        kind = node[0]
        if kind == "var":
            return var(env.get(node[1], node[1]))
        if kind == "app":
            return app(compile_(node[1], env), compile_(node[2], env))
        name = next(fresh)
        body = compile_(node[2], {**env, node[1]: name})
        try:
            return lam(name, body) if kind == "lam" else fix(name, body)
        except (UnguardedFix, UnrepresentableTerm) as exc:
            raise type(exc)(str(exc).replace(repr(name), repr(node[1])).replace(name, node[1])) from None

    return compile_(ast, {})


def _name_pool(used: set[str], candidates: list[str], prefix: str):
    for name in candidates:
        if name not in used:
            used.add(name)
            yield name
    for i in itertools.count(1):
        name = f"{prefix}{i}"
        if name not in used:
            used.add(name)
            yield name


def print_term(t: Term) -> str:
    """Render with fresh binder names; cycles come out as ``fix`` binders."""
    used = set(t.free_names())
    binder_names = _name_pool(used, list("xyzwvu"), "x")
    fix_names = _name_pool(used, list("XYZWVU"), "X")

    onpath: dict[int, list[str | None]] = {}

    def pp(n: int, binders: list[str]) -> tuple[str, str]:
        # returns (text, shape) with shape in {'atom', 'app', 'lam'}
        if n in onpath:
            slot = onpath[n]
            if slot[0] is None:
                slot[0] = next(fix_names)
            return slot[0], "atom"
        node = t.nodes[n]
        kind = node[0]
        if kind == "free":
            return node[1], "atom"
        if kind == "bvar":
            j = node[1]
            if j < len(binders):
                return binders[-1 - j], "atom"
            return f"_{j - len(binders)}", "atom"
        slot: list[str | None] = [None]
        onpath[n] = slot
        try:
            if kind == "abs":
                name = next(binder_names)
                body, _ = pp(node[1], binders + [name])
                text, shape = f"\\{name}. {body}", "lam"
            else:
                left, ls = pp(node[1], binders)
                right, rs = pp(node[2], binders)
                if ls == "lam":
                    left = f"({left})"
                if rs != "atom":
                    right = f"({right})"
                text, shape = f"{left} {right}", "app"
        finally:
            del onpath[n]
        if slot[0] is not None:
            text, shape = f"fix {slot[0]}. {text}", "lam"
        return text, shape

    text, _ = pp(0, [])
    return text
