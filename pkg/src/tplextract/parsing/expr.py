"""Small expression parser for the subset of Groovy/Kotlin used in build scripts.

Covers literals, GString/Kotlin templates, dotted property paths,
subscripts, calls (named and positional arguments), list/map literals,
Kotlin ``a to b`` pairs, ``+`` concatenation and the elvis operator.
Anything else parses to :class:`Unknown`, never an exception.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .lexer import Dialect, Tok, Token, tokenize

MAX_DEPTH = 60


class Node:
    pass


@dataclass(frozen=True)
class Str(Node):
    parts: tuple  # str or Node
    quoted: str = '"'

    @property
    def literal(self) -> Optional[str]:
        if all(isinstance(p, str) for p in self.parts):
            return "".join(self.parts)
        return None


@dataclass(frozen=True)
class Num(Node):
    text: str


@dataclass(frozen=True)
class Name(Node):
    name: str


@dataclass(frozen=True)
class Attr(Node):
    obj: Node
    name: str


@dataclass(frozen=True)
class Index(Node):
    obj: Node
    key: Node


@dataclass(frozen=True)
class Arg:
    name: Optional[str]
    value: Node


@dataclass(frozen=True)
class Call(Node):
    func: Node
    args: tuple  # of Arg

    def positional(self) -> list[Node]:
        return [a.value for a in self.args if a.name is None and not isinstance(a.value, Closure)]

    def named(self) -> dict:
        return {a.name: a.value for a in self.args if a.name is not None}


@dataclass(frozen=True)
class ListLit(Node):
    items: tuple


@dataclass(frozen=True)
class MapLit(Node):
    entries: tuple  # of (key str, Node)


@dataclass(frozen=True)
class Pair(Node):
    first: Node
    second: Node


@dataclass(frozen=True)
class Concat(Node):
    items: tuple


@dataclass(frozen=True)
class Elvis(Node):
    primary: Node
    fallback: Node


@dataclass(frozen=True)
class Closure(Node):
    block: object


@dataclass(frozen=True)
class Unknown(Node):
    text: str


def dotted(node: Node) -> Optional[tuple]:
    """Dotted path of a property chain, or ``None`` if ``node`` is not one.

    ``a.b["c"].get()`` gives ``("a", "b", "c")``.
    """
    segs = []
    depth = 0
    while depth < MAX_DEPTH:
        depth += 1
        if isinstance(node, Name):
            segs.append(node.name)
            return tuple(reversed(segs))
        if isinstance(node, Attr):
            segs.append(node.name)
            node = node.obj
        elif isinstance(node, Index):
            key = node.key
            if isinstance(key, Str) and key.literal is not None:
                segs.append(key.literal)
            elif isinstance(key, Num):
                segs.append(key.text)
            else:
                return None
            node = node.obj
        elif isinstance(node, Call) and not node.args and isinstance(node.func, Attr) and \
                node.func.name in ("get", "toString", "trim", "getOrNull"):
            node = node.func.obj
        else:
            return None
    return None


def call_name(node: Node) -> Optional[str]:
    """Last path segment of a call target (``project`` for ``rootProject.project(...)``)."""
    if isinstance(node, Call):
        path = dotted(node.func)
        if path:
            return path[-1]
    return None


class _Parser:
    def __init__(self, tokens: Sequence[Token], dialect: Dialect):
        self.toks = [t for t in tokens if t.kind is not Tok.NEWLINE]
        self.i = 0
        self.dialect = dialect
        self.depth = 0

    # helpers
    def peek(self, k: int = 0) -> Optional[Token]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at_op(self, *ops: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind is Tok.OP and t.text in ops

    def at_ident(self, *names: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind is Tok.IDENT and (not names or t.text in names)

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def done(self) -> bool:
        return self.i >= len(self.toks)

    # grammar
    def expr(self) -> Node:
        self.depth += 1
        try:
            if self.depth > MAX_DEPTH:
                raise _Bail()
            left = self.concat()
            while self.at_op("?:"):
                self.take()
                left = Elvis(left, self.concat())
            return left
        finally:
            self.depth -= 1

    def concat(self) -> Node:
        items = [self.unary()]
        while True:
            if self.at_op("+"):
                self.take()
                items.append(self.unary())
            elif self.at_ident("to") and self.dialect is Dialect.KTS:
                self.take()
                return Pair(items[0] if len(items) == 1 else Concat(tuple(items)), self.concat())
            elif self.at_ident("as"):
                # Groovy/Kotlin casts: `x as String`
                self.take()
                if self.at_ident():
                    self.take()
            else:
                break
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def unary(self) -> Node:
        node = self.primary()
        while True:
            if self.at_op(".", "?.", "*."):
                self.take()
                t = self.peek()
                if t is None or t.kind not in (Tok.IDENT, Tok.STRING):
                    raise _Bail()
                self.take()
                name = t.text if t.kind is Tok.IDENT else _string_node(t, self.dialect).literal
                if name is None:
                    raise _Bail()
                node = Attr(node, name)
            elif self.at_op("!") and self.at_op("!", k=1):
                self.take()
                self.take()
            elif self.at_op("["):
                self.take()
                key = self.expr()
                self.expect("]")
                node = Index(node, key)
            elif self.at_op("("):
                self.take()
                args = self.args(")")
                if self.at_op("{}"):
                    args = args + (Arg(None, Closure(self.take().parts[0])),)
                node = Call(node, args)
            elif self.at_op("{}") and isinstance(node, (Name, Attr)):
                node = Call(node, (Arg(None, Closure(self.take().parts[0])),))
            else:
                return node

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            raise _Bail()
        if t.kind is Tok.STRING:
            self.take()
            return _string_node(t, self.dialect)
        if t.kind is Tok.NUMBER:
            self.take()
            return Num(t.text)
        if t.kind is Tok.IDENT:
            self.take()
            if t.text == "new" and self.at_ident():
                # `new File(...)` / `new java.io.File(...)`
                name = self.take().text
                while self.at_op(".") and self.at_ident(k=1):
                    self.take()
                    name = self.take().text
                return Name(name)
            return Name(t.text)
        if t.kind is Tok.OP:
            if t.text == "(":
                self.take()
                inner = self.expr()
                self.expect(")")
                return inner
            if t.text == "[":
                self.take()
                return self.collection()
            if t.text == "{}":
                self.take()
                return Closure(t.parts[0])
            if t.text == "-" and self.peek(1) is not None and self.peek(1).kind is Tok.NUMBER:
                self.take()
                return Num("-" + self.take().text)
        raise _Bail()

    def expect(self, op: str):
        if not self.at_op(op):
            raise _Bail()
        self.take()

    def _arg_name(self) -> Optional[str]:
        t = self.peek()
        if t is None:
            return None
        if t.kind in (Tok.IDENT, Tok.STRING, Tok.NUMBER):
            nxt = self.peek(1)
            if nxt is not None and nxt.kind is Tok.OP and (
                    nxt.text == ":" or (nxt.text == "=" and t.kind is Tok.IDENT)):
                if t.kind is Tok.STRING:
                    name = _string_node(t, self.dialect).literal
                    if name is None:
                        return None
                else:
                    name = t.text
                self.i += 2
                return name
        return None

    def args(self, close: Optional[str]) -> tuple:
        out = []
        while True:
            if close and self.at_op(close):
                self.take()
                return tuple(out)
            if self.done():
                if close:
                    raise _Bail()
                return tuple(out)
            name = self._arg_name()
            out.append(Arg(name, self.expr()))
            if self.at_op(","):
                self.take()
                continue
            if close and self.at_op(close):
                self.take()
                return tuple(out)
            if not close and self.done():
                return tuple(out)
            if not close and self.at_op("{}"):
                out.append(Arg(None, Closure(self.take().parts[0])))
                continue
            raise _Bail()

    def collection(self) -> Node:
        if self.at_op(":") and self.at_op("]", k=1):
            self.i += 2
            return MapLit(())
        if self.at_op("]"):
            self.take()
            return ListLit(())
        items = []
        entries = []
        while True:
            name = self._map_key()
            if name is not None:
                entries.append((name, self.expr()))
            else:
                items.append(self.expr())
            if self.at_op(","):
                self.take()
                if self.at_op("]"):
                    self.take()
                    break
                continue
            self.expect("]")
            break
        if entries and items:
            raise _Bail()
        return MapLit(tuple(entries)) if entries else ListLit(tuple(items))

    def _map_key(self) -> Optional[str]:
        t, nxt = self.peek(), self.peek(1)
        if t is None or nxt is None or nxt.kind is not Tok.OP or nxt.text != ":":
            return None
        if t.kind is Tok.IDENT or t.kind is Tok.NUMBER:
            self.i += 2
            return t.text
        if t.kind is Tok.STRING:
            name = _string_node(t, self.dialect).literal
            if name is None:
                return None
            self.i += 2
            return name
        if t.kind is Tok.OP and t.text == "(":
            return None
        return None


class _Bail(Exception):
    pass


def _string_node(tok: Token, dialect: Dialect) -> Str:
    parts = []
    for part in tok.parts or [""]:
        if isinstance(part, str):
            parts.append(part)
        else:
            _, src, line = part
            sub = tokenize(src, dialect, line)
            node = parse_expression(sub, dialect)
            parts.append(node)
    quoted = tok.text[:1] if tok.text else '"'
    return Str(tuple(parts), quoted)


def _raw(tokens: Sequence[Token]) -> str:
    return " ".join(t.text for t in tokens if t.kind is not Tok.NEWLINE)


def parse_expression(tokens: Sequence[Token], dialect: Dialect = Dialect.GROOVY) -> Node:
    p = _Parser(tokens, dialect)
    try:
        node = p.expr()
    except (_Bail, RecursionError):
        return Unknown(_raw(tokens))
    if not p.done():
        return Unknown(_raw(tokens))
    return node


def parse_arguments(tokens: Sequence[Token], dialect: Dialect = Dialect.GROOVY) -> Optional[tuple]:
    """Parse a comma-separated argument list (Groovy command syntax)."""
    p = _Parser(tokens, dialect)
    try:
        return p.args(None)
    except (_Bail, RecursionError):
        return None


def parse_source(text: str, dialect: Dialect = Dialect.GROOVY) -> Node:
    return parse_expression(tokenize(text, dialect), dialect)

