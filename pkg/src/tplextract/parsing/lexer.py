"""Tolerant tokenizer for Groovy and Kotlin build scripts.

The tokenizer never raises: unterminated strings or comments simply end at
the end of input. Comments are dropped, newlines are kept as tokens because
statement boundaries depend on them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class Dialect(str, enum.Enum):
    GROOVY = "GROOVY"
    KTS = "KTS"

    @classmethod
    def for_path(cls, path) -> "Dialect":
        name = str(path)
        return cls.KTS if name.endswith((".kts", ".kt")) else cls.GROOVY


class Tok(str, enum.Enum):
    IDENT = "IDENT"
    STRING = "STRING"
    NUMBER = "NUMBER"
    OP = "OP"
    NEWLINE = "NEWLINE"


@dataclass
class Token:
    kind: Tok
    text: str
    line: int
    start: int
    end: int
    # for STRING: list of str (literal) or ("$", expr_source, line) interpolation pieces
    parts: Optional[list] = field(default=None, repr=False)
    interpolating: bool = False
    error: bool = False


_OPS3 = ("?.:", "...", "===", "!==")
_OPS2 = ("?.", "->", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "::", "..", "?:", "*.")
_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CHARS = _IDENT_START | set("0123456789")


def strip_comments(text: str) -> str:
    """Blank out ``//`` and ``/* */`` comments, preserving offsets and newlines."""
    out = list(text)
    i, n = 0, len(text)
    quote = None
    while i < n:
        c = text[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if text.startswith(quote, i):
                i += len(quote)
                quote = None
                continue
            if c == "\n" and len(quote) == 1:
                quote = None
            i += 1
            continue
        if c in "'\"":
            quote = text[i:i + 3] if text[i:i + 3] in ("'''", '"""') else c
            i += len(quote)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            for k in range(i, j):
                out[k] = " "
            i = j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            for k in range(i, j):
                if out[k] != "\n":
                    out[k] = " "
            i = j
            continue
        i += 1
    return "".join(out)


class _Scanner:
    def __init__(self, text: str, dialect: Dialect, line: int = 1):
        self.text = text
        self.n = len(text)
        self.dialect = dialect
        self.i = 0
        self.line = line
        self.tokens: list[Token] = []

    def run(self) -> list[Token]:
        text, n = self.text, self.n
        while self.i < n:
            c = text[self.i]
            if c == "\n":
                self._push(Tok.NEWLINE, self.i, self.i + 1)
                self.line += 1
                self.i += 1
            elif c in " \t\r\f﻿":
                self.i += 1
            elif c == "\\" and self.i + 1 < n and text[self.i + 1] == "\n":
                # explicit line continuation
                self.line += 1
                self.i += 2
            elif text.startswith("//", self.i):
                j = text.find("\n", self.i)
                self.i = n if j < 0 else j
            elif text.startswith("/*", self.i):
                j = text.find("*/", self.i + 2)
                j = n if j < 0 else j + 2
                self.line += text.count("\n", self.i, j)
                self.i = j
            elif c in "'\"":
                self._string()
            elif c == "`" and self.dialect is Dialect.KTS:
                j = text.find("`", self.i + 1)
                if j < 0 or "\n" in text[self.i:j]:
                    self._push(Tok.OP, self.i, self.i + 1)
                    self.i += 1
                else:
                    tok = self._push(Tok.IDENT, self.i, j + 1)
                    tok.text = text[self.i + 1:j]
                    self.i = j + 1
            elif c in _IDENT_START or c == "$" or (c.isalpha() and ord(c) > 127):
                j = self.i + 1
                while j < n and (text[j] in _IDENT_CHARS or text[j] == "$" or (text[j].isalpha() and ord(text[j]) > 127)):
                    j += 1
                self._push(Tok.IDENT, self.i, j)
                self.i = j
            elif c.isdigit():
                j = self.i + 1
                while j < n and (text[j].isalnum() or text[j] in "._") and not text.startswith("..", j):
                    j += 1
                self._push(Tok.NUMBER, self.i, j)
                self.i = j
            else:
                for op in _OPS3 + _OPS2:
                    if text.startswith(op, self.i):
                        self._push(Tok.OP, self.i, self.i + len(op))
                        self.i += len(op)
                        break
                else:
                    self._push(Tok.OP, self.i, self.i + 1)
                    self.i += 1
        return self.tokens

    def _push(self, kind: Tok, start: int, end: int) -> Token:
        tok = Token(kind, self.text[start:end], self.line, start, end)
        self.tokens.append(tok)
        return tok

    def _string(self):
        text, n = self.text, self.n
        start = self.i
        start_line = self.line
        triple = text[start:start + 3] in ("'''", '"""')
        quote = text[start:start + 3] if triple else text[start]
        # single quotes: Groovy plain strings, Kotlin char literals
        interpolating = quote.startswith('"')
        i = start + len(quote)
        parts: list = []
        buf: list[str] = []
        error = False
        while True:
            if i >= n:
                error = True
                break
            c = text[i]
            if text.startswith(quote, i):
                i += len(quote)
                break
            if c == "\n":
                if not triple:
                    error = True
                    break
                self.line += 1
                buf.append(c)
                i += 1
                continue
            if c == "\\" and i + 1 < n:
                nxt = text[i + 1]
                buf.append({"n": "\n", "t": "\t", "r": "\r"}.get(nxt, nxt))
                if nxt == "\n":
                    self.line += 1
                i += 2
                continue
            if c == "$" and interpolating and i + 1 < n:
                if text[i + 1] == "{":
                    j = _match_brace(text, i + 1)
                    inner = text[i + 2:j] if j >= 0 else text[i + 2:]
                    if buf:
                        parts.append("".join(buf))
                        buf = []
                    parts.append(("$", inner, self.line))
                    self.line += inner.count("\n")
                    i = n if j < 0 else j + 1
                    continue
                if text[i + 1] in _IDENT_START:
                    j = i + 2
                    while j < n and text[j] in _IDENT_CHARS:
                        j += 1
                    if self.dialect is Dialect.GROOVY:
                        # Groovy GStrings take a dotted property path after '$'
                        while j + 1 < n and text[j] == "." and text[j + 1] in _IDENT_START:
                            k = j + 2
                            while k < n and text[k] in _IDENT_CHARS:
                                k += 1
                            j = k
                    if buf:
                        parts.append("".join(buf))
                        buf = []
                    parts.append(("$", text[i + 1:j], self.line))
                    i = j
                    continue
            buf.append(c)
            i += 1
        if buf or not parts:
            parts.append("".join(buf))
        tok = Token(Tok.STRING, text[start:i], start_line, start, i, parts, interpolating, error)
        self.tokens.append(tok)
        self.i = i


def _match_brace(text: str, open_idx: int) -> int:
    """Index of the brace closing ``text[open_idx]``, skipping nested strings; -1 if none."""
    depth = 0
    i, n = open_idx, len(text)
    while i < n:
        c = text[i]
        if c in "'\"":
            q = c
            i += 1
            while i < n and text[i] != q:
                if text[i] == "\\":
                    i += 1
                i += 1
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return -1


def tokenize(text: str, dialect: Dialect = Dialect.GROOVY, line: int = 1) -> list[Token]:
    return _Scanner(text, dialect, line).run()
