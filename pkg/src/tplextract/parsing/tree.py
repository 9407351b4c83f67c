"""Brace-aware statement tree over a token stream.

A script becomes a :class:`Block` of :class:`Stmt`. A statement keeps its
tokens (newlines removed) plus the ``{...}`` blocks that follow it at
parenthesis depth zero, so ``dependencies { ... }`` is a statement whose
only token is ``dependencies`` and whose single block holds the
declarations. Closures nested inside parentheses are replaced by a ``{}``
placeholder token carrying the parsed block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..model import DiagCode, Diagnostics, Location
from .lexer import Dialect, Tok, Token, tokenize

MAX_NESTING = 100

# a statement continues onto the next line after one of these
_CONTINUE_AFTER = {",", "+", "=", "(", "[", ".", "?.", ":", "&&", "||", "->", "?:", "-", "*", "/", "+="}
# ... or when the next line starts with one of these
_CONTINUE_BEFORE = {".", "?.", "?:", "&&", "||"}
_BLOCK_FOLLOWERS = {"else", "catch", "finally"}


@dataclass
class Stmt:
    tokens: list[Token]
    blocks: list["Block"] = field(default_factory=list)
    line: int = 0

    @property
    def head(self) -> Optional[str]:
        if self.tokens and self.tokens[0].kind is Tok.IDENT:
            return self.tokens[0].text
        return None

    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)


@dataclass
class Block:
    stmts: list[Stmt] = field(default_factory=list)
    line: int = 0
    closed: bool = True

    def walk(self, path: tuple = ()) -> Iterator[tuple[tuple, Stmt]]:
        """Yield ``(ancestor heads, stmt)`` for every statement, depth first, iteratively."""
        stack = [(path, iter(self.stmts))]
        while stack:
            anc, it = stack[-1]
            stmt = next(it, None)
            if stmt is None:
                stack.pop()
                continue
            yield anc, stmt
            child_anc = anc + (_stmt_label(stmt),)
            for blk in reversed(stmt.blocks):
                stack.append((child_anc, iter(blk.stmts)))


def _stmt_label(stmt: Stmt) -> str:
    head = stmt.head
    if head is None and stmt.tokens and stmt.tokens[0].kind is Tok.STRING:
        return stmt.tokens[0].text.strip("'\"")
    return head or ""


class _Frame:
    __slots__ = ("block", "tokens", "blocks", "depth", "in_parens", "open_tok", "after_block")

    def __init__(self, block: Block, in_parens: bool, open_tok: Optional[Token]):
        self.block = block
        self.tokens: list[Token] = []
        self.blocks: list[Block] = []
        self.depth = 0
        self.in_parens = in_parens
        self.open_tok = open_tok
        self.after_block = False


def build_tree(tokens: list[Token], diagnostics: Optional[Diagnostics] = None, file: str = "<string>") -> Block:
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    root = Block(line=1)
    stack = [_Frame(root, False, None)]

    def flush(frame: _Frame):
        if frame.tokens or frame.blocks:
            line = frame.tokens[0].line if frame.tokens else frame.blocks[0].line
            frame.block.stmts.append(Stmt(frame.tokens, frame.blocks, line))
        frame.tokens = []
        frame.blocks = []
        frame.depth = 0
        frame.after_block = False

    def next_significant(k: int) -> Optional[Token]:
        while k < len(tokens) and tokens[k].kind is Tok.NEWLINE:
            k += 1
        return tokens[k] if k < len(tokens) else None

    i = 0
    while i < len(tokens):
        tok = tokens[i]
        frame = stack[-1]
        if frame.after_block and tok.kind is not Tok.NEWLINE:
            follows = (tok.kind is Tok.IDENT and tok.text in _BLOCK_FOLLOWERS) or (
                tok.kind is Tok.OP and tok.text in _CONTINUE_BEFORE | {")", "]", ","})
            if not follows and frame.depth == 0:
                flush(frame)
            frame.after_block = False
        if tok.kind is Tok.OP and tok.text == "{":
            if len(stack) >= MAX_NESTING:
                i += 1
                continue
            blk = Block(line=tok.line)
            stack.append(_Frame(blk, frame.depth > 0, tok))
            i += 1
            continue
        if tok.kind is Tok.OP and tok.text == "}":
            if len(stack) == 1:
                diagnostics.error(DiagCode.UNBALANCED_BRACES, "unmatched closing brace", Location(file, tok.line))
                i += 1
                continue
            flush(frame)
            stack.pop()
            parent = stack[-1]
            if frame.in_parens and parent.depth > 0:
                placeholder = Token(Tok.OP, "{}", frame.block.line, frame.open_tok.start, tok.end)
                placeholder.parts = [frame.block]
                parent.tokens.append(placeholder)
            else:
                parent.depth = 0
                parent.blocks.append(frame.block)
                parent.after_block = True
            i += 1
            continue
        if tok.kind is Tok.NEWLINE:
            if frame.depth == 0 and (frame.tokens or frame.blocks):
                last = frame.tokens[-1] if frame.tokens and not frame.after_block else None
                nxt = next_significant(i + 1)
                cont = last is not None and last.kind is Tok.OP and last.text in _CONTINUE_AFTER
                cont = cont or (nxt is not None and nxt.kind is Tok.OP and nxt.text in _CONTINUE_BEFORE)
                if frame.after_block:
                    cont = nxt is not None and (
                        (nxt.kind is Tok.IDENT and nxt.text in _BLOCK_FOLLOWERS)
                        or (nxt.kind is Tok.OP and nxt.text in _CONTINUE_BEFORE))
                    if cont:
                        frame.after_block = False
                if not cont:
                    flush(frame)
            i += 1
            continue
        if tok.kind is Tok.OP and tok.text == ";" and frame.depth == 0:
            flush(frame)
            i += 1
            continue
        if tok.kind is Tok.OP and tok.text in ("(", "["):
            frame.depth += 1
        elif tok.kind is Tok.OP and tok.text in (")", "]"):
            frame.depth = max(0, frame.depth - 1)
        frame.tokens.append(tok)
        i += 1

    while len(stack) > 1:
        frame = stack.pop()
        flush(frame)
        frame.block.closed = False
        diagnostics.error(DiagCode.UNBALANCED_BRACES, "unclosed brace opened here", Location(file, frame.block.line))
        parent = stack[-1]
        parent.blocks.append(frame.block)
        parent.after_block = True
    flush(stack[0])
    return root


def parse_script(text: str, dialect: Dialect = Dialect.GROOVY, diagnostics: Optional[Diagnostics] = None,
                 file: str = "<string>") -> Block:
    return build_tree(tokenize(text, dialect), diagnostics, file)
