"""Variable bindings: ``ext`` properties, script variables, Kotlin objects and property files."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..model import Diagnostics, Location
from . import expr as ex
from .lexer import Dialect, Tok
from .tree import Block, Stmt, parse_script
from .values import Literal, Reference, Value, to_value

PROJECT = "<project>"

_EXT_PREFIXES = (
    ("rootProject", "ext"), ("rootProject", "extra"), ("project", "ext"), ("project", "extra"),
    ("gradle", "ext"), ("ext",), ("extra",),
)
_DECL_WORDS = {"def", "val", "var", "const", "final", "static", "private", "public", "internal",
               "protected", "lateinit", "String", "int", "Integer", "boolean", "Boolean", "Map", "List", "Object"}
_SKIP_BLOCKS = {"dependencies", "plugins", "repositories", "pluginManagement", "tasks", "task"}
_OBJECT_WORDS = {"object", "class"}
MAX_FLATTEN_DEPTH = 16


@dataclass(frozen=True)
class RawBinding:
    key: str
    value: Value
    scope: str
    source: Location


def _top_level_index(tokens, ops) -> Optional[int]:
    depth = 0
    for k, t in enumerate(tokens):
        if t.kind is not Tok.OP:
            continue
        if t.text in ("(", "["):
            depth += 1
        elif t.text in (")", "]"):
            depth -= 1
        elif depth == 0 and t.text in ops:
            return k
    return None


def _map_items(node):
    if isinstance(node, ex.MapLit):
        return list(node.entries)
    if isinstance(node, ex.Call) and ex.call_name(node) in ("mapOf", "mutableMapOf", "hashMapOf", "linkedMapOf"):
        items = []
        for item in node.positional():
            if isinstance(item, ex.Pair):
                first = item.first
                key = first.literal if isinstance(first, ex.Str) else (first.text if isinstance(first, ex.Num) else None)
                if key is not None:
                    items.append((key, item.second))
        return items
    return None


def _list_items(node):
    if isinstance(node, ex.ListLit):
        return list(node.items)
    if isinstance(node, ex.Call) and ex.call_name(node) in ("listOf", "arrayOf", "mutableListOf", "setOf"):
        return node.positional()
    return None


def flatten(key: str, node: ex.Node, depth: int = 0) -> list[tuple[str, Value]]:
    """``[android: [espresso: '3.0.2']]`` under ``libVersions`` -> ``libVersions.android.espresso``."""
    if depth > MAX_FLATTEN_DEPTH:
        return []
    items = _map_items(node)
    if items is not None:
        out = []
        for k, v in items:
            out.extend(flatten(f"{key}.{k}", v, depth + 1))
        return out
    items = _list_items(node)
    if items is not None:
        out = []
        for i, v in enumerate(items):
            out.extend(flatten(f"{key}.{i}", v, depth + 1))
        return out
    value = to_value(node)
    return [(key, value)] if value is not None else []


def _strip_ext(path: tuple) -> Optional[tuple]:
    for prefix in _EXT_PREFIXES:
        if path[:len(prefix)] == prefix and len(path) > len(prefix):
            return path[len(prefix):]
    return None


class _Collector:
    def __init__(self, dialect: Dialect, scope: str, file: str):
        self.dialect = dialect
        self.scope = scope
        self.file = file
        self.out: list[RawBinding] = []
        self.roots: set[str] = set()

    def add(self, key: str, node: ex.Node, line: int):
        for k, v in flatten(key, node):
            if isinstance(v, Reference) and v.path == k and v.fallback is None:
                # `ext.versions = versions` re-exports a local map under the same name
                continue
            self.out.append(RawBinding(k, v, self.scope, Location(self.file, line)))
        self.roots.add(key.split(".")[0])

    def walk(self, block: Block):
        # (block, object prefix, inside ext, at top level)
        stack = [(iter(block.stmts), (), False, True)]
        while stack:
            it, prefix, in_ext, top = stack[-1]
            stmt = next(it, None)
            if stmt is None:
                stack.pop()
                continue
            head = stmt.head
            if head in _SKIP_BLOCKS and _top_level_index(stmt.tokens, ("=",)) is None:
                continue
            child_prefix, child_ext = prefix, in_ext
            if head in _OBJECT_WORDS or (head == "companion" and len(stmt.tokens) > 1):
                names = [t.text for t in stmt.tokens[1:] if t.kind is Tok.IDENT and t.text != "object"]
                if names and head != "companion":
                    child_prefix = prefix + (names[0],)
            elif head in ("ext", "extra") and (len(stmt.tokens) == 1 or
                                               [t.text for t in stmt.tokens[1:3]] == [".", "apply"]):
                child_ext = True
            elif head in ("buildscript", "allprojects", "subprojects"):
                pass
            else:
                self.stmt(stmt, prefix, in_ext, top)
            for blk in reversed(stmt.blocks):
                stack.append((iter(blk.stmts), child_prefix, child_ext,
                              top and head in ("buildscript", "allprojects", "subprojects")))

    def stmt(self, stmt: Stmt, prefix: tuple, in_ext: bool, top: bool):
        toks = stmt.tokens
        if not toks:
            return
        # Kotlin: val x by extra("1.0")
        if len(toks) >= 5 and toks[0].text in ("val", "var") and toks[2].text == "by" and toks[3].text == "extra":
            node = ex.parse_expression(toks[3:], self.dialect)
            if isinstance(node, ex.Call) and node.positional():
                self.add(toks[1].text, node.positional()[0], stmt.line)
            return
        eq = _top_level_index(toks, ("=",))
        if eq is None:
            self.call(stmt, in_ext)
            return
        lhs, rhs = toks[:eq], toks[eq + 1:]
        if not lhs or not rhs:
            return
        key = self.lhs_key(lhs, prefix, in_ext, top)
        if key is None:
            return
        self.add(key, ex.parse_expression(rhs, self.dialect), stmt.line)

    def lhs_key(self, lhs, prefix: tuple, in_ext: bool, top: bool) -> Optional[str]:
        # drop a Kotlin type annotation: `val x: String`
        colon = _top_level_index(lhs, (":",))
        if colon is not None:
            lhs = lhs[:colon]
        if not lhs:
            return None
        words = [t for t in lhs if t.kind is Tok.IDENT]
        if len(lhs) >= 2 and len(words) == len(lhs) and lhs[0].text in _DECL_WORDS:
            return ".".join(prefix + (lhs[-1].text,))
        node = ex.parse_expression(lhs, self.dialect)
        path = ex.dotted(node)
        if not path:
            return None
        stripped = _strip_ext(path)
        if stripped is not None:
            return ".".join(stripped)
        if prefix and len(path) == 1:
            return ".".join(prefix + path)
        if in_ext:
            return ".".join(path)
        if top and (len(path) == 1 or path[0] in self.roots):
            return ".".join(path)
        return None

    def call(self, stmt: Stmt, in_ext: bool):
        # ext.set("x", v) / set("x", v) inside ext / extra.set("x", v)
        node = ex.parse_expression(stmt.tokens, self.dialect)
        if not isinstance(node, ex.Call):
            return
        path = ex.dotted(node.func)
        if not path or path[-1] != "set":
            return
        if not (in_ext or (len(path) > 1 and _strip_ext(path + ("x",)) == ("set", "x"))):
            return
        pos = node.positional()
        if len(pos) == 2 and isinstance(pos[0], ex.Str) and pos[0].literal:
            self.add(pos[0].literal, pos[1], stmt.line)


def extract_bindings(script_text: str, dialect: Dialect = Dialect.GROOVY, scope: str = PROJECT,
                     diagnostics: Optional[Diagnostics] = None, file: str = "<string>",
                     tree: Optional[Block] = None) -> list[RawBinding]:
    if tree is None:
        tree = parse_script(script_text, dialect, diagnostics if diagnostics is not None else Diagnostics(), file)
    collector = _Collector(dialect, scope, file)
    collector.walk(tree)
    return collector.out


def parse_properties(text: str, scope: str = PROJECT, file: str = "gradle.properties") -> list[RawBinding]:
    """Java ``.properties`` syntax: ``key=value``, ``key: value`` or ``key value``; ``#``/``!`` comments."""
    out = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        start = i
        line = lines[i].lstrip()
        i += 1
        if not line or line[0] in "#!":
            continue
        while line.endswith("\\") and not line.endswith("\\\\") and i < len(lines):
            line = line[:-1] + lines[i].lstrip()
            i += 1
        key_chars = []
        k = 0
        while k < len(line) and line[k] not in "=: \t":
            if line[k] == "\\" and k + 1 < len(line):
                k += 1
            key_chars.append(line[k])
            k += 1
        rest = line[k:].lstrip(" \t")
        if rest[:1] in ("=", ":"):
            rest = rest[1:].lstrip(" \t")
        key = "".join(key_chars)
        if key:
            out.append(RawBinding(key, Literal(rest.rstrip()), scope, Location(file, start + 1)))
    return out
