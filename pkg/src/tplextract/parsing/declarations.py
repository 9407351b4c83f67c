"""Dependency declarations found inside ``dependencies { ... }`` blocks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from ..model import DiagCode, Diagnostics, Location
from . import expr as ex
from .lexer import Dialect, Tok, Token
from .tree import Block, Stmt, parse_script
from .values import Literal, Value, concat, to_value


@dataclass(frozen=True)
class CoordinateText:
    raw: str
    value: Value


@dataclass(frozen=True)
class ModuleRef:
    module_id: str
    accessor: bool = False


@dataclass(frozen=True)
class FileTree:
    dir: Optional[str] = None
    includes: tuple = ()
    excludes: tuple = ()
    files: tuple = ()


@dataclass(frozen=True)
class CatalogRef:
    alias: str
    is_bundle: bool = False
    catalog: str = "libs"


@dataclass(frozen=True)
class PlatformBom:
    inner: "Payload"
    enforced: bool = False


@dataclass(frozen=True)
class Multi:
    items: tuple


Payload = Union[CoordinateText, ModuleRef, FileTree, CatalogRef, PlatformBom, Multi]


@dataclass(frozen=True)
class DeclarationRecord:
    keyword: str
    payload: Payload
    origin_module: str
    location: Location
    raw: str = ""

    def leaves(self):
        """Payloads with MULTI nesting removed."""
        stack = [self.payload]
        while stack:
            p = stack.pop(0)
            if isinstance(p, Multi):
                stack[0:0] = list(p.items)
            else:
                yield p


_SKIPPED_BLOCKS = {"constraints", "components", "modules"}
_CONTROL = {"if", "else", "for", "while", "switch", "try", "when"}
_COORD_KEYS = ("group", "name", "version")
_PLATFORM_CALLS = {"platform": False, "enforcedPlatform": True}


def _literal(node) -> Optional[str]:
    if isinstance(node, ex.Str):
        return node.literal
    if isinstance(node, ex.Num):
        return node.text
    return None


def _str_list(node) -> tuple:
    if node is None:
        return ()
    if isinstance(node, ex.ListLit):
        return tuple(s for s in (_literal(i) for i in node.items) if s is not None)
    if isinstance(node, ex.Call) and ex.call_name(node) in ("listOf", "arrayOf", "setOf", "mutableListOf"):
        return tuple(s for s in (_literal(i) for i in node.positional()) if s is not None)
    s = _literal(node)
    return (s,) if s is not None else ()


def _kotlin_map(node) -> Optional[dict]:
    """``mapOf("a" to x)`` or a Groovy map literal as a dict of nodes."""
    if isinstance(node, ex.MapLit):
        return dict(node.entries)
    if isinstance(node, ex.Call) and ex.call_name(node) in ("mapOf", "mutableMapOf", "hashMapOf"):
        out = {}
        for item in node.positional():
            if not isinstance(item, ex.Pair):
                return None
            key = _literal(item.first)
            if key is None:
                return None
            out[key] = item.second
        return out
    return None


class _Extractor:
    def __init__(self, dialect: Dialect, origin_module: str, file: str, diagnostics: Diagnostics,
                 catalogs: Iterable[str], text: str):
        self.text = text
        self.dialect = dialect
        self.origin = origin_module
        self.file = file
        self.diag = diagnostics
        self.catalogs = set(catalogs)
        self.records: list[DeclarationRecord] = []

    def loc(self, line: int) -> Location:
        return Location(self.file, line)

    def verbatim(self, stmt: Stmt) -> str:
        if not stmt.tokens:
            return ""
        return self.text[stmt.tokens[0].start:stmt.tokens[-1].end]

    # statements -----------------------------------------------------
    def block(self, block: Block):
        for stmt in block.stmts:
            self.stmt(stmt)

    def stmt(self, stmt: Stmt):
        head = stmt.head
        if head in _CONTROL:
            if head == "if":
                self.diag.info(DiagCode.CONDITIONAL_DECLARATION,
                               "declarations inside a conditional are extracted unconditionally", self.loc(stmt.line))
            for blk in stmt.blocks:
                self.block(blk)
            return
        if head in _SKIPPED_BLOCKS and stmt.blocks:
            self.diag.info(DiagCode.IGNORED_BLOCK, f"'{head}' block inside dependencies ignored", self.loc(stmt.line))
            return
        if not stmt.tokens:
            for blk in stmt.blocks:
                self.block(blk)
            return
        first = stmt.tokens[0]
        if first.kind is Tok.STRING:
            keyword = ex.parse_expression([first], self.dialect)
            keyword = keyword.literal if isinstance(keyword, ex.Str) else None
        elif first.kind is Tok.IDENT:
            keyword = first.text
        else:
            keyword = None
        if keyword is None:
            self.unrecognized(stmt)
            return
        rest = stmt.tokens[1:]
        if keyword == "add" and rest and (rest[0].text == "(" or rest[0].kind is Tok.STRING):
            args = self.parse_args(rest)
            if args and args[0].name is None and _literal(args[0].value):
                keyword = _literal(args[0].value)
                self.emit(keyword, args[1:], stmt)
                return
            self.unrecognized(stmt)
            return
        if not rest:
            if stmt.blocks:
                # `gplay { ... }`-style nesting is not a declaration; look inside anyway
                for blk in stmt.blocks:
                    self.block(blk)
                return
            self.unrecognized(stmt)
            return
        if rest[0].kind is Tok.OP and rest[0].text in ("=", ".", "?.", "+=", "->"):
            # assignments, method chains on the configuration container, lambdas
            self.unrecognized(stmt, quiet=rest[0].text in ("=", "+="))
            return
        args = self.parse_args(rest)
        if args is None:
            self.unrecognized(stmt)
            return
        self.emit(keyword, args, stmt)

    def parse_args(self, rest) -> Optional[tuple]:
        if rest and rest[0].kind is Tok.OP and rest[0].text == "(":
            close = _matching_paren(rest, 0)
            if close is not None:
                tail = rest[close + 1:]
                # a trailing closure or `.because(...)` chain does not change the dependency
                if not tail or tail[0].text in ("{}", ".", "?."):
                    node = ex.parse_expression(tokens_call(rest[:close + 1]), self.dialect)
                    if isinstance(node, ex.Call):
                        return node.args
                    return None
        return ex.parse_arguments(rest, self.dialect)

    def emit(self, keyword: str, args: tuple, stmt: Stmt):
        args = tuple(a for a in args if not isinstance(a.value, ex.Closure))
        named = {a.name: a.value for a in args if a.name is not None}
        positional = [a.value for a in args if a.name is None]
        payloads = []
        if "name" in named and ("group" in named or "version" in named or not positional):
            p = self.map_notation(named)
            if p is None:
                self.unrecognized(stmt)
                return
            payloads.append(p)
        elif named and not positional:
            self.unrecognized(stmt)
            return
        for node in positional:
            p = self.payload(node)
            if p is None:
                self.unrecognized(stmt)
                return
            payloads.append(p)
        if not payloads:
            self.unrecognized(stmt)
            return
        payload = payloads[0] if len(payloads) == 1 else Multi(tuple(payloads))
        self.records.append(DeclarationRecord(keyword, payload, self.origin, self.loc(stmt.line), self.verbatim(stmt)))

    # payloads ------------------------------------------------------
    def map_notation(self, named: dict) -> Optional[CoordinateText]:
        if "name" not in named:
            return None
        if "group" not in named:
            # flatDir style `name: 'lib', ext: 'aar'` has no coordinate
            return None
        pieces = []
        for key in _COORD_KEYS:
            if key not in named:
                continue
            v = to_value(named[key])
            if v is None:
                return None
            if pieces:
                pieces.append(Literal(":"))
            pieces.append(v)
        value = concat(pieces)
        return CoordinateText(str(value), value)

    def payload(self, node) -> Optional[Payload]:
        if isinstance(node, ex.ListLit):
            items = [self.payload(i) for i in node.items]
            if any(i is None for i in items) or not items:
                return None
            return items[0] if len(items) == 1 else Multi(tuple(items))
        mapping = _kotlin_map(node)
        if mapping is not None:
            return self.map_notation(mapping)
        path = ex.dotted(node)
        if path:
            if path[0] in self.catalogs and len(path) > 1:
                if path[1] in ("versions", "plugins"):
                    return None
                is_bundle = path[1] == "bundles"
                alias = ".".join(path[2:] if is_bundle else path[1:])
                if not alias:
                    return None
                return CatalogRef(alias, is_bundle, path[0])
            if path[0] == "projects" and len(path) > 1:
                segs = [s for s in path[1:] if s not in ("dependencyProject",)]
                return ModuleRef(":" + ":".join(segs), accessor=True)
        if isinstance(node, ex.Call):
            return self.call_payload(node)
        value = to_value(node)
        if value is None:
            return None
        return CoordinateText(_source(node), value)

    def call_payload(self, node: ex.Call) -> Optional[Payload]:
        name = ex.call_name(node)
        pos = node.positional()
        named = node.named()
        if name == "project":
            target = named.get("path", pos[0] if pos else None)
            mapping = _kotlin_map(pos[0]) if pos else None
            if mapping is not None:
                target = mapping.get("path")
            text = _literal(target) if target is not None else None
            if text is None:
                return None
            return ModuleRef(text if text.startswith(":") else ":" + text)
        if name in _PLATFORM_CALLS and len(pos) == 1:
            inner = self.payload(pos[0])
            if inner is None:
                return None
            return PlatformBom(inner, _PLATFORM_CALLS[name])
        if name == "fileTree":
            mapping = _kotlin_map(pos[0]) if pos else None
            opts = dict(named)
            if mapping is not None:
                opts.update(mapping)
            elif pos:
                opts.setdefault("dir", pos[0])
            d = _literal(opts.get("dir")) if opts.get("dir") is not None else None
            includes = _str_list(opts.get("include")) + _str_list(opts.get("includes"))
            excludes = _str_list(opts.get("exclude")) + _str_list(opts.get("excludes"))
            return FileTree(d, includes, excludes)
        if name == "files":
            files = tuple(s for s in (_literal(p) for p in pos) if s is not None)
            return FileTree(files=files)
        if name == "kotlin" and pos and _literal(pos[0]) is not None:
            module = "org.jetbrains.kotlin:kotlin-" + _literal(pos[0])
            version = named.get("version", pos[1] if len(pos) > 1 else None)
            pieces = [Literal(module)]
            if version is not None:
                v = to_value(version)
                if v is None:
                    return None
                pieces += [Literal(":"), v]
            return CoordinateText(_source(node), concat(pieces))
        if name in ("create", "module") and pos:
            return self.payload(pos[0])
        value = to_value(node)
        if value is None:
            return None
        return CoordinateText(_source(node), value)

    def unrecognized(self, stmt: Stmt, quiet: bool = False):
        if quiet:
            return
        self.diag.warning(DiagCode.UNRECOGNIZED_DECLARATION, f"unrecognized declaration: {self.verbatim(stmt)}",
                          self.loc(stmt.line))


def tokens_call(tokens):
    """Prefix a parenthesised argument list with a dummy callee so it parses as a call."""
    dummy = Token(Tok.IDENT, "__call__", tokens[0].line, tokens[0].start, tokens[0].start)
    return [dummy] + list(tokens)


def _matching_paren(tokens, start: int) -> Optional[int]:
    depth = 0
    for k in range(start, len(tokens)):
        t = tokens[k]
        if t.kind is Tok.OP:
            if t.text in ("(", "["):
                depth += 1
            elif t.text in (")", "]"):
                depth -= 1
                if depth == 0:
                    return k
    return None


def _source(node) -> str:
    v = to_value(node)
    return str(v) if v is not None else repr(node)


def find_dependency_blocks(tree: Block):
    """Yield ``(ancestors, block)`` for each ``dependencies { }`` block."""
    for anc, stmt in tree.walk():
        if stmt.head == "dependencies" and len(stmt.tokens) == 1 and stmt.blocks:
            if "dependencies" in anc:
                continue
            for blk in stmt.blocks:
                yield anc, blk


def extract_declarations(script_text: str, dialect: Dialect = Dialect.GROOVY, origin_module: str = ":",
                         diagnostics: Optional[Diagnostics] = None, file: str = "<string>",
                         catalogs: Iterable[str] = ("libs",), tree: Optional[Block] = None) -> list[DeclarationRecord]:
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    if tree is None:
        tree = parse_script(script_text, dialect, diagnostics, file)
    ext = _Extractor(dialect, origin_module, file, diagnostics, catalogs, script_text)
    for anc, blk in find_dependency_blocks(tree):
        if "allprojects" in anc or "subprojects" in anc:
            diagnostics.info(DiagCode.IGNORED_BLOCK,
                             "dependencies under allprojects/subprojects attributed to the declaring module",
                             Location(file, blk.line))
        ext.block(blk)
    return ext.records
