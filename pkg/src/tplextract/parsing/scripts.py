"""Plugins, build variants, ``apply from`` targets and a one-pass per-script summary."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..model import DiagCode, Diagnostics, Location
from . import expr as ex
from .bindings import PROJECT, RawBinding, extract_bindings
from .declarations import DeclarationRecord, extract_declarations, tokens_call
from .lexer import Dialect, Tok
from .tree import Block, Stmt, parse_script
from .values import Value, to_value

IMPLICIT_BUILD_TYPES = ("debug", "release")
_CONTAINER_CALLS = {"create", "register", "getByName", "maybeCreate", "named", "getting", "creating"}
_KOTLIN_PLUGINS = "org.jetbrains.kotlin."


def _args(stmt_tokens, dialect: Dialect) -> Optional[tuple]:
    """Arguments of ``head(...)`` or ``head a, b`` (the head token excluded)."""
    rest = stmt_tokens[1:]
    if not rest:
        return ()
    if rest[0].kind is Tok.OP and rest[0].text == "(":
        node = ex.parse_expression(tokens_call(rest), dialect)
        if isinstance(node, ex.Call) and isinstance(node.func, ex.Name):
            return node.args
    return ex.parse_arguments(rest, dialect)


def _lit(node) -> Optional[str]:
    return node.literal if isinstance(node, ex.Str) else None


def _plugin_entry(stmt: Stmt, dialect: Dialect, catalogs: dict) -> Optional[str]:
    toks = stmt.tokens
    texts = [t.text for t in toks]
    for k in range(len(texts) - 1):
        if texts[k] == "apply" and texts[k + 1] == "false":
            return None
    node = ex.parse_expression(toks, dialect)
    # peel `id("x") version "1"` / `id("x").version("1")` / `alias(x) apply true`
    if isinstance(node, ex.Unknown):
        cut = next((k for k, t in enumerate(toks) if k and t.kind is Tok.IDENT and t.text in ("version", "apply")), None)
        if cut is not None:
            node = ex.parse_expression(toks[:cut], dialect)
    while isinstance(node, ex.Call) and isinstance(node.func, ex.Attr) and node.func.name in ("version", "apply"):
        node = node.func.obj
    if isinstance(node, ex.Call):
        name = ex.call_name(node)
        pos = node.positional()
        if not pos:
            return None
        if name == "id":
            return _lit(pos[0])
        if name == "kotlin":
            val = _lit(pos[0])
            return _KOTLIN_PLUGINS + val if val else None
        if name == "alias":
            path = ex.dotted(pos[0])
            if not path or len(path) < 3 or path[1] != "plugins":
                return None
            catalog = catalogs.get(path[0])
            alias = ".".join(path[2:])
            resolved = catalog.plugin(alias) if catalog is not None else None
            return resolved or ".".join(path)
        return None
    path = ex.dotted(node)
    if path and len(path) == 1:
        # bare core plugin names: `java`, `application`, `` `android-library` ``
        return path[0]
    return None


def _walk_skipping(tree: Block, skip=("allprojects", "subprojects")):
    for anc, stmt in tree.walk():
        if any(a in skip for a in anc):
            continue
        yield anc, stmt


def extract_plugins(script_text: str, dialect: Dialect = Dialect.GROOVY, catalogs: Optional[dict] = None,
                    tree: Optional[Block] = None) -> list[str]:
    """Plugin ids applied by a script, in source order, without duplicates.

    ``apply false`` entries (declared for subprojects but not applied here)
    are left out; catalog plugin aliases are resolved when the catalog is known.
    """
    if tree is None:
        tree = parse_script(script_text, dialect, Diagnostics())
    catalogs = catalogs or {}
    out: list[str] = []
    for anc, stmt in _walk_skipping(tree):
        found = None
        if anc and anc[-1] == "plugins" and "buildscript" not in anc:
            found = _plugin_entry(stmt, dialect, catalogs)
        elif stmt.head == "apply":
            args = _args(stmt.tokens, dialect) or ()
            for a in args:
                if a.name == "plugin":
                    found = _lit(a.value)
                    if found is None:
                        # apply plugin: SomeClass
                        path = ex.dotted(a.value)
                        found = ".".join(path) if path else None
        if found and found not in out:
            out.append(found)
    return out


def _declared_names(block: Block, dialect: Dialect) -> list[str]:
    names = []
    for stmt in block.stmts:
        toks = stmt.tokens
        if not toks:
            continue
        first = toks[0]
        if first.kind is Tok.STRING and stmt.blocks:
            val = _lit(ex.parse_expression([first], dialect))
            if val:
                names.append(val)
            continue
        if first.kind is not Tok.IDENT:
            continue
        if first.text in _CONTAINER_CALLS:
            args = _args(toks, dialect)
            if args:
                val = _lit(args[0].value)
                if val:
                    names.append(val)
            continue
        if len(toks) >= 4 and first.text in ("val", "var") and toks[2].text == "by" and toks[3].text in _CONTAINER_CALLS:
            # val gplay by creating { ... }
            names.append(toks[1].text)
            continue
        if len(toks) == 1 and stmt.blocks:
            names.append(first.text)
    return names


def extract_variants(script_text: str, dialect: Dialect = Dialect.GROOVY,
                     tree: Optional[Block] = None) -> tuple[list[str], list[str]]:
    """``(product flavors, build types)`` declared in the script, implicit build types included."""
    if tree is None:
        tree = parse_script(script_text, dialect, Diagnostics())
    flavors: list[str] = []
    build_types: list[str] = list(IMPLICIT_BUILD_TYPES)
    for _anc, stmt in tree.walk():
        if stmt.head not in ("productFlavors", "buildTypes") or not stmt.blocks:
            continue
        target = flavors if stmt.head == "productFlavors" else build_types
        for blk in stmt.blocks:
            for name in _declared_names(blk, dialect):
                if name not in target:
                    target.append(name)
    return flavors, build_types


def extract_variant_names(script_text: str, dialect: Dialect = Dialect.GROOVY,
                          tree: Optional[Block] = None) -> set[str]:
    flavors, build_types = extract_variants(script_text, dialect, tree)
    return set(flavors) | set(build_types)


@dataclass(frozen=True)
class ApplyFrom:
    target: Value
    location: Location


def extract_apply_from(script_text: str, dialect: Dialect = Dialect.GROOVY, file: str = "<string>",
                       tree: Optional[Block] = None) -> list[ApplyFrom]:
    if tree is None:
        tree = parse_script(script_text, dialect, Diagnostics(), file)
    out = []
    for _anc, stmt in tree.walk():
        if stmt.head != "apply":
            continue
        for a in _args(stmt.tokens, dialect) or ():
            if a.name != "from":
                continue
            node = a.value
            # apply from: file('x') / rootProject.file("x")
            if isinstance(node, ex.Call) and ex.call_name(node) == "file" and len(node.positional()) == 1:
                node = node.positional()[0]
            value = to_value(node)
            if value is not None:
                out.append(ApplyFrom(value, Location(file, stmt.line)))
    return out


def find_force_overrides(tree: Block) -> list[tuple[int, str]]:
    """``resolutionStrategy { force '...' }`` / ``resolutionStrategy.force(...)`` statements."""
    out = []
    for anc, stmt in tree.walk():
        toks = [t.text for t in stmt.tokens]
        if (toks[:1] == ["force"] and "resolutionStrategy" in anc) or (
                toks[:3] == ["resolutionStrategy", ".", "force"]):
            out.append((stmt.line, stmt.text()))
    return out


@dataclass
class ScriptInfo:
    file: str
    dialect: Dialect
    declarations: list[DeclarationRecord] = field(default_factory=list)
    bindings: list[RawBinding] = field(default_factory=list)
    plugins: list[str] = field(default_factory=list)
    flavors: list[str] = field(default_factory=list)
    build_types: list[str] = field(default_factory=list)
    apply_from: list[ApplyFrom] = field(default_factory=list)
    forces: list[tuple[int, str]] = field(default_factory=list)


def analyze_script(script_text: str, dialect: Dialect, origin_module: str = ":", scope: str = PROJECT,
                   diagnostics: Optional[Diagnostics] = None, file: str = "<string>",
                   catalogs: Optional[dict] = None) -> ScriptInfo:
    """Parse once, extract everything the pipeline needs from one script."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    catalogs = catalogs or {}
    tree = parse_script(script_text, dialect, diagnostics, file)
    info = ScriptInfo(file, dialect)
    info.declarations = extract_declarations(script_text, dialect, origin_module, diagnostics, file,
                                             tuple(catalogs) or ("libs",), tree)
    info.bindings = extract_bindings(script_text, dialect, scope, diagnostics, file, tree)
    info.plugins = extract_plugins(script_text, dialect, catalogs, tree)
    info.flavors, info.build_types = extract_variants(script_text, dialect, tree)
    info.apply_from = extract_apply_from(script_text, dialect, file, tree)
    info.forces = find_force_overrides(tree)
    for line, text in info.forces:
        diagnostics.warning(DiagCode.FORCE_NOT_APPLIED, f"forced version is not applied: {text}", Location(file, line))
    return info

