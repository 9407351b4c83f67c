"""Variable environments, value resolution and normalization of declarations into triplets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .keywords import DEFAULT_TABLE, KeywordKind, KeywordTable, segment_variants
from .model import Coordinate, DiagCode, Diagnostics, Location, MalformedCoordinate, Status, parse_coordinate
from .parsing.bindings import RawBinding
from .parsing.catalog import CatalogModel, accessor_key
from .parsing.declarations import (CatalogRef, CoordinateText, DeclarationRecord, FileTree, ModuleRef, Multi,
                                   PlatformBom)
from .parsing.values import Concat, Literal, Reference, Value
from .versions import compare_versions

MAX_DEPTH = 32
# total reference lookups per resolved value; bounds fan-out like a = "$b$b", b = "$c$c", ...
MAX_LOOKUPS = 10_000
# stripped (repeatedly) from a reference before lookup: `rootProject.ext.x` -> `x`
_ALIAS_PREFIXES = (
    "rootProject.ext.", "rootProject.extra.", "rootProject.properties.", "rootProject.",
    "project.ext.", "project.extra.", "project.properties.", "project.",
    "gradle.ext.", "ext.", "extra.", "properties.",
)


class _Unresolved:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNRESOLVED"

    def __bool__(self):
        return False


UNRESOLVED = _Unresolved()


class VariableEnvironment:
    """Ordered binding layers; later layers shadow earlier ones."""

    def __init__(self, layers: Iterable[tuple[str, Mapping[str, RawBinding]]] = (),
                 catalogs: Optional[Mapping[str, CatalogModel]] = None):
        self.layers = [(tag, dict(m)) for tag, m in layers]
        self.catalogs = dict(catalogs or {})

    def lookup(self, key: str) -> Optional[RawBinding]:
        for _tag, mapping in reversed(self.layers):
            b = mapping.get(key)
            if b is not None:
                return b
        return None

    def __contains__(self, key: str) -> bool:
        return self.lookup(key) is not None

    def indexed_children(self, key: str) -> list[str]:
        """``key.0``, ``key.1``, ... as produced by flattening a list literal."""
        out = []
        i = 0
        while self.lookup(f"{key}.{i}") is not None:
            out.append(f"{key}.{i}")
            i += 1
        return out

    def catalog_version(self, path: str) -> Optional[str]:
        head, _, rest = path.partition(".")
        catalog = self.catalogs.get(head)
        if catalog is None or not rest.startswith("versions."):
            return None
        alias = accessor_key(rest[len("versions."):])
        for name, version in catalog.versions.items():
            if accessor_key(name) == alias:
                return version
        return None


def build_layer(bindings: Iterable[RawBinding], diagnostics: Optional[Diagnostics] = None,
                layer: str = "project") -> dict[str, RawBinding]:
    """Later bindings win; a redefinition of an existing key emits a warning."""
    out: dict[str, RawBinding] = {}
    for b in bindings:
        prev = out.get(b.key)
        if prev is not None and diagnostics is not None:
            same = "same" if prev.value == b.value else "different"
            diagnostics.warning(DiagCode.DUPLICATE_BINDING,
                                f"{layer} variable {b.key!r} defined again with a {same} value "
                                f"(first at {prev.source}); the later definition wins", b.source, subject=b.key)
        out[b.key] = b
    return out


def compose_environment(project_bindings, module_bindings, diagnostics: Optional[Diagnostics] = None,
                        catalogs: Optional[Mapping[str, CatalogModel]] = None,
                        module_id: str = "module") -> VariableEnvironment:
    """Project layer first, module layer second, so module values shadow project values."""
    kp = project_bindings if isinstance(project_bindings, Mapping) else build_layer(project_bindings, diagnostics)
    km = module_bindings if isinstance(module_bindings, Mapping) else build_layer(
        module_bindings, diagnostics, f"module {module_id}")
    return VariableEnvironment([("project", kp), (module_id, km)], catalogs)


def _candidates(path: str) -> list[str]:
    out = [path]
    p = path
    while True:
        for pre in _ALIAS_PREFIXES:
            if p.startswith(pre) and len(p) > len(pre):
                p = p[len(pre):]
                out.append(p)
                break
        else:
            return out


class _Resolver:
    def __init__(self, env: VariableEnvironment):
        self.env = env
        self.missing: list[str] = []
        self.budget = MAX_LOOKUPS

    def spend(self) -> bool:
        self.budget -= 1
        return self.budget >= 0

    def find(self, path: str, depth: int = 0) -> tuple[Optional[str], Optional[Value]]:
        """``(key, value)`` a reference resolves to, following aliases of map prefixes."""
        if depth > MAX_DEPTH:
            return None, None
        for key in _candidates(path):
            b = self.env.lookup(key)
            if b is not None:
                return key, b.value
            version = self.env.catalog_version(key)
            if version is not None:
                return key, Literal(version)
        # `def v = versions` then `v.support`: rewrite the aliased prefix
        for key in _candidates(path):
            parts = key.split(".")
            for cut in range(len(parts) - 1, 0, -1):
                b = self.env.lookup(".".join(parts[:cut]))
                if b is not None and isinstance(b.value, Reference):
                    return self.find(b.value.path + "." + ".".join(parts[cut:]), depth + 1)
        return None, None

    def text(self, value: Value, stack: tuple = (), depth: int = 0) -> Optional[str]:
        """Resolved text, or ``None``; unresolved pieces are recorded in :attr:`missing`."""
        if isinstance(value, Literal):
            return value.text
        if isinstance(value, Concat):
            out = []
            ok = True
            for piece in value.pieces:
                t = self.text(piece, stack, depth)
                if t is None:
                    ok = False
                    t = str(piece)
                out.append(t)
            return "".join(out) if ok else None
        if isinstance(value, Reference):
            if depth >= MAX_DEPTH or not self.spend():
                self.missing.append(value.path)
                return None
            key, target = self.find(value.path)
            if target is None or key in stack:
                if value.fallback is not None:
                    return self.text(value.fallback, stack, depth + 1)
                self.missing.append(value.path)
                return None
            return self.text(target, stack + (key,), depth + 1)
        return None

    def partial(self, value: Value, stack: tuple = (), depth: int = 0) -> str:
        """Like :meth:`text` but unresolved references are kept as ``${path}``."""
        if isinstance(value, Literal):
            return value.text
        if isinstance(value, Concat):
            return "".join(self.partial(p, stack, depth) for p in value.pieces)
        if isinstance(value, Reference) and depth < MAX_DEPTH and self.spend():
            key, target = self.find(value.path)
            if target is not None and key not in stack:
                return self.partial(target, stack + (key,), depth + 1)
            if value.fallback is not None:
                return self.partial(value.fallback, stack, depth + 1)
        return str(value)


def resolve_value(env: VariableEnvironment, value: Value, diagnostics: Optional[Diagnostics] = None,
                  location: Optional[Location] = None) -> Union[str, _Unresolved]:
    r = _Resolver(env)
    text = r.text(value)
    if text is None:
        if diagnostics is not None:
            for name in dict.fromkeys(r.missing):
                diagnostics.warning(DiagCode.UNRESOLVED_VAR, f"cannot resolve variable {name!r}", location,
                                    subject=name)
        return UNRESOLVED
    return text


def resolve_partial(env: VariableEnvironment, value: Value, diagnostics: Optional[Diagnostics] = None,
                    location: Optional[Location] = None) -> tuple[str, list[str]]:
    """Resolved text with unresolvable references left as ``${path}``, plus their names."""
    r = _Resolver(env)
    text = r.text(value)
    if text is not None:
        return text, []
    missing = list(dict.fromkeys(r.missing))
    if diagnostics is not None:
        for name in missing:
            diagnostics.warning(DiagCode.UNRESOLVED_VAR, f"cannot resolve variable {name!r}", location, subject=name)
    r.budget = MAX_LOOKUPS
    return r.partial(value), missing


def expand_catalog_ref(catalog: Optional[CatalogModel], alias_path: str, is_bundle: bool = False,
                       diagnostics: Optional[Diagnostics] = None, location: Optional[Location] = None,
                       catalog_name: str = "libs", **provenance) -> list:
    """Coordinates named by ``libs.<alias>`` or ``libs.bundles.<alias>``.

    A library whose ``module`` is not a valid ``group:artifact`` comes back as
    its raw text, like any other malformed coordinate.

    An unknown alias yields a single ``UNRESOLVED`` placeholder
    ``<catalog>:<alias>`` so the failure stays visible in the report.
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    name = catalog.name if catalog is not None else catalog_name
    members = None
    if catalog is not None:
        if is_bundle:
            members = catalog.bundle(alias_path)
            members = None if members is None else [catalog.libraries[m] for m in members]
        else:
            lib = catalog.library(alias_path)
            members = None if lib is None else [lib]
    if members is None:
        label = f"{name}.{'bundles.' if is_bundle else ''}{alias_path}"
        diagnostics.error(DiagCode.UNKNOWN_CATALOG_ALIAS, f"version catalog has no entry for {label}", location,
                          subject=f"{name}:{alias_path}")
        return [Coordinate(name, alias_path, None, Status.UNRESOLVED, source="catalog", location=location,
                           **provenance)]
    out = []
    for lib in members:
        version = catalog.library_version(lib)
        text = lib.module if version is None else f"{lib.module}:{version}"
        try:
            out.append(parse_coordinate(text, source="catalog", location=location, **provenance))
        except MalformedCoordinate as exc:
            diagnostics.warning(DiagCode.MALFORMED_COORDINATE, str(exc), location, subject=text)
            out.append(text)
    return out


def expand_bom(bom: Coordinate, versionless: Iterable[Coordinate]) -> list[Coordinate]:
    """Same-group versionless coordinates take the BOM's version."""
    out = []
    for c in versionless:
        if c.version is None and c.group == bom.group and bom.version is not None and bom.status.concrete:
            out.append(c.evolve(version=bom.version, status=Status.BOM_DERIVED))
        else:
            out.append(c)
    return out


# keyword filtering ----------------------------------------------------

@dataclass(frozen=True)
class VariantSelection:
    names: frozenset
    explicit: bool = False

    @classmethod
    def default(cls, flavors: Iterable[str] = ()) -> "VariantSelection":
        return cls(frozenset({"release"} | {f.lower() for f in flavors}))

    @classmethod
    def of(cls, names: Iterable[str]) -> "VariantSelection":
        return cls(frozenset(n.strip().lower() for n in names if n.strip()), explicit=True)

    def admits(self, prefix: str, known_variants: Iterable[str] = ()) -> bool:
        segments = segment_variants(prefix, set(known_variants) | set(self.names))
        if segments is None:
            segments = [prefix.lower()]
        return all(s in self.names for s in segments)


@dataclass(frozen=True)
class KeywordDecision:
    kind: KeywordKind
    kept: bool
    reason: Optional[str] = None
    variant: Optional[str] = None


def decide_keyword(keyword: str, known_variants: Iterable[str], selection: VariantSelection,
                   table: KeywordTable = DEFAULT_TABLE, diagnostics: Optional[Diagnostics] = None,
                   location: Optional[Location] = None) -> KeywordDecision:
    klass = table.classify(keyword, known_variants, diagnostics, location)
    if klass.kind is KeywordKind.INCLUDE:
        return KeywordDecision(klass.kind, True)
    if klass.kind is KeywordKind.EXCLUDE:
        return KeywordDecision(klass.kind, False, "excluded-keyword")
    if selection.admits(klass.variant_prefix, known_variants):
        return KeywordDecision(klass.kind, True, variant=klass.variant_prefix)
    return KeywordDecision(klass.kind, False, "variant-not-selected", klass.variant_prefix)


# normalization ------------------------------------------------------------

@dataclass(frozen=True)
class ExcludedItem:
    item: Union[Coordinate, str]
    reason: str
    keyword: Optional[str] = None
    origin_module: Optional[str] = None
    location: Optional[Location] = None

    @property
    def text(self) -> str:
        return str(self.item)

    def sort_key(self) -> tuple:
        if isinstance(self.item, Coordinate):
            head = (self.item.group, self.item.artifact, self.item.version or "")
        else:
            head = (self.item, "", "")
        loc = (self.location.file, self.location.line) if self.location else ("", 0)
        return head + (self.reason, self.origin_module or "", self.keyword or "") + loc

    def to_dict(self) -> dict:
        out = {"reason": self.reason, "keyword": self.keyword, "origin_module": self.origin_module,
               "location": None if self.location is None else {"file": self.location.file,
                                                                "line": self.location.line}}
        if isinstance(self.item, Coordinate):
            out["coordinate"] = self.item.to_dict()
        else:
            out["raw"] = self.item
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExcludedItem":
        item = Coordinate.from_dict(data["coordinate"]) if "coordinate" in data else data["raw"]
        loc = data.get("location")
        return cls(item, data["reason"], data.get("keyword"), data.get("origin_module"),
                   None if loc is None else Location(loc["file"], loc["line"]))


@dataclass
class NormalizeResult:
    coordinates: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    file_trees: dict = field(default_factory=dict)
    module_refs: list = field(default_factory=list)


class _Normalizer:
    def __init__(self, envs, catalogs, selection, known_variants, table, diagnostics):
        self.envs = envs
        self.catalogs = catalogs
        self.selection = selection
        self.known = known_variants
        self.table = table
        self.diag = diagnostics
        self.out = NormalizeResult()

    def env(self, module: str) -> VariableEnvironment:
        env = self.envs.get(module)
        if env is None:
            env = VariableEnvironment([], self.catalogs)
            self.envs[module] = env
        return env

    def run(self, declarations: Iterable[DeclarationRecord], packaged: bool = True, reason: str = ""):
        by_module: dict[str, list] = {}
        for rec in declarations:
            by_module.setdefault(rec.origin_module, []).append(rec)
        for module, recs in by_module.items():
            self.module(module, recs, packaged, reason)
        return self.out

    def module(self, module: str, recs: list, packaged: bool, not_packaged_reason: str):
        known = self.known.get(module, ()) if isinstance(self.known, Mapping) else self.known
        kept_coords: list[Coordinate] = []
        boms: list[Coordinate] = []
        for rec in recs:
            decision = decide_keyword(rec.keyword, known, self.selection, self.table,
                                      self.diag if packaged else None, rec.location)
            if decision.kept and packaged and decision.variant is not None:
                self.diag.info(DiagCode.VARIANT_INCLUDED,
                               f"{rec.keyword} declaration kept for variant {decision.variant!r}", rec.location,
                               subject=decision.variant)
            live = decision.kept and packaged
            diag = self.diag if live else Diagnostics()
            why = decision.reason if not decision.kept else not_packaged_reason
            for leaf, in_bom in _leaves(rec.payload):
                if isinstance(leaf, ModuleRef):
                    self.out.module_refs.append((rec, leaf))
                    continue
                if isinstance(leaf, FileTree):
                    if live:
                        self.out.file_trees.setdefault(module, []).append(leaf)
                    continue
                for item in self.payload(leaf, rec, module, diag):
                    if isinstance(item, str):
                        self.out.excluded.append(ExcludedItem(item, "unresolved" if live else why, rec.keyword,
                                                              module, rec.location))
                        continue
                    if in_bom:
                        item = item.evolve(source="bom")
                    if live:
                        kept_coords.append(item)
                        if in_bom:
                            boms.append(item)
                    else:
                        self.out.excluded.append(ExcludedItem(item, why, rec.keyword, module, rec.location))
        self.apply_boms(kept_coords, boms)

    def apply_boms(self, coords: list, boms: list):
        best: dict[str, Coordinate] = {}
        for bom in boms:
            if bom.version is None or not bom.status.concrete:
                continue
            cur = best.get(bom.group)
            if cur is None or compare_versions(bom.version, cur.version) > 0:
                best[bom.group] = bom
        for c in coords:
            if c.version is None and c.group in best:
                c = expand_bom(best[c.group], [c])[0]
            elif c.version is None:
                self.diag.warning(DiagCode.UNRESOLVED_VERSION, f"{c} has no version and no BOM supplies one",
                                  c.location, subject=f"{c.group}:{c.artifact}")
            elif c.status is Status.AMBIGUOUS:
                self.diag.warning(DiagCode.AMBIGUOUS_VERSION, f"{c} uses a dynamic version", c.location,
                                  subject=f"{c.group}:{c.artifact}")
            elif c.status is Status.UNRESOLVED:
                self.diag.warning(DiagCode.UNRESOLVED_VERSION, f"version of {c.group}:{c.artifact} is unresolved: "
                                  f"{c.version}", c.location, subject=f"{c.group}:{c.artifact}")
            self.out.coordinates.append(c)

    def payload(self, leaf, rec: DeclarationRecord, module: str, diag: Diagnostics) -> list:
        prov = dict(keyword=rec.keyword, origin_module=module, location=rec.location)
        if isinstance(leaf, CatalogRef):
            return expand_catalog_ref(self.catalogs.get(leaf.catalog), leaf.alias, leaf.is_bundle, diag,
                                      catalog_name=leaf.catalog, **prov)
        if isinstance(leaf, CoordinateText):
            env = self.env(module)
            value = leaf.value
            if isinstance(value, Reference) and env.lookup(value.path) is None:
                children = env.indexed_children(value.path)
                if children:
                    # `implementation deps.supportLibs` where supportLibs is a list
                    out = []
                    for key in children:
                        out.extend(self.coordinate(Reference(key), env, rec, diag, prov))
                    return out
            return self.coordinate(value, env, rec, diag, prov)
        return []

    def coordinate(self, value: Value, env: VariableEnvironment, rec, diag: Diagnostics, prov) -> list:
        text, missing = resolve_partial(env, value, diag, rec.location)
        try:
            return [parse_coordinate(text, **prov)]
        except MalformedCoordinate as exc:
            if missing:
                return [text]
            diag.warning(DiagCode.MALFORMED_COORDINATE, str(exc), rec.location, subject=text)
            return [text]


def _leaves(payload, in_bom: bool = False):
    if isinstance(payload, Multi):
        for item in payload.items:
            yield from _leaves(item, in_bom)
    elif isinstance(payload, PlatformBom):
        yield from _leaves(payload.inner, True)
    else:
        yield payload, in_bom


def normalize(declarations: Iterable[DeclarationRecord], envs: Optional[dict] = None,
              catalogs: Optional[Mapping[str, CatalogModel]] = None,
              selection: Optional[VariantSelection] = None, known_variants=(),
              table: KeywordTable = DEFAULT_TABLE, diagnostics: Optional[Diagnostics] = None,
              packaged: bool = True, not_packaged_reason: str = "not-packaged") -> NormalizeResult:
    """Turn declarations into coordinates, applying the keyword filter first.

    ``envs`` maps module id to its :class:`VariableEnvironment`;
    ``known_variants`` is either one iterable or a mapping module id to names.
    With ``packaged=False`` every coordinate goes to ``excluded`` with
    ``not_packaged_reason`` (used for modules cut off from the APK).
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    n = _Normalizer(envs if envs is not None else {}, dict(catalogs or {}), selection or VariantSelection.default(),
                    known_variants, table, diagnostics)
    return n.run(declarations, packaged, not_packaged_reason)

