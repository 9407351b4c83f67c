"""End-to-end extraction: aggregate reachable declarations, normalize, deduplicate, resolve conflicts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from .discovery import (LocalArtifact, ProjectLayout, discover, discover_custom_scripts,
                        read_text, resolve_apply_target, scan_local_artifacts)
from .graph import Edge, build_graph, identify_main, reachable_modules
from .keywords import DEFAULT_TABLE, KeywordTable
from .model import Coordinate, DiagCode, Diagnostic, Diagnostics, Severity, Status, is_dynamic
from .parsing.bindings import PROJECT, parse_properties
from .parsing.catalog import parse_catalog
from .parsing.declarations import DeclarationRecord, ModuleRef
from .parsing.lexer import Dialect
from .parsing.scripts import ScriptInfo, analyze_script
from .resolve import (ExcludedItem, VariantSelection, build_layer, compose_environment, decide_keyword,
                      normalize)
from .versions import version_key


# aggregation, dedup and conflict resolution --------------------------------

def aggregate(order: Sequence[str], declarations: dict) -> list[DeclarationRecord]:
    """Declarations of the modules in ``order``, module by module, source order within each."""
    out = []
    for m in order:
        out.extend(declarations.get(m, ()))
    return out


def _origin(c: Coordinate) -> tuple:
    loc = c.location
    return (c.origin_module or "", c.keyword or "", loc.file if loc else "", loc.line if loc else 0)


def dedup(triplets: Iterable[Coordinate]) -> list[Coordinate]:
    """Collapse exact ``(group, artifact, version)`` duplicates, keeping the first and merging origins."""
    first: dict[tuple, Coordinate] = {}
    origins: dict[tuple, list] = {}
    for c in triplets:
        own = list(c.origins) or [_origin(c)]
        if c.key not in first:
            first[c.key] = c
            origins[c.key] = []
        for o in own:
            if o not in origins[c.key]:
                origins[c.key].append(o)
    return [c.evolve(origins=tuple(origins[k])) for k, c in first.items()]


def _rank(c: Coordinate) -> tuple:
    # concrete beats non-concrete; then highest version; ties broken by the version string
    version = c.version or ""
    return (c.status.concrete, c.version is not None, version_key(version) if version else (), version)


def split_conflicts(unique: Iterable[Coordinate]) -> tuple[list[Coordinate], list[Coordinate]]:
    """``(winners, losers)``: one coordinate per ``(group, artifact)``, the highest concrete version."""
    groups: dict[tuple, list] = {}
    for c in unique:
        groups.setdefault(c.ga, []).append(c)
    winners, losers = [], []
    for ga in sorted(groups):
        members = groups[ga]
        best = max(members, key=_rank)
        winners.append(best)
        losers.extend(m for m in members if m is not best and m.key != best.key)
    return winners, losers


def resolve_conflicts(unique: Iterable[Coordinate]) -> list[Coordinate]:
    return split_conflicts(unique)[0]


# .iml recovery ---------------------------------------------------------------

_IML_NAME_RE = re.compile(r'<(?:orderEntry|library)\b[^>]*?\bname="([^"]+)"')
_DASH_VERSION_RE = re.compile(r"^(.+?)-(\d[\w.+\-]*)$")


def parse_iml_entries(text: str) -> list[tuple[Optional[str], str, str]]:
    """``(group or None, artifact, version)`` for every library entry of an ``.iml`` file."""
    out = []
    for name in _IML_NAME_RE.findall(text):
        name = re.sub(r"^(Gradle|Maven):\s*", "", name.strip())
        name = name.split("@")[0]
        parts = name.split(":")
        if len(parts) >= 3:
            entry = (parts[0], parts[1], parts[2])
        elif len(parts) == 2:
            entry = (None, parts[0], parts[1])
        else:
            m = _DASH_VERSION_RE.match(name)
            if not m:
                continue
            entry = (None, m.group(1), m.group(2))
        if entry[1] and entry[2] and not is_dynamic(entry[2]):
            out.append(entry)
    return out


def _admits(dynamic: str, version: str) -> bool:
    if dynamic.endswith("+"):
        prefix = dynamic[:-1]
        return version.startswith(prefix)
    return True


def recover_ambiguous_from_iml(coords: Iterable[Coordinate], iml_files: Iterable = (),
                               diagnostics: Optional[Diagnostics] = None, root: Optional[Path] = None,
                               iml_texts: Optional[Iterable[str]] = None) -> list[Coordinate]:
    """Give ``AMBIGUOUS`` coordinates the concrete version an IDE project file recorded, if unique."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    coords = list(coords)
    texts = list(iml_texts) if iml_texts is not None else [read_text(p, diagnostics, root) for p in iml_files]
    entries = [e for t in texts for e in parse_iml_entries(t)]
    if not entries:
        return coords
    out = []
    for c in coords:
        if c.status is not Status.AMBIGUOUS or c.version is None:
            out.append(c)
            continue
        versions = sorted({v for g, a, v in entries
                           if a == c.artifact and (g is None or g == c.group) and _admits(c.version, v)})
        if len(versions) == 1:
            diagnostics.info(DiagCode.IML_RECOVERED, f"{c} recovered as version {versions[0]} from an .iml file",
                             c.location, subject=f"{c.group}:{c.artifact}")
            out.append(c.evolve(version=versions[0], status=Status.IML_RECOVERED))
        elif versions:
            diagnostics.warning(DiagCode.IML_CONFLICT, f"{c}: .iml files record several versions "
                                f"({', '.join(versions)}); left ambiguous", c.location,
                                subject=f"{c.group}:{c.artifact}")
            out.append(c)
        else:
            out.append(c)
    return out


# report --------------------------------------------------------------------

@dataclass
class ExtractionReport:
    project: str
    main_module: Optional[str]
    module_order: list = field(default_factory=list)
    dependencies: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    local_artifacts: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    tool_version: str = __version__

    @property
    def final_labels(self) -> list[Coordinate]:
        return self.dependencies

    def labels(self) -> set:
        return {c.key for c in self.dependencies}

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "main_module": self.main_module,
            "module_order": list(self.module_order),
            "dependencies": [c.to_dict() for c in self.dependencies],
            "excluded": [e.to_dict() for e in self.excluded],
            "local_artifacts": [a.to_dict() for a in self.local_artifacts],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "tool_version": self.tool_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionReport":
        return cls(
            project=data["project"],
            main_module=data.get("main_module"),
            module_order=list(data.get("module_order", [])),
            dependencies=[Coordinate.from_dict(d) for d in data.get("dependencies", [])],
            excluded=[ExcludedItem.from_dict(e) for e in data.get("excluded", [])],
            local_artifacts=[LocalArtifact.from_dict(a) for a in data.get("local_artifacts", [])],
            diagnostics=[Diagnostic.from_dict(d) for d in data.get("diagnostics", [])],
            tool_version=data.get("tool_version", __version__),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExtractionReport":
        return cls.from_dict(json.loads(text))

    def to_lines(self, with_status: bool = False) -> str:
        lines = []
        for c in self.dependencies:
            line = f"{c.group}:{c.artifact}:{c.version if c.version is not None else ''}"
            if with_status:
                line += f":{c.status.value}"
            lines.append(line)
        return "".join(f"{line}\n" for line in sorted(lines))

    def __eq__(self, other):
        if not isinstance(other, ExtractionReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# pipeline --------------------------------------------------------------------

@dataclass(frozen=True)
class Options:
    variants: Optional[tuple] = None
    main_module: Optional[str] = None
    keyword_table: KeywordTable = DEFAULT_TABLE
    iml_recovery: bool = True


@dataclass
class _Module:
    module_id: str
    scripts: list = field(default_factory=list)  # ScriptInfo
    bindings: list = field(default_factory=list)
    declarations: list = field(default_factory=list)
    plugins: list = field(default_factory=list)
    flavors: list = field(default_factory=list)
    build_types: list = field(default_factory=list)


class _Scan:
    """Parses every relevant script once and sorts the results per module and layer."""

    def __init__(self, layout: ProjectLayout, diagnostics: Diagnostics):
        self.layout = layout
        self.diag = diagnostics
        self.catalogs = {}
        self.project_bindings: list = []
        self.modules: dict[str, _Module] = {}
        self.applied: set[Path] = set()
        self.dialects: set[Dialect] = set()

    def rel(self, p: Path) -> str:
        return self.layout.rel(p)

    def run(self):
        layout = self.layout
        for name, path in layout.catalog_files:
            self.catalogs[name] = parse_catalog(read_text(path, self.diag, layout.root_dir), self.diag,
                                                self.rel(path), name)
        for p in layout.property_files:
            self.project_bindings.extend(parse_properties(read_text(p, self.diag, layout.root_dir), PROJECT,
                                                          self.rel(p)))
        if layout.settings_file is not None:
            info = self.analyze(layout.settings_file, ":", PROJECT)
            self.project_bindings.extend(info.bindings)
        applies = []
        for m in layout.modules:
            mod = self.modules[m.module_id] = _Module(m.module_id)
            scope = PROJECT if m.module_id == ":" else m.module_id
            for p in m.property_files:
                mod.bindings.extend(parse_properties(read_text(p, self.diag, layout.root_dir), scope, self.rel(p)))
            for bf in m.build_files:
                applies.extend(self.script_tree(bf, mod, scope))
        layout.custom_scripts = discover_custom_scripts(layout.root_dir, applies, self.diag)
        for p in layout.custom_scripts:
            if p in self.applied:
                continue
            # named by convention but never applied: definitions are visible project-wide
            info = self.analyze(p, ":", PROJECT)
            self.project_bindings.extend(info.bindings)
        if len(self.dialects) > 1:
            self.diag.info(DiagCode.MIXED_DSL, "project mixes Groovy and Kotlin DSL scripts; "
                                               "bindings from both are merged")

    def analyze(self, path: Path, origin: str, scope: str) -> ScriptInfo:
        dialect = Dialect.for_path(path)
        self.dialects.add(dialect)
        text = read_text(path, self.diag, self.layout.root_dir)
        return analyze_script(text, dialect, origin, scope, self.diag, self.rel(path), self.catalogs)

    def script_tree(self, path: Path, mod: _Module, scope: str) -> list:
        """Analyze a build file and, transitively, the scripts it applies."""
        applies = []
        stack = [path]
        visited: set[Path] = set()
        while stack:
            p = stack.pop(0)
            if p in visited:
                continue
            visited.add(p)
            if p != path:
                self.applied.add(p)
            info = self.analyze(p, mod.module_id, scope)
            mod.scripts.append(info)
            target_bindings = self.project_bindings if scope == PROJECT else mod.bindings
            target_bindings.extend(info.bindings)
            mod.declarations.extend(info.declarations)
            for plugin in info.plugins:
                if plugin not in mod.plugins:
                    mod.plugins.append(plugin)
            for f in info.flavors:
                if f not in mod.flavors:
                    mod.flavors.append(f)
            for b in info.build_types:
                if b not in mod.build_types:
                    mod.build_types.append(b)
            for a in info.apply_from:
                applies.append((p, a))
                target = resolve_apply_target(a, p, self.layout.root_dir)
                if target is not None and target.is_file() and target not in visited:
                    stack.append(target)
        return applies


def _selection(options: Options, modules: Iterable[_Module]) -> VariantSelection:
    if options.variants:
        return VariantSelection.of(options.variants)
    flavors = []
    for m in modules:
        flavors.extend(m.flavors)
    return VariantSelection.default(flavors)


def _dedupe_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    seen = set()
    out = []
    for d in diags:
        key = (d.severity, d.code, d.message, d.location, d.subject)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


def _ensure_flagged(final: Iterable[Coordinate], diagnostics: Diagnostics):
    flagged = {(d.code, d.subject) for d in diagnostics}
    for c in final:
        subject = f"{c.group}:{c.artifact}"
        if c.status is Status.AMBIGUOUS and (DiagCode.AMBIGUOUS_VERSION, subject) not in flagged \
                and (DiagCode.IML_CONFLICT, subject) not in flagged:
            diagnostics.warning(DiagCode.AMBIGUOUS_VERSION, f"{c} has an ambiguous version", c.location,
                                subject=subject)
        elif c.status is Status.UNRESOLVED and not any(s == subject for _code, s in flagged):
            diagnostics.warning(DiagCode.UNRESOLVED_VERSION, f"{c} has no resolvable version", c.location,
                                subject=subject)


def extract_project(project_dir, options: Optional[Options] = None) -> ExtractionReport:
    """Full pipeline for one project directory.

    Raises :class:`~tplextract.model.ExtractionError` subclasses for a
    missing/unreadable directory, a non-Gradle directory, or several
    application modules without ``main_module``; everything else becomes a
    diagnostic on the report.
    """
    options = options or Options()
    diag = Diagnostics()
    layout = discover(project_dir, diag)
    scan = _Scan(layout, diag)
    scan.run()
    mods = scan.modules
    table = options.keyword_table

    project_layer = build_layer(scan.project_bindings, diag)
    envs = {}
    for mid, mod in mods.items():
        module_layer = build_layer(mod.bindings, diag, f"module {mid}") if mid != ":" else {}
        envs[mid] = compose_environment(project_layer, module_layer, None, scan.catalogs, mid)
    known = {mid: tuple(mod.flavors) + tuple(mod.build_types) for mid, mod in mods.items()}
    selection = _selection(options, mods.values())

    refs = []
    for mid, mod in mods.items():
        for rec in mod.declarations:
            for leaf in rec.leaves():
                if isinstance(leaf, ModuleRef):
                    refs.append((mid, leaf.module_id, rec.keyword, rec.location))
    graph = build_graph(mods.keys(), refs, diag)
    main = identify_main(graph, {mid: mod.plugins for mid, mod in mods.items()}, options.main_module, diag)
    report = ExtractionReport(project=layout.root_dir.name, main_module=main)
    if main is None:
        layout.local_artifacts = scan_local_artifacts(layout, {}, diag)
        report.local_artifacts = layout.local_artifacts
        report.diagnostics = _dedupe_diagnostics(diag)
        return report

    def edge_filter(e: Edge) -> Optional[str]:
        d = decide_keyword(e.keyword, known.get(e.src, ()), selection, table)
        return None if d.kept else d.reason

    order = reachable_modules(graph, edge_filter, diag)
    declarations = {mid: mod.declarations for mid, mod in mods.items()}
    aggregated = aggregate(order, declarations)
    norm = normalize(aggregated, envs, scan.catalogs, selection, known, table, diag)
    excluded = list(norm.excluded)
    for module, why in sorted(graph.excluded):
        cut = normalize(declarations.get(module, ()), envs, scan.catalogs, selection, known, table, Diagnostics(),
                        packaged=False, not_packaged_reason=f"not-packaged:{why}")
        excluded.extend(cut.excluded)

    unique = dedup(norm.coordinates)
    if options.iml_recovery and layout.iml_files:
        unique = dedup(recover_ambiguous_from_iml(unique, layout.iml_files, diag, layout.root_dir))
    final, losers = split_conflicts(unique)
    excluded.extend(ExcludedItem(c, "version-conflict", c.keyword, c.origin_module, c.location) for c in losers)
    _ensure_flagged(final, diag)

    layout.local_artifacts = scan_local_artifacts(layout, norm.file_trees, diag)
    report.module_order = order
    report.dependencies = sorted(final, key=lambda c: (c.group, c.artifact))
    report.excluded = sorted(excluded, key=ExcludedItem.sort_key)
    report.local_artifacts = layout.local_artifacts
    report.diagnostics = _dedupe_diagnostics(diag)
    return report


def error_count(report: ExtractionReport) -> int:
    return sum(1 for d in report.diagnostics if d.severity is Severity.ERROR)

