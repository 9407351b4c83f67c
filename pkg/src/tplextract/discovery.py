"""Project layout: root, modules, settings overrides, custom scripts and local binaries."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .model import DiagCode, Diagnostics, Location, NotAGradleProject, ProjectIOError
from .parsing import expr as ex
from .parsing.declarations import FileTree
from .parsing.lexer import Dialect, Tok
from .parsing.scripts import ApplyFrom
from .parsing.tree import parse_script
from .parsing.values import Concat, Literal, Reference

SETTINGS_FILES = ("settings.gradle", "settings.gradle.kts")
BUILD_FILES = ("build.gradle", "build.gradle.kts")
CUSTOM_SCRIPT_NAMES = frozenset({
    "constants.gradle", "versions.gradle", "config.gradle", "dependencies_groups.gradle",
    "dependencies.gradle", "dependency-versions.gradle", "variables.gradle", "deps.gradle",
    "sdkVersion.gradle", "standalone.gradle", "root_all_projects_ext.gradle", "dependencies.kt",
    "dependencies.gradle.kts", "Deps.kt", "deps.kt", "Vers.kt", "Versions.kt",
})
ARTIFACT_KINDS = {".jar": "JAR", ".aar": "AAR", ".so": "SO"}
SKIP_DIRS = frozenset({"build", ".gradle", ".git", ".idea", "node_modules", ".svn", ".hg"})
DEEP_SCRIPT_DEPTH = 3
_ROOT_REFS = {"rootDir", "rootProject.projectDir", "rootProject.rootDir", "project.rootDir", "settingsDir",
              "rootProject.projectDir.path", "rootDir.path", "rootDir.absolutePath", "rootProject.rootDir.path"}
_PROJECT_REFS = {"projectDir", "project.projectDir", "buildscript.sourceFile.parent", "projectDir.path"}


@dataclass
class ModuleInfo:
    module_id: str
    dir: Path
    build_files: list = field(default_factory=list)
    property_files: list = field(default_factory=list)
    override: bool = False


@dataclass(frozen=True)
class LocalArtifact:
    path: str
    kind: str
    size_bytes: int
    referenced: bool = False
    module: Optional[str] = None

    def to_dict(self) -> dict:
        return {"path": self.path, "kind": self.kind, "size_bytes": self.size_bytes,
                "referenced": self.referenced, "module": self.module}

    @classmethod
    def from_dict(cls, data: dict) -> "LocalArtifact":
        return cls(data["path"], data["kind"], data["size_bytes"], data.get("referenced", False), data.get("module"))


@dataclass
class ProjectLayout:
    root_dir: Path
    settings_file: Optional[Path] = None
    property_files: list = field(default_factory=list)
    catalog_files: list = field(default_factory=list)  # (accessor name, path)
    modules: list = field(default_factory=list)
    custom_scripts: list = field(default_factory=list)
    local_artifacts: list = field(default_factory=list)
    iml_files: list = field(default_factory=list)

    def module(self, module_id: str) -> Optional[ModuleInfo]:
        for m in self.modules:
            if m.module_id == module_id:
                return m
        return None

    def rel(self, path) -> str:
        return os.path.relpath(path, self.root_dir).replace(os.sep, "/")


def read_text(path: Path, diagnostics: Optional[Diagnostics] = None, layout_root: Optional[Path] = None) -> str:
    try:
        return Path(path).read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        if diagnostics is not None:
            shown = os.path.relpath(path, layout_root) if layout_root else str(path)
            diagnostics.warning(DiagCode.UNREADABLE, f"cannot read {shown}: {exc.strerror or exc}", Location(shown, 0))
        return ""


def _has_any(d: Path, names) -> bool:
    return any((d / n).is_file() for n in names)


def locate_root(start_dir) -> ProjectLayout:
    """Skeleton layout: root directory plus settings, property and catalog files."""
    start = Path(start_dir)
    if not start.exists():
        raise ProjectIOError(f"no such directory: {start}", path=str(start))
    if not start.is_dir():
        raise ProjectIOError(f"not a directory: {start}", path=str(start))
    start = start.resolve()
    try:
        os.listdir(start)
    except OSError as exc:
        raise ProjectIOError(f"cannot read directory {start}: {exc.strerror}", path=str(start)) from exc
    chain = [start, *start.parents]
    root = next((d for d in chain if _has_any(d, SETTINGS_FILES)), None)
    if root is None:
        root = next((d for d in chain if _has_any(d, BUILD_FILES)), None)
    if root is None:
        raise NotAGradleProject(f"no Gradle settings or build file at or above {start}", path=str(start))
    layout = ProjectLayout(root)
    layout.settings_file = next((root / n for n in SETTINGS_FILES if (root / n).is_file()), None)
    if (root / "gradle.properties").is_file():
        layout.property_files.append(root / "gradle.properties")
    layout.catalog_files = find_catalogs(root)
    return layout


def find_catalogs(root: Path) -> list[tuple[str, Path]]:
    """``gradle/libs.versions.toml`` and siblings; ``libs.toml`` / ``libs.version.toml`` too."""
    out = []
    seen = set()
    for base in (root / "gradle", root):
        if not base.is_dir():
            continue
        for p in sorted(base.iterdir()):
            if not p.is_file():
                continue
            name = None
            for suffix in (".versions.toml", ".version.toml"):
                if p.name.endswith(suffix):
                    name = p.name[:-len(suffix)]
            if p.name == "libs.toml":
                name = "libs"
            if name and name not in seen:
                seen.add(name)
                out.append((name, p))
    return out


def _module_id(text: str) -> str:
    text = text.strip()
    return text if text.startswith(":") else ":" + text


def valid_module_id(module_id: str) -> bool:
    """Every ``:``-separated segment must be a plain directory name."""
    segments = [s for s in module_id.split(":") if s]
    return bool(segments) and all(s not in (".", "..") and "/" not in s and "\\" not in s for s in segments)


def default_module_dir(root: Path, module_id: str) -> Path:
    return root.joinpath(*[s for s in module_id.split(":") if s])


def _path_value(node, base: Path, root: Path) -> Optional[Path]:
    """Path expression on the right of ``projectDir =``; ``None`` when it cannot be evaluated statically."""
    if isinstance(node, ex.Call):
        name = ex.call_name(node)
        if name in ("File", "file") or (isinstance(node.func, ex.Name) and node.func.name == "File"):
            pos = node.positional()
            if len(pos) == 1:
                return _path_value(pos[0], base, root)
            if len(pos) == 2:
                parent = _path_value(pos[0], base, root)
                child = pos[1].literal if isinstance(pos[1], ex.Str) else None
                if parent is not None and child is not None:
                    return parent / child
        return None
    path = ex.dotted(node)
    if path and ".".join(path) in _ROOT_REFS:
        return root
    if isinstance(node, ex.Str):
        pieces = []
        for part in node.parts:
            if isinstance(part, str):
                pieces.append(part)
            else:
                p = ex.dotted(part)
                if p and ".".join(p) in _ROOT_REFS:
                    pieces.append(str(root))
                else:
                    return None
        text = "".join(pieces).replace("\\", "/")
        return (base / text) if not os.path.isabs(text) else Path(text)
    return None


def parse_settings(settings_file, diagnostics: Optional[Diagnostics] = None,
                   root: Optional[Path] = None) -> list[tuple[str, Optional[Path]]]:
    """``(module id, directory override)`` for every ``include``d project, in first-seen order."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    settings_file = Path(settings_file)
    try:
        text = settings_file.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise ProjectIOError(f"cannot read {settings_file}: {exc.strerror}", path=str(settings_file)) from exc
    root = root or settings_file.parent
    shown = settings_file.name
    dialect = Dialect.for_path(settings_file)
    tree = parse_script(text, dialect, diagnostics, shown)
    order: list[str] = []
    overrides: dict[str, Path] = {}
    for _anc, stmt in tree.walk():
        toks = stmt.tokens
        if not toks:
            continue
        if stmt.head == "include" and len(toks) > 1:
            rest = toks[1:]
            if rest[0].text == "(" and rest[-1].text == ")":
                rest = rest[1:-1]
            args = ex.parse_arguments(rest, dialect) or ()
            for a in args:
                items = a.value.items if isinstance(a.value, ex.ListLit) else (
                    a.value.positional() if isinstance(a.value, ex.Call) and ex.call_name(a.value) in ("listOf", "arrayOf")
                    else (a.value,))
                for item in items:
                    if isinstance(item, ex.Str) and item.literal:
                        mid = _module_id(item.literal)
                        if not valid_module_id(mid):
                            diagnostics.warning(DiagCode.BAD_OVERRIDE, f"include of invalid project path "
                                                f"{item.literal!r} ignored", Location(shown, stmt.line))
                            continue
                        if mid not in order:
                            order.append(mid)
            continue
        eq = next((k for k, t in enumerate(toks) if t.kind is Tok.OP and t.text == "="), None)
        if eq is None:
            continue
        lhs = ex.parse_expression(toks[:eq], dialect)
        if not (isinstance(lhs, ex.Attr) and lhs.name == "projectDir" and isinstance(lhs.obj, ex.Call)
                and ex.call_name(lhs.obj) in ("project", "findProject")):
            continue
        target = lhs.obj.positional()
        mid = target[0].literal if target and isinstance(target[0], ex.Str) else None
        if not mid:
            diagnostics.warning(DiagCode.BAD_OVERRIDE, f"cannot evaluate {stmt.text()}", Location(shown, stmt.line))
            continue
        value = _path_value(ex.parse_expression(toks[eq + 1:], dialect), settings_file.parent, root)
        if value is None:
            diagnostics.warning(DiagCode.BAD_OVERRIDE, f"projectDir override ignored: {stmt.text()}",
                                Location(shown, stmt.line), subject=_module_id(mid))
            continue
        overrides[_module_id(mid)] = Path(os.path.normpath(value))
    return [(mid, overrides.get(mid)) for mid in order]


def _build_files(d: Path) -> list[Path]:
    return [d / n for n in BUILD_FILES if (d / n).is_file()]


def enumerate_modules(layout: ProjectLayout, diagnostics: Diagnostics) -> list[ModuleInfo]:
    root = layout.root_dir
    modules = [ModuleInfo(":", root, _build_files(root))]
    entries = parse_settings(layout.settings_file, diagnostics, root) if layout.settings_file else []
    for mid, override in entries:
        if mid == ":":
            continue
        d = override if override is not None else default_module_dir(root, mid)
        m = ModuleInfo(mid, d, _build_files(d) if d.is_dir() else [], override=override is not None)
        if not d.is_dir():
            diagnostics.warning(DiagCode.MISSING_BUILD_FILE, f"module directory {layout.rel(d)} does not exist",
                                subject=mid)
        elif not m.build_files:
            diagnostics.warning(DiagCode.MISSING_BUILD_FILE, f"module {mid} has no build file", subject=mid)
        modules.append(m)
    for m in modules:
        if len(m.build_files) > 1:
            diagnostics.warning(DiagCode.MIXED_DSL, f"module {m.module_id} has both Groovy and Kotlin build "
                                f"files; declarations from both are merged", subject=m.module_id)
        if m.module_id != ":" and (m.dir / "gradle.properties").is_file():
            m.property_files.append(m.dir / "gradle.properties")
    return modules


def _walk(top: Path, diagnostics: Optional[Diagnostics], root: Path):
    """Deterministic recursive walk that skips build-output and VCS directories."""
    def onerror(exc):
        if diagnostics is not None:
            shown = os.path.relpath(exc.filename, root) if exc.filename else "?"
            diagnostics.warning(DiagCode.UNREADABLE, f"cannot scan {shown}: {exc.strerror}")

    for dirpath, dirnames, filenames in os.walk(top, onerror=onerror):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIP_DIRS)
        yield Path(dirpath), sorted(filenames)


def resolve_apply_target(apply: ApplyFrom, declaring_file: Path, root: Path) -> Optional[Path]:
    value = apply.target
    pieces = value.pieces if isinstance(value, Concat) else (value,)
    text = []
    for piece in pieces:
        if isinstance(piece, Literal):
            text.append(piece.text)
        elif isinstance(piece, Reference) and piece.path in _ROOT_REFS:
            text.append(str(root))
        elif isinstance(piece, Reference) and piece.path in _PROJECT_REFS:
            text.append(str(declaring_file.parent))
        else:
            return None
    target = "".join(text)
    if "://" in target:
        return None
    p = Path(target)
    if not p.is_absolute():
        p = declaring_file.parent / p
    return Path(os.path.normpath(p))


def discover_custom_scripts(root: Path, applies: Iterable[tuple[Path, ApplyFrom]] = (),
                            diagnostics: Optional[Diagnostics] = None) -> list[Path]:
    """Scripts found by conventional name anywhere under ``root`` plus every ``apply from`` target."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    root = Path(root)
    found: list[Path] = []
    for dirpath, filenames in _walk(root, diagnostics, root):
        for name in filenames:
            if name in CUSTOM_SCRIPT_NAMES:
                p = dirpath / name
                found.append(p)
                depth = len(p.relative_to(root).parts) - 1
                if depth > DEEP_SCRIPT_DEPTH:
                    diagnostics.info(DiagCode.DEEP_CUSTOM_SCRIPT,
                                     f"custom script found {depth} directories below the root: "
                                     f"{p.relative_to(root).as_posix()}")
    for declaring, apply in applies:
        target = resolve_apply_target(apply, Path(declaring), root)
        shown = os.path.relpath(apply.location.file, root) if os.path.isabs(apply.location.file) else apply.location.file
        loc = Location(shown, apply.location.line)
        if target is None:
            diagnostics.warning(DiagCode.MISSING_APPLY_TARGET, f"cannot resolve apply target {apply.target}", loc)
        elif not target.is_file():
            diagnostics.warning(DiagCode.MISSING_APPLY_TARGET,
                                f"applied script {os.path.relpath(target, root)} does not exist", loc)
        elif target not in found:
            found.append(target)
    return sorted(set(found), key=lambda p: os.path.relpath(p, root))


def find_iml_files(root: Path) -> list[Path]:
    return [d / n for d, names in _walk(root, None, root) for n in names if n.endswith(".iml")]


_GLOB_CACHE: dict[str, re.Pattern] = {}


def ant_match(pattern: str, rel_path: str) -> bool:
    """Ant-style path matching as used by ``fileTree`` (``*``, ``?``, ``**``)."""
    rx = _GLOB_CACHE.get(pattern)
    if rx is None:
        pat = pattern.replace("\\", "/")
        if pat.endswith("/"):
            pat += "**"
        out, i = [], 0
        while i < len(pat):
            if pat.startswith("**/", i):
                out.append("(?:.*/)?")
                i += 3
            elif pat.startswith("**", i):
                out.append(".*")
                i += 2
            elif pat[i] == "*":
                out.append("[^/]*")
                i += 1
            elif pat[i] == "?":
                out.append("[^/]")
                i += 1
            else:
                out.append(re.escape(pat[i]))
                i += 1
        rx = _GLOB_CACHE[pattern] = re.compile("".join(out) + r"\Z")
    return rx.match(rel_path) is not None


def file_tree_matches(tree: FileTree, module_dir: Path, file_path: Path, root: Path) -> bool:
    for f in tree.files:
        candidate = Path(f) if os.path.isabs(f) else module_dir / f
        if os.path.normpath(candidate) == os.path.normpath(file_path):
            return True
    if tree.dir is None:
        return False
    base = Path(os.path.normpath(module_dir / tree.dir))
    try:
        rel = file_path.relative_to(base).as_posix()
    except ValueError:
        return False
    includes = tree.includes or ("**",)
    if not any(ant_match(p, rel) for p in includes):
        return False
    return not any(ant_match(p, rel) for p in tree.excludes)


def scan_local_artifacts(layout: ProjectLayout, file_trees: Optional[dict] = None,
                         diagnostics: Optional[Diagnostics] = None) -> list[LocalArtifact]:
    """Inventory ``.jar``/``.aar``/``.so`` files under every module directory.

    Each file belongs to the deepest module containing it; ``referenced`` is
    set when one of that module's kept ``fileTree``/``files`` declarations
    matches it. ``file_trees`` maps module id to a list of :class:`FileTree`.
    """
    file_trees = file_trees or {}
    root = layout.root_dir
    dirs = sorted({(m.dir.resolve() if m.dir.exists() else m.dir, m.module_id) for m in layout.modules},
                  key=lambda x: (-len(x[0].parts), str(x[0])))
    seen: set[Path] = set()
    out = []
    # a projectDir override may point outside the root; its build files are read but
    # the artifact inventory stays inside the project
    top_root = root.resolve()
    tops = sorted({d for d, _ in dirs if d.is_dir() and _is_under(d, top_root)}, key=lambda d: (len(d.parts), str(d)))
    for top in tops:
        if any(top != t and _is_under(top, t) for t in tops):
            continue
        for dirpath, filenames in _walk(top, diagnostics, root):
            if dirpath.name == "wrapper" and dirpath.parent.name == "gradle":
                continue
            for name in filenames:
                kind = ARTIFACT_KINDS.get(os.path.splitext(name)[1].lower())
                if kind is None:
                    continue
                path = dirpath / name
                if path in seen:
                    continue
                seen.add(path)
                owner_dir, owner = next(((d, mid) for d, mid in dirs if _is_under(path, d)), (root, ":"))
                try:
                    size = path.stat().st_size
                except OSError:
                    size = 0
                referenced = any(file_tree_matches(t, owner_dir, path, root) for t in file_trees.get(owner, ()))
                out.append(LocalArtifact(layout.rel(path), kind, size, referenced, owner))
    out.sort(key=lambda a: a.path)
    return out


def _is_under(path: Path, d: Path) -> bool:
    try:
        path.relative_to(d)
        return True
    except ValueError:
        return False


def discover(project_dir, diagnostics: Optional[Diagnostics] = None) -> ProjectLayout:
    """Root, modules, catalogs and ``.iml`` files; custom scripts and artifacts are filled in later."""
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    layout = locate_root(project_dir)
    layout.modules = enumerate_modules(layout, diagnostics)
    layout.iml_files = find_iml_files(layout.root_dir)
    return layout
