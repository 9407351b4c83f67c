"""Gradle version catalogs (``libs.versions.toml``)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..model import Diagnostics, Location

_SEP_RE = re.compile(r"[-_.]")


def accessor_key(alias: str) -> str:
    """``core-ktx``, ``core_ktx`` and ``core.ktx`` all map to the accessor ``core.ktx``."""
    return _SEP_RE.sub(".", alias)


@dataclass(frozen=True)
class CatalogLibrary:
    alias: str
    group: str
    name: str
    version: Optional[str] = None
    version_ref: Optional[str] = None

    @property
    def module(self) -> str:
        return f"{self.group}:{self.name}"


@dataclass
class CatalogModel:
    name: str = "libs"
    versions: dict = field(default_factory=dict)
    libraries: dict = field(default_factory=dict)
    bundles: dict = field(default_factory=dict)
    plugins: dict = field(default_factory=dict)
    file: str = "<catalog>"

    def _find(self, table: dict, alias_path: str):
        key = accessor_key(alias_path)
        hits = [v for k, v in table.items() if accessor_key(k) == key]
        if not hits:
            hits = [v for k, v in table.items() if accessor_key(k).lower() == key.lower()]
        if len(hits) != 1:
            return None
        return hits[0]

    def library(self, alias_path: str) -> Optional[CatalogLibrary]:
        return self._find(self.libraries, alias_path)

    def bundle(self, alias_path: str) -> Optional[list]:
        return self._find(self.bundles, alias_path)

    def plugin(self, alias_path: str) -> Optional[str]:
        return self._find(self.plugins, alias_path)

    def library_version(self, lib: CatalogLibrary) -> Optional[str]:
        if lib.version is not None:
            return lib.version
        if lib.version_ref is not None:
            return self.versions.get(lib.version_ref)
        return None


def _rich_version(value) -> Optional[str]:
    """A version that is either a string or a rich-version table."""
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        for key in ("strictly", "require", "prefer"):
            if isinstance(value.get(key), str):
                return value[key]
    return None


def _line_of(text: str, table: str, alias: str) -> int:
    in_table = False
    pattern = re.compile(r'^\s*["\']?%s["\']?\s*=' % re.escape(alias))
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_table = stripped.strip("[] ") == table
        elif in_table and pattern.match(line):
            return n
    return 1


def parse_catalog(toml_text: str, diagnostics: Optional[Diagnostics] = None, file: str = "<catalog>",
                  name: str = "libs") -> CatalogModel:
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    model = CatalogModel(name=name, file=file)
    try:
        data = tomllib.loads(toml_text)
    except tomllib.TOMLDecodeError as exc:
        diagnostics.error("TOML_ERROR", f"invalid version catalog: {exc}", Location(file, 1))
        return model

    def loc(table, alias):
        return Location(file, _line_of(toml_text, table, alias))

    for alias, value in (data.get("versions") or {}).items():
        version = _rich_version(value)
        if version is None:
            diagnostics.warning("TOML_ERROR", f"unsupported version entry {alias!r}", loc("versions", alias))
            continue
        model.versions[alias] = version

    for alias, value in (data.get("libraries") or {}).items():
        lib = _library(alias, value)
        if lib is None:
            diagnostics.error("TOML_ERROR", f"malformed library entry {alias!r}", loc("libraries", alias))
            continue
        if lib.version_ref is not None and lib.version_ref not in model.versions:
            diagnostics.error("DANGLING_VERSION_REF",
                              f"library {alias!r} refers to unknown version {lib.version_ref!r}",
                              loc("libraries", alias), subject=lib.module)
            continue
        model.libraries[alias] = lib

    for alias, members in (data.get("bundles") or {}).items():
        if not isinstance(members, list):
            diagnostics.error("TOML_ERROR", f"malformed bundle {alias!r}", loc("bundles", alias))
            continue
        kept = []
        for member in members:
            if isinstance(member, str) and member in model.libraries:
                kept.append(member)
            else:
                diagnostics.error("DANGLING_BUNDLE_MEMBER",
                                  f"bundle {alias!r} names unknown library {member!r}", loc("bundles", alias))
        model.bundles[alias] = kept

    for alias, value in (data.get("plugins") or {}).items():
        if isinstance(value, str):
            model.plugins[alias] = value.split(":")[0]
        elif isinstance(value, dict) and isinstance(value.get("id"), str):
            model.plugins[alias] = value["id"]
    return model


def _library(alias: str, value) -> Optional[CatalogLibrary]:
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) not in (2, 3) or not all(parts):
            return None
        return CatalogLibrary(alias, parts[0], parts[1], parts[2] if len(parts) == 3 else None)
    if not isinstance(value, dict):
        return None
    if isinstance(value.get("module"), str):
        group, _, name = value["module"].partition(":")
    else:
        group, name = value.get("group"), value.get("name")
    if not isinstance(group, str) or not isinstance(name, str) or not group or not name:
        return None
    version = value.get("version")
    version_ref = None
    if isinstance(version, dict) and isinstance(version.get("ref"), str):
        version_ref, version = version["ref"], None
    else:
        version = _rich_version(version)
    if isinstance(value.get("version.ref"), str):
        # quoted dotted key: "version.ref" = "x"
        version_ref = value["version.ref"]
    return CatalogLibrary(alias, group, name, version, version_ref)
