"""Shared domain types: coordinates, diagnostics and the structured errors."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional


class Status(str, enum.Enum):
    RESOLVED = "RESOLVED"
    AMBIGUOUS = "AMBIGUOUS"
    UNRESOLVED = "UNRESOLVED"
    BOM_DERIVED = "BOM_DERIVED"
    IML_RECOVERED = "IML_RECOVERED"

    @property
    def concrete(self) -> bool:
        return self in (Status.RESOLVED, Status.BOM_DERIVED, Status.IML_RECOVERED)


class Severity(str, enum.Enum):
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class DiagCode(str, enum.Enum):
    """Closed set of diagnostic codes emitted anywhere in the pipeline."""

    MALFORMED_COORDINATE = "MALFORMED_COORDINATE"
    UNKNOWN_KEYWORD = "UNKNOWN_KEYWORD"
    MIXED_DSL = "MIXED_DSL"
    MULTI_APK = "MULTI_APK"
    NO_MAIN_MODULE = "NO_MAIN_MODULE"
    UNRESOLVED_VAR = "UNRESOLVED_VAR"
    AMBIGUOUS_VERSION = "AMBIGUOUS_VERSION"
    UNRESOLVED_VERSION = "UNRESOLVED_VERSION"
    CYCLE = "CYCLE"
    DANGLING_MODULE_REF = "DANGLING_MODULE_REF"
    MISSING_BUILD_FILE = "MISSING_BUILD_FILE"
    MISSING_APPLY_TARGET = "MISSING_APPLY_TARGET"
    DEEP_CUSTOM_SCRIPT = "DEEP_CUSTOM_SCRIPT"
    BAD_OVERRIDE = "BAD_OVERRIDE"
    UNREADABLE = "UNREADABLE"
    UNBALANCED_BRACES = "UNBALANCED_BRACES"
    UNRECOGNIZED_DECLARATION = "UNRECOGNIZED_DECLARATION"
    CONDITIONAL_DECLARATION = "CONDITIONAL_DECLARATION"
    IGNORED_BLOCK = "IGNORED_BLOCK"
    DUPLICATE_BINDING = "DUPLICATE_BINDING"
    TOML_ERROR = "TOML_ERROR"
    DANGLING_VERSION_REF = "DANGLING_VERSION_REF"
    DANGLING_BUNDLE_MEMBER = "DANGLING_BUNDLE_MEMBER"
    UNKNOWN_CATALOG_ALIAS = "UNKNOWN_CATALOG_ALIAS"
    VARIANT_INCLUDED = "VARIANT_INCLUDED"
    IML_CONFLICT = "IML_CONFLICT"
    IML_RECOVERED = "IML_RECOVERED"
    FORCE_NOT_APPLIED = "FORCE_NOT_APPLIED"


@dataclass(frozen=True)
class Location:
    file: str
    line: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: DiagCode
    message: str
    location: Optional[Location] = None
    # "group:artifact" (or module id) the diagnostic is about, when there is one
    subject: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code.value,
            "message": self.message,
            "location": None if self.location is None else {"file": self.location.file, "line": self.location.line},
            "subject": self.subject,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Diagnostic":
        loc = data.get("location")
        return cls(
            Severity(data["severity"]),
            DiagCode(data["code"]),
            data["message"],
            None if loc is None else Location(loc["file"], loc["line"]),
            data.get("subject"),
        )


class Diagnostics(list):
    """A list of :class:`Diagnostic` with shorthand emitters."""

    def emit(self, severity, code, message, location=None, subject=None) -> Diagnostic:
        diag = Diagnostic(Severity(severity), DiagCode(code), message, location, subject)
        self.append(diag)
        return diag

    def info(self, code, message, location=None, subject=None):
        return self.emit(Severity.INFO, code, message, location, subject)

    def warning(self, code, message, location=None, subject=None):
        return self.emit(Severity.WARNING, code, message, location, subject)

    def error(self, code, message, location=None, subject=None):
        return self.emit(Severity.ERROR, code, message, location, subject)

    def codes(self) -> list[str]:
        return [d.code.value for d in self]


class ExtractionError(Exception):
    """A failure that aborts extraction of a whole project."""

    code = "EXTRACTION_ERROR"
    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message, **self.details}


class NotAGradleProject(ExtractionError):
    code = "NOT_A_GRADLE_PROJECT"


class MultiApkError(ExtractionError):
    code = "MULTI_APK"

    def __init__(self, candidates):
        candidates = sorted(candidates)
        super().__init__(
            "several modules apply an application plugin: %s; "
            "pick one with --main-module" % ", ".join(candidates),
            candidates=candidates,
        )
        self.candidates = candidates


class UnknownModuleError(ExtractionError):
    code = "UNKNOWN_MODULE"


class ProjectIOError(ExtractionError):
    code = "IO_ERROR"
    exit_code = 2


class MalformedCoordinate(ValueError):
    def __init__(self, text: str, reason: str = "malformed coordinate"):
        super().__init__(f"{reason}: {text!r}")
        self.text = text


DYNAMIC_MARKERS = ("+", "latest.", "[", "(", "]", ")")


def is_dynamic(version: str) -> bool:
    return any(marker in version for marker in DYNAMIC_MARKERS)


@dataclass(frozen=True, eq=False)
class Coordinate:
    """A ``group:artifact:version`` triplet.

    Identity (equality and hashing) is the exact ``(group, artifact, version)``
    string triple; status, type suffix and provenance fields are carried along
    but ignored for comparison.
    """

    group: str
    artifact: str
    version: Optional[str] = None
    status: Status = Status.RESOLVED
    suffix: Optional[str] = None
    keyword: Optional[str] = None
    origin_module: Optional[str] = None
    source: str = "remote"
    location: Optional[Location] = None
    origins: tuple = field(default=())

    @property
    def key(self) -> tuple:
        return (self.group, self.artifact, self.version)

    @property
    def ga(self) -> tuple:
        return (self.group, self.artifact)

    def __eq__(self, other):
        if not isinstance(other, Coordinate):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self) -> str:
        if self.version is None:
            return f"{self.group}:{self.artifact}"
        return f"{self.group}:{self.artifact}:{self.version}"

    def evolve(self, **changes) -> "Coordinate":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "artifact": self.artifact,
            "version": self.version,
            "status": self.status.value,
            "suffix": self.suffix,
            "keyword": self.keyword,
            "origin_module": self.origin_module,
            "source": self.source,
            "location": None if self.location is None else {"file": self.location.file, "line": self.location.line},
            "origins": [list(o) for o in self.origins],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Coordinate":
        loc = data.get("location")
        return cls(
            group=data["group"],
            artifact=data["artifact"],
            version=data.get("version"),
            status=Status(data.get("status", "RESOLVED")),
            suffix=data.get("suffix"),
            keyword=data.get("keyword"),
            origin_module=data.get("origin_module"),
            source=data.get("source", "remote"),
            location=None if loc is None else Location(loc["file"], loc["line"]),
            origins=tuple(tuple(o) for o in data.get("origins", ())),
        )


def _unquote(text: str) -> str:
    text = text.strip()
    while len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        text = text[1:-1].strip()
    return text


def _check_name(part: str, text: str) -> str:
    if not part:
        raise MalformedCoordinate(text, "empty coordinate segment")
    if "$" in part or any(c.isspace() for c in part):
        raise MalformedCoordinate(text, "unexpanded or invalid group/artifact")
    return part


def parse_coordinate(text: str, **provenance) -> Coordinate:
    """Parse ``group:artifact[:version[:classifier]][@type]``.

    A two-segment coordinate has no version and comes back ``UNRESOLVED``;
    dynamic versions (``1.1.+``, ``latest.release``, ranges) come back
    ``AMBIGUOUS``. Raises :class:`MalformedCoordinate` for anything with
    fewer than two segments or an empty segment.
    """
    raw = _unquote(text)
    suffix = None
    if "@" in raw:
        raw, _, suffix = raw.rpartition("@")
        suffix = suffix.strip() or None
    parts = [p.strip() for p in raw.split(":")]
    if len(parts) < 2:
        raise MalformedCoordinate(text, "fewer than two segments")
    group = _check_name(parts[0], text)
    artifact = _check_name(parts[1], text)
    if len(parts) == 2:
        return Coordinate(group, artifact, None, Status.UNRESOLVED, suffix, **provenance)
    version = parts[2]
    if not version:
        raise MalformedCoordinate(text, "empty coordinate segment")
    if len(parts) > 3:
        # group:artifact:version:classifier; the classifier is not identity
        classifier = ":".join(parts[3:])
        if not classifier:
            raise MalformedCoordinate(text, "empty coordinate segment")
        suffix = classifier if suffix is None else f"{classifier}@{suffix}"
    if "$" in version:
        status = Status.UNRESOLVED
    elif is_dynamic(version):
        status = Status.AMBIGUOUS
    else:
        status = Status.RESOLVED
    return Coordinate(group, artifact, version, status, suffix, **provenance)
