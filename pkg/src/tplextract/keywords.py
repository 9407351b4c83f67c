"""Dependency configuration keywords and whether their code reaches the APK."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .model import DiagCode, Diagnostics


class KeywordKind(str, enum.Enum):
    INCLUDE = "INCLUDE"
    EXCLUDE = "EXCLUDE"
    VARIANT = "VARIANT"


@dataclass(frozen=True)
class KeywordClass:
    keyword: str
    kind: KeywordKind
    variant_prefix: Optional[str] = None


LISTED_INCLUDE = (
    "withAnalyticsImplementation", "natives", "api", "compile",
    "androidImplementation", "implementation",
    "releaseImplementation", "releaseCompile",
    "coreLibraryDesugaring",
)

LISTED_EXCLUDE = (
    "testImplementation", "androidTestImplementation", "Kapt",
    "compileOnly", "debugImplementation", "androidTestApt",
    "annotationProcessor", "testApi", "apt", "jnaForTest",
    "retrolambdaConfig", "detektPlugins", "debugcompile",
    "androidTestApi", "androidTestUtil", "errorprone", "ksp",
    "kaptAndroidTest", "testAnnotationProcessor", "ktlint",
    "androidTestAnnotationProcessor",
)

# keyword -> variant prefix
LISTED_VARIANT = {
    "PlayStoreImplementation": "PlayStore",
    "nightlyImplementation": "nightly",
    "gplayImplementation": "gplay",
    "playImplementation": "play",
    "largeImplementation": "large",
    "playstoreImplementation": "playstore",
    "amazonImplementation": "amazon",
    "githubImplementation": "github",
    "pureImplementation": "pure",
    "prodImplementation": "prod",
    "betaImplementation": "beta",
    "alphaImplementation": "alpha",
    "devImplementation": "dev",
    "customImplementation": "custom",
    "appengineSdk": "appengine",
}

# Common Gradle configurations the published lists fold into "etc."
EXTRA_INCLUDE = (
    "runtimeOnly", "runtime", "releaseApi", "releaseRuntimeOnly",
)
EXTRA_EXCLUDE = (
    "kapt", "classpath", "testCompile", "testRuntimeOnly", "testCompileOnly",
    "testRuntime", "androidTestCompile", "androidTestRuntimeOnly",
    "androidTestCompileOnly", "androidTestKapt", "debugApi", "debugCompile",
    "debugRuntimeOnly", "debugCompileOnly", "releaseCompileOnly",
    "compileOnlyApi", "provided", "lintChecks", "lintPublish", "kaptTest",
    "kspTest", "kspAndroidTest", "testFixturesImplementation", "testFixturesApi",
    "wearApp", "detekt", "ktlintRuleset",
)

# Capitalised tails a variant-prefixed keyword may end with.
INCLUDE_BASES = ("Implementation", "Api", "Compile", "RuntimeOnly")


class KeywordTable:
    """Keyword classification table.

    Lookup order: exact table entry, then ``<variant><Base>`` decomposition
    against the known variant names, then EXCLUDE with an
    ``UNKNOWN_KEYWORD`` diagnostic.
    """

    def __init__(self, include: Iterable[str], exclude: Iterable[str], variant: dict):
        self.entries: dict[str, KeywordClass] = {}
        for kw in include:
            self.entries[kw] = KeywordClass(kw, KeywordKind.INCLUDE)
        for kw in exclude:
            self.entries[kw] = KeywordClass(kw, KeywordKind.EXCLUDE)
        for kw, prefix in variant.items():
            self.entries[kw] = KeywordClass(kw, KeywordKind.VARIANT, prefix)

    @classmethod
    def default(cls) -> "KeywordTable":
        return cls(LISTED_INCLUDE + EXTRA_INCLUDE, LISTED_EXCLUDE + EXTRA_EXCLUDE, LISTED_VARIANT)

    def with_overrides(self, path) -> "KeywordTable":
        """Return a copy updated from a ``keyword<TAB>class[<TAB>prefix]`` file."""
        table = KeywordTable((), (), {})
        table.entries = dict(self.entries)
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = [c.strip() for c in line.split("\t")]
            if len(cols) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'keyword<TAB>class'")
            keyword, kind = cols[0], KeywordKind(cols[1].upper())
            prefix = None
            if kind is KeywordKind.VARIANT:
                prefix = cols[2] if len(cols) > 2 and cols[2] else _split_variant(keyword)
                if prefix is None:
                    raise ValueError(f"{path}:{lineno}: cannot derive variant prefix of {keyword!r}")
            table.entries[keyword] = KeywordClass(keyword, kind, prefix)
        return table

    def keywords(self, kind: KeywordKind) -> set[str]:
        return {k for k, v in self.entries.items() if v.kind is kind}

    def classify(self, keyword: str, known_variants: Iterable[str] = (), diagnostics: Optional[Diagnostics] = None,
                 location=None) -> KeywordClass:
        entry = self.entries.get(keyword)
        if entry is not None:
            return entry
        prefix = _split_variant(keyword)
        if prefix is not None:
            known = {v.lower() for v in known_variants}
            if known:
                if segment_variants(prefix, known) is not None:
                    return KeywordClass(keyword, KeywordKind.VARIANT, prefix)
            elif prefix[0].islower():
                return KeywordClass(keyword, KeywordKind.VARIANT, prefix)
        if diagnostics is not None:
            diagnostics.warning(DiagCode.UNKNOWN_KEYWORD, f"unknown dependency keyword {keyword!r} treated as excluded",
                                location, subject=keyword)
        return KeywordClass(keyword, KeywordKind.EXCLUDE)


def _split_variant(keyword: str) -> Optional[str]:
    for base in INCLUDE_BASES:
        if keyword.endswith(base) and len(keyword) > len(base):
            return keyword[: -len(base)]
    return None


def segment_variants(prefix: str, names: Iterable[str]) -> Optional[list[str]]:
    """Split ``prefix`` into a concatenation of ``names`` (case-insensitive).

    ``fossRelease`` with names ``{foss, release}`` gives ``["foss", "release"]``;
    returns ``None`` when no segmentation exists. Longest names are tried first.
    """
    target = prefix.lower()
    ordered = sorted({n.lower() for n in names if n}, key=lambda n: (-len(n), n))
    memo: dict[int, Optional[list[str]]] = {}

    def walk(i: int) -> Optional[list[str]]:
        if i == len(target):
            return []
        if i in memo:
            return memo[i]
        memo[i] = None
        for name in ordered:
            if target.startswith(name, i):
                rest = walk(i + len(name))
                if rest is not None:
                    memo[i] = [name] + rest
                    break
        return memo[i]

    return walk(0)


DEFAULT_TABLE = KeywordTable.default()


def classify_keyword(keyword: str, known_variants: Iterable[str] = (), diagnostics: Optional[Diagnostics] = None,
                     table: Optional[KeywordTable] = None) -> KeywordClass:
    return (table or DEFAULT_TABLE).classify(keyword, known_variants, diagnostics)
