"""Module dependency graph, main-module identification and the packaged (reachable) module set."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .model import DiagCode, Diagnostics, Location, MultiApkError, UnknownModuleError

# configurations whose target module is built into a separate artifact, not the main APK
NOT_PACKAGED_KEYWORDS = frozenset({"wearApp"})
APPLICATION_PLUGINS = frozenset({"com.android.application", "android"})
_APPLICATION_SUFFIXES = (".android.application", "-android-application", ".application.android")


def is_application_plugin(plugin_id: str) -> bool:
    """``com.android.application`` and its aliases, including convention plugins named after it."""
    return plugin_id in APPLICATION_PLUGINS or plugin_id.endswith(_APPLICATION_SUFFIXES)


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    keyword: str


@dataclass
class ModuleGraph:
    nodes: set = field(default_factory=set)
    edges: set = field(default_factory=set)
    main: Optional[str] = None
    excluded: set = field(default_factory=set)  # (module id, reason)

    def out_edges(self, module: str) -> list[Edge]:
        return sorted(e for e in self.edges if e.src == module)


def _norm_segment(seg: str) -> str:
    return seg.replace("-", "").replace("_", "").lower()


def _accessor_match(ref: str, nodes: Iterable[str]) -> Optional[str]:
    """``projects.coreUi`` (``:coreUi``) names the project ``:core-ui``."""
    want = tuple(_norm_segment(s) for s in ref.split(":") if s)
    hits = [n for n in nodes if tuple(_norm_segment(s) for s in n.split(":") if s) == want]
    return hits[0] if len(hits) == 1 else None


def module_id(text: str) -> str:
    text = text.strip()
    return text if text.startswith(":") else ":" + text


def build_graph(nodes: Iterable[str], module_refs: Iterable[tuple], diagnostics: Optional[Diagnostics] = None) -> ModuleGraph:
    """One edge per module reference; ``module_refs`` holds ``(from, to, keyword, location)`` tuples.

    ``to`` may be a typesafe-accessor form, matched ignoring case and ``-``/``_``.
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    graph = ModuleGraph(nodes=set(nodes))
    for ref in module_refs:
        src, dst, keyword = ref[0], ref[1], ref[2]
        loc: Optional[Location] = ref[3] if len(ref) > 3 else None
        target = dst if dst in graph.nodes else _accessor_match(dst, graph.nodes)
        if target is None:
            diagnostics.warning(DiagCode.DANGLING_MODULE_REF, f"{src} references undeclared module {dst}", loc,
                                subject=dst)
            continue
        graph.edges.add(Edge(src, target, keyword))
    return graph


def identify_main(graph: ModuleGraph, plugins: Mapping[str, Iterable[str]], override: Optional[str] = None,
                  diagnostics: Optional[Diagnostics] = None) -> Optional[str]:
    """The module whose build produces the APK.

    Raises :class:`MultiApkError` when several modules apply an application
    plugin and no override is given; returns ``None`` (with an error
    diagnostic) when none can be found.
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    if override is not None:
        mid = module_id(override)
        if mid not in graph.nodes:
            raise UnknownModuleError(f"--main-module {override}: no such module", module=mid,
                                     modules=sorted(graph.nodes))
        graph.main = mid
        return mid
    candidates = sorted(m for m in graph.nodes if any(is_application_plugin(p) for p in plugins.get(m, ())))
    if len(candidates) > 1:
        # a wear app embedded via wearApp belongs to its phone app, not a competing target
        embedded = {e.dst for e in graph.edges if e.keyword in NOT_PACKAGED_KEYWORDS and e.src in candidates}
        candidates = [c for c in candidates if c not in embedded] or candidates
    if len(candidates) > 1:
        diagnostics.error(DiagCode.MULTI_APK, "several modules apply an application plugin: " + ", ".join(candidates))
        raise MultiApkError(candidates)
    if candidates:
        graph.main = candidates[0]
        return graph.main
    if ":app" in graph.nodes:
        diagnostics.warning(DiagCode.NO_MAIN_MODULE, "no module applies an application plugin; using :app",
                            subject=":app")
        graph.main = ":app"
        return graph.main
    if len(graph.nodes) == 1:
        only = next(iter(graph.nodes))
        diagnostics.warning(DiagCode.NO_MAIN_MODULE,
                            f"no module applies an application plugin; using the only module {only}", subject=only)
        graph.main = only
        return only
    diagnostics.error(DiagCode.NO_MAIN_MODULE, "no module applies an application plugin and there is no :app module")
    return None


EdgeFilter = Callable[[Edge], Optional[str]]


def reachable_modules(graph: ModuleGraph, edge_filter: Optional[EdgeFilter] = None,
                      diagnostics: Optional[Diagnostics] = None) -> list[str]:
    """Modules packaged into the main APK, dependencies before dependents.

    ``edge_filter`` returns ``None`` for a followed edge or a reason string for
    a dropped one; edges under a not-packaged keyword (``wearApp``) are always
    dropped. Ties are broken by module id; a cycle is broken at the
    smallest-id node among those with the fewest unmet dependencies.
    """
    diagnostics = diagnostics if diagnostics is not None else Diagnostics()
    if graph.main is None:
        return []

    def reason(e: Edge) -> Optional[str]:
        if e.keyword in NOT_PACKAGED_KEYWORDS:
            return e.keyword
        return edge_filter(e) if edge_filter is not None else None

    kept: dict[str, set] = {}
    dropped: dict[str, str] = {}
    seen = {graph.main}
    queue = [graph.main]
    while queue:
        u = queue.pop(0)
        for e in graph.out_edges(u):
            why = reason(e)
            if why is not None:
                dropped.setdefault(e.dst, why)
                continue
            kept.setdefault(u, set()).add(e.dst)
            if e.dst not in seen:
                seen.add(e.dst)
                queue.append(e.dst)
    graph.excluded = {(m, why) for m, why in dropped.items() if m not in seen}

    deps = {m: set(kept.get(m, ())) & seen for m in seen}
    dependents: dict[str, set] = {m: set() for m in seen}
    for m, ds in deps.items():
        for d in ds:
            dependents[d].add(m)
    missing = {m: len(ds) for m, ds in deps.items()}
    ready = [m for m, n in missing.items() if n == 0]
    heapq.heapify(ready)
    order: list[str] = []
    done: set = set()
    while len(order) < len(seen):
        if not ready:
            rest = sorted((missing[m], m) for m in seen if m not in done)
            victim = rest[0][1]
            broken = sorted(d for d in deps[victim] if d not in done)
            diagnostics.warning(DiagCode.CYCLE, "module dependency cycle broken at " +
                                ", ".join(f"{victim} -> {d}" for d in broken), subject=victim)
            missing[victim] = 0
            heapq.heappush(ready, victim)
        m = heapq.heappop(ready)
        if m in done:
            continue
        done.add(m)
        order.append(m)
        for parent in sorted(dependents[m]):
            if parent in done:
                continue
            missing[parent] -= 1
            if missing[parent] == 0:
                heapq.heappush(ready, parent)
    return order
