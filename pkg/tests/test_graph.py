import pytest
from hypothesis import given, strategies as st

from tplextract.graph import Edge, build_graph, identify_main, is_application_plugin, reachable_modules
from tplextract.model import DiagCode, Diagnostics, MultiApkError, UnknownModuleError


def graph(nodes, edges, main):
    g = build_graph(nodes, [(s, d, k) for s, d, k in edges])
    g.main = main
    return g


def test_reachability_and_order():
    g = graph([":app", ":libA", ":libB", ":libC"],
              [(":app", ":libA", "implementation"), (":libA", ":libB", "api")], ":app")
    assert reachable_modules(g) == [":libB", ":libA", ":app"]


def test_wearapp_edge_dropped():
    g = graph([":mobile", ":wear"], [(":mobile", ":wear", "wearApp")], ":mobile")
    assert reachable_modules(g) == [":mobile"]
    assert g.excluded == {(":wear", "wearApp")}


def test_edge_filter_reason():
    g = graph([":app", ":bench", ":core"],
              [(":app", ":bench", "testImplementation"), (":app", ":core", "implementation"),
               (":core", ":bench", "implementation")], ":app")
    order = reachable_modules(g, lambda e: "excluded-keyword" if e.keyword.startswith("test") else None)
    # reachable through another kept path, so not excluded
    assert order == [":bench", ":core", ":app"]
    assert g.excluded == set()


def test_cycle_is_broken_and_flagged():
    d = Diagnostics()
    g = graph([":app", ":x"], [(":app", ":x", "implementation"), (":x", ":app", "implementation")], ":app")
    order = reachable_modules(g, diagnostics=d)
    assert sorted(order) == [":app", ":x"]
    assert d.codes() == [DiagCode.CYCLE.value]


def test_accessor_references():
    d = Diagnostics()
    g = build_graph([":app", ":core-ui"], [(":app", ":coreUi", "implementation"), (":app", ":ghost", "api")], d)
    assert g.edges == {Edge(":app", ":core-ui", "implementation")}
    assert d.codes() == [DiagCode.DANGLING_MODULE_REF.value]


def test_identify_main():
    g = graph([":", ":app", ":lib"], [], None)
    assert identify_main(g, {":app": ["com.android.application"], ":lib": ["com.android.library"]}) == ":app"


def test_identify_main_multi_apk():
    g = graph([":a", ":b"], [], None)
    d = Diagnostics()
    with pytest.raises(MultiApkError) as info:
        identify_main(g, {":a": ["com.android.application"], ":b": ["android"]}, diagnostics=d)
    assert info.value.details["candidates"] == [":a", ":b"]
    assert identify_main(g, {":a": ["com.android.application"], ":b": ["android"]}, override=":b") == ":b"
    with pytest.raises(UnknownModuleError):
        identify_main(g, {}, override=":nope")


def test_identify_main_wear_companion_not_a_competitor():
    g = graph([":mobile", ":wear"], [(":mobile", ":wear", "wearApp")], None)
    plugins = {":mobile": ["com.android.application"], ":wear": ["com.android.application"]}
    assert identify_main(g, plugins) == ":mobile"


def test_identify_main_fallbacks():
    d = Diagnostics()
    assert identify_main(graph([":", ":app"], [], None), {}, diagnostics=d) == ":app"
    assert identify_main(graph([":"], [], None), {}) == ":"
    d = Diagnostics()
    assert identify_main(graph([":", ":x"], [], None), {}, diagnostics=d) is None
    assert d.codes() == [DiagCode.NO_MAIN_MODULE.value]


def test_convention_plugin_counts_as_application():
    assert is_application_plugin("nowinandroid.android.application")
    assert not is_application_plugin("com.android.library")


_names = [":app", ":a", ":b", ":c", ":d", ":e"]
_edges = st.lists(st.tuples(st.sampled_from(_names), st.sampled_from(_names),
                            st.sampled_from(["implementation", "api", "wearApp", "testImplementation"])),
                  max_size=14)


@given(_edges)
def test_graph_invariants(edges):
    edges = [(s, d, k) for s, d, k in edges if s != d]
    g = graph(_names, edges, ":app")
    d = Diagnostics()
    flt = (lambda e: "excluded-keyword" if e.keyword == "testImplementation" else None)
    order = reachable_modules(g, flt, d)
    assert ":app" in order
    assert set(order) <= set(_names)
    assert len(order) == len(set(order))
    assert not {m for m, _why in g.excluded} & set(order)
    if DiagCode.CYCLE.value not in d.codes():
        pos = {m: i for i, m in enumerate(order)}
        for e in g.edges:
            if e.src in pos and e.dst in pos and flt(e) is None and e.keyword != "wearApp":
                assert pos[e.dst] < pos[e.src]
    again = graph(_names, list(reversed(edges)), ":app")
    assert reachable_modules(again, flt) == order
