import tempfile
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import CORPUS, write_tree
from tplextract.discovery import discover
from tplextract.finalize import (ExtractionReport, Options, aggregate, dedup, extract_project, parse_iml_entries,
                                 recover_ambiguous_from_iml, resolve_conflicts, split_conflicts)
from tplextract.graph import build_graph, identify_main, reachable_modules
from tplextract.model import Coordinate, DiagCode, Diagnostics, Location, MultiApkError, Status, parse_coordinate
from tplextract.parsing.bindings import PROJECT
from tplextract.parsing.declarations import ModuleRef
from tplextract.parsing.lexer import Dialect
from tplextract.parsing.scripts import analyze_script
from tplextract.resolve import VariantSelection, build_layer, compose_environment, decide_keyword, normalize


def c(text, module=":app", line=1, **kw):
    return parse_coordinate(text, origin_module=module, keyword="implementation",
                            location=Location(f"{module}.gradle", line), **kw)


# dedup and conflict resolution ---------------------------------------------------

def test_dedup_merges_origins():
    out = dedup([c("g:a:1", ":app", 3), c("g:a:1", ":lib", 7), c("g:b:1")])
    assert [x.key for x in out] == [("g", "a", "1"), ("g", "b", "1")]
    assert [o[0] for o in out[0].origins] == [":app", ":lib"]


def test_highest_version_wins():
    assert [x.version for x in resolve_conflicts([c("g:a:1.0.0"), c("g:a:1.2.0")])] == ["1.2.0"]
    assert [x.version for x in resolve_conflicts([c("g:a:2.8.1"), c("g:a:2.8.1-SNAPSHOT")])] == ["2.8.1"]


def test_concrete_beats_ambiguous_and_sole_ambiguous_kept():
    winners, losers = split_conflicts([c("g:a:1.1.+"), c("g:a:1.0")])
    assert [x.version for x in winners] == ["1.0"] and [x.version for x in losers] == ["1.1.+"]
    alone = resolve_conflicts([c("g:a:1.1.+")])
    assert alone[0].status is Status.AMBIGUOUS


_coords = st.builds(lambda g, a, v, m: c(f"{g}:{a}:{v}", m),
                    st.sampled_from(["g", "h", "com.x"]), st.sampled_from(["a", "b", "c"]),
                    st.sampled_from(["1.0", "1.0.1", "1.10", "2.0-rc1", "2.0", "1.+", "latest.release", "0.9"]),
                    st.sampled_from([":app", ":lib", ":core"]))


@given(st.lists(_coords, max_size=25))
def test_dedup_idempotent(ts):
    once = dedup(ts)
    twice = dedup(once)
    assert [x.key for x in twice] == [x.key for x in once]
    assert [x.origins for x in twice] == [x.origins for x in once]
    assert len({x.key for x in once}) == len(once)


@given(st.lists(_coords, max_size=25))
def test_conflict_resolution_properties(ts):
    unique = dedup(ts)
    out = resolve_conflicts(unique)
    gas = [x.ga for x in out]
    assert len(gas) == len(set(gas))
    assert set(gas) == {x.ga for x in unique}
    for w in out:
        assert w.version in {x.version for x in unique if x.ga == w.ga}


# composition law -----------------------------------------------------------------

LIBS = [":l1", ":l2", ":l3"]
VERSIONS = ["1.0", "1.2", "1.10", "2.0"]
MODULE_KWS = ["implementation", "api", "wearApp", "testImplementation"]
DEP_KWS = ["implementation", "api", "testImplementation", "compileOnly", "gplayImplementation",
           "debugImplementation", "fossDebugImplementation"]
PACKAGED = {"implementation", "api", "gplayImplementation"}


@st.composite
def synthetic_projects(draw):
    libs = draw(st.lists(st.sampled_from(LIBS), unique=True, max_size=3))
    mods = [":app"] + sorted(libs)
    edges = draw(st.lists(st.tuples(st.sampled_from(mods), st.sampled_from(mods), st.sampled_from(MODULE_KWS)),
                          max_size=6)) if libs else []
    edges = [(s, d, k) for s, d, k in dict.fromkeys(edges) if s != d]
    decls = {m: draw(st.lists(st.tuples(st.sampled_from(DEP_KWS), st.sampled_from("gh"), st.sampled_from("ab"),
                                        st.sampled_from(VERSIONS), st.booleans()), max_size=6))
             for m in mods}
    return mods, edges, decls


def _write(root: Path, project) -> Path:
    mods, edges, decls = project
    files = {
        "settings.gradle": "include " + ", ".join(f"'{m}'" for m in mods) + "\n",
        "build.gradle": "ext {\n" + "".join(f"    v_{v.replace('.', '_')} = '{v}'\n" for v in VERSIONS) + "}\n",
    }
    for m in mods:
        plugin = "com.android.application" if m == ":app" else "com.android.library"
        lines = [f"apply plugin: '{plugin}'", "android {", "    productFlavors { gplay {} foss {} }", "}",
                 "dependencies {"]
        for s, d, k in edges:
            if s == m:
                lines.append(f"    {k} project('{d}')")
        for k, g, a, v, via_var in decls[m]:
            version = "$v_" + v.replace(".", "_") if via_var else v
            lines.append(f'    {k} "{g}:{a}:{version}"')
        lines.append("}")
        files[f"{m[1:]}/build.gradle"] = "\n".join(lines) + "\n"
    return write_tree(root, files)


def _model_oracle(project) -> set:
    """Expected labels computed from the generator's own model."""
    mods, edges, decls = project
    seen, queue = {":app"}, [":app"]
    while queue:
        u = queue.pop(0)
        for s, d, k in edges:
            if s == u and k in ("implementation", "api") and d not in seen:
                seen.add(d)
                queue.append(d)
    best = {}
    for m in seen:
        for k, g, a, v, _var in decls[m]:
            if k in PACKAGED:
                cur = best.get((g, a))
                if cur is None or tuple(map(int, v.split("."))) > tuple(map(int, cur.split("."))):
                    best[(g, a)] = v
    return {(g, a, v) for (g, a), v in best.items()}


def _stepwise(root: Path) -> set:
    """The same stages as ``extract_project``, wired by hand."""
    diag = Diagnostics()
    layout = discover(root, diag)
    infos = {}
    for m in layout.modules:
        for bf in m.build_files:
            scope = PROJECT if m.module_id == ":" else m.module_id
            infos[m.module_id] = analyze_script(bf.read_text(), Dialect.for_path(bf), m.module_id, scope, diag,
                                                layout.rel(bf))
    project_layer = build_layer(infos[":"].bindings if ":" in infos else [])
    envs = {mid: compose_environment(project_layer, build_layer(i.bindings) if mid != ":" else {})
            for mid, i in infos.items()}
    known = {mid: tuple(i.flavors) + tuple(i.build_types) for mid, i in infos.items()}
    flavors = [f for i in infos.values() for f in i.flavors]
    selection = VariantSelection.default(flavors)
    refs = [(mid, leaf.module_id, r.keyword) for mid, i in infos.items() for r in i.declarations
            for leaf in r.leaves() if isinstance(leaf, ModuleRef)]
    graph = build_graph([m.module_id for m in layout.modules], refs)
    identify_main(graph, {mid: i.plugins for mid, i in infos.items()})

    def keep(e):
        d = decide_keyword(e.keyword, known[e.src], selection)
        return None if d.kept else d.reason

    order = reachable_modules(graph, keep)
    agg = aggregate(order, {mid: i.declarations for mid, i in infos.items()})
    norm = normalize(agg, envs, {}, selection, known)
    return {x.key for x in resolve_conflicts(dedup(norm.coordinates))}


def check_composition(project):
    with tempfile.TemporaryDirectory() as tmp:
        root = _write(Path(tmp) / "p", project)
        report = extract_project(root)
        labels = {x.key for x in report.final_labels}
        assert labels == _stepwise(root)
        assert labels == _model_oracle(project)


# the full-size run lives in the acceptance suite
@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(synthetic_projects())
def test_composition_law(project):
    check_composition(project)


# .iml recovery -------------------------------------------------------------------

IML = """<module>
  <component name="NewModuleRootManager">
    <orderEntry type="library" name="Gradle: com.google.code.gson:gson:2.8.5@jar" level="project" />
    <orderEntry type="library" name="Gradle: picasso-2.5.2" level="project" />
    <orderEntry type="library" name="okio:1.17.2" level="project" />
    <orderEntry type="library" name="Gradle: x:twice:1.1" level="project" />
    <orderEntry type="library" name="Gradle: y:twice:1.3" level="project" />
  </component>
</module>"""


def test_parse_iml_entries():
    entries = parse_iml_entries(IML)
    assert ("com.google.code.gson", "gson", "2.8.5") in entries
    assert (None, "picasso", "2.5.2") in entries
    assert (None, "okio", "1.17.2") in entries


def test_iml_recovery():
    d = Diagnostics()
    out = recover_ambiguous_from_iml([c("com.google.code.gson:gson:2.8.+"), c("com.squareup.picasso:picasso:+"),
                                      c("g:twice:1.+"), c("g:other:1.+")], iml_texts=[IML], diagnostics=d)
    assert [(x.version, x.status) for x in out] == [
        ("2.8.5", Status.IML_RECOVERED), ("2.5.2", Status.IML_RECOVERED),
        ("1.+", Status.AMBIGUOUS), ("1.+", Status.AMBIGUOUS)]
    assert d.codes().count(DiagCode.IML_RECOVERED.value) == 2
    # x:twice and y:twice are different groups; g:twice matches neither
    assert DiagCode.IML_CONFLICT.value not in d.codes()


def test_iml_conflict_when_group_unknown():
    d = Diagnostics()
    text = '<orderEntry type="library" name="lib-1.1" /><orderEntry type="library" name="lib-1.3" />'
    out = recover_ambiguous_from_iml([c("g:lib:1.+")], iml_texts=[text], diagnostics=d)
    assert out[0].status is Status.AMBIGUOUS
    assert d.codes() == [DiagCode.IML_CONFLICT.value]


def test_iml_recovery_end_to_end(project):
    root = project({
        "settings.gradle": "include ':app'",
        "app/build.gradle": "apply plugin: 'com.android.application'\n"
                            "dependencies { implementation 'com.google.code.gson:gson:2.8.+' }\n",
        "app/app.iml": IML,
    })
    report = extract_project(root)
    assert report.labels() == {("com.google.code.gson", "gson", "2.8.5")}
    assert report.dependencies[0].status is Status.IML_RECOVERED


# end-to-end behaviours -----------------------------------------------------------

def test_multi_apk_requires_main_module(project):
    root = project({
        "settings.gradle": "include ':phone', ':tv'",
        "phone/build.gradle": "apply plugin: 'com.android.application'\ndependencies { implementation 'a:p:1' }",
        "tv/build.gradle": "apply plugin: 'com.android.application'\ndependencies { implementation 'a:t:1' }",
    })
    with pytest.raises(MultiApkError):
        extract_project(root)
    report = extract_project(root, Options(main_module=":tv"))
    assert report.labels() == {("a", "t", "1")}


def test_explicit_variant_selection(project):
    root = project({
        "settings.gradle": "include ':app'",
        "app/build.gradle": """apply plugin: 'com.android.application'
android { productFlavors { gplay {} foss {} } }
dependencies {
    gplayImplementation 'g:play:1'
    fossImplementation 'g:foss:1'
    releaseImplementation 'g:rel:1'
}""",
    })
    assert extract_project(root).labels() == {("g", "play", "1"), ("g", "foss", "1"), ("g", "rel", "1")}
    only_foss = extract_project(root, Options(variants=("foss", "release")))
    assert only_foss.labels() == {("g", "foss", "1"), ("g", "rel", "1")}


def test_no_main_module_gives_empty_report(project):
    root = project({"settings.gradle": "include ':a', ':b'", "a/build.gradle": "", "b/build.gradle": ""})
    report = extract_project(root)
    assert report.main_module is None and report.dependencies == []
    assert DiagCode.NO_MAIN_MODULE.value in [d.code.value for d in report.diagnostics]


def test_every_non_concrete_label_is_flagged(project):
    root = project({
        "settings.gradle": "include ':app'",
        "app/build.gradle": "apply plugin: 'com.android.application'\n"
                            "dependencies {\n implementation 'g:dyn:1.+'\n implementation 'g:none'\n"
                            " implementation \"g:var:$nope\"\n}",
    })
    report = extract_project(root)
    flagged = {d.subject for d in report.diagnostics}
    for x in report.dependencies:
        if not x.status.concrete:
            assert f"{x.group}:{x.artifact}" in flagged


def test_applied_script_joins_applier_layer(project):
    root = project({
        "settings.gradle": "include ':app'",
        "build.gradle": "ext.okhttp = '3.0.0'",
        "app/build.gradle": "apply plugin: 'com.android.application'\napply from: 'deps.gradle'\n"
                            "dependencies { implementation \"com.squareup.okhttp3:okhttp:$okhttp\" }",
        "app/deps.gradle": "ext.okhttp = '4.0.0'",
    })
    assert extract_project(root).labels() == {("com.squareup.okhttp3", "okhttp", "4.0.0")}


@pytest.mark.parametrize("name", sorted(p.name for p in CORPUS.iterdir()))
def test_report_json_roundtrip_and_determinism(name):
    one = extract_project(CORPUS / name)
    two = extract_project(CORPUS / name)
    assert one.to_json() == two.to_json()
    back = ExtractionReport.from_json(one.to_json())
    assert back == one
    assert back.to_json() == one.to_json()


def test_coordinate_identity_ignores_provenance():
    a = c("g:a:1", ":app")
    b = Coordinate("g", "a", "1", Status.RESOLVED, keyword="api", origin_module=":lib")
    assert a == b and hash(a) == hash(b)
