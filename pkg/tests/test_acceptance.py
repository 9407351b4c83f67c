"""Acceptance criteria 1-7. Each test carries a ``criterion`` marker; the run ends
with one PASS/FAIL line per criterion (see ``conftest.py``)."""

import json
import random
import shutil
import signal
import statistics
import time
from contextlib import contextmanager
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

import test_finalize as fin
import test_keywords as kw
import test_versions as ver
from conftest import CORPUS, GOLDEN, golden_labels
from tplextract.cli import main
from tplextract.finalize import ExtractionReport, extract_project
from tplextract.keywords import KeywordKind, classify_keyword
from tplextract.metrics import EvaluationPair, mae, match_rate, pearson
from tplextract.model import ExtractionError, Status

PATTERNS = ["c1_string_notation", "c2_map_notation", "c3_variable", "c4_multi_library", "c5_version_catalog",
            "c6_custom_script", "c7_bom", "c8_bom_catalog"]
MODES = ["d1_direct_assignment", "d2_ext_block", "d3_variables_map", "d4_nested_structure", "d5_version_catalog"]
SCENARIOS = ["s_wearapp", "s_projectdir_override", "s_reachability", "s_version_conflict", "s_bom", "s_mixed_dsl"]


def c1(f):
    return pytest.mark.criterion(1, "pattern coverage: 13 fixtures, exact set match, < 5 s total")(f)


def c2(f):
    return pytest.mark.criterion(2, "keyword taxonomy: published lists + declared-flavor property")(f)


def c3(f):
    return pytest.mark.criterion(3, "pipeline algebra: dedup, conflicts, composition, version order")(f)


def c4(f):
    return pytest.mark.criterion(4, "structural scenarios: exact golden match on each")(f)


def c5(f):
    return pytest.mark.criterion(5, "metrics against hand-computed values")(f)


def c6(f):
    return pytest.mark.criterion(6, "published r/MAE/MatchRate not reproducible offline; "
                                    "self-consistency run substitutes")(f)


def c7(f):
    return pytest.mark.criterion(7, "robustness: 1,000 fuzzed scripts, no crash, p95 < 1 s")(f)


def labels(name):
    return extract_project(CORPUS / name).labels()


# 1 ---------------------------------------------------------------------------------

@c1
@pytest.mark.parametrize("name", PATTERNS + MODES)
def test_fixture_matches_golden(name):
    assert labels(name) == golden_labels(name)


@c1
def test_pattern_suite_match_rate_and_runtime():
    names = PATTERNS + MODES
    assert len(names) == 13
    start = time.perf_counter()
    pairs = [EvaluationPair(n, frozenset(labels(n)), frozenset(golden_labels(n))) for n in names]
    elapsed = time.perf_counter() - start
    assert match_rate(pairs) == 1.0
    assert elapsed < 5.0, elapsed


# 2 ---------------------------------------------------------------------------------

@c2
def test_published_keyword_lists():
    wrong = []
    for text, kind in ((kw.INCLUDED, KeywordKind.INCLUDE), (kw.EXCLUDED, KeywordKind.EXCLUDE),
                       (kw.VARIANT, KeywordKind.VARIANT)):
        for name in kw._names(text):
            if classify_keyword(name).kind is not kind:
                wrong.append((name, kind))
    assert wrong == []
    assert len(kw._names(kw.INCLUDED)) == 9
    assert len(kw._names(kw.EXCLUDED)) == 21
    assert len(kw._names(kw.VARIANT)) == 15


@c2
def test_declared_flavor_implementation_is_variant():
    kw.test_declared_flavor_implementation_is_variant()


# 3 ---------------------------------------------------------------------------------

@c3
def test_dedup_idempotence():
    fin.test_dedup_idempotent()


@c3
def test_conflict_key_uniqueness_and_selection_from_input():
    fin.test_conflict_resolution_properties()


@c3
def test_composition_law_on_1000_synthetic_projects():
    cases = []

    @settings(max_examples=1000, deadline=None, database=None, suppress_health_check=[HealthCheck.too_slow])
    @given(fin.synthetic_projects())
    def run(project):
        cases.append(project)
        fin.check_composition(project)

    run()
    assert len(cases) >= 1000


@c3
def test_version_order_laws_on_10000_strings():
    generated = []

    @settings(max_examples=3400, deadline=None, database=None)
    @given(ver.versions, ver.versions, ver.versions)
    def run(a, b, c):
        generated.extend((a, b, c))
        ver.check_order_laws(a, b, c)

    run()
    assert len(generated) >= 10_000


@c3
def test_version_reference_table():
    assert len(ver.FLAT) >= 30
    ver.test_reference_table()


# 4 ---------------------------------------------------------------------------------

@c4
@pytest.mark.parametrize("name", SCENARIOS)
def test_scenario_matches_golden(name):
    assert labels(name) == golden_labels(name)


def _excluded(report):
    return {(e.item.key if hasattr(e.item, "key") else e.item, e.reason) for e in report.excluded}


@c4
def test_wearapp_excluded_not_labelled():
    report = extract_project(CORPUS / "s_wearapp")
    wear = ("com.google.android.support", "wearable", "2.9.0")
    assert wear not in report.labels()
    assert (wear, "not-packaged:wearApp") in _excluded(report)
    assert ":wear" not in report.module_order


@c4
def test_projectdir_override_followed():
    report = extract_project(CORPUS / "s_projectdir_override")
    assert ("androidx.preference", "preference", "1.1.1") in report.labels()
    assert not any("stale" in str(e.item) for e in report.excluded)


@c4
def test_unreferenced_module_contributes_nothing():
    report = extract_project(CORPUS / "s_reachability")
    assert ":sample" not in report.module_order
    assert all(c.origin_module != ":sample" for c in report.dependencies)
    assert all(e.origin_module != ":sample" for e in report.excluded)


@c4
def test_cross_module_conflict_resolved_to_highest():
    report = extract_project(CORPUS / "s_version_conflict")
    assert ("com.google.code.gson", "gson", "2.9.0") in report.labels()
    assert (("com.google.code.gson", "gson", "2.8.1"), "version-conflict") in _excluded(report)


@c4
def test_bom_supplies_same_group_versions():
    report = extract_project(CORPUS / "s_bom")
    by_key = {c.key: c for c in report.dependencies}
    assert by_key[("com.squareup.okhttp3", "okhttp", "4.11.0")].status is Status.BOM_DERIVED
    assert by_key[("com.squareup.okhttp3", "logging-interceptor", "4.11.0")].status is Status.BOM_DERIVED
    # an explicit version is never overridden by the BOM
    assert by_key[("com.squareup.okhttp3", "mockwebserver", "4.10.0")].status is Status.RESOLVED


@c4
def test_module_layer_shadows_project_layer():
    report = extract_project(CORPUS / "s_mixed_dsl")
    by_artifact = {c.artifact: c for c in report.dependencies}
    assert by_artifact["lifecycle-runtime-ktx"].version == "2.5.1"
    assert by_artifact["lifecycle-runtime-ktx"].origin_module == ":app"
    assert by_artifact["lifecycle-common"].version == "2.2.0"


# 5 ---------------------------------------------------------------------------------

@c5
def test_pearson_perfect_correlation():
    assert abs(pearson([(1, 1), (2, 2), (3, 3)]) - 1.0) <= 1e-12


@c5
def test_mae_exact():
    assert mae([(3, 3), (5, 4), (7, 9)]) == 1.0


@c5
def test_match_rate_half():
    pairs = [EvaluationPair.of("p", ["g:a:1"], ["g:a:1"]), EvaluationPair.of("q", ["g:a:1"], ["g:a:2"])]
    assert match_rate(pairs) == 0.5


# 6 ---------------------------------------------------------------------------------

@c6
def test_self_consistency_run(tmp_path, capsys):
    out_dir = tmp_path / "reports"
    assert main(["corpus", str(CORPUS), "-o", str(out_dir), "--format", "lines"]) == 0
    assert main(["metrics", str(out_dir), "--golden", str(GOLDEN), "-o", str(tmp_path / "m.json")]) == 0
    capsys.readouterr()
    metrics = json.loads((tmp_path / "m.json").read_text())
    assert metrics["n"] == len(list(CORPUS.iterdir()))
    assert metrics["unmatched_predictions"] == [] and metrics["unmatched_goldens"] == []
    assert metrics["pearson_r"] == "UNDEFINED" or abs(metrics["pearson_r"] - 1.0) <= 1e-12
    assert metrics["mae"] == 0
    assert metrics["match_rate"] == 1.0


# 7 ---------------------------------------------------------------------------------

FUZZ_FILES = 1000
SCRIPT_SUFFIXES = (".gradle", ".kts", ".toml", ".properties")


def _truncate(rng, text):
    return text[:rng.randint(0, len(text))]


def _delete_braces(rng, text):
    idx = [i for i, ch in enumerate(text) if ch in "{}()[]"]
    drop = set(rng.sample(idx, min(len(idx), rng.randint(1, 3))))
    return "".join(ch for i, ch in enumerate(text) if i not in drop)


def _inject_comment(rng, text):
    pos = rng.randint(0, len(text))
    junk = rng.choice(["//", "/*", "*/", "/* open", "# ", "'''", '"', "${", "\\"])
    return text[:pos] + junk + text[pos:]


MUTATIONS = (_truncate, _delete_braces, _inject_comment)


class _Hang(Exception):
    pass


@contextmanager
def _deadline(seconds):
    def fire(_sig, _frame):
        raise _Hang()
    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def _scripts(project: Path):
    return sorted(p for p in project.rglob("*") if p.is_file() and p.suffix in SCRIPT_SUFFIXES)


@c7
def test_fuzzed_corpus_never_crashes(tmp_path):
    rng = random.Random(7)
    projects = sorted(p for p in CORPUS.iterdir() if p.is_dir())
    times, reports, structured, crashes = [], 0, 0, []
    for i in range(FUZZ_FILES):
        src = rng.choice(projects)
        dst = tmp_path / f"fuzz{i:04d}"
        shutil.copytree(src, dst)
        target = rng.choice(_scripts(dst))
        text = target.read_text(encoding="utf-8")
        for mutate in rng.sample(MUTATIONS, rng.randint(1, 3)):
            text = mutate(rng, text)
        target.write_text(text, encoding="utf-8")
        start = time.perf_counter()
        try:
            with _deadline(10):
                report = extract_project(dst)
            assert isinstance(report, ExtractionReport)
            ExtractionReport.from_json(report.to_json())
            reports += 1
        except ExtractionError as err:
            assert err.to_dict()["error"]
            structured += 1
        except Exception as err:  # anything else is a crash
            crashes.append((dst.name, target.relative_to(dst).as_posix(), repr(err)))
        times.append(time.perf_counter() - start)
        shutil.rmtree(dst)
    assert crashes == []
    assert reports + structured == FUZZ_FILES
    p95 = statistics.quantiles(times, n=20)[-1]
    assert p95 < 1.0, p95


@c7
def test_fixture_p95_wall_time():
    times = []
    for p in sorted(CORPUS.iterdir()):
        for _ in range(5):
            start = time.perf_counter()
            extract_project(p)
            times.append(time.perf_counter() - start)
    assert statistics.quantiles(times, n=20)[-1] < 1.0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
