import pytest
from hypothesis import given, strategies as st

from tplextract.model import (Coordinate, Diagnostic, DiagCode, Diagnostics, Location, MalformedCoordinate,
                              MultiApkError, Severity, Status, is_dynamic, parse_coordinate)


def test_parse_string_notation():
    c = parse_coordinate("com.android.support:transition:25.1.0")
    assert c.key == ("com.android.support", "transition", "25.1.0")
    assert c.status is Status.RESOLVED


def test_suffix_stripped_from_identity():
    c = parse_coordinate("com.jakewharton:aspects:1.0.0@aar")
    assert c.key == ("com.jakewharton", "aspects", "1.0.0")
    assert c.suffix == "aar"
    assert c == parse_coordinate("com.jakewharton:aspects:1.0.0")


def test_classifier_part_is_not_identity():
    c = parse_coordinate("org.lwjgl:lwjgl:3.3.1:natives-linux")
    assert c.key == ("org.lwjgl", "lwjgl", "3.3.1")


def test_versionless_is_unresolved():
    c = parse_coordinate("com.squareup.okhttp3:okhttp")
    assert c.version is None
    assert c.status is Status.UNRESOLVED


@pytest.mark.parametrize("v", ["1.1.+", "+", "latest.release", "[1.0,2.0)", "(,1.0]"])
def test_dynamic_versions_are_ambiguous(v):
    assert is_dynamic(v)
    assert parse_coordinate(f"g:a:{v}").status is Status.AMBIGUOUS


@pytest.mark.parametrize("text", ["", "justone", ":a:1", "g::1", "$group:a:1", "g:${name}:1", "g:a b:1"])
def test_malformed(text):
    with pytest.raises(MalformedCoordinate):
        parse_coordinate(text)


@given(st.text(max_size=40))
def test_never_dollar_in_group_or_artifact(text):
    try:
        c = parse_coordinate(text)
    except MalformedCoordinate:
        return
    assert "$" not in c.group and "$" not in c.artifact


def test_coordinate_roundtrip():
    c = parse_coordinate("g:a:1.0", keyword="api", origin_module=":lib", location=Location("lib/build.gradle", 3))
    back = Coordinate.from_dict(c.to_dict())
    assert back == c and back.to_dict() == c.to_dict()


def test_diagnostics_helpers():
    d = Diagnostics()
    d.warning(DiagCode.CYCLE, "x")
    d.error(DiagCode.MULTI_APK, "y", Location("f", 1))
    assert d.codes() == ["CYCLE", "MULTI_APK"]
    assert d[1].severity is Severity.ERROR
    assert Diagnostic.from_dict(d[1].to_dict()) == d[1]


def test_extraction_error_payload():
    err = MultiApkError([":a", ":b"])
    payload = err.to_dict()
    assert payload["error"] == "MULTI_APK"
    assert payload["candidates"] == [":a", ":b"]
    assert err.exit_code == 1
