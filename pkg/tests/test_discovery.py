import pytest

from tplextract.discovery import (ant_match, discover, discover_custom_scripts, locate_root, parse_settings,
                                  scan_local_artifacts)
from tplextract.model import DiagCode, Diagnostics, NotAGradleProject, ProjectIOError
from tplextract.parsing.declarations import FileTree


def test_locate_root_from_module_dir(project):
    root = project({"settings.gradle": "include ':app'", "app/build.gradle": "", "app/src/x.txt": ""})
    layout = locate_root(root / "app" / "src")
    assert layout.root_dir == root.resolve()
    assert layout.settings_file.name == "settings.gradle"


def test_locate_root_errors(tmp_path):
    with pytest.raises(ProjectIOError):
        locate_root(tmp_path / "missing")
    (tmp_path / "empty").mkdir()
    with pytest.raises(NotAGradleProject):
        locate_root(tmp_path / "empty")


def test_settings_forms(project):
    root = project({"settings.gradle": """
include ':app', ':lib'
include(':pages:madani')
include ':a', \\
        ':b'
project(':lib').projectDir = new File(rootDir, 'libraries/lib')
project(':a').projectDir = file('third_party/a')
"""})
    mods = dict(parse_settings(root / "settings.gradle", Diagnostics(), root))
    assert list(mods) == [":app", ":lib", ":pages:madani", ":a", ":b"]
    assert mods[":lib"] == root / "libraries" / "lib"
    assert mods[":a"] == root / "third_party" / "a"
    assert mods[":app"] is None


def test_settings_kts(project):
    root = project({"settings.gradle.kts": 'include(":app", ":core:ui")\n'
                                           'project(":core:ui").projectDir = File(rootDir, "ui")\n'})
    mods = dict(parse_settings(root / "settings.gradle.kts", Diagnostics(), root))
    assert mods == {":app": None, ":core:ui": root / "ui"}


def test_modules_enumerated_once_with_override(project):
    root = project({
        "settings.gradle": "include ':app', ':lib', ':app'\nproject(':lib').projectDir = new File('libs/lib')",
        "build.gradle": "", "app/build.gradle": "", "libs/lib/build.gradle.kts": "",
    })
    layout = discover(root)
    ids = [m.module_id for m in layout.modules]
    assert ids == [":", ":app", ":lib"]
    lib = layout.module(":lib")
    assert lib.dir == (root / "libs" / "lib").resolve() and lib.override


def test_missing_module_dir_is_diagnosed(project):
    root = project({"settings.gradle": "include ':app', ':gone'", "app/build.gradle": ""})
    d = Diagnostics()
    discover(root, d)
    assert DiagCode.MISSING_BUILD_FILE.value in d.codes()


def test_no_settings_single_module(project):
    root = project({"build.gradle": "apply plugin: 'com.android.application'"})
    assert [m.module_id for m in discover(root).modules] == [":"]


def test_catalog_discovery(project):
    root = project({"settings.gradle": "", "gradle/libs.versions.toml": "", "gradle/tools.versions.toml": ""})
    names = [n for n, _p in locate_root(root).catalog_files]
    assert names == ["libs", "tools"]


def test_custom_scripts_found_recursively(project):
    root = project({"settings.gradle": "", "deps.gradle": "", "buildSrc/src/main/kotlin/Deps.kt": "",
                    "gradle/versions.gradle": "", "other.gradle": ""})
    d = Diagnostics()
    found = {p.relative_to(root.resolve()).as_posix() for p in discover_custom_scripts(root.resolve(), (), d)}
    assert found == {"deps.gradle", "buildSrc/src/main/kotlin/Deps.kt", "gradle/versions.gradle"}
    assert DiagCode.DEEP_CUSTOM_SCRIPT.value in d.codes()


@pytest.mark.parametrize("pattern,path,ok", [
    ("*.jar", "a.jar", True),
    ("*.jar", "sub/a.jar", False),
    ("**/*.jar", "sub/deep/a.jar", True),
    ("**/*.jar", "a.jar", True),
    ("lib?.aar", "lib1.aar", True),
    ("lib?.aar", "lib10.aar", False),
    ("armeabi/**", "armeabi/x/libz.so", True),
])
def test_ant_match(pattern, path, ok):
    assert ant_match(pattern, path) is ok


def test_local_artifacts(project):
    root = project({
        "settings.gradle": "include ':app', ':lib'",
        "app/build.gradle": "", "lib/build.gradle": "",
        "app/libs/foo.jar": "xx", "app/libs/bar.AAR": "x",
        "app/src/main/jniLibs/armeabi/libtessellator.so": "x",
        "lib/libs/z.jar": "x",
        "app/build/intermediates/gen.jar": "x",
        "gradle/wrapper/gradle-wrapper.jar": "x",
    })
    layout = discover(root)
    arts = scan_local_artifacts(layout, {":app": [FileTree("libs", ("*.jar",))]})
    got = {(a.path, a.kind, a.referenced, a.module) for a in arts}
    assert got == {
        ("app/libs/bar.AAR", "AAR", False, ":app"),
        ("app/libs/foo.jar", "JAR", True, ":app"),
        ("app/src/main/jniLibs/armeabi/libtessellator.so", "SO", False, ":app"),
        ("lib/libs/z.jar", "JAR", False, ":lib"),
    }
    assert [a.path for a in arts] == sorted(a.path for a in arts)
    assert next(a for a in arts if a.path.endswith("foo.jar")).size_bytes == 2


@pytest.mark.parametrize("path", ["/", "../up", ":a:..", "a/b", "."])
def test_invalid_include_path_is_ignored(project, path):
    root = project({"settings.gradle": f"include ':app', '{path}'", "app/build.gradle": ""})
    diags = Diagnostics()
    assert [mid for mid, _ in parse_settings(root / "settings.gradle", diags, root)] == [":app"]
    assert diags.codes() == [DiagCode.BAD_OVERRIDE.value]


def test_artifact_scan_stays_inside_root(tmp_path):
    outside = tmp_path / "shared"
    (outside / "libs").mkdir(parents=True)
    (outside / "build.gradle").write_text("")
    (outside / "libs" / "far.jar").write_text("x")
    root = tmp_path / "proj"
    (root / "app" / "libs").mkdir(parents=True)
    (root / "app" / "build.gradle").write_text("")
    (root / "app" / "libs" / "near.jar").write_text("x")
    (root / "settings.gradle").write_text("include ':app', ':shared'\n"
                                          "project(':shared').projectDir = new File(rootDir, '../shared')\n")
    layout = discover(root)
    assert any(m.module_id == ":shared" and m.build_files for m in layout.modules)
    assert [a.path for a in scan_local_artifacts(layout)] == ["app/libs/near.jar"]


def test_discovery_is_deterministic(project):
    root = project({"settings.gradle": "include ':b', ':a'", "a/build.gradle": "", "b/build.gradle": "",
                    "a/libs/x.jar": "", "b/libs/y.jar": ""})
    one = discover(root)
    two = discover(root)
    assert [m.module_id for m in one.modules] == [m.module_id for m in two.modules]
    assert scan_local_artifacts(one) == scan_local_artifacts(two)
