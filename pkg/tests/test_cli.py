"""Scene loading, suite orchestration, report files, and exit codes."""

import json
from pathlib import Path

import jsonschema
import pytest

from twistprod.cli import (
    SceneError, bundled_scene_names, load_scene, main, resolve_scene_path,
    run, write_reports, SUITES,
)

from conftest import bundled_scene

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "docs" / "report.schema.json")
    .read_text())

ALL_SCENES = (
    "clifford_torus", "cylinder", "direct_product", "doubly_warped_circles",
    "hyperbolic_twisted", "identity_twisted", "nonproduct_control",
    "sphere_warped",
)


def write_scene(tmp_path, body, name="case.scene"):
    path = tmp_path / name
    path.write_text(body)
    return path


MINIMAL = """
title = "one direct product"
suites = ["prop1"]

[charts.line1]
coords = ["x"]
box = [[-1.0, 1.0]]

[charts.line2]
coords = ["y"]
box = [[0.6, 1.8]]

[metrics.g1]
chart = "line1"
components = [["1"]]

[metrics.g2]
chart = "line2"
components = [["1"]]

[products.main]
factor1 = "g1"
factor2 = "g2"
sigma1 = "{sigma1}"
sigma2 = "{sigma2}"
class = "{cls}"
"""


def minimal_scene(tmp_path, sigma1="exp(x)", sigma2="1", cls="warped"):
    return write_scene(
        tmp_path, MINIMAL.format(sigma1=sigma1, sigma2=sigma2, cls=cls))


# ------------------------------------------------------------------ loading

@pytest.mark.parametrize("name", ALL_SCENES)
def test_bundled_scenes_load(name):
    scene = bundled_scene(name)
    assert scene.title
    assert scene.suites


def test_bundled_listing_is_complete():
    assert tuple(bundled_scene_names()) == ALL_SCENES


def test_scene_classes_recorded():
    scene = bundled_scene("sphere_warped")
    assert scene.product_classes["source"] == "warped"


def test_declared_class_mismatch_names_the_variable(tmp_path):
    path = write_scene(tmp_path, MINIMAL.format(
        sigma1="exp(x + v)", sigma2="1", cls="warped").replace(
            'coords = ["y"]', 'coords = ["v"]').replace(
            '[metrics.g2]\nchart = "line2"', '[metrics.g2]\nchart = "line2"'))
    with pytest.raises(SceneError, match="'v'"):
        load_scene(path)


def test_declared_class_checked(tmp_path):
    path = minimal_scene(tmp_path, sigma1="exp(x)", cls="direct")
    with pytest.raises(SceneError, match="declared direct"):
        load_scene(path)


def test_unknown_top_level_section(tmp_path):
    path = write_scene(tmp_path, MINIMAL.format(
        sigma1="1", sigma2="1", cls="direct") + "\n[wat]\nx = 1\n")
    with pytest.raises(SceneError, match="wat"):
        load_scene(path)


def test_unknown_suite_rejected(tmp_path):
    path = write_scene(tmp_path, MINIMAL.format(
        sigma1="1", sigma2="1", cls="direct").replace(
            'suites = ["prop1"]', 'suites = ["nope"]'))
    with pytest.raises(SceneError, match="nope"):
        load_scene(path)


def test_unresolved_reference(tmp_path):
    path = write_scene(tmp_path, MINIMAL.format(
        sigma1="1", sigma2="1", cls="direct").replace(
            'factor2 = "g2"', 'factor2 = "missing"'))
    with pytest.raises(SceneError, match="missing"):
        load_scene(path)


def test_invalid_toml(tmp_path):
    path = write_scene(tmp_path, "title = \n")
    with pytest.raises(SceneError):
        load_scene(path)


def test_resolve_prefers_files_then_bundled(tmp_path):
    path = minimal_scene(tmp_path)
    resolved, bundled = resolve_scene_path(str(path))
    assert resolved == path and not bundled
    resolved, bundled = resolve_scene_path("cylinder")
    assert bundled and resolved.name == "cylinder.scene"
    with pytest.raises(SceneError, match="bundled"):
        resolve_scene_path("missing_scene")


# ------------------------------------------------------------------ running

def test_run_exit_code_is_first_failing_index():
    scene = bundled_scene("nonproduct_control")
    code, reports = run(scene, list(scene.suites), 6, None, None, None)
    assert code == 1
    assert reports[0].verdict == "FAIL"
    assert reports[0].worst_residual > 0.1


def test_run_all_pass_returns_zero():
    scene = bundled_scene("direct_product")
    code, reports = run(scene, list(scene.suites), 6, None, None, None)
    assert code == 0
    assert [r.verdict for r in reports] == ["PASS"] * len(reports)


def test_errored_suite_is_never_a_pass():
    # the warped-only corollary on a genuinely twisted scene
    scene = bundled_scene("hyperbolic_twisted")
    code, reports = run(scene, ["chen"], 6, None, None, None)
    assert code == 1
    assert reports[0].verdict == "ERRORED"
    assert "not warped" in reports[0].error


def test_suite_registry_is_complete():
    assert set(SUITES) == {
        "prop1", "axioms", "hphi", "thm31", "tg", "minimality",
        "dwarped", "chen", "lemma", "moore"}


def test_multi_product_prop1_labels_are_prefixed():
    scene = bundled_scene("sphere_warped")
    code, reports = run(scene, ["prop1"], 5, None, None, None)
    assert code == 0
    labels = {c.label for c in reports[0].checks}
    assert any(label.startswith("source:") for label in labels)
    assert any(label.startswith("target:") for label in labels)


def test_suite_options_override_defaults():
    # the direct product scene tightens prop1 to 1e-12
    scene = bundled_scene("direct_product")
    _, reports = run(scene, ["prop1"], 6, None, None, None)
    assert reports[0].tolerance == 1e-12
    # CLI flag outranks the per-suite option
    _, reports = run(scene, ["prop1"], 6, None, 1e-6, None)
    assert reports[0].tolerance == 1e-6


def test_env_seed_used_when_flag_absent():
    scene = bundled_scene("direct_product")
    _, reports = run(scene, ["prop1"], 6, None, None, 777)
    assert reports[0].seed == 777
    _, reports = run(scene, ["prop1"], 6, 42, None, 777)
    assert reports[0].seed == 42


# ------------------------------------------------------------ cli end to end

def test_main_verify_writes_valid_reports(tmp_path, capsys):
    code = main(["verify", "direct_product", "--samples", "6",
                 "--report", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "all suites passed" in out
    files = sorted(tmp_path.glob("*.report.json"))
    assert [f.name for f in files] == [
        "direct_product.axioms.report.json",
        "direct_product.prop1.report.json"]
    for f in files:
        jsonschema.validate(json.loads(f.read_text()), SCHEMA)


def test_main_reports_are_byte_identical_across_reruns(tmp_path):
    for d in ("a", "b"):
        code = main(["verify", "sphere_warped", "--suite", "thm31",
                     "--samples", "5", "--seed", "9",
                     "--report", str(tmp_path / d)])
        assert code == 0
    a = (tmp_path / "a" / "sphere_warped.thm31.report.json").read_bytes()
    b = (tmp_path / "b" / "sphere_warped.thm31.report.json").read_bytes()
    assert a == b


def test_main_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("TWISTPROD_SEED", "31")
    code = main(["verify", "direct_product", "--suite", "prop1",
                 "--samples", "5", "--report", str(tmp_path)])
    assert code == 0
    payload = json.loads(
        (tmp_path / "direct_product.prop1.report.json").read_text())
    assert payload["seed"] == 31


def test_main_env_seed_must_be_an_integer(monkeypatch, capsys):
    monkeypatch.setenv("TWISTPROD_SEED", "soon")
    code = main(["verify", "direct_product", "--suite", "prop1"])
    assert code == 2
    assert "TWISTPROD_SEED" in capsys.readouterr().err


def test_main_missing_scene_is_a_usage_error(capsys):
    code = main(["verify", "definitely_not_here"])
    assert code == 2
    assert "bundled" in capsys.readouterr().err


def test_main_failing_scene_exit_code(tmp_path, capsys):
    code = main(["verify", "nonproduct_control", "--samples", "6",
                 "--report", str(tmp_path)])
    assert code == 1
    out = capsys.readouterr().out
    assert "first non-passing suite: moore (index 1)" in out
    payload = json.loads(
        (tmp_path / "nonproduct_control.moore.report.json").read_text())
    jsonschema.validate(payload, SCHEMA)
    assert payload["verdict"] == "FAIL"


def test_main_exit_code_encodes_suite_position(tmp_path):
    # a passing suite ahead of the failing one shifts the code to 2
    scene_src = (Path(resolve_scene_path("nonproduct_control")[0])
                 .read_text().replace('suites = ["moore"]',
                                      'suites = ["axioms", "moore"]'))
    path = write_scene(tmp_path, scene_src)
    code = main(["verify", str(path), "--samples", "6"])
    assert code == 2


def test_main_text_format(tmp_path):
    code = main(["verify", "direct_product", "--suite", "prop1",
                 "--samples", "5", "--format", "text",
                 "--report", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "direct_product.prop1.report.txt").read_text()
    assert "prop1" in text and "PASS" in text


def test_main_scenes_listing(capsys):
    assert main(["scenes"]) == 0
    out = capsys.readouterr().out
    for name in ALL_SCENES:
        assert name in out


def test_main_unknown_suite_flag(capsys):
    code = main(["verify", "direct_product", "--suite", "bogus"])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_write_reports_round_trip(tmp_path):
    scene = bundled_scene("direct_product")
    _, reports = run(scene, ["prop1"], 5, None, None, None)
    paths = write_reports(reports, Path("direct_product.scene"),
                          tmp_path, "json")
    assert [p.name for p in paths] == ["direct_product.prop1.report.json"]
    payload = json.loads(paths[0].read_text())
    jsonschema.validate(payload, SCHEMA)
    assert payload["suite"] == "prop1"
