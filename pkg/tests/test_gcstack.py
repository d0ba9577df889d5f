import json

import pytest

import gcstack
from config import CONVENTIONS, FIXTURES_FOLDER, REPORT_SCHEMA
from utils.report_helpers import build_report, render, write_report
from workers.scene_parser import load_scene
from workers.task_runner import run_task, run_tasks

FIXTURES = sorted(FIXTURES_FOLDER.glob("*.json"))
QUIET = ["--no-progress", "--workers", "2"]


def run_json(tmp_path, scene, *extra, name="out.json"):
    out = tmp_path / name
    code = gcstack.main(["run", str(scene), "--json", str(out), *QUIET, *extra])
    return code, json.loads(out.read_text(encoding="utf-8")), out


@pytest.mark.parametrize("scene", FIXTURES, ids=[p.stem for p in FIXTURES])
def test_fixture_scenes_pass(tmp_path, scene):
    code, report, _ = run_json(tmp_path, scene)
    assert code == 0, [t for t in report["tasks"] if not t["passed"]]
    assert report["ok"]
    assert report["schema"] == REPORT_SCHEMA


def test_reports_are_deterministic(tmp_path):
    scene = FIXTURES_FOLDER / "so3_stack.json"
    _, _, first = run_json(tmp_path, scene, "--seed", "11", name="a.json")
    _, _, second = run_json(tmp_path, scene, "--seed", "11", name="b.json")
    assert first.read_bytes() == second.read_bytes()


def test_report_keeps_scene_order(tmp_path):
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "torus_brane.json", "--workers", "4")
    assert [t["index"] for t in report["tasks"]] == [0, 1, 2, 3]
    assert report["summary"] == {"total": 4, "passed": 4, "failed": 0}


def test_torus_example_equations(tmp_path):
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "torus_brane.json")
    example = report["tasks"][0]["report"]
    assert example["equations"] == ["r1_hat = t2", "t1_hat = r2", "r2_hat = -t1", "t2_hat = -r1"]
    assert example["lagrangian"] and example["complex"]


def test_failing_hhs_lists_bidegrees(tmp_path):
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "gc_symplectic.json")
    scaled = report["tasks"][2]
    assert not scaled["ok"] and scaled["passed"]
    assert "(1,1)" in scaled["report"]["residuals"]["eq3"]


def test_symbolic_nondegeneracy_task(tmp_path):
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "so3_stack.json")
    symbolic = report["tasks"][4]["report"]["nondegenerate"]
    assert symbolic["mode"] == "symbolic" and symbolic["ok"]
    assert report["tasks"][1]["report"]["nondegenerate"]["mode"] == "sampled"


def test_seed_precedence(tmp_path):
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "so3_stack.json")
    assert (report["seed"], report["samples"]) == (5, 3)
    _, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "so3_stack.json", "--seed", "9", "--samples", "1")
    assert (report["seed"], report["samples"]) == (9, 1)


def test_empty_scene(tmp_path, capsys):
    code, report, _ = run_json(tmp_path, FIXTURES_FOLDER / "empty.json")
    assert code == 0
    assert report["tasks"] == []
    assert "0/0 tasks passed" in capsys.readouterr().out


def test_text_output(capsys):
    code = gcstack.main(["run", str(FIXTURES_FOLDER / "poisson_r2.json"), *QUIET])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("PASS") >= 3
    assert "FAIL" not in out


def test_json_format_on_stdout(capsys):
    gcstack.main(["check-gc", str(FIXTURES_FOLDER / "gc_complex.json"), "--format", "json", *QUIET])
    report = json.loads(capsys.readouterr().out)
    assert [t["op"] for t in report["tasks"]] == ["check-gc", "check-gc"]


def test_subcommand_with_target(tmp_path, capsys):
    code = gcstack.main(["lift-brane", str(FIXTURES_FOLDER / "torus_brane.json"), "--target", "wrong_curvature",
                         *QUIET])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out


def test_undefined_tensor_exits_2(tmp_path, capsys):
    scene = tmp_path / "bad.json"
    scene.write_text(json.dumps({
        "schema": 1, "chart": ["x", "y"],
        "structures": {"J": {"type": "gc", "P": "nowhere"}},
        "tasks": [{"op": "check-gc", "target": "J"}],
    }), encoding="utf-8")
    assert gcstack.main(["run", str(scene), *QUIET]) == 2
    assert "structures.J.P" in capsys.readouterr().err


def test_bad_convention_file_exits_2(tmp_path):
    conventions = tmp_path / "conventions.json"
    conventions.write_text(json.dumps({"lift_sign": -1}), encoding="utf-8")
    assert gcstack.main(["run", str(FIXTURES_FOLDER / "empty.json"), "--convention", str(conventions), *QUIET]) == 2


def test_convention_override_changes_verdict(tmp_path):
    """flipping the eq3 right-hand side breaks the symplectic case"""
    conventions = tmp_path / "conventions.json"
    conventions.write_text(json.dumps({"eq3_rhs_scale": 1}), encoding="utf-8")
    code = gcstack.main(["check-hhs", str(FIXTURES_FOLDER / "gc_symplectic.json"), "--target", "J",
                         "--convention", str(conventions), *QUIET])
    assert code == 1


# -----------------------
# runner and report helpers
# -----------------------
def test_engine_errors_become_failed_tasks():
    """lift-brane on a non-brane fails the task without raising"""
    scene = load_scene(FIXTURES_FOLDER / "torus_brane.json")
    result = run_task(scene, scene.tasks[3], CONVENTIONS, seed=1, samples=1)
    assert not result["ok"] and result["passed"]
    assert result["report"]["message"].startswith("precondition failed")


def test_render_is_stable():
    scene = load_scene(FIXTURES_FOLDER / "lagrangian_plane.json")
    results = run_tasks(scene, scene.tasks, CONVENTIONS, seed=1, samples=1, workers=3, progress=False)
    report = build_report(scene, results, CONVENTIONS, 1, 1)
    assert render(report, "json") == render(report, "json")
    lines = render(report, "text").decode("utf-8").splitlines()
    assert sum(line.startswith("PASS") for line in lines) == len(scene.tasks)
    assert report["conventions"]["eq3_rhs_scale"]["value"] == CONVENTIONS["eq3_rhs_scale"]["value"]


def test_write_report(tmp_path):
    scene = load_scene(FIXTURES_FOLDER / "empty.json")
    report = build_report(scene, [], CONVENTIONS, 0, 0)
    path = tmp_path / "nested" / "report.json"
    assert write_report(path, report)
    assert json.loads(path.read_text(encoding="utf-8"))["summary"]["total"] == 0
