import json

import pytest

from config import FIXTURES_FOLDER
from geometry.algebroid import LieAlgebroid
from geometry.gencomplex import GCStructure
from geometry.stacky import ShiftedPairing, ShiftedTwoForm
from workers.scene_parser import (
    BraneData, CoisotropicPair, LagrangianData, SceneError, load_scene, parse_scene, select_tasks,
)


def scene_doc(**extra):
    doc = {"schema": 1, "name": "t", "chart": ["x", "y"]}
    doc.update(extra)
    return doc


def test_fixture_structures_have_expected_types():
    scene = load_scene(FIXTURES_FOLDER / "poisson_r2.json")
    assert isinstance(scene.get("A"), LieAlgebroid)
    assert isinstance(scene.get("omega"), ShiftedTwoForm)
    assert [t.op for t in scene.tasks] == ["check-algebroid", "check-shifted", "check-lagrangian"]


def test_every_fixture_parses():
    for path in sorted(FIXTURES_FOLDER.glob("*.json")):
        scene = load_scene(path)
        assert scene.name


def test_lagrangian_and_pair_types():
    plane = load_scene(FIXTURES_FOLDER / "lagrangian_plane.json")
    assert isinstance(plane.get("omega"), ShiftedPairing)
    assert isinstance(plane.get("horizontal"), LagrangianData)
    assert isinstance(load_scene(FIXTURES_FOLDER / "coisotropic_r4.json").get("hyperplanes"), CoisotropicPair)
    assert isinstance(load_scene(FIXTURES_FOLDER / "torus_brane.json").get("example"), BraneData)


def test_terms_match_matrix_form():
    doc = scene_doc(tensors={
        "P": {"kind": "bivector", "terms": [[[0, 0], [0, 1], "1/2"]]},
        "Q": {"kind": "bivector", "matrix": [[0, "1/2"], ["-1/2", 0]]},
        "w": {"kind": "form", "terms": [[[0, 0], [1, 0], "1"]]},
        "v": {"kind": "form", "matrix": [[0, -1], [1, 0]]},
    })
    scene = parse_scene(doc)
    assert scene.get("P") == scene.get("Q")
    assert scene.get("w") == scene.get("v")


def test_undefined_tensor_has_location():
    doc = scene_doc(structures={"J": {"type": "gc", "Q": "missing"}})
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "structures.J.Q"
    assert "missing" in str(e.value)


def test_wrong_schema():
    with pytest.raises(SceneError) as e:
        parse_scene(scene_doc(schema=2))
    assert e.value.location == "schema"


def test_bad_term_location():
    doc = scene_doc(tensors={"f": {"kind": "function", "terms": [[[1], [], "1"]]}})
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "tensors.f.terms[0]"


def test_float_coefficients_rejected():
    doc = scene_doc(tensors={"w": {"kind": "form", "matrix": [[0, 0.5], [-0.5, 0]]}})
    with pytest.raises(SceneError):
        parse_scene(doc)


def test_self_reference_is_reported():
    doc = scene_doc(structures={"s": {"type": "shifted_form", "algebroid": "s"}})
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert "itself" in str(e.value)


def test_task_target_type_checked():
    doc = scene_doc(structures={"T": {"type": "algebroid", "kind": "tangent"}},
                    tasks=[{"op": "check-gc", "target": "T"}])
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "tasks[0].target"


def test_unknown_op_and_expect():
    with pytest.raises(SceneError):
        parse_scene(scene_doc(tasks=[{"op": "check-everything", "target": "x"}]))
    doc = scene_doc(structures={"T": {"type": "algebroid", "kind": "tangent"}},
                    tasks=[{"op": "check-algebroid", "target": "T", "expect": "maybe"}])
    with pytest.raises(SceneError):
        parse_scene(doc)


def test_task_conventions_validated():
    doc = scene_doc(structures={"T": {"type": "algebroid", "kind": "tangent"}},
                    tasks=[{"op": "check-algebroid", "target": "T", "conventions": {"lift_sign": -1}}])
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "tasks[0].conventions"


def test_structure_errors_are_wrapped():
    """{x,y} = 1, {y,z} = y breaks Jacobi; the error surfaces at the structure"""
    doc = {
        "schema": 1, "chart": ["x", "y", "z"],
        "tensors": {"P": {"kind": "bivector", "terms": [[[0, 0, 0], [0, 1], "1"], [[0, 1, 0], [1, 2], "1"]]}},
        "structures": {"A": {"type": "algebroid", "kind": "poisson", "P": "P"}},
    }
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "structures.A"


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1,\n "chart": [}', encoding="utf-8")
    with pytest.raises(SceneError) as e:
        load_scene(path)
    assert e.value.location.startswith(f"{path}:2:")


def test_missing_file(tmp_path):
    with pytest.raises(SceneError):
        load_scene(tmp_path / "nope.json")


def test_select_tasks():
    scene = load_scene(FIXTURES_FOLDER / "gc_symplectic.json")
    assert len(select_tasks(scene, "run")) == 4
    assert [t.index for t in select_tasks(scene, "check-hhs")] == [1, 2]
    adhoc = select_tasks(scene, "check-gc", "J")
    assert len(adhoc) == 1 and adhoc[0].target == "J" and adhoc[0].expect
    assert isinstance(scene.get("J"), GCStructure)


def test_select_tasks_checks_target():
    scene = load_scene(FIXTURES_FOLDER / "gc_symplectic.json")
    with pytest.raises(SceneError):
        select_tasks(scene, "lift-brane", "J")


def test_scale_option_and_expect():
    doc = json.loads((FIXTURES_FOLDER / "gc_symplectic.json").read_text(encoding="utf-8"))
    task = parse_scene(doc).tasks[2]
    assert task.options == {"scale_Q": "2"}
    assert not task.expect


def test_mode_options_must_be_boolean():
    doc = json.loads((FIXTURES_FOLDER / "so3_stack.json").read_text(encoding="utf-8"))
    assert parse_scene(doc).tasks[4].options == {"symbolic": True}
    doc["tasks"][4]["symbolic"] = "yes"
    with pytest.raises(SceneError) as e:
        parse_scene(doc)
    assert e.value.location == "tasks[4].symbolic"
