"""
workers/scene_parser.py

Scene file (JSON) -> typed structures used by workers/task_runner.py

Provides:
    load_scene(path) -> Scene
    parse_scene(doc, source) -> Scene
    select_tasks(scene, op, target) -> List[Task]

Scene layout (schema 1):
    {
      "schema": 1,
      "name": "...",
      "chart": ["x", "y"],
      "parameters": {"seed": 1, "samples": 5},
      "tensors":    {name: {"kind": "function" | "form" | "bivector" | "tensor", "terms" | "matrix" | "components": ...}},
      "structures": {name: {"type": "gc" | "algebroid" | "shifted_form" | "complex" | "pairing" |
                                    "lagrangian" | "coisotropic_pair" | "brane", ...}},
      "tasks":      [{"op": "check-gc", "target": "J", "expect": "pass", "seed": ..., "samples": ...,
                      "conventions": {...}}, ...]
    }

Terms are [exponents over the chart coordinates, indices of odd symbols (dx for forms,
∂x for bivectors) in multiplication order, "p/q"]. Every failure carries the json
location of the offending entry.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import sympy

from config import CONVENTIONS, SCENE_SCHEMA, apply_conventions
from geometry import linalg
from geometry.algebroid import (
    LieAlgebroid, abelian_algebroid, lie_algebra_algebroid, poisson_algebroid, so3_constants, tangent_algebroid,
)
from geometry.cartan import (
    D_PREFIX, PARTIAL_PREFIX, AffineSubspace, Form, MultiVector, VectorValuedForm, bivector_from_matrix,
    coordinate_chart, form_chart, form_from_matrix, multivector_chart, tensor_from_matrix,
)
from geometry.errors import GeometryError
from geometry.gencomplex import GCStructure
from geometry.stacky import ChainMap, LinearComplex, ShiftedPairing, ShiftedTwoForm, canonical_one_shifted
from geometry.symcore import GradedElement, rational
from geometry.tori import CoisotropicBrane, SymplecticTorus, standard_torus

LOG = logging.getLogger("scene")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)

OPS = ("check-gc", "check-algebroid", "check-shifted", "check-lagrangian", "check-hhs", "check-foliation",
       "lift-brane", "intersect")


class SceneError(GeometryError):
    """Malformed scene; location is a json path such as tensors.w.terms[0]."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


# -----------------------
# Scene-level structures
# -----------------------
@dataclass
class LagrangianData:
    f: ChainMap
    omega: ShiftedPairing
    gamma: Optional[ShiftedPairing] = None


@dataclass
class CoisotropicPair:
    P: MultiVector
    first: AffineSubspace
    second: AffineSubspace


@dataclass
class BraneData:
    torus: SymplecticTorus
    brane: CoisotropicBrane


@dataclass
class Task:
    index: int
    op: str
    target: Optional[str]
    seed: Optional[int] = None
    samples: Optional[int] = None
    expect: bool = True
    conventions: Dict[str, Any] = field(default_factory=dict)
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"#{self.index + 1} {self.op} {self.target or ''}".rstrip()


# Accepted structure types per op; "intersect" also takes a pair of lagrangians via options.
TARGET_TYPES = {
    "check-gc": (GCStructure,),
    "check-algebroid": (LieAlgebroid,),
    "check-shifted": (ShiftedTwoForm, ShiftedPairing),
    "check-lagrangian": (LieAlgebroid, LagrangianData),
    "check-hhs": (GCStructure,),
    "check-foliation": (GCStructure,),
    "lift-brane": (BraneData,),
    "intersect": (CoisotropicPair,),
}


@dataclass
class Scene:
    name: str
    chart: Any
    tensors: Dict[str, Any]
    structures: Dict[str, Any]
    tasks: List[Task]
    parameters: Dict[str, Any]
    source: str = ""

    def get(self, name: str, location: str = ""):
        if name in self.structures:
            return self.structures[name]
        if name in self.tensors:
            return self.tensors[name]
        raise SceneError(f"unknown name '{name}'", location)


# -----------------------
# Low-level readers
# -----------------------
def _require(doc: dict, key: str, location: str, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise SceneError(f"missing '{key}'", location)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SceneError(f"'{key}' must be {getattr(kind, '__name__', kind)}", f"{location}.{key}")
    return value


def _matrix(value, location: str, rows: Optional[int] = None, cols: Optional[int] = None) -> sympy.Matrix:
    if not isinstance(value, list) or any(not isinstance(r, list) for r in value):
        raise SceneError("matrix must be a list of rows", location)
    try:
        M = linalg.qmatrix(value, rows or 0, cols or 0)
    except (TypeError, ValueError, sympy.SympifyError) as e:
        raise SceneError(f"bad matrix entry: {e}", location) from e
    if value and len({len(r) for r in value}) != 1:
        raise SceneError("matrix rows have different lengths", location)
    if rows is not None and cols is not None and M.shape != (rows, cols):
        raise SceneError(f"matrix has shape {M.shape}, expected {(rows, cols)}", location)
    return M


def _vector(value, location: str) -> List:
    if not isinstance(value, list):
        raise SceneError("vector must be a list", location)
    try:
        return [linalg.to_sympy_number(v) for v in value]
    except (TypeError, ValueError, sympy.SympifyError) as e:
        raise SceneError(f"bad vector entry: {e}", location) from e


def _coefficient(value, location: str):
    try:
        return rational(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise SceneError(f"bad coefficient {value!r}: {e}", location) from e


def _terms(chart_full, base, prefix: str, terms, location: str) -> GradedElement:
    """Sum of coeff * x^exps * s_i1 * s_i2 ... with s the odd symbols prefix + coordinate."""
    if not isinstance(terms, list):
        raise SceneError("terms must be a list", location)
    names = base.names
    out = chart_full.zero()
    for t, term in enumerate(terms):
        where = f"{location}[{t}]"
        if not isinstance(term, list) or len(term) != 3:
            raise SceneError("term must be [exponents, odd indices, coefficient]", where)
        exps, odd, coeff = term
        if not isinstance(exps, list) or len(exps) != len(names):
            raise SceneError(f"expected {len(names)} exponents", where)
        if any(not isinstance(e, int) or e < 0 for e in exps):
            raise SceneError("exponents must be non-negative integers", where)
        if not isinstance(odd, list) or any(not isinstance(i, int) or not 0 <= i < len(names) for i in odd):
            raise SceneError(f"odd indices must lie in [0, {len(names)})", where)
        if odd and not prefix:
            raise SceneError("functions have no odd symbols", where)
        value = chart_full.constant(_coefficient(coeff, where))
        for name, e in zip(names, exps):
            if e:
                value = value * chart_full.gen(name) ** e
        for i in odd:
            value = value * chart_full.gen(prefix + names[i])
        out = out + value
    return out


def parse_tensor(base, spec: dict, location: str):
    kind = _require(spec, "kind", location, str)
    n = len(base)
    if kind == "function":
        return _terms(base, base, "", _require(spec, "terms", location, list), f"{location}.terms")
    if kind == "form":
        if "matrix" in spec:
            return form_from_matrix(base, _matrix(spec["matrix"], f"{location}.matrix", n, n).tolist())
        chart = form_chart(base)
        return Form(base, _terms(chart, base, D_PREFIX, _require(spec, "terms", location), f"{location}.terms"))
    if kind == "bivector":
        if "matrix" in spec:
            return bivector_from_matrix(base, _matrix(spec["matrix"], f"{location}.matrix", n, n).tolist())
        chart = multivector_chart(base)
        return MultiVector(base, _terms(chart, base, PARTIAL_PREFIX, _require(spec, "terms", location),
                                        f"{location}.terms"))
    if kind == "tensor":
        if "matrix" in spec:
            return tensor_from_matrix(base, _matrix(spec["matrix"], f"{location}.matrix", n, n).tolist())
        comps = _require(spec, "components", location, dict)
        chart = form_chart(base)
        out = {}
        for name, terms in comps.items():
            if name not in base.names:
                raise SceneError(f"unknown coordinate '{name}'", f"{location}.components")
            out[name] = _terms(chart, base, D_PREFIX, terms, f"{location}.components.{name}")
        return VectorValuedForm(base, out)
    raise SceneError(f"unknown tensor kind '{kind}'", f"{location}.kind")


# -----------------------
# Structures
# -----------------------
class _Resolver:
    """Builds structures on first use so entries may reference each other in any order."""

    def __init__(self, scene: Scene, specs: Dict[str, dict]):
        self.scene = scene
        self.specs = specs
        self.pending = set()

    def tensor(self, name, location: str, kind=None):
        if not isinstance(name, str) or name not in self.scene.tensors:
            raise SceneError(f"undefined tensor '{name}'", location)
        value = self.scene.tensors[name]
        if kind is not None and not isinstance(value, kind):
            raise SceneError(f"tensor '{name}' has the wrong kind", location)
        return value

    def structure(self, name, location: str, kind=None):
        if not isinstance(name, str):
            raise SceneError("structure reference must be a name", location)
        if name not in self.scene.structures:
            if name not in self.specs:
                raise SceneError(f"undefined structure '{name}'", location)
            if name in self.pending:
                raise SceneError(f"structure '{name}' refers to itself", location)
            self.pending.add(name)
            self.scene.structures[name] = self.build(name, self.specs[name], f"structures.{name}")
            self.pending.discard(name)
        value = self.scene.structures[name]
        if kind is not None and not isinstance(value, kind):
            raise SceneError(f"structure '{name}' has the wrong type", location)
        return value

    def build(self, name: str, spec: dict, location: str):
        kind = _require(spec, "type", location, str)
        builder = getattr(self, "_" + kind, None)
        if builder is None:
            raise SceneError(f"unknown structure type '{kind}'", f"{location}.type")
        try:
            return builder(name, spec, location)
        except SceneError:
            raise
        except GeometryError as e:
            raise SceneError(str(e), location) from e

    # ---------- builders ----------
    def _gc(self, name, spec, location):
        base = self.scene.chart
        parts = {}
        for key, kind in (("I", VectorValuedForm), ("P", MultiVector), ("Q", Form), ("H", Form)):
            if spec.get(key) is not None:
                parts[key] = self.tensor(spec[key], f"{location}.{key}", kind)
        return GCStructure(base, **parts)

    def _algebroid(self, name, spec, location):
        base = self.scene.chart
        kind = spec.get("kind", "explicit")
        if kind == "poisson":
            return poisson_algebroid(self.tensor(_require(spec, "P", location), f"{location}.P", MultiVector))
        if kind == "tangent":
            return tangent_algebroid(base)
        if kind == "abelian":
            return abelian_algebroid(base, _require(spec, "rank", location, int))
        if kind == "lie_algebra":
            constants = spec.get("constants", "so3")
            if constants == "so3":
                constants = so3_constants()
            return lie_algebra_algebroid(base, self._constants(constants, f"{location}.constants"))
        if kind == "explicit":
            anchor = _require(spec, "anchor", location, list)
            rows = [[self._function(v, f"{location}.anchor[{a}][{i}]") for i, v in enumerate(row)]
                    for a, row in enumerate(anchor)]
            structure = spec.get("structure")
            if structure is not None:
                structure = [[[self._function(v, f"{location}.structure[{a}][{b}][{k}]") for k, v in enumerate(cell)]
                              for b, cell in enumerate(row)] for a, row in enumerate(structure)]
            return LieAlgebroid(base, rows, structure, name=name)
        raise SceneError(f"unknown algebroid kind '{kind}'", f"{location}.kind")

    def _constants(self, constants, location):
        if not isinstance(constants, list):
            raise SceneError("structure constants must be a nested list", location)
        return [[[_coefficient(v, location) for v in cell] for cell in row] for row in constants]

    def _function(self, value, location):
        """A constant, or the name of a function tensor."""
        if isinstance(value, str) and value in self.scene.tensors:
            return self.tensor(value, location, GradedElement)
        return _coefficient(value, location)

    def _shifted_form(self, name, spec, location):
        A = self.structure(_require(spec, "algebroid", location), f"{location}.algebroid", LieAlgebroid)
        omega = canonical_one_shifted(A)
        scale = _coefficient(spec.get("scale", 1), f"{location}.scale")
        return omega.scale(scale) if scale != 1 else omega

    def _complex(self, name, spec, location):
        dims = _require(spec, "dims", location, dict)
        try:
            dims = {int(k): int(v) for k, v in dims.items()}
        except ValueError as e:
            raise SceneError("dims must map degrees to sizes", f"{location}.dims") from e
        diffs = {}
        for k, m in spec.get("diffs", {}).items():
            k = int(k)
            diffs[k] = _matrix(m, f"{location}.diffs.{k}", dims.get(k + 1, 0), dims.get(k, 0))
        return LinearComplex(dims, diffs, name=name)

    def _pairing(self, name, spec, location):
        C = self.structure(_require(spec, "complex", location), f"{location}.complex", LinearComplex)
        shift = _require(spec, "shift", location, int)
        blocks = {}
        for k, m in _require(spec, "blocks", location, dict).items():
            k = int(k)
            blocks[k] = _matrix(m, f"{location}.blocks.{k}", C.dim(-k - shift), C.dim(k))
        if spec.get("lower"):
            return ShiftedPairing.from_lower(C, shift, blocks)
        return ShiftedPairing(C, shift, blocks)

    def _lagrangian(self, name, spec, location):
        omega = self.structure(_require(spec, "pairing", location), f"{location}.pairing", ShiftedPairing)
        source = self.structure(_require(spec, "source", location), f"{location}.source", LinearComplex)
        maps = {}
        for k, m in _require(spec, "map", location, dict).items():
            k = int(k)
            maps[k] = _matrix(m, f"{location}.map.{k}", omega.complex.dim(k), source.dim(k))
        gamma = None
        if spec.get("gamma") is not None:
            gamma = self.structure(spec["gamma"], f"{location}.gamma", ShiftedPairing)
        return LagrangianData(ChainMap(source, omega.complex, maps, name=name), omega, gamma)

    def _subspace(self, spec, location):
        basis = _require(spec, "basis", location, list)
        vectors = [_vector(v, f"{location}.basis[{i}]") for i, v in enumerate(basis)]
        offset = _vector(spec["offset"], f"{location}.offset") if spec.get("offset") is not None else None
        return AffineSubspace(self.scene.chart, vectors, offset)

    def _coisotropic_pair(self, name, spec, location):
        P = self.tensor(_require(spec, "P", location), f"{location}.P", MultiVector)
        first = self._subspace(_require(spec, "first", location, dict), f"{location}.first")
        second = self._subspace(_require(spec, "second", location, dict), f"{location}.second")
        return CoisotropicPair(P, first, second)

    def _brane(self, name, spec, location):
        torus_spec = _require(spec, "torus", location)
        if isinstance(torus_spec, int):
            torus = standard_torus(torus_spec)
        elif isinstance(torus_spec, dict):
            omega = _matrix(_require(torus_spec, "omega", f"{location}.torus"), f"{location}.torus.omega")
            torus = SymplecticTorus(omega, torus_spec.get("names"))
        else:
            raise SceneError("torus must be a dimension n or {omega, names}", f"{location}.torus")
        m = torus.dimension
        basis = _matrix(spec["basis"], f"{location}.basis") if "basis" in spec else sympy.eye(m)
        if basis.rows != m:
            raise SceneError(f"basis must have {m} rows", f"{location}.basis")
        curvature = None
        if spec.get("curvature") is not None:
            curvature = _matrix(spec["curvature"], f"{location}.curvature", basis.cols, basis.cols)
        offset = _vector(spec["offset"], f"{location}.offset") if spec.get("offset") is not None else None
        return BraneData(torus, CoisotropicBrane(basis, curvature, offset, name=name))


# -----------------------
# Tasks
# -----------------------
def _parse_task(index: int, spec: dict, scene: Scene, resolver: _Resolver) -> Task:
    location = f"tasks[{index}]"
    if not isinstance(spec, dict):
        raise SceneError("task must be an object", location)
    op = _require(spec, "op", location, str)
    if op not in OPS:
        raise SceneError(f"unknown op '{op}'", f"{location}.op")
    expect = spec.get("expect", "pass")
    if expect not in ("pass", "fail"):
        raise SceneError("expect must be 'pass' or 'fail'", f"{location}.expect")
    conventions = spec.get("conventions", {})
    try:
        apply_conventions(CONVENTIONS, conventions, source=f"{location}.conventions")
    except GeometryError as e:
        raise SceneError(str(e), f"{location}.conventions") from e
    for key in ("seed", "samples"):
        if spec.get(key) is not None and not isinstance(spec[key], int):
            raise SceneError(f"{key} must be an integer", f"{location}.{key}")
    options = {k: v for k, v in spec.items()
               if k not in ("op", "target", "expect", "conventions", "seed", "samples")}
    task = Task(index, op, spec.get("target"), spec.get("seed"), spec.get("samples"), expect == "pass",
                conventions, options)
    _check_task(task, resolver, location)
    return task


def _check_task(task: Task, resolver: _Resolver, location: str):
    if task.op == "intersect" and task.target is None:
        for key in ("first", "second"):
            resolver.structure(_require(task.options, key, location), f"{location}.{key}", LagrangianData)
        return
    if task.target is None:
        raise SceneError("missing 'target'", location)
    value = resolver.structure(task.target, f"{location}.target")
    if not isinstance(value, TARGET_TYPES[task.op]):
        raise SceneError(f"'{task.target}' is a {type(value).__name__}, {task.op} needs one of "
                         f"{', '.join(t.__name__ for t in TARGET_TYPES[task.op])}", f"{location}.target")
    if "scale_Q" in task.options:
        _coefficient(task.options["scale_Q"], f"{location}.scale_Q")
    for key in ("symbolic", "constant_rank"):
        if key in task.options and not isinstance(task.options[key], bool):
            raise SceneError(f"{key} must be true or false", f"{location}.{key}")


def parse_scene(doc: Any, source: str = "<scene>") -> Scene:
    if not isinstance(doc, dict):
        raise SceneError("scene must be a json object")
    schema = doc.get("schema")
    if schema != SCENE_SCHEMA:
        raise SceneError(f"unsupported schema {schema!r}, expected {SCENE_SCHEMA}", "schema")
    chart_names = _require(doc, "chart", "scene", list)
    try:
        chart = coordinate_chart(chart_names)
    except (GeometryError, ValueError) as e:
        raise SceneError(str(e), "chart") from e
    parameters = doc.get("parameters", {})
    if not isinstance(parameters, dict):
        raise SceneError("parameters must be an object", "parameters")
    scene = Scene(doc.get("name", Path(source).stem), chart, {}, {}, [], parameters, source)
    for name, spec in doc.get("tensors", {}).items():
        try:
            scene.tensors[name] = parse_tensor(chart, spec, f"tensors.{name}")
        except SceneError:
            raise
        except (GeometryError, ValueError) as e:
            raise SceneError(str(e), f"tensors.{name}") from e
    specs = doc.get("structures", {})
    if not isinstance(specs, dict):
        raise SceneError("structures must be an object", "structures")
    resolver = _Resolver(scene, specs)
    for name in specs:
        resolver.structure(name, f"structures.{name}")
    tasks = doc.get("tasks", [])
    if not isinstance(tasks, list):
        raise SceneError("tasks must be a list", "tasks")
    scene.tasks = [_parse_task(i, spec, scene, resolver) for i, spec in enumerate(tasks)]
    LOG.debug("scene %s: %d tensors, %d structures, %d tasks", scene.name, len(scene.tensors),
              len(scene.structures), len(scene.tasks))
    return scene


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SceneError(f"cannot read scene: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise SceneError(f"invalid json: {e.msg}", f"{path}:{e.lineno}:{e.colno}") from e
    return parse_scene(doc, str(path))


def select_tasks(scene: Scene, op: Optional[str] = None, target: Optional[str] = None) -> List[Task]:
    """Tasks of the scene for a subcommand; a target adds an ad-hoc task on that structure."""
    if op in (None, "run"):
        return list(scene.tasks)
    if target is not None:
        resolver = _Resolver(scene, {})
        task = Task(len(scene.tasks), op, target)
        _check_task(task, resolver, "--target")
        return [task]
    return [t for t in scene.tasks if t.op == op]
