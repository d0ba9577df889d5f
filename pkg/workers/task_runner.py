"""
workers/task_runner.py

Runs scene tasks against the engine.

Provides:
    run_task(scene, task, conventions, seed, samples) -> dict
    run_tasks(scene, tasks, conventions, seed, samples, workers) -> List[dict]   (scene order)

A task result is {"index", "op", "target", "ok", "expected", "passed", "report", "error"}.
Broken preconditions raised by the engine are recorded as failed tasks, never propagated.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional

from tqdm import tqdm

from config import MAX_WORKERS, apply_conventions
from geometry.algebroid import LieAlgebroid, check_axioms, delta_squared
from geometry.errors import GeometryError, IsotropyError
from geometry.gencomplex import gc_check, poisson_of
from geometry.holostack import check_foliation, check_hhs, foliation_from_hhs, hhs_from_gc
from geometry.stacky import (
    IsotropicStructure, ShiftedPairing, check_atlas, check_closed, check_lagrangian, check_nondegenerate,
    coisotropic_intersection_check, coisotropic_linear_model, lagrangian_intersection, pairing_report,
)
from geometry.tori import lift_report
from workers.scene_parser import Scene, Task

LOG = logging.getLogger("runner")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(handler)


# -----------------------
# Ops
# -----------------------
def _check_gc(scene, task, ctx):
    J = scene.get(task.target)
    report = gc_check(J)
    if report["integrability"]:
        _, report["poisson"] = poisson_of(J, report=report)
    return report


def _check_algebroid(scene, task, ctx):
    A = scene.get(task.target)
    report = check_axioms(A)
    report["delta_squared"] = delta_squared(A)
    report["ok"] = report["ok"] and report["delta_squared"]["ok"]
    return report


def _check_shifted(scene, task, ctx):
    omega = scene.get(task.target)
    if isinstance(omega, ShiftedPairing):
        report = pairing_report(omega)
        report["message"] = "nondegenerate shifted pairing" if report["ok"] else "shifted pairing fails"
        return report
    closed = check_closed(omega)
    nondegenerate = check_nondegenerate(omega, seed=ctx["seed"], samples=ctx["samples"],
                                        constant_rank=task.options.get("constant_rank", False),
                                        symbolic=task.options.get("symbolic", False))
    ok = closed["ok"] and nondegenerate["ok"]
    return {"ok": ok, "closed": closed, "nondegenerate": nondegenerate, "form": omega.render(),
            "message": f"{omega.shift}-shifted symplectic" if ok else "not shifted symplectic"}


def _check_lagrangian(scene, task, ctx):
    target = scene.get(task.target)
    if isinstance(target, LieAlgebroid):
        return check_atlas(target, seed=ctx["seed"], samples=ctx["samples"])
    try:
        return check_lagrangian(target.f, target.omega, target.gamma)
    except IsotropyError as e:
        return {"ok": False, "isotropic": False, "message": str(e)}


def _hhs(scene, task):
    h = hhs_from_gc(scene.get(task.target))
    if "scale_Q" in task.options:
        h = h.scale_Q(task.options["scale_Q"])
    return h


def _check_hhs(scene, task, ctx):
    h = _hhs(scene, task)
    report = check_hhs(h, ctx["conventions"])
    report["structure"] = h.render()
    return report


def _check_foliation(scene, task, ctx):
    h = _hhs(scene, task)
    F = foliation_from_hhs(h)
    report = check_foliation(F, h, seed=ctx["seed"], samples=ctx["samples"])
    report["dimensions"] = list(F.dims)
    return report


def _lift_brane(scene, task, ctx):
    data = scene.get(task.target)
    return lift_report(data.torus, data.brane)


def _intersect(scene, task, ctx):
    if task.target is None:
        first, second = scene.get(task.options["first"]), scene.get(task.options["second"])
        if first.omega is not second.omega:
            raise GeometryError("both Lagrangians must map to the same pairing")
        TF, pairing, report = lagrangian_intersection(
            first.omega, IsotropicStructure(first.f, first.gamma), IsotropicStructure(second.f, second.gamma))
        report["complex"] = TF.render()
        report["shift"] = pairing.shift
        return report
    pair = scene.get(task.target)
    diagram, omega = coisotropic_linear_model(pair.P, pair.first, pair.second)
    return coisotropic_intersection_check(diagram, omega)


OPERATIONS: Dict[str, Callable] = {
    "check-gc": _check_gc,
    "check-algebroid": _check_algebroid,
    "check-shifted": _check_shifted,
    "check-lagrangian": _check_lagrangian,
    "check-hhs": _check_hhs,
    "check-foliation": _check_foliation,
    "lift-brane": _lift_brane,
    "intersect": _intersect,
}


# -----------------------
# Running
# -----------------------
def run_task(scene: Scene, task: Task, conventions: dict, seed: int, samples: int) -> dict:
    ctx = {
        "conventions": apply_conventions(conventions, task.conventions) if task.conventions else conventions,
        "seed": task.seed if task.seed is not None else seed,
        "samples": task.samples if task.samples is not None else samples,
    }
    result = {"index": task.index, "op": task.op, "target": task.target, "expected": task.expect,
              "report": None, "error": None}
    try:
        report = OPERATIONS[task.op](scene, task, ctx)
        result["report"] = report
        result["ok"] = bool(report["ok"])
    except GeometryError as e:
        LOG.error("%s: %s: %s", task.label, type(e).__name__, e)
        result["error"] = f"{type(e).__name__}: {e}"
        result["ok"] = False
    except Exception as e:
        LOG.exception("%s crashed: %s", task.label, e)
        result["error"] = f"{type(e).__name__}: {e}"
        result["ok"] = False
    result["passed"] = result["ok"] == task.expect
    result["seed"] = ctx["seed"]
    result["samples"] = ctx["samples"]
    return result


def run_tasks(scene: Scene, tasks: List[Task], conventions: dict, seed: int, samples: int,
              workers: Optional[int] = None, progress: bool = True) -> List[dict]:
    """Runs tasks on a thread pool; results come back in scene order whatever the completion order."""
    if not tasks:
        return []
    max_workers = max(1, workers or MAX_WORKERS)
    results: Dict[int, dict] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as exe:
        futures = {exe.submit(run_task, scene, t, conventions, seed, samples): t for t in tasks}
        for fut in tqdm(as_completed(futures), total=len(futures), desc=f"Checking {scene.name}",
                        disable=not progress):
            task = futures[fut]
            results[task.index] = fut.result()
            LOG.debug("%s: %s", task.label, "PASS" if results[task.index]["passed"] else "FAIL")
    return [results[t.index] for t in sorted(tasks, key=lambda t: t.index)]
