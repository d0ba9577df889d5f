#!/usr/bin/env python3
"""
gcstack.py

Command line entry point:
    gcstack.py run <scene.json>                  run every task of a scene
    gcstack.py <op> <scene.json> [--target X]    run the scene's tasks of one op, or one ad-hoc task on X

ops: check-gc, check-algebroid, check-shifted, check-lagrangian, check-hhs, check-foliation,
     lift-brane, intersect

Exit codes: 0 all tasks as expected, 1 some task failed, 2 malformed scene or convention file.
"""

import argparse
import logging
import os
import sys

# ensure project root on path
HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)

from config import DEFAULT_SAMPLES, DEFAULT_SEED, MAX_WORKERS, load_conventions  # noqa: E402
from geometry.errors import ConventionError  # noqa: E402
from utils.report_helpers import build_report, render, write_report  # noqa: E402
from workers.scene_parser import OPS, SceneError, load_scene, select_tasks  # noqa: E402
from workers.task_runner import run_tasks  # noqa: E402

LOG = logging.getLogger("gcstack")
LOG.setLevel(logging.INFO)
if not LOG.handlers:
    h = logging.StreamHandler()
    h.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
    LOG.addHandler(h)

LOGGERS = ("gcstack", "symcore", "cartan", "gencomplex", "algebroid", "stacky", "holostack", "tori",
           "scene", "runner")
LOG_LEVELS = ("debug", "info", "warning", "error")


def _add_common(p: argparse.ArgumentParser, with_target: bool):
    p.add_argument("scene", help="Path to a scene json file")
    p.add_argument("--seed", type=int, default=None, help=f"Sampling seed (default: scene parameters, then {DEFAULT_SEED})")
    p.add_argument("--samples", type=int, default=None, help=f"Fiberwise sample points (default {DEFAULT_SAMPLES})")
    p.add_argument("--json", dest="json_path", default=None, help="Also write the json report to this path")
    p.add_argument("--convention", default=None, help="Json file overriding configurable conventions")
    p.add_argument("--format", choices=("text", "json"), default="text", help="Report format on stdout")
    p.add_argument("--log", choices=LOG_LEVELS, default="warning", help="Log level (default warning)")
    p.add_argument("--workers", type=int, default=MAX_WORKERS, help=f"Task pool size (default {MAX_WORKERS})")
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    if with_target:
        p.add_argument("--target", default=None, help="Run one task on this structure instead of the scene's tasks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcstack", description="Exact checks for generalized complex structures "
                                                                 "on stacks and the torus brane lift")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="Run every task of a scene"), with_target=False)
    for op in OPS:
        _add_common(sub.add_parser(op, help=f"Run the scene's {op} tasks"), with_target=True)
    return parser


def set_log_level(name: str):
    level = getattr(logging, name.upper())
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(message)s")
    for logger in LOGGERS:
        logging.getLogger(logger).setLevel(level)


def _resolve(flag, parameters: dict, key: str, default: int) -> int:
    if flag is not None:
        return flag
    value = parameters.get(key)
    return value if isinstance(value, int) else default


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    set_log_level(args.log)

    try:
        conventions = load_conventions(args.convention)
        scene = load_scene(args.scene)
        tasks = select_tasks(scene, args.command, getattr(args, "target", None))
    except (SceneError, ConventionError) as e:
        LOG.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return 2

    seed = _resolve(args.seed, scene.parameters, "seed", DEFAULT_SEED)
    samples = _resolve(args.samples, scene.parameters, "samples", DEFAULT_SAMPLES)
    LOG.info("scene %s: %d task(s), seed=%d samples=%d", scene.name, len(tasks), seed, samples)

    results = run_tasks(scene, tasks, conventions, seed, samples, workers=args.workers,
                        progress=not args.no_progress)
    report = build_report(scene, results, conventions, seed, samples)

    if args.json_path and not write_report(args.json_path, report):
        LOG.error("could not write %s", args.json_path)
    sys.stdout.write(render(report, args.format).decode("utf-8"))
    sys.stdout.flush()
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
