# utils/report_helpers.py
import json
import os
import platform
import tempfile
import time
from pathlib import Path
from threading import Lock
from typing import List

import pandas as pd
import sympy

from config import REPORT_SCHEMA, TOOL_NAME, TOOL_VERSION

_LOCK = Lock()

# Tuning for retries (Windows may lock files briefly)
_RETRY_ATTEMPTS = 12
_RETRY_DELAY = 0.2  # seconds


def _atomic_write(path: Path, data: str) -> bool:
    """
    Write data to path atomically through a temp file in the same folder and os.replace.
    A locked target is retried with a small delay before a plain overwrite.
    """
    dirpath = path.parent
    dirpath.mkdir(parents=True, exist_ok=True)
    for _ in range(_RETRY_ATTEMPTS):
        tmpname = None
        try:
            tmp_fd, tmpname = tempfile.mkstemp(prefix=path.name + ".", dir=str(dirpath))
            with os.fdopen(tmp_fd, "w", encoding="utf-8") as f:
                f.write(data)
                f.flush()
                try:
                    os.fsync(f.fileno())
                except OSError:
                    pass
            os.replace(tmpname, str(path))
            return True
        except OSError:
            try:
                if tmpname and os.path.exists(tmpname):
                    os.remove(tmpname)
            except OSError:
                pass
            time.sleep(_RETRY_DELAY)

    # last resort
    try:
        path.write_text(data, encoding="utf-8")
        return True
    except OSError:
        return False


def _plain(obj):
    """json-ready copy: str keys, lists for tuples, str for anything exotic."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((_plain(v) for v in obj), key=str)
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    return str(obj)


def versions() -> dict:
    return {"python": platform.python_version(), "sympy": sympy.__version__, "pandas": pd.__version__,
            TOOL_NAME: TOOL_VERSION}


def build_report(scene, results: List[dict], conventions: dict, seed: int, samples: int) -> dict:
    passed = sum(1 for r in results if r["passed"])
    return _plain({
        "schema": REPORT_SCHEMA,
        "tool": TOOL_NAME,
        "versions": versions(),
        "scene": scene.name,
        "source": Path(scene.source).name if scene.source else "",
        "seed": seed,
        "samples": samples,
        "conventions": conventions,
        "tasks": results,
        "summary": {"total": len(results), "passed": passed, "failed": len(results) - passed},
        "ok": passed == len(results),
    })


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def summary_table(report: dict) -> pd.DataFrame:
    rows = []
    for r in report["tasks"]:
        message = (r.get("report") or {}).get("message") or r.get("error") or ""
        rows.append({
            "#": r["index"] + 1,
            "op": r["op"],
            "target": r["target"] or "",
            "verdict": "PASS" if r["passed"] else "FAIL",
            "expected": "pass" if r["expected"] else "fail",
            "message": message,
        })
    return pd.DataFrame(rows, columns=["#", "op", "target", "verdict", "expected", "message"])


def render_text(report: dict) -> str:
    lines = [f"{report['tool']} {report['versions'][report['tool']]}  scene={report['scene']}  "
             f"seed={report['seed']}  samples={report['samples']}"]
    for r in report["tasks"]:
        verdict = "PASS" if r["passed"] else "FAIL"
        detail = r["error"] or (r.get("report") or {}).get("message", "")
        lines.append(f"{verdict}  #{r['index'] + 1} {r['op']} {r['target'] or ''}  {detail}".rstrip())
    if report["tasks"]:
        lines.append("")
        lines.append(summary_table(report).to_string(index=False))
    s = report["summary"]
    lines.append(f"{s['passed']}/{s['total']} tasks passed")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str = "text") -> bytes:
    text = render_json(report) if fmt == "json" else render_text(report)
    return text.encode("utf-8")


def write_report(path, report: dict) -> bool:
    with _LOCK:
        return _atomic_write(Path(path), render_json(report))
