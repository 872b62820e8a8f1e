"""Report containers and their machine / human serializations.

The machine format is canonical JSON: fixed key order, two-space indent,
non-finite numbers forbidden, complex matrices as nested ``[re, im]`` pairs.
It is byte-identical across runs for identical scenarios and round-trips
through :func:`parse_machine`.  Wall times are recorded on results but are
deliberately excluded from the machine format (they would break determinism);
the human format shows them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ScenarioParseError, UsageError

__all__ = [
    "Report",
    "TaskResult",
    "REPORT_VERSION",
    "emit_human",
    "emit_machine",
    "emit_report",
    "encode_complex_matrix",
    "encode_real_matrix",
    "encode_real_vector",
    "parse_machine",
    "safe_float",
]

REPORT_VERSION = "nqs-geom/1"


def encode_complex_matrix(m) -> list[list[list[float]]]:
    """Nested lists of [re, im] pairs for a complex matrix."""
    a = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def encode_real_matrix(m) -> list[list[float]]:
    a = np.asarray(m, dtype=float)
    return [[float(x) for x in row] for row in a]


def encode_real_vector(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def safe_float(x) -> float | None:
    """float(x), with non-finite values mapped to None for JSON safety."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class TaskResult:
    """Outcome of one task: inputs echo plus outputs or a structured error."""

    task: str
    kind: str
    status: str
    inputs: dict
    outputs: dict | None = None
    error: dict | None = None
    wall_time: float | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Report:
    """Ordered task results for one scenario run."""

    version: str
    results: tuple[TaskResult, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.status == "ok" for r in self.results)


def _result_payload(r: TaskResult) -> dict:
    return {
        "task": r.task,
        "kind": r.kind,
        "status": r.status,
        "inputs": r.inputs,
        "outputs": r.outputs,
        "error": r.error,
    }


def emit_machine(report: Report) -> str:
    """Canonical JSON text of a report (deterministic, no timing data)."""
    payload = {
        "version": report.version,
        "results": [_result_payload(r) for r in report.results],
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def parse_machine(text: str) -> Report:
    """Inverse of :func:`emit_machine` (wall times come back as None)."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"report is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(payload, dict) or "version" not in payload or "results" not in payload:
        raise ScenarioParseError("report must be an object with version and results")
    results = []
    for entry in payload["results"]:
        results.append(
            TaskResult(
                task=entry["task"],
                kind=entry["kind"],
                status=entry["status"],
                inputs=entry["inputs"],
                outputs=entry.get("outputs"),
                error=entry.get("error"),
            )
        )
    return Report(version=payload["version"], results=tuple(results))


def _render_value(value: Any, indent: str) -> list[str]:
    if isinstance(value, dict):
        lines = []
        for k, v in value.items():
            sub = _render_value(v, indent + "  ")
            if len(sub) == 1:
                lines.append(f"{indent}{k}: {sub[0].strip()}")
            else:
                lines.append(f"{indent}{k}:")
                lines.extend(sub)
        return lines or [f"{indent}(empty)"]
    if isinstance(value, list):
        if all(isinstance(x, (int, float, bool)) and not isinstance(x, bool) for x in value):
            return [f"[{', '.join(_fmt_scalar(x) for x in value)}]"]
        if all(isinstance(x, list) for x in value):
            return [f"{indent}{_fmt_row(row)}" for row in value]
        return [f"{indent}{json.dumps(value)}"]
    return [_fmt_scalar(value)]


def _fmt_scalar(x: Any) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.12g}"
    if x is None:
        return "-"
    return str(x)


def _fmt_row(row: list) -> str:
    parts = []
    for x in row:
        if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            re_, im_ = float(x[0]), float(x[1])
            parts.append(f"{re_:.9g}{im_:+.9g}j" if im_ != 0.0 else f"{re_:.9g}")
        elif isinstance(x, (int, float)):
            parts.append(f"{float(x):.9g}")
        else:
            parts.append(json.dumps(x))
    return "[" + ", ".join(parts) + "]"


def emit_human(report: Report) -> str:
    """Readable report rendering, including per-task wall times."""
    lines = [f"nqs-geom report ({report.version})", "=" * 44]
    for r in report.results:
        timing = f" ({r.wall_time:.3f} s)" if r.wall_time is not None else ""
        lines.append(f"task {r.task} [{r.kind}]: {r.status}{timing}")
        if r.status == "ok" and r.outputs is not None:
            lines.extend(_render_value(r.outputs, "  "))
        elif r.error is not None:
            lines.append(f"  error type: {r.error.get('type')}")
            lines.append(f"  message: {r.error.get('message')}")
        lines.append("")
    n_ok = sum(1 for r in report.results if r.status == "ok")
    lines.append(f"{n_ok}/{len(report.results)} tasks ok")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "machine") -> str:
    if fmt == "machine":
        return emit_machine(report)
    if fmt == "human":
        return emit_human(report)
    raise UsageError(f"unknown report format {fmt!r} (use machine or human)")
