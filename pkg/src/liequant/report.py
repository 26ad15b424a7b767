"""Deterministic JSON and CSV output."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

SIG_DIGITS = 17


def format_number(x) -> str:
    """Float with 17 significant digits; integers and bools keep their JSON form."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} in report")
    return format(x, f".{SIG_DIGITS - 1}e")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and fixed-precision numbers."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_, int, float, np.integer, np.floating)):
        return format_number(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def decay_rows(rep: dict) -> list:
    """``(weight, value)`` rows of a decay report; reports hold interior indices only."""
    return list(zip(rep["weights"], rep["values"]))


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(format_number(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_json(data: dict, out_dir) -> list:
    """Write ``report.json`` and its CSV sidecars from a JSON tree; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json"]
    paths[0].write_text(dumps(data) + "\n", encoding="utf-8")
    for name, rep in sorted(data.get("decay", {}).items()):
        p = out / f"decay_{name}.csv"
        write_csv(p, "weight,value", decay_rows(rep))
        paths.append(p)
    p = out / "garding_constants.csv"
    write_csv(p, "cutoff,C", [(r["cutoff"], r["C"]) for r in data.get("garding_constants", [])])
    paths.append(p)
    return paths


def emit_outputs(report, out_dir) -> list:
    """Write a :class:`Report` (or its JSON tree) to ``out_dir``."""
    data = report.to_json() if hasattr(report, "to_json") else report
    return emit_json(data, out_dir)


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
