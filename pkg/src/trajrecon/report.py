"""Deterministic on-disk reports.

A run directory holds ``payload.json`` and the CSV tables (byte-identical
across reruns of the same config and seed), ``report.json`` (adds the config
echo, provenance and wall time) and optional SVG plots.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__


def plain(obj):
    """Recursively convert to JSON-safe builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def csv_text(rows) -> str:
    rows = [plain(r) for r in rows]
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def read_series(path) -> np.ndarray:
    """One value per line under a ``value`` header."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "value" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a 'value' column")
        return np.array([float(r["value"]) for r in reader])


def series_rows(values):
    return [{"value": float(v)} for v in values]


def write_run(run_dir, *, config_echo: dict, command: str, passed: bool, payload: dict,
              tables: dict | None = None, plots: dict | None = None,
              wall_time: float = 0.0) -> dict:
    """Write all artifacts of one run; returns the report mapping."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    body = {"command": command, "passed": bool(passed), "result": payload}
    payload_text = dumps(body)
    (run_dir / "payload.json").write_text(payload_text)
    files = {"payload.json": sha256(payload_text)}
    for name, rows in sorted((tables or {}).items()):
        text = csv_text(rows)
        (run_dir / f"{name}.csv").write_text(text)
        files[f"{name}.csv"] = sha256(text)
    for name, draw in sorted((plots or {}).items()):
        path = run_dir / f"{name}.svg"
        draw(path)
        files[f"{name}.svg"] = sha256(path.read_text())
    echo = plain(config_echo)
    report = {
        "tool": {"name": "trajrecon", "version": __version__},
        "config": echo,
        "provenance": {"config_sha256": sha256(json.dumps(echo, sort_keys=True)),
                       "files_sha256": files},
        "wall_time_s": round(wall_time, 6),
        "command": command,
        "passed": bool(passed),
        "payload": body["result"],
    }
    (run_dir / "report.json").write_text(dumps(report))
    return report


def svg_setup():
    """Matplotlib configured for reproducible SVG output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "trajrecon"
    return plt


def save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
