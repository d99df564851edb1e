"""CSV and run-manifest writers.

Floats are written with 17 significant digits so that files round-trip
exactly and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

from . import __version__

FLOAT_FORMAT = "%.17g"


def _cell(x):
    if isinstance(x, float):
        return FLOAT_FORMAT % x
    return x


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(float(x)) if hasattr(x, "dtype") else _cell(x) for x in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8", newline="")
    return path


def content_hash(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, str):
            p = p.encode("utf-8")
        elif not isinstance(p, bytes):
            p = json.dumps(p, sort_keys=True).encode("utf-8")
        h.update(p)
    return "sha256:" + h.hexdigest()


def manifest(subcommand, parameters, tolerances, input_hash, residuals=None, outputs=(),
             wall_time=None) -> dict:
    return {
        "tool": "clusterdecouple",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": parameters,
        "tolerances": tolerances,
        "input_hash": input_hash,
        "residuals": residuals or {},
        "outputs": list(outputs),
        "wall_time_s": wall_time,
    }


def manifest_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_manifest(path, data) -> Path:
    path = Path(path)
    path.write_text(manifest_text(data), encoding="utf-8")
    return path
