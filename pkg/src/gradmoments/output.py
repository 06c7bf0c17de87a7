"""CSV tables and JSON run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__

__all__ = ["write_csv", "read_csv", "write_manifest", "read_manifest", "fmt"]


def fmt(v):
    """17 significant digits for floats so values round-trip exactly."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, columns, rows):
    """``columns`` is a list of ``(name, unit)``; the header reads ``name [unit]``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{n} [{u}]" for n, u in columns])
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def write_manifest(path, command, config, results=None, outputs=(), timing=None):
    path = Path(path)
    outputs = [Path(p) for p in outputs]
    man = {
        "command": command,
        "config": config,
        "versions": {"gradmoments": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "results": results or {},
        "timing_s": timing or {},
        "outputs": {os.path.relpath(p, path.parent): _digest(p) for p in outputs if p.exists()},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(man), indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path):
    return json.loads(Path(path).read_text())
