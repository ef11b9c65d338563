"""Deterministic file emission.

Every artifact is written atomically (temp file in the target
directory, then rename) and every float goes through the same 17
significant digit formatting, so a rerun of the same scenario
reproduces the output bytes exactly. Nothing here timestamps anything.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def fmt_float(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return "%.17g" % float(x)


def fmt_complex(z: complex) -> str:
    return "%.16e%+.16ej" % (z.real, z.imag)


def canonical_json(obj) -> str:
    """JSON with sorted keys and fixed float formatting, newline-terminated."""
    out = []
    _emit(obj, out)
    out.append("\n")
    return "".join(out)


def _emit(obj, out: list):
    if isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(key))
            out.append(": ")
            _emit(obj[key], out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path: str, text: str) -> None:
    """Write-then-rename so a crash never leaves a half-written file."""
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp-{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_csv(mat: np.ndarray) -> str:
    """Dense complex matrix, one row per line."""
    mat = np.asarray(mat, dtype=np.complex128)
    lines = [",".join(fmt_complex(z) for z in row) for row in mat]
    return "\n".join(lines) + "\n"


def trajectory_csv(times, populations, labels) -> str:
    """Time column plus one population column per basis label."""
    lines = ["t," + ",".join(labels)]
    for t, row in zip(times, populations):
        lines.append(fmt_float(t) + "," + ",".join(fmt_float(p) for p in row))
    return "\n".join(lines) + "\n"


SCAN_HEADER = "axis_value,fidelity,leak00,leak01,leak10,leak11,phase_10,status"


def scan_csv(rows) -> str:
    lines = [SCAN_HEADER]
    for row in rows:
        cells = [fmt_float(row.axis_value), fmt_float(row.fidelity)]
        cells.extend(fmt_float(x) for x in row.leakage)
        cells.append(fmt_float(row.phase_10))
        cells.append(row.status)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: str, config_hash: str, version: str, files) -> str:
    """Records what a run produced: config identity, tool version, and a
    content hash per emitted file. Deliberately free of timestamps."""
    manifest = {
        "config_sha256": config_hash,
        "tool_version": version,
        "files": {
            name: sha256_of(os.path.join(out_dir, name)) for name in sorted(files)
        },
    }
    path = os.path.join(out_dir, "manifest.json")
    atomic_write(path, canonical_json(manifest))
    return path
