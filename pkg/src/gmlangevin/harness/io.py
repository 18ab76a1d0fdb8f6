"""Deterministic artifact writers.

All floats are serialized with repr-faithful '%.17g' formatting so that a
re-run under the same config and seed produces byte-identical files.  JSON
documents are written with sorted keys for the same reason; the manifest is
written last and atomically (temp file + rename) so a crash never leaves a
manifest pointing at missing results.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

__all__ = [
    "fmt_float",
    "write_final_csv",
    "write_trace_csv",
    "write_json",
    "write_json_atomic",
    "file_sha256",
    "build_manifest",
]


def fmt_float(x: float) -> str:
    return "%.17g" % x


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_final_csv(path: str, states: np.ndarray) -> None:
    """One row per chain: chain index followed by every coordinate."""
    states = np.asarray(states)
    dim = states.shape[1]
    lines = ["chain," + ",".join(f"coord_{j}" for j in range(dim))]
    for c in range(states.shape[0]):
        lines.append(str(c) + "," + ",".join(fmt_float(v) for v in states[c]))
    _write_text(path, "\n".join(lines) + "\n")


def write_trace_csv(path: str, recorded) -> None:
    """Thinned trajectories: a row per (chain, recorded step), with the noise
    level in force when that state was produced."""
    steps = np.asarray(recorded.steps)
    sigmas = np.asarray(recorded.sigmas)
    states = np.asarray(recorded.states)
    dim = states.shape[2]
    lines = ["chain,step,sigma," + ",".join(f"coord_{j}" for j in range(dim))]
    for c in range(states.shape[0]):
        for i in range(steps.shape[0]):
            lines.append(
                f"{c},{int(steps[i])},{fmt_float(float(sigmas[i]))},"
                + ",".join(fmt_float(v) for v in states[c, i])
            )
    _write_text(path, "\n".join(lines) + "\n")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: str, obj) -> None:
    _write_text(path, _dump_json(obj))


def write_json_atomic(path: str, obj) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(_dump_json(obj))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(
    config_echo: dict,
    version: str,
    backend_name: str,
    duration_seconds: float,
    result_paths: dict[str, str],
) -> dict:
    """Manifest document: resolved config, software identity, wall time, and
    a checksum per result file (everything except the manifest itself is
    byte-reproducible; the duration field is why the manifest is not)."""
    return {
        "config": config_echo,
        "version": version,
        "backend": backend_name,
        "duration_seconds": duration_seconds,
        "results": {
            name: {"path": path, "sha256": file_sha256(path)}
            for name, path in sorted(result_paths.items())
        },
    }
