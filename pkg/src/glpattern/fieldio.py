"""Field-file serialization and run manifests.

Binary layout (extension ``.glf``): a 32-byte header
``magic 'GLF1' (4s) | dtype code (u8: 0 real, 1 complex) | 3 pad | n (u32) |
L (f64) | 12 pad`` followed by row-major float64 or complex128 node values.
CSV files carry the same metadata in a comment header and one value (or
``re,im`` pair) per line, row-major.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid2D

__all__ = ["write_field", "read_field", "write_manifest", "sha256_of"]

_MAGIC = b"GLF1"
_HEADER = struct.Struct("<4sB3xId12x")
assert _HEADER.size == 32


def write_field(path, grid: Grid2D, values: np.ndarray) -> Path:
    path = Path(path)
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    is_complex = np.iscomplexobj(values)
    if path.suffix == ".csv":
        with path.open("w", newline="\n") as fh:
            fh.write(f"# glpattern field, n={grid.npts}, L={grid.half_width!r}, "
                     f"dtype={'complex' if is_complex else 'real'}\n")
            flat = values.ravel()
            if is_complex:
                for v in flat:
                    fh.write(f"{v.real!r},{v.imag!r}\n")
            else:
                for v in flat:
                    fh.write(f"{float(v)!r}\n")
        return path
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1 if is_complex else 0, grid.npts, grid.half_width))
        fh.write(np.ascontiguousarray(
            values, dtype=complex if is_complex else float).tobytes())
    return path


def read_field(path):
    """Returns ``(grid, values)``."""
    path = Path(path)
    if path.suffix == ".csv":
        with path.open() as fh:
            header = fh.readline()
            if not header.startswith("# glpattern field"):
                raise ValueError(f"{path} is not a glpattern CSV field file")
            meta = dict(kv.strip().split("=") for kv in header.split(",", 1)[1].split(","))
            n, L = int(meta["n"]), float(meta["L"])
            is_complex = meta["dtype"].strip() == "complex"
            rows = [line.strip().split(",") for line in fh if line.strip()]
        if is_complex:
            vals = np.array([complex(float(a), float(b)) for a, b in rows])
        else:
            vals = np.array([float(r[0]) for r in rows])
    else:
        raw = path.read_bytes()
        magic, code, n, L = _HEADER.unpack(raw[:_HEADER.size])
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a glpattern field file")
        is_complex = code == 1
        vals = np.frombuffer(raw[_HEADER.size:], dtype=complex if is_complex else float)
    grid = Grid2D(half_width=L, npts=n)
    if vals.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {vals.size}")
    return grid, vals.reshape(n, n).copy()


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config_snapshot: dict, artifacts, started: str,
                   finished: str, version: str, partial: bool = False) -> Path:
    out_dir = Path(out_dir)
    entries = [{"path": Path(p).name, "sha256": sha256_of(p)} for p in artifacts]
    manifest = {
        "config": config_snapshot,
        "code_version": version,
        "started": started,
        "finished": finished,
        "partial": partial,
        "artifacts": entries,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
