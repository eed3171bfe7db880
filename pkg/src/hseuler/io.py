"""HSF1 field files: the on-disk interchange format for scalar fields.

Layout (little-endian throughout):

* bytes 0-15: magic+version, b"HSF1" + 8 zero bytes + u32 version (= 1);
* bytes 16-27: u32 triple (nx, ny, nz);
* byte 28: parity code (0 = none, 1 = even, 2 = odd);
* payload: nx*ny*nz f64 samples, z-fastest (C order of an (nx,ny,nz) array).

Every field file has a JSON sidecar ``<path>.json`` carrying at least
name, time and provenance.  Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField

MAGIC = b"HSF1" + bytes(8)
VERSION = 1
_HEADER = struct.Struct("<12sI3IB")
_PARITY_CODE = {"none": 0, "even": 1, "odd": 2}
_CODE_PARITY = {v: k for k, v in _PARITY_CODE.items()}


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(Path(path), text.encode())


def atomic_write_json(path: Path, obj) -> None:
    atomic_write_text(Path(path), json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_field(path, f: ScalarField, name: str = "", time: float = 0.0,
                provenance: str = "") -> None:
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, VERSION, f.grid.nx, f.grid.ny, f.grid.nz, _PARITY_CODE[f.z_parity]
    )
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    atomic_write_bytes(path, header + payload)
    atomic_write_json(
        path.with_name(path.name + ".json"),
        {"name": name, "time": time, "provenance": provenance},
    )


def read_field(path) -> tuple[ScalarField, dict]:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise IOError(f"{path}: truncated HSF1 header")
    magic, version, nx, ny, nz, parity = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise IOError(f"{path}: not an HSF1 v{VERSION} file")
    expected = _HEADER.size + 8 * nx * ny * nz
    if len(raw) != expected:
        raise IOError(f"{path}: payload size {len(raw)} != expected {expected}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nx, ny, nz)
    sidecar = path.with_name(path.name + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return ScalarField(Grid(nx, ny, nz), values.copy(), _CODE_PARITY[parity]), meta
