"""Bit-exact binary field files and JSON-manifested time series.

Layout: 8-byte magic ``HRZFLD01``, a 4-byte little-endian header length,
a UTF-8 JSON header ``{n, N, L, components, dtype, order}`` and the raw
little-endian float64 payload in row-major order.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FieldFormatError
from .grid import Field, Grid

MAGIC = b"HRZFLD01"

__all__ = ["write_field", "read_field", "field_bytes", "write_series", "read_series"]


def field_bytes(u: Field) -> bytes:
    g = u.grid
    header = {"n": g.n, "N": g.N, "L": g.L, "components": u.components,
              "dtype": "f64", "order": "row-major"}
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    return MAGIC + struct.pack("<I", len(hb)) + hb + payload


def write_field(u: Field, path) -> None:
    """Write ``u`` to ``path`` (atomic rename, deterministic bytes)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(field_bytes(u))
    os.replace(tmp, path)


def read_field(path) -> Field:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:8] != MAGIC:
        raise FieldFormatError(f"{path}: bad magic")
    (hlen,) = struct.unpack("<I", data[8:12])
    if 12 + hlen > len(data):
        raise FieldFormatError(f"{path}: header length exceeds file size")
    try:
        header = json.loads(data[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{path}: unreadable header ({exc})") from None
    missing = {"n", "N", "L", "components", "dtype", "order"} - set(header)
    if missing:
        raise FieldFormatError(f"{path}: header missing {sorted(missing)}")
    if header["dtype"] != "f64":
        raise FieldFormatError(f"{path}: unsupported dtype {header['dtype']!r}")
    if header["order"] != "row-major":
        raise FieldFormatError(f"{path}: unsupported order {header['order']!r}")
    grid = Grid(int(header["n"]), int(header["N"]), float(header["L"]))
    c = int(header["components"])
    count = c * grid.N ** grid.n
    payload = data[12 + hlen:]
    if len(payload) != 8 * count:
        raise FieldFormatError(
            f"{path}: payload has {len(payload)} bytes, expected {8 * count}")
    vals = np.frombuffer(payload, dtype="<f8").reshape((c,) + grid.shape)
    return Field(grid, vals)


def write_series(fields, times, directory, stem: str = "slice") -> Path:
    """Store a time series as field files plus ``manifest.json`` {times, paths}."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, f in enumerate(fields):
        name = f"{stem}_{i:05d}.hrz"
        write_field(f, d / name)
        paths.append(name)
    manifest = {"times": [float(t) for t in times], "paths": paths}
    mp = d / "manifest.json"
    mp.write_text(json.dumps(manifest, indent=1))
    return mp


def read_series(directory):
    """Load a series written by :func:`write_series` -> (times, fields)."""
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
        times, paths = manifest["times"], manifest["paths"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{d}: bad series manifest ({exc})") from None
    if len(times) != len(paths):
        raise FieldFormatError(f"{d}: times and paths differ in length")
    return np.asarray(times, float), [read_field(d / p) for p in paths]
