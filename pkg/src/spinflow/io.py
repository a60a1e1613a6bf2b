"""Field snapshots (``.spnf``) and CSV tables.

Snapshot layout, all little-endian::

    b"SPNF" | version u32 | dim u32 | N_j u32 * dim | L_j f64 * dim
    | time f64 | components u32 | payload f64 * (components * prod N_j)

The payload is component-major: every node of component 0 in row-major
order, then component 1, and so on.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import Grid

MAGIC = b"SPNF"
VERSION = 1


class SnapshotFormatError(ValueError):
    pass


def encode_snapshot(grid: Grid, field: np.ndarray, time: float) -> bytes:
    grid.check(field)
    data = np.asarray(field, dtype="<f8")
    if data.ndim == grid.dim:
        data = data[..., None]
    comps = data.shape[-1]
    header = MAGIC + struct.pack("<II", VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.counts)
    header += struct.pack(f"<{grid.dim}d", *grid.extents)
    header += struct.pack("<dI", float(time), comps)
    payload = np.ascontiguousarray(np.moveaxis(data, -1, 0)).tobytes()
    return header + payload


def decode_snapshot(buf: bytes) -> tuple[Grid, np.ndarray, float]:
    """Inverse of :func:`encode_snapshot`; scalar payloads keep a trailing
    axis of length 1."""
    if buf[:4] != MAGIC:
        raise SnapshotFormatError("bad magic")
    version, dim = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    off = 12
    counts = struct.unpack_from(f"<{dim}I", buf, off)
    off += 4 * dim
    extents = struct.unpack_from(f"<{dim}d", buf, off)
    off += 8 * dim
    time, comps = struct.unpack_from("<dI", buf, off)
    off += 12
    grid = Grid(counts, extents)
    n = comps * grid.size
    if len(buf) - off != 8 * n:
        raise SnapshotFormatError(f"payload holds {len(buf) - off} bytes, expected {8 * n}")
    arr = np.frombuffer(buf, dtype="<f8", count=n, offset=off).reshape((comps,) + grid.shape)
    return grid, np.moveaxis(arr, 0, -1).astype(float), time


def write_snapshot(path, grid: Grid, field: np.ndarray, time: float) -> None:
    Path(path).write_bytes(encode_snapshot(grid, field, time))


def read_snapshot(path) -> tuple[Grid, np.ndarray, float]:
    return decode_snapshot(Path(path).read_bytes())


def format_value(v) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def write_records(path, records: Sequence, cls=None) -> None:
    """Write dataclass records with one column per field, in field order."""
    cls = cls or type(records[0])
    header = [f.name for f in dataclasses.fields(cls)]
    write_csv(path, header, (dataclasses.astuple(r) for r in records))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
