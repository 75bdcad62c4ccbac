"""Binary snapshot files.

Layout (little-endian): magic "ANISO\\x01", u32 N, u32 dims[N],
f64 spacing[N], f64 origin[N], f64 time, then prod(dims) f64 field
values row-major (last axis fastest).  One file per snapshot.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"ANISO\x01"


class SnapshotFormatError(IOError):
    pass


def write_snapshot(path, dims, spacing, origin, time: float, field: np.ndarray) -> None:
    dims = tuple(int(d) for d in dims)
    field = np.ascontiguousarray(field, dtype="<f8")
    if field.shape != dims:
        raise ValueError(f"field shape {field.shape} does not match dims {dims}")
    n = len(dims)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", n))
        fh.write(struct.pack(f"<{n}I", *dims))
        fh.write(struct.pack(f"<{n}d", *(float(v) for v in spacing)))
        fh.write(struct.pack(f"<{n}d", *(float(v) for v in origin)))
        fh.write(struct.pack("<d", float(time)))
        fh.write(field.tobytes(order="C"))


def read_snapshot(path):
    """Returns (dims, spacing, origin, time, field)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        (n,) = struct.unpack("<I", fh.read(4))
        dims = struct.unpack(f"<{n}I", fh.read(4 * n))
        spacing = struct.unpack(f"<{n}d", fh.read(8 * n))
        origin = struct.unpack(f"<{n}d", fh.read(8 * n))
        (time,) = struct.unpack("<d", fh.read(8))
        count = int(np.prod(dims))
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise SnapshotFormatError(f"{path}: truncated data section")
        field = np.frombuffer(raw, dtype="<f8").reshape(dims)
    return dims, spacing, origin, time, field.astype(np.float64)


def snapshot_name(index: int) -> str:
    return f"snapshot_{index:05d}.aniso"


def write_solution_snapshots(directory, sol) -> list[str]:
    """One file per snapshot of a GridSolution; returns the file names."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for k, t in enumerate(sol.times):
        name = snapshot_name(k)
        write_snapshot(
            directory / name,
            sol.grid.dims,
            sol.grid.spacing,
            sol.grid.origin,
            float(t),
            sol.fields[k],
        )
        names.append(name)
    return names


def read_solution_snapshots(directory):
    """Read every *.aniso file in a directory, sorted by snapshot time.

    Returns (dims, spacing, origin, times, fields); all files must agree
    on the grid header.
    """
    directory = Path(directory)
    paths = sorted(directory.glob("*.aniso"))
    if not paths:
        raise SnapshotFormatError(f"no .aniso snapshots in {directory}")
    header = None
    entries = []
    for path in paths:
        dims, spacing, origin, time, field = read_snapshot(path)
        if header is None:
            header = (dims, spacing, origin)
        elif header != (dims, spacing, origin):
            raise SnapshotFormatError(f"{path}: grid header differs between snapshots")
        entries.append((time, field))
    entries.sort(key=lambda e: e[0])
    times = np.array([e[0] for e in entries])
    fields = np.stack([e[1] for e in entries])
    dims, spacing, origin = header
    return dims, spacing, origin, times, fields
