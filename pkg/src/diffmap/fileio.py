"""Portable grid file (PGF) I/O and 8-bit PGM export.

PGF layout: one ASCII header line ``pgf <d> <n1> [n2] [n3]\\n`` followed by
N little-endian float64 values in row-major order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .field import Grid, ObjectField

__all__ = ["write_pgf", "read_pgf", "write_pgm", "read_histogram_text"]


def write_pgf(path, obj: ObjectField) -> None:
    header = "pgf " + str(obj.grid.ndim) + " " + " ".join(str(n) for n in obj.grid.shape)
    with open(path, "wb") as fh:
        fh.write((header + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(obj.values, dtype="<f8").tobytes())


def read_pgf(path) -> ObjectField:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != "pgf":
            raise ValueError(f"{path}: not a PGF file")
        ndim = int(header[1])
        shape = tuple(int(x) for x in header[2 : 2 + ndim])
        if len(shape) != ndim:
            raise ValueError(f"{path}: header promises {ndim} extents, got {shape}")
        count = int(np.prod(shape))
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise ValueError(f"{path}: truncated payload ({len(raw)} bytes, wanted {8 * count})")
        values = np.frombuffer(raw, dtype="<f8").reshape(shape)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: non-finite values")
    return ObjectField(Grid(shape), values.copy())


def write_pgm(path, obj: ObjectField) -> None:
    """Min-max scaled binary PGM; 2-d fields only."""
    if obj.grid.ndim != 2:
        raise ValueError("PGM export requires a 2-d field")
    vals = obj.values
    lo, hi = vals.min(), vals.max()
    if hi > lo:
        scaled = np.round(255.0 * (vals - lo) / (hi - lo)).astype(np.uint8)
    else:
        scaled = np.zeros(obj.grid.shape, dtype=np.uint8)
    h, w = obj.grid.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())


def read_histogram_text(path) -> np.ndarray:
    """Plain-text value list, one value per line; returns the sorted values."""
    values = [float(line) for line in Path(path).read_text().split()]
    if not values:
        raise ValueError(f"{path}: empty histogram file")
    return np.sort(np.asarray(values, dtype=np.float64))
