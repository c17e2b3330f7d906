"""Elementary distance-minimizing projections: Fourier modulus, support,
positivity, and histogram."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import Grid, ModulusData, ObjectField, SpectrumField, fft_forward, fft_inverse
from .fileio import read_pgf

__all__ = [
    "SupportMask",
    "Histogram",
    "project_modulus",
    "project_support",
    "project_positive",
    "project_support_positive",
    "project_histogram",
]


@dataclass(frozen=True)
class SupportMask:
    """Boolean membership per pixel; at least one member pixel."""

    grid: Grid
    member: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.member, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {mask.shape} != grid {self.grid.shape}")
        if not mask.any():
            raise ValueError("support must contain at least one pixel")
        object.__setattr__(self, "member", mask)

    @property
    def count(self) -> int:
        return int(self.member.sum())

    @classmethod
    def from_pgf(cls, path) -> "SupportMask":
        obj = read_pgf(path)
        return cls(obj.grid, obj.values != 0.0)


@dataclass(frozen=True)
class Histogram:
    """Sorted multiset of target pixel values, one per grid pixel."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_pgf(cls, path) -> "Histogram":
        return cls(read_pgf(path).values)


def project_modulus(obj: ObjectField, data: ModulusData) -> ObjectField:
    """Replace every Fourier magnitude with the measured one, keeping phases.

    Coefficients that are exactly zero get phase 0 (the magnitude is placed
    on the positive real axis), which keeps the spectrum Hermitian and the
    output real.
    """
    if obj.grid != data.grid:
        raise ValueError("object and modulus data on different grids")
    z = fft_forward(obj).values
    mag = np.abs(z)
    phase = np.where(mag > 0.0, z / np.where(mag > 0.0, mag, 1.0), 1.0 + 0.0j)
    return fft_inverse(SpectrumField(obj.grid, data.magnitudes * phase))


def project_support(obj: ObjectField, mask: SupportMask) -> ObjectField:
    if obj.grid != mask.grid:
        raise ValueError("object and support on different grids")
    return ObjectField(obj.grid, np.where(mask.member, obj.values, 0.0))


def project_positive(obj: ObjectField) -> ObjectField:
    return ObjectField(obj.grid, np.maximum(obj.values, 0.0))


def project_support_positive(obj: ObjectField, mask: SupportMask) -> ObjectField:
    """Combined support+positivity projection (the two commute)."""
    if obj.grid != mask.grid:
        raise ValueError("object and support on different grids")
    return ObjectField(obj.grid, np.where(mask.member, np.maximum(obj.values, 0.0), 0.0))


def project_histogram(obj: ObjectField, hist: Histogram) -> ObjectField:
    """Assign the n-th smallest target value to the pixel of n-th smallest value.

    Ties are broken by pixel index (stable sort) so the map is deterministic.
    The output's sorted values equal the histogram bitwise.
    """
    if len(hist) != obj.grid.size:
        raise ValueError(f"histogram size {len(hist)} != pixel count {obj.grid.size}")
    order = np.argsort(obj.values.ravel(), kind="stable")
    out = np.empty(obj.grid.size)
    out[order] = hist.values
    return ObjectField(obj.grid, out.reshape(obj.grid.shape))
