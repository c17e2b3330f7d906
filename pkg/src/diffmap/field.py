"""Grids, real object fields, complex spectra, and the unitary FFT contract.

Everything downstream treats these values as immutable: operations return
fresh arrays and never write through a field's ``values``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "ObjectField",
    "SpectrumField",
    "ModulusData",
    "object_field",
    "fft_forward",
    "fft_inverse",
    "norm",
    "normalize",
    "registered_distance",
    "wavevector_squared",
]

#: relative tolerance on the imaginary residue discarded by fft_inverse
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """A periodic d-dimensional pixel grid, d in 1..3."""

    shape: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.shape) <= 3:
            raise ValueError(f"grid must be 1-, 2- or 3-dimensional, got {self.shape}")
        if any(n < 1 for n in self.shape):
            raise ValueError(f"grid extents must be positive, got {self.shape}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class ObjectField:
    """Real-valued pixel field on a periodic grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SpectrumField:
    """Complex Fourier coefficients on the grid's reciprocal lattice."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class ModulusData:
    """Nonnegative, Hermitian-symmetric Fourier magnitudes (the measured data)."""

    grid: Grid
    magnitudes: np.ndarray

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.shape != self.grid.shape:
            raise ValueError(f"magnitudes shape {mags.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(mags)) or mags.min() < 0:
            raise ValueError("magnitudes must be finite and nonnegative")
        object.__setattr__(self, "magnitudes", mags)


def object_field(values) -> ObjectField:
    """Wrap an array as an ObjectField on the grid implied by its shape."""
    arr = np.asarray(values, dtype=np.float64)
    return ObjectField(Grid(arr.shape), arr)


def fft_forward(obj: ObjectField) -> SpectrumField:
    """Unitary discrete Fourier transform (norm-preserving in both domains)."""
    return SpectrumField(obj.grid, np.fft.fftn(obj.values, norm="ortho"))


def fft_inverse(spec: SpectrumField) -> ObjectField:
    """Unitary inverse transform; drops the round-off imaginary residue.

    Raises ValueError if the input is not Hermitian-symmetric within
    tolerance (an imaginary residue above IMAG_TOL signals a bug upstream).
    """
    full = np.fft.ifftn(spec.values, norm="ortho")
    imag = np.linalg.norm(full.imag)
    scale = np.linalg.norm(full.real)
    if imag > IMAG_TOL * max(scale, 1e-300):
        raise ValueError(
            f"non-Hermitian spectrum: imaginary residue {imag:.3e} vs norm {scale:.3e}"
        )
    return ObjectField(spec.grid, np.ascontiguousarray(full.real))


def norm(obj) -> float:
    """Euclidean norm of a field's values (object or spectrum)."""
    return float(np.linalg.norm(obj.values))


def normalize(obj: ObjectField) -> ObjectField:
    """Rescale to unit Euclidean norm."""
    n = norm(obj)
    if n == 0.0:
        raise ValueError("cannot normalize the zero field")
    return ObjectField(obj.grid, obj.values / n)


def wavevector_squared(grid: Grid) -> np.ndarray:
    """|q|^2 on the reciprocal lattice, components 2*pi*k/n in (-pi, pi]."""
    q2 = np.zeros(grid.shape)
    for ax, n in enumerate(grid.shape):
        q = 2.0 * np.pi * np.fft.fftfreq(n)
        shape = [1] * grid.ndim
        shape[ax] = n
        q2 = q2 + (q * q).reshape(shape)
    return q2


def registered_distance(a: ObjectField, b: ObjectField) -> float:
    """Minimum distance ||a - T(b)|| over cyclic translations T and inversion.

    Both parities are scanned with one FFT cross-correlation each, so the
    cost is a few transforms regardless of grid size.
    """
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid.shape} vs {b.grid.shape}")
    fa = np.fft.fftn(a.values)
    fb = np.fft.fftn(b.values)
    # correlation with b and with the inverted copy b(-r)
    best = np.fft.ifftn(fa * np.conj(fb)).real.max()
    best = max(best, np.fft.ifftn(fa * fb).real.max())
    d2 = float(np.sum(a.values**2) + np.sum(b.values**2) - 2.0 * best)
    return np.sqrt(max(d2, 0.0))
