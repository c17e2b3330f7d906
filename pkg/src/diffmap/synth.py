"""Synthetic data: random fields with a tunable clustering spectrum, atomic
objects built by projection, disk test images, histograms/moduli, and
deliberately solution-free (fabricated) data sets."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .atoms import AtomicityConfig, AtomPlacement, project_atomicity
from .field import Grid, ModulusData, ObjectField, SpectrumField, fft_forward, fft_inverse, normalize, wavevector_squared
from .projections import Histogram, SupportMask

__all__ = [
    "ClusterSpec",
    "random_object",
    "clustered_random",
    "random_disk",
    "make_atomic_object",
    "histogram_of",
    "modulus_of",
    "fabricate_unsolvable",
    "random_binary_pair",
    "hermitian_random_phases",
]


@dataclass(frozen=True)
class ClusterSpec:
    """Clustering length xi in pixels; xi = 0 means a white spectrum."""

    xi: float = 0.0
    seed: int | tuple = 0

    def __post_init__(self):
        if self.xi < 0:
            raise ValueError("clustering length must be >= 0")

    @property
    def q0(self) -> float:
        if self.xi == 0.0:
            return float("inf")
        return 2.0 * np.pi / self.xi


def random_object(grid: Grid, seed) -> ObjectField:
    """I.i.d. uniform pixel values, normalized to unit norm."""
    rng = np.random.default_rng(seed)
    return normalize(ObjectField(grid, rng.random(grid.shape)))


def hermitian_random_phases(grid: Grid, seed) -> np.ndarray:
    """Uniform random phases with phi(-q) = -phi(q); self-conjugate bins get 0.

    Built as u(q) - u(-q) with u i.i.d. uniform, which is uniform mod 2*pi
    and exactly antisymmetric.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 2.0 * np.pi, grid.shape)
    rev = u
    for ax in range(grid.ndim):
        rev = np.flip(rev, axis=ax)
    rev = np.roll(rev, shift=[1] * grid.ndim, axis=tuple(range(grid.ndim)))
    return u - rev


def clustered_random(grid: Grid, spec: ClusterSpec) -> ObjectField:
    """Random real field with power spectrum q0^2 / (|q|^2 + q0^2).

    Magnitudes follow the spectrum exactly (all equal for xi = 0); phases
    are i.i.d. uniform with Hermitian symmetry enforced, so the inverse
    transform is real to round-off. Output is unit-normalized.
    """
    if spec.xi == 0.0:
        mags = np.ones(grid.shape)
    else:
        q0sq = spec.q0**2
        mags = np.sqrt(q0sq / (wavevector_squared(grid) + q0sq))
    phases = hermitian_random_phases(grid, spec.seed)
    field = fft_inverse(SpectrumField(grid, mags * np.exp(1j * phases)))
    return normalize(field)


def random_disk(grid: Grid, seed, diameter_fraction: float = 0.5
                ) -> tuple[ObjectField, SupportMask]:
    """Disk-supported object with uniform random interior values (2-d only)."""
    if grid.ndim != 2:
        raise ValueError("disk objects are 2-d")
    rng = np.random.default_rng(seed)
    center = [(n - 1) / 2.0 for n in grid.shape]
    yy, xx = np.indices(grid.shape)
    radius = diameter_fraction * min(grid.shape) / 2.0
    inside = (yy - center[0]) ** 2 + (xx - center[1]) ** 2 <= radius**2
    obj = normalize(ObjectField(grid, np.where(inside, rng.random(grid.shape), 0.0)))
    return obj, SupportMask(grid, inside)


def make_atomic_object(grid: Grid, cfg: AtomicityConfig, spec: ClusterSpec,
                       generation_margin: int = 1, max_rounds: int = 8
                       ) -> tuple[ObjectField, list[AtomPlacement]]:
    """Atomic object: atomicity projection applied to a clustered random field.

    The projection is re-applied until the atom configuration stops changing,
    so the returned object is an exact fixed point of project_atomicity with
    the given cfg. Generation uses `generation_margin` extra pixels of center
    separation; the synthesized object then satisfies the strict overlap rule
    with slack, which keeps it a fixed point under retrieval and keeps the
    fitted translations stable against noise.
    """
    gen_cfg = replace(cfg, separation_margin=cfg.separation_margin + generation_margin)
    rho = clustered_random(grid, spec)
    placements: list[AtomPlacement] = []
    for _ in range(max_rounds):
        out, placements = project_atomicity(rho, gen_cfg)
        if np.linalg.norm(out.values - rho.values) < 1e-12:
            rho = out
            break
        rho = out
    else:
        raise RuntimeError("atom configuration did not stabilize during generation")
    return rho, placements


def histogram_of(obj: ObjectField) -> Histogram:
    return Histogram(obj.values)


def modulus_of(obj: ObjectField) -> ModulusData:
    return ModulusData(obj.grid, np.abs(fft_forward(obj).values))


def fabricate_unsolvable(obj_a: ObjectField, obj_b: ObjectField
                         ) -> tuple[ModulusData, Histogram]:
    """Averaged moduli of two histogram-sharing objects: data that almost
    surely admits no exact solution (unless the objects coincide)."""
    if obj_a.grid != obj_b.grid:
        raise ValueError("objects on different grids")
    ha, hb = histogram_of(obj_a), histogram_of(obj_b)
    if not np.array_equal(ha.values, hb.values):
        raise ValueError("objects do not share a histogram")
    avg = 0.5 * (modulus_of(obj_a).magnitudes + modulus_of(obj_b).magnitudes)
    return ModulusData(obj_a.grid, avg), ha


def random_binary_pair(length: int = 32, ones: int = 16, seed=0
                       ) -> tuple[ObjectField, ObjectField]:
    """Two distinct normalized binary sequences with the same histogram."""
    if not 0 < ones < length:
        raise ValueError("need 0 < ones < length")
    rng = np.random.default_rng(seed)
    base = np.zeros(length)
    base[:ones] = 1.0
    grid = Grid((length,))
    a = rng.permutation(base)
    while True:
        b = rng.permutation(base)
        if not np.array_equal(a, b):
            break
    return normalize(ObjectField(grid, a)), normalize(ObjectField(grid, b))
