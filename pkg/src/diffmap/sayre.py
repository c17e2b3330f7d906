"""Self-convolution (Sayre) machinery: the objective V, its gradient, the
normalized descent flow used as an approximate atomicity projection, the
modulus-constrained variant, the tangent formula, and the scalar stability
map for a single atom's amplitude."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import Grid, ModulusData, ObjectField

__all__ = [
    "SayreKernel",
    "SayreConfig",
    "sayre_rhs",
    "sayre_objective",
    "sayre_gradient",
    "s_norm_step",
    "project_sayre",
    "s_mod_step",
    "tangent_formula_step",
    "field_from_phases",
    "continuum_atom",
    "f_alpha",
    "f_alpha_prime",
    "f_alpha_fixed_points",
    "lambda0_bound",
    "alpha_bound",
    "k_alpha_product",
    "cubic_coefficient",
]


@dataclass(frozen=True)
class SayreKernel:
    """Gaussian point-spread field g on the full periodic grid.

    g(r) = scale * (8/(pi*sigma))^(d/4) * exp(-2|r|^2/sigma) with |r| the
    periodic minimum-image distance. The kernel is symmetric under r -> -r,
    so its reflected copy equals itself. `scale` rescales the kernel for
    data normalized to a different sphere (scale = sqrt(M) matches objects
    of unit norm built from M atoms).
    """

    grid: Grid
    sigma: float
    scale: float = 1.0
    values: np.ndarray = field(init=False, repr=False)
    spectrum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("kernel width must be positive")
        r2 = np.zeros(self.grid.shape)
        for ax, n in enumerate(self.grid.shape):
            k = np.arange(n, dtype=np.float64)
            dist = np.minimum(k, n - k)
            shape = [1] * self.grid.ndim
            shape[ax] = n
            r2 = r2 + (dist * dist).reshape(shape)
        d = self.grid.ndim
        g = self.scale * (8.0 / (np.pi * self.sigma)) ** (d / 4.0) * np.exp(-2.0 * r2 / self.sigma)
        object.__setattr__(self, "values", g)
        object.__setattr__(self, "spectrum", np.fft.fftn(g))


def _convolve(spectrum: np.ndarray, arr: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(spectrum * np.fft.fftn(arr)).real


def sayre_rhs(obj: ObjectField, kernel: SayreKernel) -> ObjectField:
    """g * (rho x rho): kernel convolved with the squared field."""
    if obj.grid != kernel.grid:
        raise ValueError("object and kernel on different grids")
    return ObjectField(obj.grid, _convolve(kernel.spectrum, obj.values**2))


def sayre_objective(obj: ObjectField, kernel: SayreKernel) -> float:
    """V = 1/2 ||rho - g*(rho x rho)||^2."""
    resid = obj.values - sayre_rhs(obj, kernel).values
    return 0.5 * float(np.sum(resid * resid))


def sayre_gradient(obj: ObjectField, kernel: SayreKernel) -> ObjectField:
    """grad V = u - 2(g*rho) x rho + 2(g*g*(rho x rho)) x rho, u = rho - g*(rho x rho).

    The reflected kernel equals g itself (symmetric construction), so no
    separate reflected transform is needed.
    """
    rho = obj.values
    sq_spec = np.fft.fftn(rho * rho)
    rhs = np.fft.ifftn(kernel.spectrum * sq_spec).real
    smooth_rho = np.fft.ifftn(kernel.spectrum * np.fft.fftn(rho)).real
    smooth_rhs = np.fft.ifftn(kernel.spectrum**2 * sq_spec).real
    grad = rho - rhs - 2.0 * smooth_rho * rho + 2.0 * smooth_rhs * rho
    return ObjectField(obj.grid, grad)


@dataclass(frozen=True)
class SayreConfig:
    """Flow parameters: step alpha, step count, atom count, sphere radius.

    The default radius sqrt(M) matches atoms of unit norm; harness runs on
    unit-normalized data use radius 1 with a sqrt(M)-scaled kernel instead.
    """

    kernel: SayreKernel
    alpha: float = 0.37
    steps: int = 3
    atom_count: int = 1
    radius: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.steps < 0:
            raise ValueError("step count must be >= 0")
        if self.radius is None:
            object.__setattr__(self, "radius", float(np.sqrt(self.atom_count)))

    @property
    def cubic(self) -> float:
        return cubic_coefficient(self.kernel.grid.ndim)


def _to_sphere(values: np.ndarray, radius: float) -> np.ndarray:
    n = np.linalg.norm(values)
    if n == 0.0:
        raise ValueError("cannot project the zero field onto the sphere")
    return values * (radius / n)


def s_norm_step(obj: ObjectField, cfg: SayreConfig) -> ObjectField:
    """One gradient step on V followed by projection onto the radius sphere."""
    stepped = obj.values - cfg.alpha * sayre_gradient(obj, cfg.kernel).values
    return ObjectField(obj.grid, _to_sphere(stepped, cfg.radius))


def project_sayre(obj: ObjectField, cfg: SayreConfig) -> ObjectField:
    """Approximate atomicity projection: k normalized descent steps.

    steps = 0 is the identity. For steps >= 1 the flow starts from the
    sphere point nearest the input; feeding far-off-sphere points straight
    into the gradient would leave the amplitude range where the descent is
    stable (the uranium bound), so the sphere projection comes first.
    """
    if cfg.steps == 0:
        return obj
    out = ObjectField(obj.grid, _to_sphere(obj.values, cfg.radius))
    for _ in range(cfg.steps):
        out = s_norm_step(out, cfg)
    return out


def s_mod_step(obj: ObjectField, data: ModulusData, cfg: SayreConfig) -> ObjectField:
    """Gradient step on V followed by Fourier modulus projection."""
    from .projections import project_modulus

    stepped = ObjectField(obj.grid, obj.values - cfg.alpha * sayre_gradient(obj, cfg.kernel).values)
    return project_modulus(stepped, data)


def field_from_phases(data: ModulusData, phases: np.ndarray) -> ObjectField:
    """Real field with the measured magnitudes and the given (Hermitian) phases."""
    from .field import SpectrumField, fft_inverse

    spec = data.magnitudes * np.exp(1j * phases)
    return fft_inverse(SpectrumField(data.grid, spec))


def tangent_formula_step(phases: np.ndarray, data: ModulusData,
                         kernel: SayreKernel) -> np.ndarray:
    """One phase update arg(rho~) -> arg(F[g*(rho x rho)]), moduli fixed.

    Computed in the object domain: build the field from the current phases,
    square and smooth it, and read the new phases off its transform. Where
    the transformed amplitude vanishes the previous phase is kept.
    """
    obj = field_from_phases(data, phases)
    rhs = sayre_rhs(obj, kernel)
    spec = np.fft.fftn(rhs.values, norm="ortho")
    keep = np.abs(spec) == 0.0
    new = np.angle(spec)
    return np.where(keep, phases, new)


def continuum_atom(grid: Grid, sigma: float, center) -> ObjectField:
    """Unit-norm continuum-limit Gaussian atom at an integer grid center."""
    r2 = np.zeros(grid.shape)
    for ax, n in enumerate(grid.shape):
        k = np.arange(n, dtype=np.float64) - center[ax]
        dist = np.abs(k)
        dist = np.minimum(dist, n - dist)
        shape = [1] * grid.ndim
        shape[ax] = n
        r2 = r2 + (dist * dist).reshape(shape)
    d = grid.ndim
    vals = (2.0 / (np.pi * sigma)) ** (d / 4.0) * np.exp(-r2 / sigma)
    return ObjectField(grid, vals)


# ---------------------------------------------------------------------------
# scalar stability map for a single atom's amplitude


def cubic_coefficient(dims: int) -> float:
    """c = 2 (4/3)^(d/2), the cubic coefficient of the amplitude map."""
    return 2.0 * (4.0 / 3.0) ** (dims / 2.0)


def f_alpha(lam, alpha: float, c: float):
    """Amplitude map lambda -> lambda - alpha [lambda - lambda^2 + c (lambda^3 - lambda^2)]."""
    lam = np.asarray(lam, dtype=np.float64)
    out = lam - alpha * (lam - lam**2 + c * (lam**3 - lam**2))
    return float(out) if out.ndim == 0 else out


def f_alpha_prime(lam, alpha: float, c: float):
    lam = np.asarray(lam, dtype=np.float64)
    out = 1.0 - alpha * (1.0 - 2.0 * lam + c * (3.0 * lam**2 - 2.0 * lam))
    return float(out) if out.ndim == 0 else out


def f_alpha_fixed_points(alpha: float, c: float) -> tuple[float, float, float]:
    """The three finite fixed points (0, 1/c, 1); independent of alpha."""
    return 0.0, 1.0 / c, 1.0


def lambda0_bound(alpha: float, c: float) -> float:
    """Largest root of 1 - alpha (c lambda^2 - lambda): edge of the unit
    fixed point's basin, beyond which amplitudes run away."""
    return (1.0 + np.sqrt(1.0 + 4.0 * c / alpha)) / (2.0 * c)


def alpha_bound(lambda0: float, c: float) -> float:
    """Largest step keeping a starting amplitude lambda0 inside the basin."""
    return 1.0 / (c * lambda0**2 - lambda0)


def k_alpha_product(steps: int, alpha: float, c: float) -> float:
    """k * alpha * (1 - 1/c): compared against log 2 when choosing k."""
    return steps * alpha * (1.0 - 1.0 / c)
