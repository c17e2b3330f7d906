"""The difference map and its relatives.

One step of the map is

    rho' = rho + beta * ( pi1[f2(rho)] - pi2[f1(rho)] )

with the estimate maps f_i(rho) = (1 + gamma_i) pi_i(rho) - gamma_i rho at
the optimal parameters gamma_1 = -1/beta, gamma_2 = +1/beta. The step
difference norm e = ||pi1(f2) - pi2(f1)|| measures the currently achieved
distance between the two constraint sets; e -> 0 signals a fixed point,
from which the solution is extracted by a single projection.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .field import Grid, ModulusData, ObjectField, norm, normalize
from .projections import SupportMask, project_modulus, project_support

log = logging.getLogger(__name__)

__all__ = [
    "ProjectionPair",
    "DifferenceMapConfig",
    "IterationTrace",
    "RunResult",
    "dm_step",
    "run",
    "extract_solution",
    "fienup_hybrid",
    "fienup_in_out",
    "fienup_out_out",
    "flip_sign",
    "gerchberg_saxton_step",
    "theta_from_error",
    "error_from_theta",
    "contraction_factors",
    "AffineModel",
    "affine_project",
    "affine_dm_step",
    "affine_gs_step",
]

Projector = Callable[[ObjectField], ObjectField]


@dataclass(frozen=True)
class ProjectionPair:
    """The two elementary projections driving a difference-map run.

    project_1 is the object-domain constraint (support+positivity,
    histogram, atomicity, or the Sayre flow); project_2 is the Fourier
    modulus projection in every experiment here.
    """

    project_1: Projector
    project_2: Projector
    name_1: str = "pi1"
    name_2: str = "pi2"


@dataclass(frozen=True)
class DifferenceMapConfig:
    pair: ProjectionPair
    beta: float
    max_iter: int = 10000
    tol: float = 1e-8
    renormalize_pi1: bool = False  # re-normalize after every pi1 application
    snapshot_every: int = 0
    seed: int | tuple = 0

    def __post_init__(self):
        if self.beta == 0.0:
            raise ValueError("beta must be nonzero")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")

    @property
    def gamma_1(self) -> float:
        return -1.0 / self.beta

    @property
    def gamma_2(self) -> float:
        return +1.0 / self.beta


def _pi1(cfg: DifferenceMapConfig, obj: ObjectField) -> ObjectField:
    out = cfg.pair.project_1(obj)
    return normalize(out) if cfg.renormalize_pi1 else out


def dm_step(obj: ObjectField, cfg: DifferenceMapConfig) -> tuple[ObjectField, float]:
    """One difference-map iteration; returns (next iterate, error e).

    At beta = +/-1 one of the estimate maps collapses to the identity and a
    projection evaluation is skipped; the result is identical to the general
    four-projection form (the dropped term enters with weight exactly zero).
    """
    b = cfg.beta
    rho = obj.values
    if b == 1.0:
        p2 = cfg.pair.project_2(obj)
        f2 = ObjectField(obj.grid, 2.0 * p2.values - rho)
        delta = _pi1(cfg, f2).values - p2.values
    elif b == -1.0:
        p1 = _pi1(cfg, obj)
        f1 = ObjectField(obj.grid, 2.0 * p1.values - rho)
        delta = p1.values - cfg.pair.project_2(f1).values
    else:
        p1 = _pi1(cfg, obj)
        p2 = cfg.pair.project_2(obj)
        f1 = ObjectField(obj.grid, (1.0 - 1.0 / b) * p1.values + rho / b)
        f2 = ObjectField(obj.grid, (1.0 + 1.0 / b) * p2.values - rho / b)
        delta = _pi1(cfg, f2).values - cfg.pair.project_2(f1).values
    e = float(np.linalg.norm(delta))
    return ObjectField(obj.grid, rho + b * delta), e


def extract_solution(rho_star: ObjectField, cfg: DifferenceMapConfig) -> ObjectField:
    """Solution estimate from a (near-)fixed point.

    In general this is (pi2 . f1)(rho*); at beta = 1 that reduces to a bare
    modulus projection. At beta = -1 the other composition (pi1 . f2)(rho*)
    is the economical one and reduces to a bare pi1 application.
    """
    b = cfg.beta
    if b == -1.0:
        return _pi1(cfg, rho_star)
    if b == 1.0:
        return cfg.pair.project_2(rho_star)
    p1 = _pi1(cfg, rho_star)
    f1 = ObjectField(rho_star.grid, (1.0 - 1.0 / b) * p1.values + rho_star.values / b)
    return cfg.pair.project_2(f1)


@dataclass
class IterationTrace:
    """Per-iteration error record of one run."""

    errors: np.ndarray
    angles: np.ndarray
    wall_ms: np.ndarray
    first_below_tol: int  # 1-based iteration of first e < tol, -1 if never
    snapshots: list[tuple[int, ObjectField]] = dc_field(default_factory=list)

    def first_below(self, threshold: float) -> int:
        hits = np.nonzero(self.errors < threshold)[0]
        return int(hits[0]) + 1 if len(hits) else -1

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,e,theta,wall_ms\n")
            for i, (e, th, w) in enumerate(zip(self.errors, self.angles, self.wall_ms), 1):
                fh.write(f"{i},{e:.16e},{th:.16e},{w:.3f}\n")


@dataclass
class RunResult:
    trace: IterationTrace
    fixed_point: ObjectField
    solution: ObjectField
    success: bool
    iterations: int


def theta_from_error(e: float) -> float:
    """Angular separation 2 arcsin(e/2); defined for e <= 2 (unit-norm data)."""
    return 2.0 * np.arcsin(e / 2.0) if e <= 2.0 else float("nan")


def error_from_theta(theta: float) -> float:
    return 2.0 * np.sin(theta / 2.0)


def run(obj0: ObjectField | None, cfg: DifferenceMapConfig,
        grid: Grid | None = None) -> RunResult:
    """Iterate the difference map until e < tol or the budget is exhausted.

    Starts from obj0, or from a seeded uniform-random normalized field when
    obj0 is None. Non-convergence is an outcome (success=False), not an
    error.
    """
    if obj0 is None:
        if grid is None:
            raise ValueError("need a grid to draw a random start")
        rng = np.random.default_rng(cfg.seed)
        obj0 = normalize(ObjectField(grid, rng.random(grid.shape)))
    rho = obj0
    errors, angles, wall = [], [], []
    snapshots: list[tuple[int, ObjectField]] = []
    first = -1
    for i in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        rho, e = dm_step(rho, cfg)
        wall.append(1e3 * (time.perf_counter() - t0))
        errors.append(e)
        angles.append(theta_from_error(e))
        if i == 1 and e < 0.1:
            log.warning(
                "initial error %.3g is small; the object constraints may be "
                "too weak for reliable retrieval", e,
            )
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            snapshots.append((i, rho))
        if e < cfg.tol:
            first = i
            break
    trace = IterationTrace(
        errors=np.asarray(errors),
        angles=np.asarray(angles),
        wall_ms=np.asarray(wall),
        first_below_tol=first,
        snapshots=snapshots,
    )
    solution = extract_solution(rho, cfg)
    return RunResult(trace, rho, solution, success=first > 0, iterations=len(errors))


# ---------------------------------------------------------------------------
# Fienup input-output family and the sign-flip form


def fienup_hybrid(obj: ObjectField, mask: SupportMask, beta_f: float,
                  data: ModulusData) -> ObjectField:
    """Hybrid input-output: modulus values inside S, feedback outside."""
    pm = project_modulus(obj, data).values
    out = np.where(mask.member, pm, obj.values - beta_f * pm)
    return ObjectField(obj.grid, out)


def fienup_in_out(obj: ObjectField, mask: SupportMask, beta_f: float,
                  data: ModulusData) -> ObjectField:
    pm = project_modulus(obj, data).values
    out = np.where(mask.member, obj.values, obj.values - beta_f * pm)
    return ObjectField(obj.grid, out)


def fienup_out_out(obj: ObjectField, mask: SupportMask, beta_f: float,
                   data: ModulusData) -> ObjectField:
    pm = project_modulus(obj, data).values
    out = np.where(mask.member, pm, (1.0 - beta_f) * pm)
    return ObjectField(obj.grid, out)


def flip_sign(obj: ObjectField, mask: SupportMask) -> ObjectField:
    """Keep values inside S, negate outside (an involution)."""
    return ObjectField(obj.grid, np.where(mask.member, obj.values, -obj.values))


def gerchberg_saxton_step(obj: ObjectField, project_1: Projector,
                          project_2: Projector) -> ObjectField:
    """Alternating projections: pi1(pi2(rho))."""
    return project_1(project_2(obj))


def contraction_factors(beta: float, gamma_1: float, gamma_2: float) -> tuple[float, float]:
    """Local contraction factors |1 - beta*gamma_2|, |1 + beta*gamma_1| of the
    two constraint-parallel modes near a solution."""
    return abs(1.0 - beta * gamma_2), abs(1.0 + beta * gamma_1)


# ---------------------------------------------------------------------------
# toy affine model: two affine constraint sets with orthogonal tangents


@dataclass(frozen=True)
class AffineModel:
    """C1 = X1 + a2 + b1 and C2 = a1 + X2 + b2 inside R^n.

    X1, X2 and Y are mutually orthogonal subspaces spanning R^n, given as
    matrices with orthonormal columns; a_i lies in X_i and b_i in Y. The
    sets intersect iff b1 = b2; otherwise they form a trap whose minimum
    separation is ||b1 - b2||.
    """

    basis_x1: np.ndarray
    basis_x2: np.ndarray
    basis_y: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        stacked = np.hstack([self.basis_x1, self.basis_x2, self.basis_y])
        n = stacked.shape[0]
        if stacked.shape[1] != n:
            raise ValueError("subspace dimensions must add up to the ambient dimension")
        if not np.allclose(stacked.T @ stacked, np.eye(n), atol=1e-10):
            raise ValueError("bases are not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis_x1.shape[0]

    @classmethod
    def random(cls, n: int, dim_x1: int, dim_x2: int, seed=0,
               separation: float = 0.0) -> "AffineModel":
        """Random orthogonal frame split into X1, X2, Y; ||b1 - b2|| = separation."""
        if dim_x1 + dim_x2 >= n:
            raise ValueError("need dim_x1 + dim_x2 < n so Y is nonempty")
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        x1, x2, y = q[:, :dim_x1], q[:, dim_x1 : dim_x1 + dim_x2], q[:, dim_x1 + dim_x2 :]
        a1 = x1 @ rng.standard_normal(dim_x1)
        a2 = x2 @ rng.standard_normal(dim_x2)
        b1 = y @ rng.standard_normal(n - dim_x1 - dim_x2)
        if separation == 0.0:
            b2 = b1.copy()
        else:
            gap = y @ rng.standard_normal(n - dim_x1 - dim_x2)
            gap *= separation / np.linalg.norm(gap)
            b2 = b1 + gap
        return cls(x1, x2, y, a1, a2, b1, b2)

    def component_y(self, point: np.ndarray) -> np.ndarray:
        return self.basis_y @ (self.basis_y.T @ point)


def affine_project(model: AffineModel, which: int, point: np.ndarray) -> np.ndarray:
    """Distance-minimizing projection onto C1 (which=1) or C2 (which=2)."""
    if which == 1:
        x1 = model.basis_x1 @ (model.basis_x1.T @ point)
        return x1 + model.a2 + model.b1
    if which == 2:
        x2 = model.basis_x2 @ (model.basis_x2.T @ point)
        return model.a1 + x2 + model.b2
    raise ValueError("which must be 1 or 2")


def affine_dm_step(model: AffineModel, point: np.ndarray, beta: float,
                   gamma_1: float | None = None,
                   gamma_2: float | None = None) -> np.ndarray:
    """One difference-map step on the affine model (optimal gammas by default)."""
    if beta == 0.0:
        raise ValueError("beta must be nonzero")
    g1 = -1.0 / beta if gamma_1 is None else gamma_1
    g2 = +1.0 / beta if gamma_2 is None else gamma_2
    p1 = affine_project(model, 1, point)
    p2 = affine_project(model, 2, point)
    f1 = (1.0 + g1) * p1 - g1 * point
    f2 = (1.0 + g2) * p2 - g2 * point
    return point + beta * (affine_project(model, 1, f2) - affine_project(model, 2, f1))


def affine_gs_step(model: AffineModel, point: np.ndarray) -> np.ndarray:
    """Alternating-projection step pi1(pi2(point)) on the affine model."""
    return affine_project(model, 1, affine_project(model, 2, point))
