"""First-order Krotov optimization of a scalar control acting on CM dynamics.

The objective is the squared distance between the final CM and a target CM.
Its costate obeys the adjoint flow and starts from
``chi(t_f) = 2 (vec gamma_T - vec gamma(t_f))``. Each iteration:

1. propagate the costate backwards under the previous field,
2. sweep forward in time, updating the field node by node with
   ``df = S(t) / lambda_a * chi^T G_c vec(gamma)`` while propagating the state
   under the already-updated field,
3. optionally project the field onto its lowest cosine modes,
4. re-propagate under the new field and record the distance.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .dynamics import (
    ControlField,
    IntegrationError,
    QuadraticGenerator,
    TimeGrid,
    control_flow,
    propagate_cm,
    propagate_costate,
)
from .gaussian import cm_distance, vec
from .spectral import band_limit_field

log = logging.getLogger(__name__)

SHAPES = ("blackman", "constant-one")


def update_shape(kind: str, grid: TimeGrid) -> np.ndarray:
    """Update-shape function S(t) sampled on the grid nodes, clamped to [0, 1]."""
    t = grid.times
    if kind == "blackman":
        x = 2 * np.pi * t / grid.t_f
        s = 0.42 - 0.5 * np.cos(x) + 0.08 * np.cos(2 * x)
        s[0] = s[-1] = 0.0  # exact zeros instead of ~1e-17 round-off
        return np.clip(s, 0.0, 1.0)
    if kind == "constant-one":
        return np.ones_like(t)
    raise ValueError(f"unknown shape {kind!r}; expected one of {SHAPES}")


@dataclass(frozen=True)
class KrotovConfig:
    lambda_a: float = 8000.0
    tol_d2: float = 1e-4
    max_iters: int = 2000
    spectral_cutoff: Optional[int] = None
    patience: int = 5  # consecutive d2 increases before giving up

    def __post_init__(self):
        if not self.lambda_a > 0:
            raise ValueError(f"lambda_a must be positive, got {self.lambda_a}")
        if not self.tol_d2 > 0:
            raise ValueError(f"tol_d2 must be positive, got {self.tol_d2}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be non-negative, got {self.max_iters}")
        if self.spectral_cutoff is not None and self.spectral_cutoff < 1:
            raise ValueError(f"spectral_cutoff must be >= 1, got {self.spectral_cutoff}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    d2: float
    field_update_norm: float


@dataclass
class KrotovResult:
    field: ControlField
    records: list = field(default_factory=list)
    trajectory: Optional[np.ndarray] = None
    status: str = "max_iters"  # converged | max_iters | diverged

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def iterations(self) -> int:
        return self.records[-1].iter if self.records else 0

    @property
    def final_d2(self) -> float:
        return self.records[-1].d2

    @property
    def d2_history(self) -> np.ndarray:
        return np.array([r.d2 for r in self.records])


def costate_boundary(gamma_final, gamma_target) -> np.ndarray:
    gamma_final = np.asarray(gamma_final, dtype=float)
    gamma_target = np.asarray(gamma_target, dtype=float)
    if gamma_final.shape != gamma_target.shape:
        raise ValueError(f"dimension mismatch: {gamma_final.shape} vs {gamma_target.shape}")
    return 2.0 * (vec(gamma_target) - vec(gamma_final))


def pulse_update_amplitude(chi, gamma, gen: QuadraticGenerator, shape: float, lambda_a: float) -> float:
    """Single-node update ``S / lambda_a * chi^T G_c vec(gamma)`` using the dense flow matrix."""
    return float(shape / lambda_a * np.asarray(chi) @ control_flow(gen) @ vec(gamma))


def qsl_time(r: float, G: float) -> float:
    """Speed-limit estimate ``arccos(1 / cosh r) / G`` for vacuum -> two-mode squeezed."""
    if not G > 0:
        raise ValueError(f"coupling G must be positive, got {G}")
    if r < 0:
        raise ValueError(f"squeezing r must be non-negative, got {r}")
    return math.acos(1.0 / math.cosh(r)) / G


def optimize(
    gen: QuadraticGenerator,
    grid: TimeGrid,
    gamma0,
    gamma_target,
    guess: Optional[ControlField] = None,
    shape="blackman",
    config: KrotovConfig = KrotovConfig(),
    callback: Optional[Callable[[IterationRecord], None]] = None,
) -> KrotovResult:
    """Run Krotov iterations until ``d2 <= tol_d2``, the budget runs out, or d2 keeps rising.

    ``shape`` is a shape name or an array of S(t) values at the grid nodes.
    ``callback`` receives every IterationRecord as it is produced.
    """
    gamma0 = np.asarray(gamma0, dtype=float)
    target = np.asarray(gamma_target, dtype=float)
    if guess is None:
        guess = ControlField.constant(grid, 0.0)
    s = update_shape(shape, grid) if isinstance(shape, str) else np.asarray(shape, dtype=float)
    if s.shape != (grid.n_steps + 1,):
        raise ValueError("shape must be sampled on the grid nodes")

    a0, ac = gen.drift0, gen.drift_c
    d = a0.shape[0]
    f = np.array(guess.values)
    ends = (f[0], f[-1])
    traj = propagate_cm(gen, guess, grid, gamma0)
    result = KrotovResult(guess, trajectory=traj)

    def record(rec):
        result.records.append(rec)
        if callback is not None:
            callback(rec)

    d2 = cm_distance(traj[-1], target)
    record(IterationRecord(0, d2, 0.0))
    if d2 <= config.tol_d2:
        result.status = "converged"
        return result

    rises = 0
    f_new = np.empty_like(f)
    for it in range(1, config.max_iters + 1):
        chi = propagate_costate(gen, result.field, grid, costate_boundary(traj[-1], target))
        chi_m = np.ascontiguousarray(chi.reshape(-1, d, d).transpose(0, 2, 1))
        bad = _kernels.krotov_sweep(a0, ac, f, s, 1.0 / config.lambda_a, grid.dt, gamma0, chi_m, f_new)
        if bad >= 0:
            raise IntegrationError(f"Krotov sweep (iteration {it})", bad)
        if config.spectral_cutoff is not None:
            f_next = band_limit_field(f_new, config.spectral_cutoff, grid.t_f, endpoints=ends)
        else:
            f_next = f_new.copy()
        update = f_next - f
        f = f_next
        result.field = ControlField(grid, f)
        traj = propagate_cm(gen, result.field, grid, gamma0)
        result.trajectory = traj

        prev = d2
        d2 = cm_distance(traj[-1], target)
        record(IterationRecord(it, d2, float(np.sqrt(np.sum(update**2) * grid.dt))))
        if it % 100 == 0:
            log.info("iteration %d: d2 = %.6g", it, d2)
        if d2 <= config.tol_d2:
            result.status = "converged"
            break
        rises = rises + 1 if d2 > prev else 0
        if rises >= config.patience:
            log.warning("d2 increased in %d consecutive iterations; stopping at %d", rises, it)
            result.status = "diverged"
            break
    return result
