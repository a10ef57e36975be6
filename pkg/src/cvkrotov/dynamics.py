"""Closed-system propagation of covariance matrices and their costates.

The generator is ``M(t) = m0 + f(t) mc`` and the CM obeys the Lyapunov-type
flow ``d gamma/dt = A gamma + gamma A^T`` with ``A = sigma M``. The fast path
integrates this 2n x 2n matrix equation; the vectorized form with the
4n^2 x 4n^2 flow matrix is kept for cross-checks and for the control gradient.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .gaussian import ModeLayout, symplectic_form, unvec, vec

SYMMETRY_TOL = 1e-12


class IntegrationError(FloatingPointError):
    """A propagation produced non-finite values."""

    def __init__(self, what: str, step: int):
        super().__init__(f"{what}: non-finite value at step {step}")
        self.step = step


@dataclass(frozen=True)
class TimeGrid:
    t_f: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_f > 0 and np.isfinite(self.t_f)):
            raise ValueError(f"t_f must be positive, got {self.t_f}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_f / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @classmethod
    def with_step(cls, t_f: float, dt: float) -> "TimeGrid":
        """Grid over ``[0, t_f]`` whose spacing is as close to ``dt`` as possible."""
        return cls(t_f, max(2, int(round(t_f / dt))))


@dataclass(frozen=True, eq=False)
class QuadraticGenerator:
    """Symmetrized Hamiltonian matrices of ``H = R (m0 + f mc) R / 2``."""

    m0: np.ndarray
    mc: np.ndarray

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=float)
        mc = np.asarray(self.mc, dtype=float)
        if m0.shape != mc.shape or m0.ndim != 2 or m0.shape[0] != m0.shape[1] or m0.shape[0] % 2:
            raise ValueError(f"m0 and mc must be matching 2n x 2n matrices, got {m0.shape}, {mc.shape}")
        # symmetrize as M -> (M + M^T) / 2
        object.__setattr__(self, "m0", 0.5 * (m0 + m0.T))
        object.__setattr__(self, "mc", 0.5 * (mc + mc.T))

    @property
    def layout(self) -> ModeLayout:
        return ModeLayout(self.m0.shape[0] // 2)

    @property
    def sigma(self) -> np.ndarray:
        return symplectic_form(self.layout)

    @property
    def drift0(self) -> np.ndarray:
        return self.sigma @ self.m0

    @property
    def drift_c(self) -> np.ndarray:
        return self.sigma @ self.mc

    def hamiltonian(self, f: float) -> np.ndarray:
        return self.m0 + f * self.mc


@dataclass(frozen=True, eq=False)
class ControlField:
    """Control values at the grid nodes ``t_k = k dt``, k = 0..n_steps."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"field has {v.size} samples, grid needs {self.grid.n_steps + 1}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("control field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: TimeGrid, value: float = 0.0) -> "ControlField":
        return cls(grid, np.full(grid.n_steps + 1, float(value)))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t) -> np.ndarray:
        """Linear interpolation between nodes."""
        return np.interp(t, self.grid.times, self.values)


def _flow_matrix(a: np.ndarray) -> np.ndarray:
    eye = np.eye(a.shape[0])
    return np.kron(eye, a) + np.kron(a, eye)


def assemble_flow(gen: QuadraticGenerator, f: float) -> np.ndarray:
    """Flow matrix ``1 (x) sigma M + sigma M (x) 1`` acting on column-stacked CMs."""
    return _flow_matrix(gen.sigma @ gen.hamiltonian(f))


def control_flow(gen: QuadraticGenerator) -> np.ndarray:
    """Derivative of the flow matrix with respect to the control value."""
    return _flow_matrix(gen.drift_c)


def _check_field(field: ControlField, grid: TimeGrid) -> np.ndarray:
    if field.grid != grid:
        raise ValueError(f"field grid {field.grid} does not match propagation grid {grid}")
    return np.ascontiguousarray(field.values)


def propagate_cm(gen: QuadraticGenerator, field: ControlField, grid: TimeGrid, gamma0) -> np.ndarray:
    """RK4-integrate the CM at every grid node; returns shape (n_steps + 1, 2n, 2n)."""
    f = _check_field(field, grid)
    g0 = np.ascontiguousarray(gamma0, dtype=float)
    d = gen.m0.shape[0]
    if g0.shape != (d, d):
        raise ValueError(f"initial CM has shape {g0.shape}, expected {(d, d)}")
    traj = np.empty((grid.n_steps + 1, d, d))
    bad = _kernels.propagate_cm(gen.drift0, gen.drift_c, f, grid.dt, g0, traj)
    if bad >= 0:
        raise IntegrationError("propagate_cm", bad)
    return traj


def propagate_cm_vectorized(gen: QuadraticGenerator, field: ControlField, grid: TimeGrid, gamma0) -> np.ndarray:
    """Same integration as :func:`propagate_cm` but on vec(gamma) with the flow matrix.

    Pure numpy and slow; intended as an independent check of the matrix path.
    """
    f = _check_field(field, grid)
    d = gen.m0.shape[0]
    g_of = lambda v: assemble_flow(gen, v)  # noqa: E731
    dt = grid.dt
    x = vec(np.asarray(gamma0, dtype=float)).copy()
    out = np.empty((grid.n_steps + 1, d, d))
    out[0] = unvec(x, d)
    for k in range(grid.n_steps):
        fm = 0.5 * (f[k] + f[k + 1])
        ga, gm, gb = g_of(f[k]), g_of(fm), g_of(f[k + 1])
        k1 = ga @ x
        k2 = gm @ (x + 0.5 * dt * k1)
        k3 = gm @ (x + 0.5 * dt * k2)
        k4 = gb @ (x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        m = unvec(x, d)
        m = 0.5 * (m + m.T)
        x = vec(m).copy()
        if not np.all(np.isfinite(x)):
            raise IntegrationError("propagate_cm_vectorized", k)
        out[k + 1] = m
    return out


def propagate_costate(gen: QuadraticGenerator, field: ControlField, grid: TimeGrid, chi_f) -> np.ndarray:
    """Integrate ``d chi/dt = -G(t)^T chi`` backwards from ``chi(t_f) = chi_f``.

    ``chi_f`` is a column-stacked vector of length 4n^2. The returned array has
    shape (n_steps + 1, 4n^2) with row k holding chi(t_k).
    """
    f = _check_field(field, grid)
    d = gen.m0.shape[0]
    chi_f = np.asarray(chi_f, dtype=float)
    if chi_f.shape != (d * d,):
        raise ValueError(f"costate must have length {d * d}, got {chi_f.shape}")
    traj = np.empty((grid.n_steps + 1, d, d))
    bad = _kernels.propagate_costate(
        gen.drift0, gen.drift_c, f, grid.dt, np.ascontiguousarray(unvec(chi_f, d)), traj
    )
    if bad >= 0:
        raise IntegrationError("propagate_costate", bad)
    return traj.transpose(0, 2, 1).reshape(grid.n_steps + 1, d * d)


def propagate_first_moments(
    gen: QuadraticGenerator,
    field: ControlField,
    grid: TimeGrid,
    m0,
    bath_drift: Optional[np.ndarray] = None,
) -> np.ndarray:
    """RK4 on ``d<R>/dt = (sigma M(t) + sigma Delta) <R>``.

    ``bath_drift`` is the open-system drift matrix Delta (zero if omitted).
    """
    f = _check_field(field, grid)
    d = gen.m0.shape[0]
    x0 = np.ascontiguousarray(m0, dtype=float)
    if x0.shape != (d,):
        raise ValueError(f"first moments must have length {d}, got {x0.shape}")
    extra = np.zeros((d, d)) if bath_drift is None else gen.sigma @ np.asarray(bath_drift, dtype=float)
    traj = np.empty((grid.n_steps + 1, d))
    bad = _kernels.propagate_linear(gen.drift0, gen.drift_c, np.ascontiguousarray(extra), f, grid.dt, x0, traj)
    if bad >= 0:
        raise IntegrationError("propagate_first_moments", bad)
    return traj
