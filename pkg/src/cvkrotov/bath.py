"""Covariance-matrix dynamics under a Lorentzian (non-Markovian) bath.

The bath couples through ``L = l_i R_i`` and has correlation function
``alpha(t, s) = (eta / 2) exp(-(eta + i Omega)|t - s|)``. The memory enters
through the noise-free operator ``Obar(t) = o_i(t) R_i`` whose coefficients
obey a closed nonlinear ODE. In the Markov limit ``Obar = L / 2``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .dynamics import ControlField, IntegrationError, QuadraticGenerator, TimeGrid, _check_field


@dataclass(frozen=True, eq=False)
class LorentzianBath:
    couplings: np.ndarray
    eta: float = 1.0
    omega_shift: float = 0.0
    markov: bool = False

    def __post_init__(self):
        l = np.array(self.couplings, dtype=complex)
        if l.ndim != 1 or l.size % 2:
            raise ValueError(f"couplings must be a vector of length 2n, got shape {l.shape}")
        if not self.markov and not self.eta > 0:
            raise ValueError(f"eta must be positive for a non-Markovian bath, got {self.eta}")
        l.setflags(write=False)
        object.__setattr__(self, "couplings", l)

    @property
    def eta_eff(self) -> complex:
        return complex(self.eta, self.omega_shift)

    @property
    def alpha0(self) -> float:
        return 0.5 * self.eta

    def markov_limit(self) -> "LorentzianBath":
        return LorentzianBath(self.couplings, self.eta, self.omega_shift, markov=True)


def optomech_couplings(lambda_o: float = 0.0, lambda_m: float = 0.0) -> np.ndarray:
    """Coefficients of ``L = lambda_o a + lambda_m b`` in the layout (q_c, q_m, p_c, p_m).

    Uses ``a = (q + i p) / sqrt(2)``.
    """
    s = 1.0 / np.sqrt(2.0)
    return np.array([lambda_o * s, lambda_m * s, 1j * lambda_o * s, 1j * lambda_m * s])


def obar_rhs(bath: LorentzianBath, gen: QuadraticGenerator, f: float, o) -> np.ndarray:
    """Time derivative of the Obar coefficients at control value ``f``."""
    if bath.markov:
        raise ValueError("obar_rhs is undefined for a Markov bath (o is pinned to l/2)")
    o = np.ascontiguousarray(o, dtype=complex)
    out = np.empty_like(o)
    a = gen.sigma @ gen.hamiltonian(f)
    _kernels._o_rhs(o, bath.couplings, a, gen.sigma, bath.eta_eff, bath.alpha0, out)
    return out


def drift_diffusion(bath: LorentzianBath, o):
    """Drift ``Delta`` and diffusion ``delta^R`` matrices for coefficients ``o``.

    ``Delta_mn = i l_m o_n^* - i l_m^* o_n`` (real part taken) and
    ``delta^R_mn = Re(l_m^* o_n + o_m^* l_n)``.
    """
    l = bath.couplings
    o = np.asarray(o, dtype=complex)
    if o.shape != l.shape:
        raise ValueError(f"o has shape {o.shape}, couplings have {l.shape}")
    drift = np.real(1j * np.outer(l, o.conj()) - 1j * np.outer(l.conj(), o))
    diffusion = np.real(np.outer(l.conj(), o) + np.outer(o.conj(), l))
    return drift, diffusion


class OpenTrajectory(NamedTuple):
    cms: np.ndarray  # (n_steps + 1, 2n, 2n)
    obar: np.ndarray  # (n_steps + 1, 2n) complex


def propagate_open_cm(
    gen: QuadraticGenerator,
    field: ControlField,
    grid: TimeGrid,
    bath: LorentzianBath,
    gamma0,
    o0=None,
) -> OpenTrajectory:
    """Jointly integrate the Obar coefficients and the open-system CM.

    In Markov mode the coefficients are frozen at ``l / 2`` and only the CM is
    evolved; otherwise they start from ``o0`` (zero by default).
    """
    f = _check_field(field, grid)
    d = gen.m0.shape[0]
    if bath.couplings.shape != (d,):
        raise ValueError(f"bath has {bath.couplings.size} couplings, system needs {d}")
    g0 = np.ascontiguousarray(gamma0, dtype=float)
    if bath.markov:
        start = 0.5 * bath.couplings
    elif o0 is None:
        start = np.zeros(d, dtype=complex)
    else:
        start = np.asarray(o0, dtype=complex)
    cms = np.empty((grid.n_steps + 1, d, d))
    obar = np.empty((grid.n_steps + 1, d), dtype=complex)
    bad = _kernels.propagate_open(
        gen.drift0,
        gen.drift_c,
        gen.sigma,
        f,
        grid.dt,
        np.ascontiguousarray(bath.couplings),
        bath.eta_eff,
        bath.alpha0,
        not bath.markov,
        np.ascontiguousarray(start),
        g0,
        cms,
        obar,
    )
    if bad >= 0:
        raise IntegrationError("propagate_open_cm", bad)
    return OpenTrajectory(cms, obar)
