"""Linearized optomechanical control problem and the named experiment presets.

Layout is (q_c, q_m, p_c, p_m); frequencies are in units of the mechanical
frequency and times in units of its inverse. The control is the cavity
detuning ``f(t)`` entering ``H = f/2 (q_c^2 + p_c^2) + w_m/2 (q_m^2 + p_m^2) + 2G q_c q_m``.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bath import LorentzianBath, optomech_couplings
from .dynamics import ControlField, QuadraticGenerator, TimeGrid
from .gaussian import log_negativity, two_mode_squeezed_cm
from .krotov import KrotovConfig, qsl_time


@dataclass(frozen=True)
class OptomechParams:
    omega_m: float = 1.0
    G: float = 0.1

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ValueError(f"omega_m must be positive, got {self.omega_m}")


def build_generator(p: OptomechParams) -> QuadraticGenerator:
    m0 = np.zeros((4, 4))
    m0[0, 1] = m0[1, 0] = 2.0 * p.G
    m0[1, 1] = p.omega_m
    m0[3, 3] = p.omega_m
    return QuadraticGenerator(m0, np.diag([1.0, 0.0, 1.0, 0.0]))


@dataclass(frozen=True)
class MeanFieldParams:
    omega_c: float
    omega: float
    g: float
    Omega_d: float
    kappa_a: float
    omega_m: float = 1.0


@dataclass(frozen=True)
class MeanFieldSolution:
    alpha: complex
    beta: complex
    detuning: float  # omega - omega_c + 2 G^2 / omega_m
    coupling: float  # G = |alpha| g
    iterations: int


class MeanFieldError(RuntimeError):
    """Damped fixed-point iteration failed (typically the bistable regime)."""


def _alpha_of(mf: MeanFieldParams, n: float) -> complex:
    # beta + beta^* = -2 g |alpha|^2 / omega_m
    denom = 1j * (mf.omega - mf.omega_c) + 2j * mf.g**2 * n / mf.omega_m - mf.kappa_a
    return 1j * mf.Omega_d / denom


def mean_field_fixed_point(
    mf: MeanFieldParams, mixing: float = 0.5, tol: float = 1e-12, max_iter: int = 10_000
) -> MeanFieldSolution:
    """Steady cavity and mirror amplitudes around which the dynamics is linearized.

    Iterates on the intracavity photon number ``|alpha|^2`` with damping
    ``mixing``, then returns alpha, ``beta = -g |alpha|^2 / omega_m``, the
    modified detuning and the effective coupling ``G = |alpha| g``.
    """
    if not mf.kappa_a > 0:
        raise ValueError(f"kappa_a must be positive, got {mf.kappa_a}")
    n = 0.0
    prev = n
    for it in range(1, max_iter + 1):
        target = abs(_alpha_of(mf, n)) ** 2
        prev, n = n, (1 - mixing) * n + mixing * target
        if abs(n - prev) <= tol * max(1.0, n):
            break
    else:
        raise MeanFieldError(
            f"no convergence after {max_iter} iterations; last iterates |alpha|^2 = {prev!r}, {n!r}"
        )
    alpha = _alpha_of(mf, n)
    n = abs(alpha) ** 2
    beta = -mf.g * n / mf.omega_m
    G = abs(alpha) * mf.g
    return MeanFieldSolution(
        alpha=alpha,
        beta=complex(beta),
        detuning=mf.omega - mf.omega_c + 2 * G**2 / mf.omega_m,
        coupling=G,
        iterations=it,
    )


@dataclass(frozen=True)
class BathSpec:
    lambda_o: float = 0.0
    lambda_m: float = 0.0
    eta: float = 0.5
    omega_shift: float = 0.0
    markov: bool = False

    def build(self) -> LorentzianBath:
        return LorentzianBath(
            optomech_couplings(self.lambda_o, self.lambda_m),
            eta=self.eta,
            omega_shift=self.omega_shift,
            markov=self.markov,
        )


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int = 24

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"axis {self.name} needs at least 2 points, got {self.count}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class Preset:
    """Everything needed to run one of the reference experiments."""

    name: str
    params: OptomechParams
    r: float
    t_f: float
    n_steps: int
    krotov: KrotovConfig = KrotovConfig()
    shape: str = "blackman"
    guess: float = 0.0
    bath: Optional[BathSpec] = None
    axes: tuple = field(default_factory=tuple)

    @property
    def generator(self) -> QuadraticGenerator:
        return build_generator(self.params)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_f, self.n_steps)

    @property
    def target(self) -> np.ndarray:
        return two_mode_squeezed_cm(self.r)

    @property
    def target_negativity(self) -> float:
        return log_negativity(self.target)

    @property
    def t_qsl(self) -> float:
        return qsl_time(self.r, self.params.G)

    def initial_guess(self) -> ControlField:
        return ControlField.constant(self.grid, self.guess)


_FIG2 = Preset("fig2", OptomechParams(1.0, 0.1), r=1.25, t_f=60.0, n_steps=6000)

PRESETS = {
    "fig2": _FIG2,
    # the projection pins the endpoints, so the update needs no taper
    "fig2_spectral": replace(
        _FIG2,
        name="fig2_spectral",
        krotov=KrotovConfig(max_iters=5000, spectral_cutoff=20),
        shape="constant-one",
    ),
    # weak coupling: start on the resonant detuning and take larger steps
    "fig3_rwa": Preset(
        "fig3_rwa",
        OptomechParams(1.0, 0.01),
        r=0.2,
        t_f=30.0,
        n_steps=3000,
        krotov=KrotovConfig(lambda_a=10.0),
        guess=-1.0,
    ),
    "fig3_strong": Preset(
        "fig3_strong",
        OptomechParams(1.0, 0.1),
        r=1.0,
        t_f=30.0,
        n_steps=3000,
        krotov=KrotovConfig(lambda_a=1000.0, max_iters=3000),
    ),
    "fig4_scan": Preset(
        "fig4_scan",
        OptomechParams(1.0, 0.1),
        r=0.8,
        t_f=15.0,
        n_steps=1500,
        krotov=KrotovConfig(lambda_a=100.0, max_iters=3000),
        axes=(Axis("model.G", 0.05, 0.25), Axis("schedule.t_f", 2.0, 20.0)),
    ),
    "fig5_open": replace(_FIG2, name="fig5_open", bath=BathSpec(lambda_m=0.1, eta=0.5)),
    "fig6_scan": replace(
        _FIG2,
        name="fig6_scan",
        bath=BathSpec(lambda_m=0.1, eta=0.5),
        axes=(Axis("bath.lambda_m", 0.0, 0.3), Axis("bath.eta", 0.05, 1.0)),
    ),
    "fig7_scan": replace(
        _FIG2,
        name="fig7_scan",
        bath=BathSpec(lambda_o=0.1, lambda_m=0.1, eta=0.2),
        axes=(Axis("bath.lambda_o", 0.0, 0.3), Axis("bath.lambda_m", 0.0, 0.3)),
    ),
}


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
