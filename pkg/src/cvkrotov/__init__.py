"""Krotov optimal control of Gaussian covariance-matrix dynamics."""

from .bath import LorentzianBath, drift_diffusion, obar_rhs, optomech_couplings, propagate_open_cm
from .dynamics import (
    ControlField,
    IntegrationError,
    QuadraticGenerator,
    TimeGrid,
    assemble_flow,
    propagate_cm,
    propagate_costate,
    propagate_first_moments,
)
from .gaussian import (
    ModeLayout,
    PairingError,
    cm_distance,
    log_negativity,
    partial_transpose,
    symplectic_eigenvalues,
    symplectic_form,
    two_mode_squeezed_cm,
    vacuum_cm,
)
from .krotov import (
    IterationRecord,
    KrotovConfig,
    KrotovResult,
    costate_boundary,
    optimize,
    pulse_update_amplitude,
    qsl_time,
    update_shape,
)
from .optomech import OptomechParams, build_generator, mean_field_fixed_point, preset
from .spectral import Spectrum, amplitude_report, dct_forward, dct_inverse, low_pass

__version__ = "0.1.0"
