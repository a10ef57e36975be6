"""Gaussian-state algebra in the quadrature ordering (q_1..q_n, p_1..p_n).

Covariance matrices use the vacuum-normalized convention
``gamma_ij = <R_i R_j> + <R_j R_i> - 2 <R_i><R_j>`` so the vacuum CM is the
identity and pure states have unit symplectic eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

PAIRING_TOL = 1e-8
PHYSICALITY_TOL = 1e-8


class PairingError(ValueError):
    """Moduli of the eigenvalues of sigma @ gamma do not come in pairs."""


@dataclass(frozen=True)
class ModeLayout:
    n_modes: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def sigma(self) -> np.ndarray:
        return symplectic_form(self.n_modes)


TWO_MODES = ModeLayout(2)


def _n_modes(layout) -> int:
    return layout.n_modes if isinstance(layout, ModeLayout) else int(layout)


def symplectic_form(layout) -> np.ndarray:
    """Return ``[[0, I], [-I, 0]]`` for ``layout`` (a ModeLayout or mode count)."""
    n = _n_modes(layout)
    if n < 1:
        raise ValueError(f"n_modes must be >= 1, got {n}")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def vacuum_cm(layout=TWO_MODES) -> np.ndarray:
    return np.eye(2 * _n_modes(layout))


def two_mode_squeezed_cm(r: float) -> np.ndarray:
    """CM of ``exp[r(ab - a^dag b^dag)]|00>`` in the layout (q_c, q_m, p_c, p_m)."""
    if not np.isfinite(r):
        raise ValueError(f"squeezing parameter must be finite, got {r}")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    return np.array(
        [
            [c, -s, 0.0, 0.0],
            [-s, c, 0.0, 0.0],
            [0.0, 0.0, c, s],
            [0.0, 0.0, s, c],
        ]
    )


def _check_square(cm, dim=None):
    cm = np.asarray(cm, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
        raise ValueError(f"expected a 2n x 2n matrix, got shape {cm.shape}")
    if dim is not None and cm.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {cm.shape}")
    return cm


def partial_transpose(cm) -> np.ndarray:
    """Transpose the second mode of a two-mode CM: ``P gamma P`` with P = diag(1, 1, 1, -1)."""
    cm = _check_square(cm, 4)
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    return cm * np.outer(flip, flip)


def symplectic_eigenvalues(cm, tol: float = PAIRING_TOL) -> np.ndarray:
    """Symplectic eigenvalues of ``cm``, one per degenerate pair, ascending.

    The 2n moduli of the eigenvalues of ``i sigma gamma`` are sorted and paired
    off; a pair that disagrees by more than ``tol`` raises PairingError.
    """
    cm = _check_square(cm)
    sigma = symplectic_form(cm.shape[0] // 2)
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * sigma @ cm)))
    lo, hi = moduli[0::2], moduli[1::2]
    gap = np.abs(hi - lo)
    if np.any(gap > tol * np.maximum(1.0, hi)):
        raise PairingError(f"unpaired symplectic spectrum {moduli}")
    return 0.5 * (lo + hi)


def log_negativity(cm) -> float:
    """Logarithmic negativity of a two-mode CM (base-2)."""
    nu = symplectic_eigenvalues(partial_transpose(cm))
    return float(-np.sum(np.log2(np.minimum(1.0, nu))))


def cm_distance(a, b) -> float:
    """Squared Euclidean distance between the vectorized CMs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sum(diff * diff))


def physicality_margin(cm) -> float:
    """Smallest eigenvalue of the Hermitian matrix ``gamma + i sigma``."""
    cm = _check_square(cm)
    sigma = symplectic_form(cm.shape[0] // 2)
    return float(np.linalg.eigvalsh(cm + 1j * sigma)[0])


def is_physical(cm, tol: float = PHYSICALITY_TOL) -> bool:
    return physicality_margin(cm) >= -tol


def vec(m) -> np.ndarray:
    """Column-stacking vectorization, so ``vec(A X B) = kron(B.T, A) @ vec(X)``."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")
