"""Cosine-transform analysis and band limiting of real control fields.

Forward transform (DCT-II with a factor 2)::

    Y_k = 2 sum_j x_j cos(pi (j + 1/2) k / n)

and its inverse, normalized by the logical size N = 2n::

    x_k = (Y_0 + 2 sum_{j>=1} Y_j cos(pi j (k + 1/2) / n)) / N

Coefficient j oscillates at the angular frequency ``pi j / t_f``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft


@dataclass(frozen=True, eq=False)
class Spectrum:
    coefficients: np.ndarray
    t_f: float

    @property
    def n(self) -> int:
        return self.coefficients.size

    @property
    def logical_size(self) -> int:
        return 2 * self.n

    @property
    def frequencies(self) -> np.ndarray:
        return np.pi * np.arange(self.n) / self.t_f

    @property
    def phases(self) -> np.ndarray:
        return np.pi * np.arange(self.n) / (2 * self.n)

    @property
    def amplitudes(self) -> np.ndarray:
        """Cosine-series amplitudes: ``|Y_0| / N`` for DC, ``2 |Y_j| / N`` otherwise."""
        amp = 2.0 * np.abs(self.coefficients) / self.logical_size
        amp[0] *= 0.5
        return amp


def dct_forward(x, t_f: float = 1.0) -> Spectrum:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("dct_forward needs a non-empty 1-d signal")
    return Spectrum(scipy.fft.dct(x, type=2), float(t_f))


def dct_inverse(spec: Spectrum) -> np.ndarray:
    # scipy's unnormalized DCT-III is Y_0 + 2 sum Y_j cos(...)
    return scipy.fft.dct(spec.coefficients, type=3) / spec.logical_size


def low_pass(spec: Spectrum, keep: int) -> Spectrum:
    """Zero every coefficient with index >= ``keep``."""
    if not 1 <= keep <= spec.n:
        raise ValueError(f"keep must be in [1, {spec.n}], got {keep}")
    c = spec.coefficients.copy()
    c[keep:] = 0.0
    return Spectrum(c, spec.t_f)


def amplitude_report(spec: Spectrum) -> list[tuple[float, float]]:
    return list(zip(spec.frequencies.tolist(), spec.amplitudes.tolist()))


def tail_amplitude(spec: Spectrum, omega_min: float) -> float:
    """Sum of amplitudes at angular frequencies strictly above ``omega_min``."""
    return float(spec.amplitudes[spec.frequencies > omega_min].sum())


def _series_row(n: int, keep: int, k: float) -> np.ndarray:
    # value of the truncated inverse series at sample position k
    row = 2.0 * np.cos(np.pi * np.arange(keep) * (k + 0.5) / n)
    row[0] = 1.0
    return row / (2 * n)


def band_limit_field(values, keep: int, t_f: float = 1.0, endpoints=(0.0, 0.0)) -> np.ndarray:
    """Project a grid field (n_steps + 1 nodes) onto its ``keep`` lowest cosine modes.

    The transform acts on the first n = n_steps nodes. The last node is
    filled in by evaluating the truncated cosine series one sample past the
    end, so the whole field is a single band-limited series. Unless
    ``endpoints`` is None, the result is additionally the orthogonal
    projection (in coefficient space) onto the band-limited fields whose first
    and last node take the given values.
    """
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    spec = low_pass(dct_forward(values[:n], t_f), keep)
    coef = spec.coefficients[:keep]
    ends = np.vstack([_series_row(n, keep, 0), _series_row(n, keep, n)])
    if endpoints is not None:
        target = np.asarray(endpoints, dtype=float)
        coef = coef - np.linalg.pinv(ends) @ (ends @ coef - target)
    full = np.zeros(n)
    full[:keep] = coef
    out = np.append(dct_inverse(Spectrum(full, spec.t_f)), ends[1] @ coef)
    return out
