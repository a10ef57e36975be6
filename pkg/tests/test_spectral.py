import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cvkrotov.spectral import (
    Spectrum,
    amplitude_report,
    band_limit_field,
    dct_forward,
    dct_inverse,
    low_pass,
    tail_amplitude,
)

# 19 pi / 60 from a 30-digit evaluation
OMEGA_19 = 0.994837673636767859


def direct_forward(x):
    n = x.size
    j = np.arange(n)
    return np.array([2 * np.sum(x * np.cos(np.pi * (j + 0.5) * k / n)) for k in range(n)])


def direct_inverse(y):
    n = y.size
    j = np.arange(1, n)
    return np.array([(y[0] + 2 * np.sum(y[1:] * np.cos(np.pi * j * (k + 0.5) / n))) / (2 * n) for k in range(n)])


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_two_sample_hand_values():
    y = dct_forward([1.0, 0.0]).coefficients
    np.testing.assert_allclose(y, [2.0, np.sqrt(2.0)], atol=1e-15)


def test_constant_signal():
    n, c = 50, 0.7
    spec = dct_forward(np.full(n, c))
    assert spec.coefficients[0] == pytest.approx(2 * n * c)
    assert np.max(np.abs(spec.coefficients[1:])) < 1e-12
    amps = spec.amplitudes
    assert amps[0] == pytest.approx(c)
    assert np.max(amps[1:]) < 1e-12


def test_single_cosine_mode():
    n = 64
    x = np.cos(np.pi * (np.arange(n) + 0.5) * 3 / n)
    y = dct_forward(x).coefficients
    assert y[3] == pytest.approx(n, abs=1e-9)
    assert np.max(np.abs(np.delete(y, 3))) < 1e-9


def test_reported_amplitude_of_synthetic_cosine():
    n, t_f, amp = 600, 60.0, 0.35
    t = (np.arange(n) + 0.5) * t_f / n
    spec = dct_forward(amp * np.cos(np.pi * 7 * t / t_f), t_f)
    report = amplitude_report(spec)
    assert report[7][0] == pytest.approx(7 * np.pi / t_f)
    assert report[7][1] == pytest.approx(amp, abs=1e-12)
    assert tail_amplitude(spec, 8 * np.pi / t_f) < 1e-12
    assert tail_amplitude(spec, 6 * np.pi / t_f) == pytest.approx(amp, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 7, 100, 6000])
def test_fast_path_matches_direct_sum(n):
    x = np.random.default_rng(n).normal(size=n)
    y = dct_forward(x).coefficients
    assert np.max(np.abs(y - direct_forward(x))) < 1e-9 * max(1.0, np.max(np.abs(y)))
    assert np.max(np.abs(dct_inverse(Spectrum(y, 1.0)) - direct_inverse(y))) < 1e-9


@pytest.mark.parametrize("n", [1, 3, 100, 1000, 10000])
def test_round_trip(n):
    x = np.random.default_rng(n).normal(size=n)
    assert np.max(np.abs(dct_inverse(dct_forward(x)) - x)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(1, 300), elements=finite))
def test_round_trip_property(x):
    assert np.max(np.abs(dct_inverse(dct_forward(x)) - x)) < 1e-10 * max(1.0, np.max(np.abs(x)))


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.integers(2, 300), elements=finite), st.data())
def test_low_pass_never_adds_energy(x, data):
    keep = data.draw(st.integers(1, x.size))
    out = dct_inverse(low_pass(dct_forward(x), keep))
    assert np.linalg.norm(out) <= np.linalg.norm(x) + 1e-10 * max(1.0, np.linalg.norm(x))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 200), finite, finite)
def test_linearity(seed, n, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=n), rng.normal(size=n)
    keep = int(rng.integers(1, n + 1))
    fx, fy = dct_forward(x).coefficients, dct_forward(y).coefficients
    scale = 1e-9 * (abs(a) + abs(b) + 1) * n
    assert np.max(np.abs(dct_forward(a * x + b * y).coefficients - (a * fx + b * fy))) < scale
    inv = dct_inverse(Spectrum(a * fx + b * fy, 1.0))
    assert np.max(np.abs(inv - (a * x + b * y))) < scale
    lp = low_pass(Spectrum(a * fx + b * fy, 1.0), keep).coefficients
    assert np.max(np.abs(lp - (a * low_pass(Spectrum(fx, 1.0), keep).coefficients + b * low_pass(Spectrum(fy, 1.0), keep).coefficients))) < scale


def test_low_pass_edges():
    x = np.random.default_rng(1).normal(size=40)
    spec = dct_forward(x)
    np.testing.assert_array_equal(low_pass(spec, 40).coefficients, spec.coefficients)
    dc = dct_inverse(low_pass(spec, 1))
    np.testing.assert_allclose(dc, np.full(40, x.mean()), atol=1e-12)
    kept = low_pass(spec, 5).coefficients
    np.testing.assert_array_equal(kept[5:], 0.0)
    np.testing.assert_array_equal(kept[:5], spec.coefficients[:5])
    for bad in (0, 41):
        with pytest.raises(ValueError):
            low_pass(spec, bad)


def test_spectrum_metadata():
    spec = dct_forward(np.zeros(6000), 60.0)
    assert spec.n == 6000
    assert spec.logical_size == 12000
    assert spec.frequencies[19] == pytest.approx(OMEGA_19, abs=1e-15)
    assert spec.phases[3] == pytest.approx(np.pi * 3 / 12000)
    assert len(amplitude_report(spec)) == 6000


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        dct_forward([])


def test_band_limit_field_pins_endpoints_and_band():
    rng = np.random.default_rng(7)
    n, t_f = 600, 60.0
    t = np.linspace(0, t_f, n + 1)
    values = np.sin(3 * t) + 0.4 * np.cos(0.2 * t) + 0.05 * rng.normal(size=n + 1)
    out = band_limit_field(values, 20, t_f)
    assert abs(out[0]) < 1e-12 and abs(out[-1]) < 1e-12
    coef = dct_forward(out[:n], t_f).coefficients
    assert np.max(np.abs(coef[20:])) < 1e-10 * np.max(np.abs(coef))
    free = band_limit_field(values, 20, t_f, endpoints=None)
    coef_free = dct_forward(free[:n], t_f).coefficients
    np.testing.assert_allclose(coef_free[:20], dct_forward(values[:n]).coefficients[:20], atol=1e-10)


def test_band_limit_field_is_idempotent():
    values = np.random.default_rng(2).normal(size=301)
    once = band_limit_field(values, 12, 3.0, endpoints=(0.1, -0.2))
    twice = band_limit_field(once, 12, 3.0, endpoints=(0.1, -0.2))
    np.testing.assert_allclose(once, twice, atol=1e-12)
    assert once[0] == pytest.approx(0.1, abs=1e-12)
    assert once[-1] == pytest.approx(-0.2, abs=1e-12)


def test_band_limit_keep_one():
    out = band_limit_field(np.full(11, 3.0), 1, endpoints=None)
    np.testing.assert_allclose(out, 3.0, atol=1e-12)
