import numpy as np
import pytest

from cvkrotov import _kernels
from cvkrotov.dynamics import ControlField, IntegrationError, TimeGrid, control_flow, propagate_cm, propagate_costate
from cvkrotov.gaussian import cm_distance, log_negativity, two_mode_squeezed_cm, vec
from cvkrotov.krotov import (
    KrotovConfig,
    costate_boundary,
    optimize,
    pulse_update_amplitude,
    qsl_time,
    update_shape,
)
from cvkrotov.optomech import OptomechParams, build_generator

GEN = build_generator(OptomechParams(1.0, 0.1))

# arccos(1 / cosh 0.8) / 0.1 from a 30-digit evaluation
QSL_08 = 7.26204822741528869826


def test_blackman_shape():
    grid = TimeGrid(60.0, 6000)
    s = update_shape("blackman", grid)
    assert s[0] == 0.0 and s[-1] == 0.0
    assert s[3000] == pytest.approx(1.0, abs=1e-15)
    assert np.all((s >= 0) & (s <= 1))
    np.testing.assert_allclose(s, s[::-1], atol=1e-15)
    t = grid.times[1234]
    assert s[1234] == pytest.approx(0.42 - 0.5 * np.cos(2 * np.pi * t / 60) + 0.08 * np.cos(4 * np.pi * t / 60))


def test_constant_shape_and_unknown():
    grid = TimeGrid(1.0, 10)
    np.testing.assert_array_equal(update_shape("constant-one", grid), np.ones(11))
    with pytest.raises(ValueError):
        update_shape("hann", grid)


@pytest.mark.parametrize(
    "kwargs", [dict(lambda_a=0.0), dict(lambda_a=-1.0), dict(tol_d2=0.0), dict(max_iters=-1), dict(spectral_cutoff=0), dict(patience=0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KrotovConfig(**kwargs)


def test_config_defaults():
    c = KrotovConfig()
    assert c.lambda_a == 8000.0 and c.tol_d2 == 1e-4 and c.spectral_cutoff is None


def test_costate_boundary_examples():
    g = two_mode_squeezed_cm(0.4)
    np.testing.assert_array_equal(costate_boundary(g, g), np.zeros(16))
    chi = costate_boundary(np.eye(4), 2 * np.eye(4))
    np.testing.assert_array_equal(chi, vec(2 * np.eye(4)))
    with pytest.raises(ValueError):
        costate_boundary(np.eye(4), np.eye(2))


def test_costate_boundary_is_minus_gradient():
    rng = np.random.default_rng(11)
    final, target = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    chi = costate_boundary(final, target)
    h = 1e-6
    grad = np.zeros(16)
    for i in range(16):
        e = np.zeros(16)
        e[i] = h
        up = final + e.reshape(4, 4, order="F")
        down = final - e.reshape(4, 4, order="F")
        grad[i] = (cm_distance(up, target) - cm_distance(down, target)) / (2 * h)
    np.testing.assert_allclose(-grad, chi, rtol=1e-6, atol=1e-8)


def test_pulse_update_amplitude():
    chi, gamma = vec(np.eye(4)), np.eye(4)
    a_c = GEN.drift_c
    dense = np.kron(np.eye(4), a_c) + np.kron(a_c, np.eye(4))
    expected = 0.7 / 50.0 * chi @ dense @ vec(gamma)
    assert pulse_update_amplitude(chi, gamma, GEN, 0.7, 50.0) == pytest.approx(expected, abs=1e-15)
    assert pulse_update_amplitude(chi, gamma, GEN, 0.0, 50.0) == 0.0
    rng = np.random.default_rng(0)
    chi, gamma = rng.normal(size=16), two_mode_squeezed_cm(0.3)
    a = pulse_update_amplitude(chi, gamma, GEN, 1.0, 10.0)
    assert pulse_update_amplitude(chi, gamma, GEN, 1.0, 20.0) == a / 2


def test_sweep_first_node_matches_dense_update():
    grid = TimeGrid(5.0, 500)
    guess = ControlField(grid, -0.5 + 0.1 * np.sin(grid.times))
    target = two_mode_squeezed_cm(0.5)
    traj = propagate_cm(GEN, guess, grid, np.eye(4))
    chi = propagate_costate(GEN, guess, grid, costate_boundary(traj[-1], target))
    s = np.full(grid.n_steps + 1, 0.6)
    f_new = np.empty(grid.n_steps + 1)
    chi_m = np.ascontiguousarray(chi.reshape(-1, 4, 4).transpose(0, 2, 1))
    bad = _kernels.krotov_sweep(GEN.drift0, GEN.drift_c, np.array(guess.values), s, 1 / 30.0, grid.dt, np.eye(4), chi_m, f_new)
    assert bad == -1
    df0 = pulse_update_amplitude(chi[0], np.eye(4), GEN, 0.6, 30.0)
    assert f_new[0] - guess.values[0] == pytest.approx(df0, rel=1e-12, abs=1e-15)


def test_gradient_matches_finite_differences():
    grid = TimeGrid(10.0, 1000)
    t = grid.times
    f = -0.8 + 0.3 * np.sin(t)
    u = np.cos(0.7 * t) + 0.5 * np.sin(2 * np.pi * t / 10)
    target = two_mode_squeezed_cm(0.5)

    def cost(v):
        return cm_distance(propagate_cm(GEN, ControlField(grid, v), grid, np.eye(4))[-1], target)

    traj = propagate_cm(GEN, ControlField(grid, f), grid, np.eye(4))
    chi = propagate_costate(GEN, ControlField(grid, f), grid, costate_boundary(traj[-1], target))
    density = np.einsum("ki,ij,kj->k", chi, control_flow(GEN), traj.transpose(0, 2, 1).reshape(-1, 16))
    predicted = -np.trapezoid(density * u, t)
    eps = 1e-5
    fd = (cost(f + eps * u) - cost(f - eps * u)) / (2 * eps)
    assert abs(fd - predicted) / abs(fd) < 1e-3


def test_already_at_target():
    # without coupling the vacuum is stationary for any detuning
    gen = build_generator(OptomechParams(1.0, 0.0))
    grid = TimeGrid(2.0, 200)
    res = optimize(gen, grid, np.eye(4), np.eye(4), ControlField.constant(grid, 0.3))
    assert res.converged and res.iterations == 0
    assert res.final_d2 < 1e-4
    assert len(res.records) == 1


def test_small_problem_converges_monotonically():
    grid = TimeGrid(15.0, 1500)
    records = []
    res = optimize(
        GEN,
        grid,
        np.eye(4),
        two_mode_squeezed_cm(0.5),
        config=KrotovConfig(lambda_a=20.0, max_iters=2000),
        callback=records.append,
    )
    assert res.converged, res.final_d2
    assert res.final_d2 <= 1e-4
    d2 = res.d2_history
    assert np.all(np.diff(d2) <= 0)
    assert records == res.records
    assert [r.iter for r in records] == list(range(len(records)))
    assert records[0].field_update_norm == 0.0
    assert all(r.field_update_norm > 0 for r in records[1:])
    assert abs(res.field.values[0]) < 1e-12 and abs(res.field.values[-1]) < 1e-12
    # the stored trajectory belongs to the returned field
    np.testing.assert_array_equal(res.trajectory, propagate_cm(GEN, res.field, grid, np.eye(4)))
    assert log_negativity(res.trajectory[-1]) == pytest.approx(log_negativity(two_mode_squeezed_cm(0.5)), rel=0.01)


def test_nonzero_guess_endpoints_are_kept():
    grid = TimeGrid(15.0, 1500)
    guess = ControlField.constant(grid, -0.3)
    res = optimize(GEN, grid, np.eye(4), two_mode_squeezed_cm(0.5), guess, config=KrotovConfig(lambda_a=100.0, max_iters=20))
    assert res.field.values[0] == -0.3 and res.field.values[-1] == -0.3
    assert res.status == "max_iters" and res.iterations == 20


def test_spectral_cutoff_band_limits_every_iterate():
    from cvkrotov.spectral import dct_forward

    grid = TimeGrid(15.0, 1500)
    res = optimize(
        GEN,
        grid,
        np.eye(4),
        two_mode_squeezed_cm(0.5),
        shape="constant-one",
        config=KrotovConfig(lambda_a=100.0, max_iters=30, spectral_cutoff=8),
    )
    coef = dct_forward(res.field.values[:-1], grid.t_f).coefficients
    assert np.max(np.abs(coef[8:])) < 1e-12 * max(1.0, np.max(np.abs(coef)))
    assert abs(res.field.values[0]) < 1e-12 and abs(res.field.values[-1]) < 1e-12
    assert np.all(np.diff(res.d2_history) <= 0)


def test_overflow_is_reported_with_step():
    grid = TimeGrid(15.0, 1500)
    with pytest.raises(IntegrationError) as info:
        optimize(GEN, grid, np.eye(4), two_mode_squeezed_cm(1.0), config=KrotovConfig(lambda_a=1e-3, max_iters=5))
    assert info.value.step > 0


def test_divergence_guard():
    grid = TimeGrid(15.0, 1500)
    cfg = KrotovConfig(lambda_a=0.5, max_iters=200, patience=2)
    res = optimize(GEN, grid, np.eye(4), two_mode_squeezed_cm(1.0), config=cfg)
    assert res.status == "diverged" and not res.converged
    d2 = res.d2_history
    assert d2[-1] > d2[-2] > d2[-3]


def test_shape_array_length_checked():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        optimize(GEN, grid, np.eye(4), np.eye(4) * 2, shape=np.ones(5))


def test_qsl():
    assert qsl_time(0.8, 0.1) == pytest.approx(QSL_08, rel=1e-14)
    assert qsl_time(0.0, 0.1) == 0.0
    assert qsl_time(0.8, 0.2) == qsl_time(0.8, 0.1) / 2
    with pytest.raises(ValueError):
        qsl_time(0.8, 0.0)
    with pytest.raises(ValueError):
        qsl_time(-0.1, 0.1)


@pytest.mark.slow
def test_fig2_convergence_shape(fig2_run):
    _, res = fig2_run
    d2 = res.d2_history
    assert res.converged
    assert np.all(np.diff(d2) <= 0)
    logd = np.log(d2)
    n = len(logd)
    mid = (logd[n // 4] - logd[n // 2]) / (n // 2 - n // 4)
    last = (logd[3 * n // 4] - logd[-1]) / (n - 1 - 3 * n // 4)
    assert mid > 0 and last > 0
    assert 1 / 3 <= last / mid <= 3
    assert abs(res.field.values[0]) < 1e-12 and abs(res.field.values[-1]) < 1e-12
