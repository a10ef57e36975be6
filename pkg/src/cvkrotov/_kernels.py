"""Compiled fixed-step RK4 loops.

All kernels work on the "drift" matrices ``A0 = sigma @ m0`` and
``Ac = sigma @ mc`` so that the flow at time t is ``A(t) = A0 + f(t) * Ac``.
Field values between grid nodes are linearly interpolated, which puts the
RK4 mid stage at ``(f[k] + f[k+1]) / 2``.

Kernels return the index of the first step that produced a non-finite
value, or -1 on success. Raising is left to the Python wrappers.
"""

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True, fastmath=False)


@njit(**_OPTS)
def _lyap_rhs(A, g, out):
    # out = A g + g A^T
    d = g.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += A[i, k] * g[k, j] + g[i, k] * A[j, k]
            out[i, j] = s


@njit(**_OPTS)
def _adjoint_rhs(A, x, out):
    # out = -(A^T x + x A)
    d = x.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += A[k, i] * x[k, j] + x[i, k] * A[k, j]
            out[i, j] = -s


@njit(**_OPTS)
def _flow_at(A0, Ac, f, out):
    d = A0.shape[0]
    for i in range(d):
        for j in range(d):
            out[i, j] = A0[i, j] + f * Ac[i, j]


@njit(**_OPTS)
def _all_finite(x):
    for v in x.flat:
        if not np.isfinite(v):
            return False
    return True


@njit(**_OPTS)
def _rk4_lyap_step(A0, Ac, fa, fm, fb, h, g, out, work):
    """One RK4 step of dg/dt = A g + g A^T from field fa to fb (fm at mid)."""
    d = g.shape[0]
    A = work[0]
    k1 = work[1]
    k2 = work[2]
    k3 = work[3]
    k4 = work[4]
    tmp = work[5]
    _flow_at(A0, Ac, fa, A)
    _lyap_rhs(A, g, k1)
    _flow_at(A0, Ac, fm, A)
    for i in range(d):
        for j in range(d):
            tmp[i, j] = g[i, j] + 0.5 * h * k1[i, j]
    _lyap_rhs(A, tmp, k2)
    for i in range(d):
        for j in range(d):
            tmp[i, j] = g[i, j] + 0.5 * h * k2[i, j]
    _lyap_rhs(A, tmp, k3)
    _flow_at(A0, Ac, fb, A)
    for i in range(d):
        for j in range(d):
            tmp[i, j] = g[i, j] + h * k3[i, j]
    _lyap_rhs(A, tmp, k4)
    for i in range(d):
        for j in range(d):
            out[i, j] = g[i, j] + h / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    # re-symmetrize
    for i in range(d):
        for j in range(i + 1, d):
            s = 0.5 * (out[i, j] + out[j, i])
            out[i, j] = s
            out[j, i] = s


@njit(**_OPTS)
def propagate_cm(A0, Ac, f, dt, g0, traj):
    n = f.shape[0] - 1
    d = g0.shape[0]
    work = np.empty((6, d, d))
    traj[0] = g0
    for k in range(n):
        fm = 0.5 * (f[k] + f[k + 1])
        _rk4_lyap_step(A0, Ac, f[k], fm, f[k + 1], dt, traj[k], traj[k + 1], work)
        if not _all_finite(traj[k + 1]):
            return k
    return -1


@njit(**_OPTS)
def propagate_costate(A0, Ac, f, dt, xf, traj):
    """Backward RK4 of dX/dt = -(A^T X + X A) from t_f to 0.

    Stepping backwards with stages at t_{k+1}, mid, t_k makes the discrete
    backward map the exact transpose of the forward RK4 map, so the overlap
    <X, gamma> is conserved to round-off along paired trajectories.
    """
    n = f.shape[0] - 1
    d = xf.shape[0]
    A = np.empty((d, d))
    k1 = np.empty((d, d))
    k2 = np.empty((d, d))
    k3 = np.empty((d, d))
    k4 = np.empty((d, d))
    tmp = np.empty((d, d))
    h = -dt
    traj[n] = xf
    for k in range(n, 0, -1):
        x = traj[k]
        _flow_at(A0, Ac, f[k], A)
        _adjoint_rhs(A, x, k1)
        _flow_at(A0, Ac, 0.5 * (f[k] + f[k - 1]), A)
        for i in range(d):
            for j in range(d):
                tmp[i, j] = x[i, j] + 0.5 * h * k1[i, j]
        _adjoint_rhs(A, tmp, k2)
        for i in range(d):
            for j in range(d):
                tmp[i, j] = x[i, j] + 0.5 * h * k2[i, j]
        _adjoint_rhs(A, tmp, k3)
        _flow_at(A0, Ac, f[k - 1], A)
        for i in range(d):
            for j in range(d):
                tmp[i, j] = x[i, j] + h * k3[i, j]
        _adjoint_rhs(A, tmp, k4)
        out = traj[k - 1]
        for i in range(d):
            for j in range(d):
                out[i, j] = x[i, j] + h / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        if not _all_finite(out):
            return k - 1
    return -1


@njit(**_OPTS)
def _control_overlap(X, Ac, g):
    # <X, Ac g + g Ac^T>_F, i.e. chi^T G_c vec(gamma)
    d = g.shape[0]
    s = 0.0
    for i in range(d):
        for j in range(d):
            v = 0.0
            for k in range(d):
                v += Ac[i, k] * g[k, j] + g[i, k] * Ac[j, k]
            s += X[i, j] * v
    return s


@njit(**_OPTS)
def krotov_sweep(A0, Ac, f_old, shape, inv_lambda, dt, g0, chi, f_new):
    """Sequential first-order Krotov sweep.

    The update at node k uses the stored costate of the previous iteration
    and the state propagated under the already-updated field. The field at
    the next node is not known yet when stepping from k to k+1; the step uses
    ``f_old[k+1] + df_k`` as its estimate of it.
    """
    n = f_old.shape[0] - 1
    d = g0.shape[0]
    work = np.empty((6, d, d))
    g = g0.copy()
    g_next = np.empty((d, d))
    for k in range(n + 1):
        df = shape[k] * inv_lambda * _control_overlap(chi[k], Ac, g)
        f_new[k] = f_old[k] + df
        if not np.isfinite(f_new[k]):
            return k
        if k < n:
            fb = f_old[k + 1] + df
            _rk4_lyap_step(A0, Ac, f_new[k], 0.5 * (f_new[k] + fb), fb, dt, g, g_next, work)
            if not _all_finite(g_next):
                return k
            g[:, :] = g_next
    return -1


@njit(**_OPTS)
def _o_rhs(o, l, A, sigma, eta_eff, alpha0, out):
    d = o.shape[0]
    # sigma_{kl} l_k^* o_l
    c = 0.0 + 0.0j
    for k in range(d):
        for m in range(d):
            c += sigma[k, m] * np.conj(l[k]) * o[m]
    # sigma_{kl} o_k o_l (zero for antisymmetric sigma, kept as written)
    q = 0.0 + 0.0j
    for k in range(d):
        for m in range(d):
            q += sigma[k, m] * o[k] * o[m]
    for i in range(d):
        s = alpha0 * l[i] - eta_eff * o[i]
        for m in range(d):
            s -= o[m] * A[m, i]
        s -= 1j * (q * np.conj(l[i]) + o[i] * c)
        out[i] = s


@njit(**_OPTS)
def _drift_diffusion(l, o, drift, diff):
    d = l.shape[0]
    for m in range(d):
        for n in range(d):
            drift[m, n] = (1j * l[m] * np.conj(o[n]) - 1j * np.conj(l[m]) * o[n]).real
            diff[m, n] = (np.conj(l[m]) * o[n] + np.conj(o[m]) * l[n]).real


@njit(**_OPTS)
def _open_rhs(A, sigma, drift, diff, g, out, B, tmp):
    # out = B g + g B^T + 2 sigma diff sigma^T,  B = A + sigma drift
    d = g.shape[0]
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += sigma[i, k] * drift[k, j]
            B[i, j] = A[i, j] + s
    _lyap_rhs(B, g, out)
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += sigma[i, k] * diff[k, j]
            tmp[i, j] = s
    for i in range(d):
        for j in range(d):
            s = 0.0
            for k in range(d):
                s += tmp[i, k] * sigma[j, k]
            out[i, j] += 2.0 * s


@njit(**_OPTS)
def propagate_open(A0, Ac, sigma, f, dt, l, eta_eff, alpha0, evolve_o, o0, g0, gtraj, otraj):
    """Joint RK4 of the memory coefficients o(t) and the open-system CM.

    With ``evolve_o`` false the coefficients stay frozen at ``o0``.
    """
    n = f.shape[0] - 1
    d = g0.shape[0]
    A = np.empty((d, d))
    B = np.empty((d, d))
    tmp = np.empty((d, d))
    drift = np.empty((d, d))
    diff = np.empty((d, d))
    gk = np.empty((4, d, d))
    ok = np.empty((4, d), dtype=np.complex128)
    gs = np.empty((d, d))
    os_ = np.empty(d, dtype=np.complex128)
    gtraj[0] = g0
    otraj[0] = o0
    coef = np.array([0.0, 0.5, 0.5, 1.0])
    for k in range(n):
        g = gtraj[k]
        o = otraj[k]
        fm = 0.5 * (f[k] + f[k + 1])
        fs = np.array([f[k], fm, fm, f[k + 1]])
        for s in range(4):
            if s == 0:
                gs[:, :] = g
                os_[:] = o
            else:
                c = coef[s] * dt
                for i in range(d):
                    os_[i] = o[i] + c * ok[s - 1, i]
                    for j in range(d):
                        gs[i, j] = g[i, j] + c * gk[s - 1, i, j]
            _flow_at(A0, Ac, fs[s], A)
            if evolve_o:
                _o_rhs(os_, l, A, sigma, eta_eff, alpha0, ok[s])
            else:
                ok[s, :] = 0.0
            _drift_diffusion(l, os_, drift, diff)
            _open_rhs(A, sigma, drift, diff, gs, gk[s], B, tmp)
        gn = gtraj[k + 1]
        on = otraj[k + 1]
        for i in range(d):
            on[i] = o[i] + dt / 6.0 * (ok[0, i] + 2.0 * ok[1, i] + 2.0 * ok[2, i] + ok[3, i])
            for j in range(d):
                gn[i, j] = g[i, j] + dt / 6.0 * (gk[0, i, j] + 2.0 * gk[1, i, j] + 2.0 * gk[2, i, j] + gk[3, i, j])
        for i in range(d):
            for j in range(i + 1, d):
                s2 = 0.5 * (gn[i, j] + gn[j, i])
                gn[i, j] = s2
                gn[j, i] = s2
        if not (_all_finite(gn) and _all_finite(on.real) and _all_finite(on.imag)):
            return k
    return -1


@njit(**_OPTS)
def propagate_linear(A0, Ac, D, f, dt, x0, traj):
    """RK4 of dx/dt = (A0 + f(t) Ac + D) x for a real vector x."""
    n = f.shape[0] - 1
    d = x0.shape[0]
    A = np.empty((d, d))
    k = np.empty((4, d))
    xs = np.empty(d)
    traj[0] = x0
    coef = np.array([0.0, 0.5, 0.5, 1.0])
    for step in range(n):
        x = traj[step]
        fm = 0.5 * (f[step] + f[step + 1])
        fs = np.array([f[step], fm, fm, f[step + 1]])
        for s in range(4):
            for i in range(d):
                xs[i] = x[i] if s == 0 else x[i] + coef[s] * dt * k[s - 1, i]
            _flow_at(A0, Ac, fs[s], A)
            for i in range(d):
                v = 0.0
                for j in range(d):
                    v += (A[i, j] + D[i, j]) * xs[j]
                k[s, i] = v
        xn = traj[step + 1]
        for i in range(d):
            xn[i] = x[i] + dt / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
        if not _all_finite(xn):
            return step
    return -1
