"""Time-stepping kernels for the non-RWA model.

Each kernel has an ``@njit`` loop version and a numpy version with the same
signature; ``dispatch`` picks one according to the backend flag.  The numpy
versions vectorize everything that is not inherently sequential (series and
drift evaluation over a chunk of stage times) and keep only the RK4
recursion as a Python loop.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, resolve_backend

# consts layout shared by both backends
# [kappa, Delta0, g, omega_minus, omega1, omega2, gamma1, gamma2]
N_CONSTS = 8


# --------------------------------------------------------------- numba side


@njit(cache=True)
def _fill_drift(alpha, S, t, consts, A):
    kappa, Delta0, g, om_m, om1, om2, gam1, gam2 = (
        consts[0], consts[1], consts[2], consts[3], consts[4], consts[5], consts[6], consts[7])
    K = np.zeros((3, 3), np.complex128)
    L = np.zeros((3, 3), np.complex128)
    K[0, 0] = -(kappa + 1j * Delta0) - 2j * g * S
    ga = -1j * g * alpha
    gac = -1j * g * np.conj(alpha)
    for j in range(1, 3):
        om = om1 if j == 1 else om2
        em = np.exp(1j * (om_m - om) * t)
        ep = np.exp(1j * (om_m + om) * t)
        K[0, j] = ga * em
        L[0, j] = ga * ep
        K[j, 0] = gac * np.conj(em)
        L[j, 0] = ga * ep
    K[1, 1] = -0.5 * gam1
    K[2, 2] = -0.5 * gam2
    for r in range(3):
        for c in range(3):
            P = K[r, c] + L[r, c]
            M = K[r, c] - L[r, c]
            A[2 * r, 2 * c] = P.real
            A[2 * r, 2 * c + 1] = -M.imag
            A[2 * r + 1, 2 * c] = P.imag
            A[2 * r + 1, 2 * c + 1] = M.real


@njit(cache=True)
def _series_value(chi, deg, ph, t):
    acc = 0j
    for j in range(chi.shape[0]):
        if deg[j] == 0:
            acc += chi[j] * ph[j]
        else:
            acc += chi[j] * t ** deg[j] * ph[j]
    return acc


@njit(cache=True)
def _lyap_rhs(A, C, D, out):
    n = C.shape[0]
    for i in range(n):
        for j in range(n):
            s = D[i, j]
            for k in range(n):
                s += A[i, k] * C[k, j] + C[i, k] * A[j, k]
            out[i, j] = s


@njit(cache=True)
def _cov_series_numba(C0, t_grid, h_max, a_chi, a_zeta, a_deg, b_chi, b_zeta, b_deg, consts, D):
    n_t = t_grid.shape[0]
    out = np.full((n_t, 6, 6), np.nan)
    out[0] = C0
    C = C0.copy()
    A0 = np.empty((6, 6))
    A1 = np.empty((6, 6))
    A2 = np.empty((6, 6))
    k1 = np.empty((6, 6))
    k2 = np.empty((6, 6))
    k3 = np.empty((6, 6))
    k4 = np.empty((6, 6))
    tmp = np.empty((6, 6))
    pa = np.empty(a_chi.shape[0], np.complex128)
    pb = np.empty(b_chi.shape[0], np.complex128)
    for i in range(n_t - 1):
        ta, tb = t_grid[i], t_grid[i + 1]
        nsub = int(np.ceil((tb - ta) / h_max))
        if nsub < 1:
            nsub = 1
        h = (tb - ta) / nsub
        for j in range(pa.shape[0]):
            pa[j] = np.exp(a_zeta[j] * ta)
        for j in range(pb.shape[0]):
            pb[j] = np.exp(b_zeta[j] * ta)
        ma = np.exp(a_zeta * (0.5 * h))
        mb = np.exp(b_zeta * (0.5 * h))
        t = ta
        _fill_drift(_series_value(a_chi, a_deg, pa, t), _series_value(b_chi, b_deg, pb, t).real,
                    t, consts, A0)
        for s in range(nsub):
            pa *= ma
            pb *= mb
            th = t + 0.5 * h
            _fill_drift(_series_value(a_chi, a_deg, pa, th), _series_value(b_chi, b_deg, pb, th).real,
                        th, consts, A1)
            pa *= ma
            pb *= mb
            t1 = ta + (s + 1) * h
            _fill_drift(_series_value(a_chi, a_deg, pa, t1), _series_value(b_chi, b_deg, pb, t1).real,
                        t1, consts, A2)
            _lyap_rhs(A0, C, D, k1)
            tmp[:, :] = C + 0.5 * h * k1
            _lyap_rhs(A1, tmp, D, k2)
            tmp[:, :] = C + 0.5 * h * k2
            _lyap_rhs(A1, tmp, D, k3)
            tmp[:, :] = C + h * k3
            _lyap_rhs(A2, tmp, D, k4)
            C += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            A0[:, :] = A2
            t = t1
        for r in range(6):
            for c in range(r + 1, 6):
                v = 0.5 * (C[r, c] + C[c, r])
                C[r, c] = v
                C[c, r] = v
        if not np.all(np.isfinite(C)):
            return out, i + 1
        out[i + 1] = C
    return out, -1


@njit(cache=True)
def _fill_harmonic(A0, freqs, Ac, As, t, A):
    A[:, :] = A0
    for k in range(freqs.shape[0]):
        c = np.cos(freqs[k] * t)
        s = np.sin(freqs[k] * t)
        A += c * Ac[k] + s * As[k]


@njit(cache=True)
def _fundamental_numba(A0, freqs, Ac, As, T, n_steps):
    n = A0.shape[0]
    U = np.eye(n)
    h = T / n_steps
    Aa = np.empty((n, n))
    Am = np.empty((n, n))
    Ab = np.empty((n, n))
    _fill_harmonic(A0, freqs, Ac, As, 0.0, Aa)
    for s in range(n_steps):
        t = s * h
        _fill_harmonic(A0, freqs, Ac, As, t + 0.5 * h, Am)
        _fill_harmonic(A0, freqs, Ac, As, t + h, Ab)
        k1 = Aa @ U
        k2 = Am @ (U + 0.5 * h * k1)
        k3 = Am @ (U + 0.5 * h * k2)
        k4 = Ab @ (U + h * k3)
        U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Aa[:, :] = Ab
    return U


# --------------------------------------------------------------- numpy side


def drift_stack(alpha, S, t, consts):
    """Vectorized drift matrices for arrays of alpha, S = Re(beta1 + beta2) and t."""
    kappa, Delta0, g, om_m, om1, om2, gam1, gam2 = consts
    alpha = np.asarray(alpha, complex)
    t = np.asarray(t, float)
    nt = t.shape[0]
    K = np.zeros((nt, 3, 3), complex)
    L = np.zeros((nt, 3, 3), complex)
    K[:, 0, 0] = -(kappa + 1j * Delta0) - 2j * g * np.asarray(S)
    ga = -1j * g * alpha
    gac = -1j * g * np.conj(alpha)
    for j, om in ((1, om1), (2, om2)):
        em = np.exp(1j * (om_m - om) * t)
        ep = np.exp(1j * (om_m + om) * t)
        K[:, 0, j] = ga * em
        L[:, 0, j] = ga * ep
        K[:, j, 0] = gac * np.conj(em)
        L[:, j, 0] = ga * ep
    K[:, 1, 1] = -0.5 * gam1
    K[:, 2, 2] = -0.5 * gam2
    P, M = K + L, K - L
    A = np.empty((nt, 6, 6))
    A[:, 0::2, 0::2] = P.real
    A[:, 0::2, 1::2] = -M.imag
    A[:, 1::2, 0::2] = P.imag
    A[:, 1::2, 1::2] = M.real
    return A


def _series_eval(chi, zeta, deg, t):
    if chi.size == 0:
        return np.zeros(t.shape, complex)
    tt = t[:, None]
    return (chi * tt**deg * np.exp(zeta * tt)).sum(axis=1)


def _cov_series_numpy(C0, t_grid, h_max, a_chi, a_zeta, a_deg, b_chi, b_zeta, b_deg, consts, D,
                      chunk=4096):
    n_t = t_grid.shape[0]
    out = np.full((n_t, 6, 6), np.nan)
    out[0] = C0
    C = C0.copy()
    for i in range(n_t - 1):
        ta, tb = t_grid[i], t_grid[i + 1]
        nsub = max(1, int(np.ceil((tb - ta) / h_max)))
        h = (tb - ta) / nsub
        s0 = 0
        while s0 < nsub:
            s1 = min(nsub, s0 + chunk)
            ts = ta + 0.5 * h * np.arange(2 * s0, 2 * s1 + 1)
            al = _series_eval(a_chi, a_zeta, a_deg, ts)
            S = _series_eval(b_chi, b_zeta, b_deg, ts).real
            As = drift_stack(al, S, ts, consts)
            for s in range(s1 - s0):
                Aa, Am, Ab = As[2 * s], As[2 * s + 1], As[2 * s + 2]
                k1 = Aa @ C
                k1 = k1 + k1.T + D
                Y = C + 0.5 * h * k1
                k2 = Am @ Y
                k2 = k2 + k2.T + D
                Y = C + 0.5 * h * k2
                k3 = Am @ Y
                k3 = k3 + k3.T + D
                Y = C + h * k3
                k4 = Ab @ Y
                k4 = k4 + k4.T + D
                C = C + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            s0 = s1
        C = 0.5 * (C + C.T)
        if not np.all(np.isfinite(C)):
            return out, i + 1
        out[i + 1] = C
    return out, -1


def _fundamental_numpy(A0, freqs, Ac, As, T, n_steps, chunk=8192):
    n = A0.shape[0]
    U = np.eye(n)
    h = T / n_steps
    s0 = 0
    while s0 < n_steps:
        s1 = min(n_steps, s0 + chunk)
        ts = 0.5 * h * np.arange(2 * s0, 2 * s1 + 1)
        arg = np.outer(ts, freqs)
        Ast = A0 + np.einsum("tk,kij->tij", np.cos(arg), Ac) + np.einsum("tk,kij->tij", np.sin(arg), As)
        for s in range(s1 - s0):
            Aa, Am, Ab = Ast[2 * s], Ast[2 * s + 1], Ast[2 * s + 2]
            k1 = Aa @ U
            k2 = Am @ (U + 0.5 * h * k1)
            k3 = Am @ (U + 0.5 * h * k2)
            k4 = Ab @ (U + h * k3)
            U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s0 = s1
    return U


# --------------------------------------------------------------- dispatch


def covariance_series_rk4(C0, t_grid, h_max, alpha, beta_sum, consts, D, backend=None):
    """RK4 for C' = A(t) C + C A(t)^T + D with A(t) built from mean-field series.

    ``alpha`` and ``beta_sum`` are (chi, zeta, deg) triples.  Returns the
    covariances on ``t_grid`` and the index of the first non-finite sample
    (-1 if none).
    """
    args = (np.ascontiguousarray(C0, float), np.ascontiguousarray(t_grid, float), float(h_max),
            *(np.ascontiguousarray(x) for x in alpha), *(np.ascontiguousarray(x) for x in beta_sum),
            np.asarray(consts, float), np.ascontiguousarray(D, float))
    if resolve_backend(backend) == "numba":
        return _cov_series_numba(*args)
    return _cov_series_numpy(*args)


def fundamental_matrix(A0, freqs, Ac, As, T, n_steps, backend=None):
    """RK4 fundamental matrix of u' = A(t) u over [0, T] for a harmonic A(t)."""
    args = (np.ascontiguousarray(A0, float), np.ascontiguousarray(freqs, float),
            np.ascontiguousarray(Ac, float).reshape(-1, *np.shape(A0)),
            np.ascontiguousarray(As, float).reshape(-1, *np.shape(A0)), float(T), int(n_steps))
    if resolve_backend(backend) == "numba":
        return _fundamental_numba(*args)
    return _fundamental_numpy(*args)
