"""Gaussian-state algebra in the quadrature representation.

Conventions: x = (b + b^dag)/sqrt(2), p = (b - b^dag)/(i sqrt(2)), so the
vacuum variance is 1/2.  Covariance matrices are real symmetric ``(2n, 2n)``
arrays ordered (x1, p1, x2, p2, ...) and hold symmetrized second moments.
Logarithms are natural.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHYS_TOL = 1e-9


class UnphysicalStateError(ValueError):
    """Covariance matrix violates the uncertainty relation beyond tolerance."""


@dataclass(frozen=True)
class ModeCorrelations:
    """Occupancies and anomalous correlation <b1 b2> of two modes."""
    n_b1: float
    n_b2: float
    m_b: complex = 0.0


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    calG: float

    @classmethod
    def from_couplings(cls, G1: float, G2: float) -> "SqueezeParams":
        G1, G2 = abs(G1), abs(G2)
        if not G2 > G1:
            raise ValueError(f"Bogoliubov modes need G2 > G1 (got G1={G1}, G2={G2})")
        return cls(r=float(np.arctanh(G1 / G2)), calG=float(np.sqrt(G2**2 - G1**2)))


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def vacuum_state(n_modes: int) -> np.ndarray:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return 0.5 * np.eye(2 * n_modes)


def thermal_state(occupancies) -> np.ndarray:
    occ = np.asarray(occupancies, dtype=float).ravel()
    if occ.size == 0:
        raise ValueError("need at least one occupancy")
    if not np.all(np.isfinite(occ)):
        raise ValueError("occupancies must be finite")
    if np.any(occ < 0):
        raise ValueError(f"negative occupancy in {occ.tolist()}")
    return np.diag(np.repeat(occ + 0.5, 2))


def quadrature_matrix(K: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Real (2n, 2n) matrix of the map v -> K v + L v^*.

    Works both for drifts (v' = K v + L v^*) and for Heisenberg maps
    (v(t) = K v(0) + L v(0)^dag) on mode operators v.
    """
    K = np.asarray(K, dtype=complex)
    L = np.asarray(L, dtype=complex)
    n = K.shape[0]
    P, M = K + L, K - L
    A = np.empty((2 * n, 2 * n))
    A[0::2, 0::2] = P.real
    A[0::2, 1::2] = -M.imag
    A[1::2, 0::2] = P.imag
    A[1::2, 1::2] = M.real
    return A


def mode_rotation(phases) -> np.ndarray:
    """Local phase rotations b_j -> b_j exp(-i phi_j) as a quadrature map."""
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    return quadrature_matrix(np.diag(np.exp(-1j * phases)), np.zeros((phases.size,) * 2))


def uncertainty_margin(cm: np.ndarray) -> float:
    """Smallest eigenvalue of cm + i Omega / 2 (>= 0 for physical states)."""
    cm = np.asarray(cm, dtype=float)
    n = cm.shape[0] // 2
    return float(np.linalg.eigvalsh(cm + 0.5j * symplectic_form(n))[0])


def _scaled_tol(cm, tol):
    return tol * max(1.0, float(np.max(np.abs(cm))))


def is_physical(cm: np.ndarray, tol: float = PHYS_TOL) -> bool:
    cm = np.asarray(cm, dtype=float)
    if not np.allclose(cm, cm.T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(cm)))):
        return False
    return uncertainty_margin(cm) >= -_scaled_tol(cm, tol)


def check_physical(cm: np.ndarray, tol: float = PHYS_TOL) -> np.ndarray:
    """Return the symmetrized matrix or raise ``UnphysicalStateError``."""
    cm = np.asarray(cm, dtype=float)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
        raise ValueError(f"covariance must be (2n, 2n), got {cm.shape}")
    if not np.all(np.isfinite(cm)):
        raise UnphysicalStateError("covariance has non-finite entries")
    sym = 0.5 * (cm + cm.T)
    if np.max(np.abs(cm - cm.T)) > 1e-12 * max(1.0, np.max(np.abs(cm))):
        raise UnphysicalStateError("covariance is not symmetric")
    margin = uncertainty_margin(sym)
    if margin < -_scaled_tol(sym, tol):
        raise UnphysicalStateError(f"uncertainty relation violated (min eigenvalue {margin:.3e})")
    return sym


def symplectic_eigenvalues(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm, dtype=float)
    n = cm.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cm))
    return np.sort(ev)[::2]


def partial_transpose(cm: np.ndarray) -> np.ndarray:
    """Flip the momentum of the second mode of a two-mode covariance."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return flip @ cm @ flip


def log_negativity(cm: np.ndarray, tol: float = PHYS_TOL) -> float:
    """Logarithmic negativity max(0, -ln 2 nu_min) of a two-mode state."""
    cm = check_physical(cm, tol)
    if cm.shape != (4, 4):
        raise ValueError("log_negativity expects a two-mode (4x4) covariance")
    nu_min = symplectic_eigenvalues(partial_transpose(cm))[0]
    return max(0.0, -float(np.log(2.0 * nu_min)))


def log_negativity_batch(cms: np.ndarray) -> np.ndarray:
    """Closed-form E_N for a stack of (4, 4) covariances (no physicality check)."""
    cms = np.asarray(cms, dtype=float)
    a = np.linalg.det(cms[..., :2, :2])
    b = np.linalg.det(cms[..., 2:, 2:])
    c = np.linalg.det(cms[..., :2, 2:])
    det = np.linalg.det(cms)
    delta = a + b - 2.0 * c
    nu2 = 0.5 * (delta - np.sqrt(np.maximum(delta**2 - 4.0 * det, 0.0)))
    with np.errstate(divide="ignore"):
        en = -0.5 * np.log(4.0 * np.maximum(nu2, 0.0))
    return np.maximum(en, 0.0)


def correlations_to_cm(corr: ModeCorrelations) -> np.ndarray:
    a, b = corr.n_b1 + 0.5, corr.n_b2 + 0.5
    mr, mi = np.real(corr.m_b), np.imag(corr.m_b)
    return np.array([
        [a, 0.0, mr, mi],
        [0.0, a, mi, -mr],
        [mr, mi, b, 0.0],
        [mi, -mr, 0.0, b],
    ])


def cm_to_correlations(cm: np.ndarray) -> ModeCorrelations:
    """Occupancies and <b1 b2>; ignores any single-mode squeezing content."""
    cm = np.asarray(cm, dtype=float)
    n1 = 0.5 * (cm[0, 0] + cm[1, 1] - 1.0)
    n2 = 0.5 * (cm[2, 2] + cm[3, 3] - 1.0)
    m = 0.5 * (cm[0, 2] - cm[1, 3]) + 0.5j * (cm[0, 3] + cm[1, 2])
    return ModeCorrelations(float(n1), float(n2), complex(m))


def occupancies(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm, dtype=float)
    d = np.diagonal(cm, axis1=-2, axis2=-1)
    return 0.5 * (d[..., 0::2] + d[..., 1::2] - 1.0)


def logneg_from_occupancies(corr: ModeCorrelations) -> float:
    nu = 1.0 + corr.n_b1 + corr.n_b2 - np.sqrt(4.0 * abs(corr.m_b) ** 2 + (corr.n_b1 - corr.n_b2) ** 2)
    return max(0.0, -float(np.log(nu)))


def bogoliubov_matrix(r: float) -> np.ndarray:
    """Quadrature form of (b1, b2) -> (b1 cosh r + b2^dag sinh r, b2 cosh r + b1^dag sinh r)."""
    c, s = np.cosh(r), np.sinh(r)
    return np.array([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, -s],
        [s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])


def bogoliubov_frame(cm: np.ndarray, r: float, direction: str = "forward") -> np.ndarray:
    """Covariance of the Bogoliubov modes (forward) or back to the bare modes (inverse)."""
    if direction == "forward":
        S = bogoliubov_matrix(r)
    elif direction == "inverse":
        S = bogoliubov_matrix(-r)
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    cm = np.asarray(cm, dtype=float)
    return S @ cm @ S.T


def two_mode_squeeze(cm: np.ndarray, r: float) -> np.ndarray:
    """State S(r) rho S(-r); moments transform with S(-r) b S(r) = b cosh r - b^dag sinh r."""
    cm = np.asarray(cm, dtype=float)
    if cm.shape != (4, 4):
        raise ValueError("two_mode_squeeze expects a two-mode covariance")
    S = bogoliubov_matrix(-r)
    return S @ cm @ S.T


def reduce_modes(cm: np.ndarray, modes) -> np.ndarray:
    idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
    return np.asarray(cm)[np.ix_(idx, idx)]


def nearest_physical(cm: np.ndarray, tol: float = 1e-13, max_iter: int = 20000) -> np.ndarray:
    """Frobenius-nearest symmetric matrix with cm + i Omega/2 >= 0.

    Dykstra alternating projections between the Hermitian PSD cone and the
    affine set whose imaginary part is fixed to Omega/2.
    """
    cm = 0.5 * (np.asarray(cm, dtype=float) + np.asarray(cm, dtype=float).T)
    n = cm.shape[0] // 2
    half_omega = 0.5 * symplectic_form(n)
    x = cm + 1j * half_omega
    p = np.zeros_like(x)
    for _ in range(max_iter):
        w, v = np.linalg.eigh(x + p)
        y = (v * np.clip(w, 0.0, None)) @ v.conj().T
        p = x + p - y
        x_new = y.real + 1j * half_omega
        x_new.real = 0.5 * (x_new.real + x_new.real.T)
        if np.max(np.abs(x_new - x)) < tol * max(1.0, np.max(np.abs(cm))):
            x = x_new
            break
        x = x_new
    return x.real.copy()
