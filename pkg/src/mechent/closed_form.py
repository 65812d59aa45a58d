"""Dissipationless (kappa = gamma = 0) Heisenberg maps.

Two regimes: G2 > G1, where the cavity hybridizes with the bright
Bogoliubov mode and the dark mode is frozen, and G1 = G2, where x+ and p-
are conserved and the mechanics picks up a stroboscopic shear.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian as gs

PHASE_TOL = 1e-8


@dataclass(frozen=True)
class NormalModeData:
    lambda0: float
    lambda1: float
    lambda2: float
    theta: float
    Delta_tilde: float


@dataclass(frozen=True)
class SymplecticMap:
    matrix: np.ndarray
    time: float

    def symplectic_error(self) -> float:
        n = self.matrix.shape[0] // 2
        Om = gs.symplectic_form(n)
        return float(np.max(np.abs(self.matrix @ Om @ self.matrix.T - Om)))

    def apply(self, cm: np.ndarray) -> np.ndarray:
        return self.matrix @ cm @ self.matrix.T


@dataclass(frozen=True)
class StroboscopicResult:
    p: int
    t_p: float
    phi_p: float
    phase_residual: float  # |phi_p mod 2 pi - pi|
    resonant: bool
    EN: float | None  # printed closed form, only when exp(i phi_p) = -1
    EN_approx: float
    EN_map: float  # propagated through hamiltonian_map, any phase


def normal_modes(calG: float, Delta: float) -> NormalModeData:
    if calG == 0 and Delta == 0:
        raise ValueError("normal modes undefined for calG = Delta = 0")
    dt = float(np.hypot(Delta, 2 * calG))
    theta = 0.5 * float(np.arctan2(-2 * calG, Delta))
    return NormalModeData(0.0, 0.5 * (Delta - dt), 0.5 * (Delta + dt), theta, dt)


def _bogoliubov_params(r, calG, Delta):
    nm = normal_modes(calG, Delta)
    return np.cosh(r), np.sinh(r), nm


def hamiltonian_map(t: float, r: float, calG: float, Delta: float) -> SymplecticMap:
    """Quadrature map of (a, b1, b2) for the G2 > G1 Hamiltonian dynamics."""
    if r < 0:
        raise ValueError("r must be >= 0")
    c, s, nm = _bogoliubov_params(r, calG, Delta)
    half = 0.5 * nm.Delta_tilde * t
    cs2, sn2 = np.cos(2 * nm.theta), np.sin(2 * nm.theta)
    ep, em = np.exp(0.5j * Delta * t), np.exp(-0.5j * Delta * t)
    u = ep * (np.cos(half) - 1j * cs2 * np.sin(half))   # beta2^dag -> beta2^dag
    f = em * (np.cos(half) + 1j * cs2 * np.sin(half))   # beta2 -> beta2
    ga = em * (np.cos(half) - 1j * cs2 * np.sin(half))  # a -> a
    h = sn2 * np.sin(half)
    K = np.zeros((3, 3), complex)
    L = np.zeros((3, 3), complex)
    K[0, 0] = ga
    K[0, 2] = 1j * c * h * em
    L[0, 1] = 1j * s * h * em
    K[1, 1] = c * c - s * s * u
    L[1, 2] = c * s * (1 - u)
    L[1, 0] = 1j * s * h * ep
    K[2, 2] = c * c * f - s * s
    L[2, 1] = c * s * (f - 1)
    K[2, 0] = 1j * c * h * em
    return SymplecticMap(gs.quadrature_matrix(K, L), float(t))


def stroboscopic_times(p, calG, Delta):
    return 2 * np.pi * np.asarray(p) / np.hypot(Delta, 2 * calG)


def _phase_residual(phi):
    return float(abs(np.mod(phi, 2 * np.pi) - np.pi))


def logneg_tp_closed(r: float, nbar1: float, nbar2: float) -> float:
    npl, nmi = nbar1 + nbar2, nbar1 - nbar2
    a = npl + 1
    X = nmi**2 + a**2 * np.cosh(8 * r)
    Y = a**4 * np.sinh(8 * r) ** 2 + 4 * nmi**2 * a**2 * np.cosh(4 * r) ** 2
    # X - sqrt(Y) cancels catastrophically at large r; X^2 - Y = (a^2 - nmi^2)^2
    inner = (a**2 - nmi**2) ** 2 / (X + np.sqrt(Y))
    return max(0.0, -0.5 * float(np.log(inner)))


def logneg_tp_approx(r: float, nbar1: float, nbar2: float) -> float:
    return 4 * r - float(np.log(nbar1 + nbar2 + 1))


def stroboscopic_entanglement(p: int, r: float, calG: float, Delta: float,
                              nbar1: float, nbar2: float) -> StroboscopicResult:
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    nm = normal_modes(calG, Delta)
    t_p = 2 * np.pi * p / nm.Delta_tilde
    phi_p = np.pi * p * (1 + Delta / nm.Delta_tilde)
    res = _phase_residual(phi_p)
    resonant = res < PHASE_TOL
    cm0 = gs.thermal_state([0.0, nbar1, nbar2])
    cm = hamiltonian_map(t_p, r, calG, Delta).apply(cm0)
    en_map = gs.log_negativity(cm[2:, 2:])
    return StroboscopicResult(
        p=int(p), t_p=float(t_p), phi_p=float(phi_p), phase_residual=res, resonant=resonant,
        EN=logneg_tp_closed(r, nbar1, nbar2) if resonant else None,
        EN_approx=logneg_tp_approx(r, nbar1, nbar2), EN_map=en_map)


def optimal_coupling_gp(Delta: float, p: int, d: int) -> float:
    """calG making exp(i phi_p) = -1 at detuning Delta."""
    if int(p) != p or int(d) != d:
        raise ValueError("p and d must be integers")
    if d % 2 != 1 or not (0 < d < 2 * p) or d == p:
        raise ValueError(f"need odd d with 0 < d < 2p and d != p (got p={p}, d={d})")
    return float(abs(Delta) * np.sqrt(d * (2 * p - d)) / (2 * abs(p - d)))


# (X, Y, x1, p1, x2, p2) -> (X, Y, x+, p-, x-, p+)
_PM = np.zeros((6, 6))
_PM[0, 0] = _PM[1, 1] = 1.0
_PM[2, [2, 4]] = [1, 1]
_PM[3, [3, 5]] = [1, -1]
_PM[4, [2, 4]] = [1, -1]
_PM[5, [3, 5]] = [1, 1]
_PM[2:] /= np.sqrt(2)


def equal_coupling_map(t: float, G: float, Delta: float) -> SymplecticMap:
    """Quadrature map at G1 = G2 = G; x+ and p- are conserved."""
    if Delta == 0:
        raise ValueError("equal_coupling_map needs Delta != 0")
    dt = Delta * t
    sn, cs = np.sin(dt), np.cos(dt)
    om = 1 - cs
    k = 2 * G**2 / Delta**2
    ell = np.sqrt(2) * G / Delta
    X, Y, XP, PM, XM, PP = range(6)
    W = np.zeros((6, 6))
    W[X, [X, Y, XP, PM]] = [cs, sn, -ell * om, -ell * sn]
    W[Y, [X, Y, XP, PM]] = [-sn, cs, -ell * sn, ell * om]
    W[XP, XP] = 1.0
    W[PM, PM] = 1.0
    W[XM, [XM, PM, XP, Y, X]] = [1.0, k * (sn - dt), k * om, -ell * sn, ell * om]
    W[PP, [PP, XP, PM, X, Y]] = [1.0, -k * (sn - dt), k * om, -ell * sn, -ell * om]
    return SymplecticMap(_PM.T @ W @ _PM, float(t))


def decoupling_times(m, Delta):
    return 2 * np.pi * np.asarray(m) / Delta


def shear_coefficient(m: int, G: float, Delta: float) -> float:
    return 4 * np.pi * m * G**2 / Delta**2
