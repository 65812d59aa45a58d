"""Linearized dynamics in the rotating-wave approximation.

Modes are ordered (a, b1, b2), giving the 6-dim quadrature vector
(X, Y, x1, p1, x2, p2).  The moment equation is C' = A C + C A^T + D.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import gaussian as gs
from .params import SystemParams


class UnstableError(RuntimeError):
    def __init__(self, max_re_eig: float):
        super().__init__(f"system is unstable (max Re eig(A) = {max_re_eig:.6g} s^-1)")
        self.max_re_eig = max_re_eig


class NumericalError(RuntimeError):
    def __init__(self, msg: str, time: float | None = None):
        super().__init__(msg if time is None else f"{msg} at t = {time:.6g} s")
        self.time = time


@dataclass(frozen=True)
class DriftDiffusion:
    A: np.ndarray
    D: np.ndarray


@dataclass
class StabilityReport:
    stable: bool
    max_re_eig: float
    closed_form: bool | None = None
    closed_form_margin: float | None = None

    @property
    def agrees(self) -> bool | None:
        return None if self.closed_form is None else self.closed_form == self.stable


@dataclass
class EntanglementTrajectory:
    times: np.ndarray
    EN: np.ndarray
    photon_number: np.ndarray
    occupancies: np.ndarray  # (n_times, 2) mechanical occupancies
    covariances: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.EN) == len(self.photon_number) == len(self.occupancies) == n):
            raise ValueError("trajectory arrays must have equal lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def columns(self) -> dict:
        return {
            "t": self.times,
            "EN": self.EN,
            "photon_number": self.photon_number,
            "n_b1": self.occupancies[:, 0],
            "n_b2": self.occupancies[:, 1],
        }


# ---------------------------------------------------------------- couplings


def effective_couplings(params: SystemParams) -> tuple[complex, complex]:
    """Complex linear couplings produced by the two sideband tones."""
    p = params
    G1 = p.g * p.E1 / (p.omega1 - p.Delta + 1j * p.kappa)
    G2 = -p.g * p.E2 / (p.omega2 + p.Delta - 1j * p.kappa)
    return complex(G1), complex(G2)


def with_effective_couplings(params: SystemParams) -> SystemParams:
    """Params with (G1, G2) replaced by the moduli derived from (g, E1, E2)."""
    G1, G2 = effective_couplings(params)
    return params.replace(G1=abs(G1), G2=abs(G2))


def detuning_shift(Delta0: float, params: SystemParams, beta_dc) -> float:
    """Effective detuning Delta0 + 2 g sum_j Re beta_j^DC."""
    return float(Delta0 + 2.0 * params.g * sum(np.real(b) for b in beta_dc))


# ------------------------------------------------------------ drift, steady


def drift_complex(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """(K, L) with v' = K v + L v^* for v = (a, b1, b2)."""
    p = params
    K = np.zeros((3, 3), complex)
    L = np.zeros((3, 3), complex)
    K[0, 0] = -(p.kappa + 1j * p.Delta)
    L[0, 1] = -1j * p.G1
    K[0, 2] = -1j * p.G2
    L[1, 0] = -1j * p.G1
    K[1, 1] = -0.5 * p.gamma1
    K[2, 0] = -1j * np.conj(p.G2)
    K[2, 2] = -0.5 * p.gamma2
    return K, L


def diffusion(params: SystemParams) -> np.ndarray:
    p = params
    d1 = p.gamma1 * (p.nbar1 + 0.5)
    d2 = p.gamma2 * (p.nbar2 + 0.5)
    return np.diag([p.kappa, p.kappa, d1, d1, d2, d2])


def build_drift_diffusion(params: SystemParams) -> DriftDiffusion:
    K, L = drift_complex(params)
    return DriftDiffusion(gs.quadrature_matrix(K, L), diffusion(params))


def stability_margin_closed_form(params: SystemParams) -> float:
    """G2^2 - G1^2 + (kappa gamma/2)(1 + 4 Delta^2/(gamma + 2 kappa)^2); > 0 means stable."""
    p = params
    gam = p.gamma1
    extra = 0.0 if gam + 2 * p.kappa == 0 else 4 * p.Delta**2 / (gam + 2 * p.kappa) ** 2
    return p.G2**2 - p.G1**2 + 0.5 * p.kappa * gam * (1.0 + extra)


def stability_check(params: SystemParams) -> StabilityReport:
    A = build_drift_diffusion(params).A
    mx = float(np.max(np.linalg.eigvals(A).real))
    rep = StabilityReport(stable=mx < 0, max_re_eig=mx)
    if params.gamma1 == params.gamma2:
        margin = stability_margin_closed_form(params)
        rep.closed_form = margin > 0
        rep.closed_form_margin = margin
    return rep


def lyapunov_solve(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Solve A C + C A^T + D = 0 through the Kronecker-sum linear system."""
    n = A.shape[0]
    I = np.eye(n)
    M = np.kron(I, A) + np.kron(A, I)
    # column-major vec: vec(A C) = (I kron A) vec C, vec(C A^T) = (A kron I) vec C
    c = np.linalg.solve(M, -D.reshape(-1, order="F"))
    C = c.reshape(n, n, order="F")
    return 0.5 * (C + C.T)


def steady_state(params: SystemParams) -> np.ndarray:
    dd = build_drift_diffusion(params)
    mx = float(np.max(np.linalg.eigvals(dd.A).real))
    if not mx < 0:
        raise UnstableError(mx)
    C = lyapunov_solve(dd.A, dd.D)
    res = dd.A @ C + C @ dd.A.T + dd.D
    if np.linalg.norm(res) > residual_tolerance(dd.A, dd.D, C):
        C = C + lyapunov_solve(dd.A, res)  # one step of iterative refinement
        res = dd.A @ C + C @ dd.A.T + dd.D
        tol = residual_tolerance(dd.A, dd.D, C)
        if np.linalg.norm(res) > tol:
            raise NumericalError(f"Lyapunov residual {np.linalg.norm(res):.3e} exceeds {tol:.3e}")
    return C


def residual_tolerance(A, D, C) -> float:
    """1e-10 ||D||, or the float64 rounding floor of A C + C A^T when larger.

    Strongly squeezed hot states have ||C|| up to ~1e7 and the floor
    eps ||A|| ||C|| then exceeds 1e-10 ||D||.
    """
    floor = 64 * np.finfo(float).eps * np.linalg.norm(A) * np.linalg.norm(C)
    return max(1e-10 * np.linalg.norm(D), floor)


def mechanical_logneg(cm: np.ndarray) -> float:
    return gs.log_negativity(cm[2:6, 2:6])


def initial_state(params: SystemParams) -> np.ndarray:
    """Cavity vacuum times thermal mechanics."""
    return gs.thermal_state([0.0, params.nbar1, params.nbar2])


# ---------------------------------------------------------------- evolution


def _van_loan(A, D, h):
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A
    M[:n, n:] = D
    M[n:, n:] = A.T
    F = expm(M * h)
    Phi = F[n:, n:].T
    return Phi, Phi @ F[:n, n:]


def _general_step(A, D, h):
    """(Phi, Q) with C(t+h) = Phi C Phi^T + Q, built from short Van Loan steps."""
    norm = np.linalg.norm(A, 1)
    nsub = max(1, int(np.ceil(norm * h / 0.5)))
    Phi1, Q1 = _van_loan(A, D, h / nsub)
    Phi, Q = np.eye(A.shape[0]), np.zeros_like(A)
    for _ in range(nsub):
        Phi = Phi1 @ Phi
        Q = Phi1 @ Q @ Phi1.T + Q1
    return Phi, 0.5 * (Q + Q.T)


def trajectory_from_covariances(times, cms, check=True) -> EntanglementTrajectory:
    cms = np.asarray(cms)
    en = np.empty(len(times))
    for i, C in enumerate(cms):
        mech = C[2:6, 2:6]
        if check:
            try:
                en[i] = gs.log_negativity(mech)
            except gs.UnphysicalStateError as exc:
                raise NumericalError(f"unphysical covariance ({exc})", times[i]) from None
        else:
            en[i] = gs.log_negativity_batch(mech)
    occ = gs.occupancies(cms)
    return EntanglementTrajectory(
        times=np.asarray(times, float), EN=en, photon_number=occ[:, 0],
        occupancies=occ[:, 1:3], covariances=cms)


def evolve(cm0: np.ndarray | None, params: SystemParams, t_grid) -> EntanglementTrajectory:
    """Exact propagation of the moment equation sampled on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    C = initial_state(params) if cm0 is None else gs.check_physical(cm0)
    if C.shape != (6, 6):
        raise ValueError("evolve expects a three-mode (6x6) initial covariance")
    dd = build_drift_diffusion(params)
    A, D = dd.A, dd.D
    stable = np.max(np.linalg.eigvals(A).real) < 0
    Css = lyapunov_solve(A, D) if stable else None
    out = np.empty((t_grid.size, 6, 6))
    out[0] = C
    for i in range(1, t_grid.size):
        h = t_grid[i] - t_grid[i - 1]
        if stable:
            P = expm(A * h)
            C = P @ (C - Css) @ P.T + Css
        else:
            Phi, Q = _general_step(A, D, h)
            with np.errstate(over="ignore", invalid="ignore"):
                C = Phi @ C @ Phi.T + Q
        C = 0.5 * (C + C.T)
        if not np.all(np.isfinite(C)):
            raise NumericalError("non-finite covariance", t_grid[i])
        out[i] = C
    return trajectory_from_covariances(t_grid, out)


def log_time_grid(t_end: float, n: int = 200, t_first: float | None = None) -> np.ndarray:
    """0 followed by ``n - 1`` log-spaced points up to ``t_end``."""
    if t_first is None:
        t_first = t_end * 1e-4
    return np.concatenate([[0.0], np.geomspace(t_first, t_end, n - 1)])


# ------------------------------------------------------- Bogoliubov analytics


@dataclass(frozen=True)
class BogoliubovSteadyState:
    r: float
    n1_eff: float
    n2_eff: float
    n2_cool: float
    m_bar: float
    m_beta: complex
    C_minus: float
    epsilon: float
    delta: float
    corr_b: gs.ModeCorrelations

    def cm_beta(self) -> np.ndarray:
        return gs.correlations_to_cm(gs.ModeCorrelations(self.n1_eff, self.n2_cool, self.m_beta))

    def cm_b(self) -> np.ndarray:
        return gs.correlations_to_cm(self.corr_b)


def _require_equal_damping(params: SystemParams):
    if params.gamma1 != params.gamma2:
        raise ValueError("analytic formulas require gamma1 == gamma2 "
                         f"(got {params.gamma1} and {params.gamma2})")


def effective_bath(r: float, nbar1: float, nbar2: float) -> tuple[float, float, float]:
    if r < 0:
        raise ValueError("r must be >= 0")
    c2, s2 = np.cosh(r) ** 2, np.sinh(r) ** 2
    n1 = nbar1 * c2 + (nbar2 + 1) * s2
    n2 = nbar2 * c2 + (nbar1 + 1) * s2
    m = np.cosh(r) * np.sinh(r) * (nbar1 + nbar2 + 1)
    return float(n1), float(n2), float(m)


def _eps_delta(params: SystemParams) -> tuple[float, float]:
    den = params.gamma1 + 2 * params.kappa
    return params.gamma1 / den, 2 * params.Delta / den


def bare_correlations(r: float, n1_eff: float, n2_cool: float, m_beta: complex) -> gs.ModeCorrelations:
    """Bare-mode occupancies and <b1 b2> from the Bogoliubov-mode ones."""
    c, s = np.cosh(r), np.sinh(r)
    tot = 1.0 + n1_eff + n2_cool
    n_b1 = n1_eff + s * s * tot - 2 * c * s * np.real(m_beta)
    n_b2 = n2_cool + s * s * tot - 2 * c * s * np.real(m_beta)
    m_b = c * c * m_beta + s * s * np.conj(m_beta) - c * s * tot
    return gs.ModeCorrelations(float(n_b1), float(n_b2), complex(m_b))


def bogoliubov_steady_analytic(params: SystemParams) -> BogoliubovSteadyState:
    _require_equal_damping(params)
    p = params
    if not p.G2 > p.G1:
        raise ValueError(f"Bogoliubov frame needs G2 > G1 (got G1={p.G1}, G2={p.G2})")
    if p.gamma1 <= 0 or p.kappa <= 0:
        raise ValueError("analytic steady state needs gamma > 0 and kappa > 0")
    sq = gs.SqueezeParams.from_couplings(p.G1, p.G2)
    r = sq.r
    n1e, n2e, m = effective_bath(r, p.nbar1, p.nbar2)
    Cm = 2 * sq.calG**2 / (p.gamma1 * p.kappa)
    eps, dl = _eps_delta(p)
    n2c = n2e * (1 - (1 - eps) * Cm / (1 + dl**2 + Cm))
    mb = m * 2 * (1 + 1j * dl) / (2 * (1 + 1j * dl) + (1 - eps) * Cm)
    return BogoliubovSteadyState(
        r=r, n1_eff=n1e, n2_eff=n2e, n2_cool=float(n2c), m_bar=m, m_beta=complex(mb),
        C_minus=Cm, epsilon=eps, delta=dl, corr_b=bare_correlations(r, n1e, n2c, mb))


def n2_cool_from_C1(r: float, C1: float, params: SystemParams) -> float:
    _require_equal_damping(params)
    eps, dl = _eps_delta(params)
    _, n2e, _ = effective_bath(r, params.nbar1, params.nbar2)
    return float(n2e * (1 - (1 - eps) * C1 / (np.sinh(r) ** 2 * (1 + dl**2) + C1)))


def nu_exact_decoupled(r: float, C1: float, params: SystemParams) -> float:
    """nu with the residual Bogoliubov correlation m_beta set to zero."""
    if r <= 0:
        raise ValueError("r must be > 0")
    n1e, _, _ = effective_bath(r, params.nbar1, params.nbar2)
    n2c = n2_cool_from_C1(r, C1, params)
    corr = bare_correlations(r, n1e, n2c, 0.0)
    return float(1.0 + corr.n_b1 + corr.n_b2
                 - np.sqrt(4 * abs(corr.m_b) ** 2 + (corr.n_b1 - corr.n_b2) ** 2))


def nu_approx(r, C1, nbar1, nbar2):
    r = np.asarray(r, dtype=float)
    out = 2 * np.exp(-2 * r) + (1 + nbar1 + nbar2) * np.exp(2 * r) / (4 * C1)
    return float(out) if out.ndim == 0 else out


def r_opt(C1: float, nbar1: float, nbar2: float) -> float:
    if C1 <= 0:
        raise ValueError("C1 must be > 0")
    return float(0.25 * np.log(8 * C1 / (nbar1 + nbar2 + 1)))


def EN_opt(C1: float, nbar1: float, nbar2: float) -> float:
    if C1 <= 0:
        raise ValueError("C1 must be > 0")
    return float(0.5 * np.log(C1 / (2 * (1 + nbar1 + nbar2))))


def cooperativity(G: float, kappa: float, gamma: float) -> float:
    return 2 * G**2 / (kappa * gamma)


def steady_logneg(params: SystemParams) -> float:
    return mechanical_logneg(steady_state(params))
