"""Linearized dynamics without the rotating-wave approximation.

The classical amplitudes alpha(t), beta_j(t) are expanded in powers of the
single-photon coupling g (alpha: even orders, beta: odd orders) and plugged
into the interaction-picture equations for the fluctuations, which then
carry every counter-rotating term.  With steady-state amplitudes the drift
is periodic and Floquet theory applies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gaussian as gs
from . import kernels
from . import rwa
from .params import SystemParams
from .series import ExponentialSeries, Rates

MAX_ORDER = 8
MODES = ("steady", "transient")


class ExpansionStructureError(AssertionError):
    pass


class IncommensurateError(ValueError):
    pass


# ------------------------------------------------------------ mean fields


def rates_for(params: SystemParams) -> Rates:
    p = params
    return Rates(
        omega_plus=p.omega_plus,
        z=complex(p.kappa, p.bare_detuning + p.omega_minus),
        w1=complex(0.5 * p.gamma1, p.omega1),
        w2=complex(0.5 * p.gamma2, p.omega2),
    )


@dataclass
class MeanFieldExpansion:
    alpha_orders: dict  # p (even) -> ExponentialSeries
    beta_orders: dict  # j -> {p (odd) -> ExponentialSeries}
    order_max: int
    mode: str
    g: float
    rates: Rates = field(repr=False)

    def _total(self, orders: dict) -> ExponentialSeries:
        out = ExponentialSeries.zero(self.rates)
        for p, s in orders.items():
            out = out + s.scale(self.g**p)
        return out

    def alpha(self) -> ExponentialSeries:
        return self._total(self.alpha_orders)

    def beta(self, j: int) -> ExponentialSeries:
        return self._total(self.beta_orders[j])

    def beta_sum(self) -> ExponentialSeries:
        return self.beta(1) + self.beta(2)

    def alpha_pm(self) -> tuple[complex, complex]:
        """Coefficients of exp(-i w+ t) and exp(+i w+ t) in the steady alpha."""
        h = self.alpha().steady_part().harmonics()
        return complex(h.get(-1, 0j)), complex(h.get(1, 0j))

    def beta_dc(self) -> tuple[complex, complex]:
        return tuple(complex(self.beta(j).steady_part().harmonics().get(0, 0j)) for j in (1, 2))

    def check_structure(self):
        """Steady alpha harmonics must be odd, steady beta harmonics even."""
        for p, s in self.alpha_orders.items():
            bad = [n for n in s.steady_part().harmonics() if n % 2 == 0]
            if bad:
                raise ExpansionStructureError(f"alpha order {p} has even harmonics {bad}")
        for j, orders in self.beta_orders.items():
            for p, s in orders.items():
                bad = [n for n in s.steady_part().harmonics() if n % 2 != 0]
                if bad:
                    raise ExpansionStructureError(f"beta_{j} order {p} has odd harmonics {bad}")


def mean_field_expansion(params: SystemParams, order_max: int, mode: str = "steady") -> MeanFieldExpansion:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not 0 <= order_max <= MAX_ORDER:
        raise ValueError(f"order_max must be in [0, {MAX_ORDER}]")
    rates = rates_for(params)
    transient = mode == "transient"
    xi0 = ExponentialSeries.harmonic(rates, {-1: -1j * params.E1, 1: -1j * params.E2})
    alpha = {0: xi0.integrate("z", transient, label=0)}
    beta = {1: {}, 2: {}}
    re_beta_sum = {}
    for p in range(1, order_max + 1):
        if p % 2:
            xi = ExponentialSeries.zero(rates)
            for q in range(0, p, 2):
                xi = xi + alpha[q] * alpha[p - 1 - q].conj()
            xi = xi.scale(-1j)
            beta[1][p] = xi.integrate("w1", transient, label=p)
            beta[2][p] = xi.integrate("w2", transient, label=p)
            re_beta_sum[p] = (beta[1][p] + beta[2][p]).real()
        else:
            xi = ExponentialSeries.zero(rates)
            for q in range(0, p - 1, 2):
                xi = xi + alpha[q] * re_beta_sum[p - 1 - q]
            alpha[p] = xi.scale(-2j).integrate("z", transient, label=p)
    exp = MeanFieldExpansion(alpha, beta, order_max, mode, params.g, rates)
    exp.check_structure()
    return exp


@dataclass(frozen=True)
class LowestOrderFields:
    alpha_minus: complex
    alpha_plus: complex
    beta_dc: tuple
    beta_sidebands: tuple  # per resonator: (coefficient at -2 w+, at +2 w+)


def lowest_order_fields(params: SystemParams) -> LowestOrderFields:
    """Leading-order steady amplitudes in closed form."""
    r = rates_for(params)
    am = -1j * params.E1 / (r.z - 1j * r.omega_plus)
    ap = -1j * params.E2 / (r.z + 1j * r.omega_plus)
    g = params.g
    dc, sb = [], []
    for w in (r.w1, r.w2):
        dc.append(-1j * g * (abs(am) ** 2 + abs(ap) ** 2) / w)
        sb.append((-1j * g * am * np.conj(ap) / (w - 2j * r.omega_plus),
                   -1j * g * ap * np.conj(am) / (w + 2j * r.omega_plus)))
    return LowestOrderFields(complex(am), complex(ap), tuple(dc), tuple(sb))


def driving_residuals(params: SystemParams, expansion: MeanFieldExpansion, t) -> dict:
    """Residuals A(t), B_j(t) of the classical equations for the truncated fields."""
    t = np.asarray(t, float)
    r = expansion.rates
    g = params.g
    al = expansion.alpha()
    a = al(t)
    da = al.derivative()(t)
    b = {j: expansion.beta(j) for j in (1, 2)}
    reb = sum(b[j](t).real for j in (1, 2))
    drive = -1j * (params.E1 * np.exp(-1j * r.omega_plus * t) + params.E2 * np.exp(1j * r.omega_plus * t))
    A = drive - da - r.z * a - 2j * g * reb * a
    out = {"A": A}
    for j, w in ((1, r.w1), (2, r.w2)):
        out[f"B{j}"] = -b[j].derivative()(t) - w * b[j](t) - 1j * g * np.abs(a) ** 2
    return out


# ------------------------------------------------------------- calibration


def needs_calibration(params: SystemParams) -> bool:
    return params.g > 0 and params.E1 == 0 and params.E2 == 0


def calibrate_drives(params: SystemParams, order_max: int = 0, rtol: float = 1e-13,
                     max_iter: int = 100) -> SystemParams:
    """Choose E1, E2, Delta0 so that g|alpha_-| = G1, g|alpha_+| = G2 and the
    effective detuning equals ``params.Delta`` at the given expansion order."""
    p = params
    if p.g <= 0:
        raise ValueError("calibration needs g > 0")
    E1 = p.G1 * abs(p.omega1 - p.Delta + 1j * p.kappa) / p.g
    E2 = p.G2 * abs(p.omega2 + p.Delta - 1j * p.kappa) / p.g
    D0 = p.Delta
    for _ in range(max_iter):
        q = p.replace(E1=E1, E2=E2, Delta0=D0)
        exp = mean_field_expansion(q, order_max, "steady")
        am, ap = exp.alpha_pm()
        bdc = exp.beta_dc()
        E1n = 0.0 if p.G1 == 0 else E1 * p.G1 / (p.g * abs(am))
        E2n = 0.0 if p.G2 == 0 else E2 * p.G2 / (p.g * abs(ap))
        D0n = p.Delta - 2 * p.g * sum(np.real(b) for b in bdc)
        done = (abs(E1n - E1) <= rtol * max(E1, 1e-300) and abs(E2n - E2) <= rtol * max(E2, 1e-300)
                and abs(D0n - D0) <= rtol * max(abs(p.Delta), p.kappa, 1e-300))
        E1, E2, D0 = E1n, E2n, float(D0n)
        if done:
            break
    return p.replace(E1=float(E1), E2=float(E2), Delta0=D0)


def prepare(params: SystemParams, order_max: int, calibrate: bool | None = None) -> SystemParams:
    if calibrate is None:
        calibrate = needs_calibration(params)
    if calibrate:
        return calibrate_drives(params, order_max)
    if params.Delta0 is None:
        return params.replace(Delta0=params.Delta)
    return params


# ---------------------------------------------------------- periodic drift


@dataclass
class PeriodicDrift:
    A0: np.ndarray
    harmonics: list  # (frequency, A_c, A_s), frequency > 0
    fundamental: float | None
    commensurate: bool

    def __call__(self, t: float) -> np.ndarray:
        A = self.A0.copy()
        for nu, Ac, As in self.harmonics:
            A += Ac * np.cos(nu * t) + As * np.sin(nu * t)
        return A

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([h[0] for h in self.harmonics])

    def stacked(self):
        n = self.A0.shape[0]
        if not self.harmonics:
            z = np.zeros((0, n, n))
            return np.zeros(0), z, z
        return (self.frequencies, np.array([h[1] for h in self.harmonics]),
                np.array([h[2] for h in self.harmonics]))

    @property
    def max_frequency(self) -> float:
        return float(self.frequencies.max()) if self.harmonics else 0.0


def _drift_keys(params: SystemParams, a_harm: dict, s_harm: dict):
    """(a, b) -> (K, L): frequency a w+ + b w- components of the complex drift."""
    g = params.g
    terms: dict = {}

    def put(key, which, r, c, val):
        if val == 0:
            return
        K, L = terms.setdefault(key, (np.zeros((3, 3), complex), np.zeros((3, 3), complex)))
        (K if which == "K" else L)[r, c] += val

    put((0, 0), "K", 0, 0, -(params.kappa + 1j * params.Delta0))
    put((0, 0), "K", 1, 1, -0.5 * params.gamma1)
    put((0, 0), "K", 2, 2, -0.5 * params.gamma2)
    for n, s in s_harm.items():
        put((n, 0), "K", 0, 0, -2j * g * s)
    for n, a in a_harm.items():
        ga, gac = -1j * g * a, -1j * g * np.conj(a)
        put((n - 1, 2), "K", 0, 1, ga)
        put((n + 1, 0), "L", 0, 1, ga)
        put((n - 1, 0), "K", 0, 2, ga)
        put((n + 1, 2), "L", 0, 2, ga)
        put((-n + 1, -2), "K", 1, 0, gac)
        put((n + 1, 0), "L", 1, 0, ga)
        put((-n + 1, 0), "K", 2, 0, gac)
        put((n + 1, 2), "L", 2, 0, ga)
    return terms


def commensurate_unit(omega1: float, omega2: float, max_den: int = 1000, rtol: float = 1e-12):
    """(P, Q, u) with omega1 = P u, omega2 = Q u, or None if incommensurate."""
    ratio = omega1 / omega2
    fr = Fraction(ratio).limit_denominator(max_den)
    if abs(float(fr) - ratio) > rtol * ratio:
        return None
    return fr.numerator, fr.denominator, omega2 / fr.denominator


def fundamental_frequency(freqs, omega1: float, omega2: float) -> float | None:
    """Largest Omega with every frequency an integer multiple, or None."""
    cu = commensurate_unit(omega1, omega2)
    if cu is None:
        return None
    _, _, u = cu
    half = 0.5 * u
    ints = []
    for f in freqs:
        m = f / half
        mi = round(m)
        if abs(m - mi) > 1e-6 * max(1.0, abs(m)):
            return None
        if mi:
            ints.append(abs(int(mi)))
    if not ints:
        return None
    return math.gcd(*ints) * half


def build_periodic_drift(params: SystemParams, expansion: MeanFieldExpansion,
                         resonant_only: bool = False) -> PeriodicDrift:
    if expansion.mode != "steady":
        raise ValueError("periodic drift needs a steady-mode expansion")
    if params.Delta0 is None:
        params = params.replace(Delta0=params.Delta)
    a_harm = expansion.alpha().harmonics()
    s_harm = expansion.beta_sum().real().harmonics()
    terms = _drift_keys(params, a_harm, s_harm)
    wp, wm = params.omega_plus, params.omega_minus
    scale = max(abs(wp), abs(wm), 1.0)
    grouped: dict = {}
    for (a, b), (K, L) in terms.items():
        nu = a * wp + b * wm
        key = round(nu / scale, 9)
        if key in grouped:
            grouped[key][1] += K
            grouped[key][2] += L
        else:
            grouped[key] = [nu, K.copy(), L.copy()]
    A0 = np.zeros((6, 6))
    pos: dict = {}
    for key, (nu, K, L) in grouped.items():
        Ac = gs.quadrature_matrix(K, L)
        As = gs.quadrature_matrix(1j * K, 1j * L)
        if key == 0:
            A0 += Ac
            continue
        if resonant_only:
            continue
        k = abs(key)
        sign = 1.0 if nu > 0 else -1.0
        if k not in pos:
            pos[k] = [abs(nu), np.zeros((6, 6)), np.zeros((6, 6))]
        pos[k][1] += Ac
        pos[k][2] += sign * As
    harmonics = [tuple(v) for _, v in sorted(pos.items())
                 if np.max(np.abs(v[1])) + np.max(np.abs(v[2])) > 0]
    fund = fundamental_frequency([h[0] for h in harmonics], params.omega1, params.omega2) if harmonics else None
    comm = commensurate_unit(params.omega1, params.omega2) is not None
    return PeriodicDrift(A0, harmonics, fund, comm)


def drift_at(params: SystemParams, expansion: MeanFieldExpansion, t) -> np.ndarray:
    """Drift matrices A(t) straight from the (possibly transient) mean-field series."""
    t = np.atleast_1d(np.asarray(t, float))
    al = expansion.alpha()(t)
    S = expansion.beta_sum()(t).real
    return kernels.drift_stack(al, S, t, _consts(params))


def _consts(params: SystemParams):
    p = params
    return np.array([p.kappa, p.bare_detuning, p.g, p.omega_minus, p.omega1, p.omega2,
                     p.gamma1, p.gamma2], float)


# ------------------------------------------------------------- propagation


def _max_drift_frequency(params, expansion) -> float:
    fa = expansion.alpha().max_frequency() if expansion.alpha_orders else 0.0
    fb = expansion.beta_sum().max_frequency()
    return fa + abs(params.omega_minus) + max(params.omega1, params.omega2) + fb


def evolve_full(cm0, params: SystemParams, t_grid, order_max: int = 1, mode: str = "steady",
                backend: str | None = None, calibrate: bool | None = None,
                steps_per_period: int = 50) -> rwa.EntanglementTrajectory:
    t_grid = np.asarray(t_grid, float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-d array")
    q = prepare(params, order_max, calibrate)
    C0 = rwa.initial_state(q) if cm0 is None else gs.check_physical(cm0)
    exp = mean_field_expansion(q, order_max, mode)
    alpha = exp.alpha().arrays()
    bsum = exp.beta_sum().arrays()
    f_max = _max_drift_frequency(q, exp)
    h_max = 2 * np.pi / (steps_per_period * f_max) if f_max > 0 else np.inf
    if q.kappa > 0:
        h_max = min(h_max, 0.05 / q.kappa)
    if not np.isfinite(h_max):
        h_max = (t_grid[-1] - t_grid[0]) / 1000 or 1.0
    cms, bad = kernels.covariance_series_rk4(C0, t_grid, h_max, alpha, bsum, _consts(q),
                                             rwa.diffusion(q), backend=backend)
    if bad >= 0:
        partial = rwa.trajectory_from_covariances(t_grid[:bad], cms[:bad])
        err = rwa.NumericalError("non-finite covariance", float(t_grid[bad]))
        err.partial = partial
        raise err
    return rwa.trajectory_from_covariances(t_grid, cms)


# ----------------------------------------------------------------- Floquet


@dataclass
class FloquetResult:
    exponents: np.ndarray
    period: float
    n_steps: int
    multipliers: np.ndarray

    @property
    def max_real(self) -> float:
        return float(np.max(self.exponents.real))


def floquet_from_drift(drift: PeriodicDrift, backend=None, steps_per_period: int = 50,
                       period: float | None = None) -> FloquetResult:
    if drift.harmonics:
        if drift.fundamental is None:
            raise IncommensurateError("drift frequencies are not commensurate; no common period")
        T = 2 * np.pi / drift.fundamental if period is None else period
        h_max = 2 * np.pi / (steps_per_period * drift.max_frequency)
    else:
        T = 1.0 if period is None else period
        h_max = np.inf
    rho = float(np.max(np.abs(np.linalg.eigvals(drift.A0))))
    if rho > 0:
        h_max = min(h_max, 0.02 / rho)
    n_steps = max(1, int(np.ceil(T / h_max)))
    freqs, Ac, As = drift.stacked()
    M = kernels.fundamental_matrix(drift.A0, freqs, Ac, As, T, n_steps, backend=backend)
    mult = np.linalg.eigvals(M)
    return FloquetResult(np.log(mult.astype(complex)) / T, T, n_steps, mult)


def floquet_exponents(params: SystemParams, order_max: int = 1, backend=None,
                      calibrate: bool | None = None, steps_per_period: int = 50) -> FloquetResult:
    q = prepare(params, order_max, calibrate)
    exp = mean_field_expansion(q, order_max, "steady")
    drift = build_periodic_drift(q, exp)
    period = None if drift.harmonics else 2 * np.pi / q.omega_plus
    return floquet_from_drift(drift, backend, steps_per_period, period)


# ---------------------------------------------------------------- validity


@dataclass
class ValidityReport:
    ratios: dict
    valid: bool
    marginal: bool
    threshold: float


def rwa_validity(params: SystemParams, expansion: MeanFieldExpansion | None = None,
                 threshold: float = 0.1, marginal_threshold: float = 0.03) -> ValidityReport:
    if expansion is None:
        lo = lowest_order_fields(params)
        am, ap = lo.alpha_minus, lo.alpha_plus
    else:
        am, ap = expansion.alpha_pm()
    scale = min(params.omega1, params.omega2, abs(params.omega1 - params.omega2))
    if scale == 0:
        ratios = {"g_alpha_minus": math.inf, "g_alpha_plus": math.inf, "kappa": math.inf}
    else:
        ratios = {
            "g_alpha_minus": params.g * abs(am) / scale,
            "g_alpha_plus": params.g * abs(ap) / scale,
            "kappa": params.kappa / scale,
        }
    worst = max(ratios.values())
    valid = worst < threshold
    return ValidityReport(ratios, valid, valid and worst > marginal_threshold, threshold)


def rwa_params_for(params: SystemParams, expansion: MeanFieldExpansion) -> SystemParams:
    """RWA parameters matching the resonant part of a full-model configuration."""
    am, ap = expansion.alpha_pm()
    bdc = expansion.beta_dc()
    D = rwa.detuning_shift(params.bare_detuning, params, bdc)
    return params.replace(G1=params.g * abs(am), G2=params.g * abs(ap), Delta=D)
