import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as orc
from mechent import gaussian as gs
from mechent import presets, rwa
from mechent.params import SystemParams


def random_params(rng, equal_gamma=True, stable_only=False, max_ratio=1.3):
    while True:
        kappa = 10 ** rng.uniform(3, 5)
        gamma1 = kappa * 10 ** rng.uniform(-2.5, -0.5)
        gamma2 = gamma1 if equal_gamma else kappa * 10 ** rng.uniform(-2.5, -0.5)
        G2 = kappa * rng.uniform(0.1, 1.0)
        p = SystemParams(kappa=kappa, gamma1=gamma1, gamma2=gamma2, G2=G2,
                         G1=G2 * rng.uniform(0.0, max_ratio), Delta=kappa * rng.uniform(-1, 1),
                         nbar1=rng.uniform(0, 300), nbar2=rng.uniform(0, 300))
        if not stable_only or rwa.stability_check(p).stable:
            return p


def test_drift_matches_hamiltonian_oracle():
    p = SystemParams(kappa=0.7, gamma1=0.01, gamma2=0.03, G1=0.4, G2=0.9, Delta=0.3)
    ref = orc.rwa_drift(p.G1, p.G2, p.Delta, p.kappa, p.gamma1, p.gamma2)
    assert np.allclose(rwa.build_drift_diffusion(p).A, ref, atol=1e-14)


def test_diffusion_matches_oracle():
    p = SystemParams(kappa=2.0, gamma1=0.1, gamma2=0.2, nbar1=3.0, nbar2=7.0)
    ref = orc.rwa_diffusion(p.kappa, p.gamma1, p.gamma2, p.nbar1, p.nbar2)
    assert np.allclose(rwa.build_drift_diffusion(p).D, ref, atol=1e-14)


def test_uncoupled_steady_state_is_thermal():
    p = SystemParams(kappa=1e5, gamma1=10, gamma2=30, nbar1=200, nbar2=100)
    assert np.allclose(rwa.steady_state(p), gs.thermal_state([0, 200, 100]), rtol=1e-10)


def test_effective_couplings():
    p = SystemParams(omega1=50.0, omega2=100.0, kappa=1.0, Delta=0.01, g=1e-4, E2=1.0)
    G1, G2 = rwa.effective_couplings(p)
    assert G1 == 0
    E1 = 0.918 * abs(50.0 - 0.01 + 1j) / 1e-4
    G1, _ = rwa.effective_couplings(p.replace(E1=E1))
    assert abs(G1) == pytest.approx(0.918, rel=1e-12)
    # kappa << omega1 and Delta = 0: |G1| ~ g E1/omega1
    q = SystemParams(omega1=1e3, kappa=1e-3, g=1e-3, E1=2e5)
    assert abs(rwa.effective_couplings(q)[0]) == pytest.approx(0.2, rel=1e-6)


def test_detuning_shift():
    p = SystemParams(g=0.5)
    assert rwa.detuning_shift(0.3, p, (0j, 0j)) == 0.3
    assert rwa.detuning_shift(0.3, p.replace(g=0.0), (1 + 2j, 3j)) == 0.3
    assert rwa.detuning_shift(0.3, p, (1 + 2j, -0.5 + 3j)) == pytest.approx(0.8)


def test_stability_boundary_has_zero_eigenvalue():
    kappa, gamma, G2 = 1e5, 10.0, 1e5
    # boundary of G2^2 > G1^2 - kappa gamma/2 at Delta = 0
    G1 = np.sqrt(G2**2 + kappa * gamma / 2)
    p = SystemParams(kappa=kappa, gamma1=gamma, gamma2=gamma, G1=G1, G2=G2)
    assert abs(rwa.stability_check(p).max_re_eig) < 1e-6 * gamma


def test_fig2_cases_are_stable():
    for case in presets.FIGURE_PARAMS["fig2"]["cases"]:
        rep = rwa.stability_check(presets.system_params("fig2", case))
        assert rep.stable and rep.agrees


def test_stability_examples():
    assert rwa.stability_check(SystemParams(kappa=1.0, gamma1=0.1, gamma2=0.1, G2=0.5)).stable
    for D in (0.0, 0.3, 5.0):
        rep = rwa.stability_check(SystemParams(kappa=1.0, gamma1=0.01, gamma2=0.01, G1=2.0, G2=2.0, Delta=D))
        assert rep.stable and rep.closed_form


def test_unstable_draws_detected():
    rng = np.random.default_rng(4)
    for _ in range(100):
        p = random_params(rng)
        gam = p.gamma1
        bound = np.sqrt(p.G2**2 + p.kappa * gam / 2 * (1 + 4 * p.Delta**2 / (gam + 2 * p.kappa) ** 2))
        p = p.replace(G1=bound * rng.uniform(1.01, 2.0))
        assert not rwa.stability_check(p).stable


def test_stability_equivalence_1000_draws():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(1000):
        p = random_params(rng)
        rep = rwa.stability_check(p)
        if abs(rep.closed_form_margin) < 1e-8 * p.G2**2:
            continue
        assert rep.agrees, p
        checked += 1
    assert checked > 990


def test_unequal_damping_skips_closed_form():
    rep = rwa.stability_check(SystemParams(kappa=1.0, gamma1=0.1, gamma2=0.2, G2=0.5))
    assert rep.closed_form is None and rep.agrees is None


def test_steady_state_matches_scipy_lyapunov():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = random_params(rng, equal_gamma=False, stable_only=True)
        dd = rwa.build_drift_diffusion(p)
        ref = orc.lyapunov(dd.A, dd.D)
        C = rwa.steady_state(p)
        assert np.linalg.norm(C - ref) < 1e-8 * np.linalg.norm(ref)


def test_steady_residual_bound():
    for case in presets.FIGURE_PARAMS["fig2"]["cases"]:
        p = presets.system_params("fig2", case)
        dd = rwa.build_drift_diffusion(p)
        C = rwa.steady_state(p)
        assert np.linalg.norm(dd.A @ C + C @ dd.A.T + dd.D) < 1e-10 * np.linalg.norm(dd.D)


def test_steady_state_rejects_unstable():
    p = SystemParams(kappa=1.0, gamma1=0.01, gamma2=0.01, G1=2.0, G2=1.0)
    with pytest.raises(rwa.UnstableError) as info:
        rwa.steady_state(p)
    assert info.value.max_re_eig > 0


def test_lyapunov_vs_ode_20_draws():
    # long-time solution of the moment ODE (generic integrator) vs the Lyapunov solve
    rng = np.random.default_rng(99)
    for _ in range(20):
        p = random_params(rng, stable_only=True)
        dd = rwa.build_drift_diffusion(p)
        rate = -rwa.stability_check(p).max_re_eig
        T = 30.0 / rate
        C = orc.ode_covariance(dd.A, dd.D, rwa.initial_state(p), np.array([0.0, T]))[-1]
        Css = rwa.steady_state(p)
        assert np.linalg.norm(C - Css) < 1e-6 * np.linalg.norm(Css)


def test_evolve_matches_ode_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        p = random_params(rng, stable_only=True, max_ratio=0.99)
        dd = rwa.build_drift_diffusion(p)
        t = rwa.log_time_grid(10 * p.cooling_time(), 30)
        ours = rwa.evolve(None, p, t).covariances
        ref = orc.ode_covariance(dd.A, dd.D, rwa.initial_state(p), t)
        assert np.max(np.linalg.norm(ours - ref, axis=(1, 2)) / np.linalg.norm(ref, axis=(1, 2))) < 1e-6


def test_evolve_long_time_limit():
    rng = np.random.default_rng(21)
    for _ in range(20):
        p = random_params(rng, stable_only=True)
        rate = -rwa.stability_check(p).max_re_eig
        traj = rwa.evolve(None, p, [0.0, 30.0 / rate])
        Css = rwa.steady_state(p)
        assert np.linalg.norm(traj.covariances[-1] - Css) < 1e-6 * np.linalg.norm(Css)


def test_evolve_unstable_matches_ode_oracle():
    p = SystemParams(kappa=1.0, gamma1=0.01, gamma2=0.01, G1=1.2, G2=1.0, Delta=0.2, nbar1=5, nbar2=3)
    dd = rwa.build_drift_diffusion(p)
    t = np.linspace(0, 5, 11)
    ours = rwa.evolve(None, p, t).covariances
    ref = orc.ode_covariance(dd.A, dd.D, rwa.initial_state(p), t)
    assert np.max(np.abs(ours - ref)) < 1e-7 * np.max(np.abs(ref))


def test_evolve_starts_at_initial_state():
    p = presets.system_params("fig2", "ii")
    traj = rwa.evolve(None, p, [0.0, 1e-3])
    assert traj.EN[0] == 0.0
    assert np.array_equal(traj.covariances[0], gs.thermal_state([0, 200, 100]))


def test_evolve_rejects_bad_grid():
    p = presets.system_params("fig2", "ii")
    with pytest.raises(ValueError):
        rwa.evolve(None, p, [0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        rwa.evolve(None, p, [])


def test_evolve_reports_nonfinite_time():
    p = SystemParams(kappa=1.0, gamma1=0.0, gamma2=0.0, G1=50.0, G2=1.0)
    with pytest.raises(rwa.NumericalError) as info:
        rwa.evolve(None, p, np.linspace(0, 30, 31))
    assert info.value.time is not None


def test_fig2_case_i_saturates_on_cooling_time():
    p = presets.system_params("fig2", "i")
    ts = p.cooling_time()
    # the printed estimate evaluates to 1e-3 s for these parameters
    assert ts == pytest.approx(1e-3, rel=0.01)
    traj = rwa.evolve(None, p, rwa.log_time_grid(10 * ts, 200))
    EN_ss = rwa.steady_logneg(p)
    # well below the plateau at 0.1 t_s, on it by 10 t_s
    i = np.searchsorted(traj.times, 0.1 * ts)
    assert traj.EN[i] < 0.8 * EN_ss
    assert traj.EN[-1] == pytest.approx(EN_ss, rel=0.01)


@given(st.integers(0, 2**32 - 1))
def test_uncertainty_preserved_along_trajectories(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng, equal_gamma=False, stable_only=True, max_ratio=0.99)
    traj = rwa.evolve(None, p, rwa.log_time_grid(10 * p.cooling_time(), 25))
    for C in traj.covariances:
        assert gs.is_physical(C)


def test_effective_bath():
    assert rwa.effective_bath(0.0, 3.0, 4.0) == (3.0, 4.0, 0.0)
    s2 = np.sinh(1.0) ** 2
    assert np.allclose(rwa.effective_bath(1.0, 0, 0), (s2, s2, np.cosh(1.0) * np.sinh(1.0)))


def test_effective_bath_is_bogoliubov_of_thermal():
    r, n1, n2 = 0.7, 3.0, 8.0
    n1e, n2e, m = rwa.effective_bath(r, n1, n2)
    cm_beta = gs.bogoliubov_frame(gs.thermal_state([n1, n2]), r, "forward")
    corr = gs.cm_to_correlations(cm_beta)
    assert corr.n_b1 == pytest.approx(n1e)
    assert corr.n_b2 == pytest.approx(n2e)
    assert abs(corr.m_b) == pytest.approx(m)


def test_bogoliubov_analytic_limits():
    p = SystemParams(kappa=1e5, gamma1=10, gamma2=10, G2=1e5, nbar1=20, nbar2=10)
    b = rwa.bogoliubov_steady_analytic(p)
    assert b.r == 0 and b.n1_eff == 20 and b.m_bar == 0
    assert gs.logneg_from_occupancies(b.corr_b) == 0
    # huge C_-: n2_cool -> n2_eff eps, m_beta -> 0
    # the limit needs C_- eps >> 1, i.e. calG >> kappa
    q = SystemParams(kappa=1.0, gamma1=1e-6, gamma2=1e-6, G1=0.5e4, G2=1e4, nbar1=20, nbar2=10)
    b = rwa.bogoliubov_steady_analytic(q)
    assert b.n2_cool == pytest.approx(b.n2_eff * b.epsilon, rel=1e-6)
    assert abs(b.m_beta) < 1e-9 * b.m_bar
    with pytest.raises(ValueError):
        rwa.bogoliubov_steady_analytic(p.replace(G1=2e5))
    with pytest.raises(ValueError):
        rwa.bogoliubov_steady_analytic(p.replace(gamma2=20))


def test_bogoliubov_analytic_vs_lyapunov_fig3():
    p0 = presets.system_params("fig3")
    p = p0.replace(G2=p0.G1 / np.tanh(1.5))
    b = rwa.bogoliubov_steady_analytic(p)
    assert gs.logneg_from_occupancies(b.corr_b) == pytest.approx(rwa.steady_logneg(p), abs=1e-6)


def test_bogoliubov_analytic_vs_numeric_grid():
    p0 = presets.system_params("fig3")
    for r in np.linspace(0.5, 2.5, 5):
        for d in np.linspace(0.0, 0.5, 5):
            for n1, n2 in [(0.0, 0.0), (200.0, 100.0), (2000.0, 1000.0)]:
                p = p0.replace(G2=1e5, G1=1e5 * np.tanh(r), Delta=d * 1e5, nbar1=n1, nbar2=n2)
                ref = rwa.steady_state(p)[2:, 2:]
                got = rwa.bogoliubov_steady_analytic(p).cm_b()
                assert np.linalg.norm(got - ref) < 1e-6 * np.linalg.norm(ref)


def test_nu_decoupled_limits():
    p = presets.system_params("fig3")
    # no cooling: thermal two-mode squeezed state of the effective bath, separable
    assert -np.log(rwa.nu_exact_decoupled(1.0, 0.0, p)) < 0
    with pytest.raises(ValueError):
        rwa.nu_exact_decoupled(0.0, 1.0, p)


def test_nu_decoupled_vs_approx_near_ropt():
    p = presets.system_params("fig3")
    C1 = rwa.cooperativity(p.G1, p.kappa, p.gamma1)
    r = rwa.r_opt(C1, p.nbar1, p.nbar2)
    for x in (r - 0.2, r, r + 0.2):
        a, b = rwa.nu_exact_decoupled(x, C1, p), rwa.nu_approx(x, C1, p.nbar1, p.nbar2)
        assert abs(a - b) / a < 0.10


def test_ropt_and_ENopt_values():
    assert rwa.r_opt(2e4, 200, 100) == pytest.approx(0.25 * np.log(160000 / 301), rel=1e-14)
    assert rwa.r_opt(2e4, 200, 100) == pytest.approx(1.569, abs=5e-4)
    assert rwa.EN_opt(2e4, 200, 100) == pytest.approx(1.752, abs=5e-4)
    with pytest.raises(ValueError):
        rwa.r_opt(0.0, 1, 1)


def test_ropt_minimizes_nu_approx():
    from scipy.optimize import minimize_scalar

    for C1, n1, n2 in [(2e4, 200, 100), (1e6, 2000, 1000), (500.0, 0.0, 0.0)]:
        res = minimize_scalar(lambda x: rwa.nu_approx(x, C1, n1, n2), bounds=(0, 6), method="bounded",
                              options={"xatol": 1e-10})
        assert res.x == pytest.approx(rwa.r_opt(C1, n1, n2), abs=1e-6)


def test_entanglement_monotone_in_cooperativity():
    p0 = presets.system_params("fig3")
    C10 = rwa.cooperativity(p0.G1, p0.kappa, p0.gamma1)
    r = rwa.r_opt(C10, p0.nbar1, p0.nbar2)
    EN = []
    for C1 in np.geomspace(C10, 10 * C10, 12):
        G1 = np.sqrt(C1 * p0.kappa * p0.gamma1 / 2)
        EN.append(rwa.steady_logneg(p0.replace(G1=G1, G2=G1 / np.tanh(r))))
    assert np.all(np.diff(EN) >= 0)


def test_nu_approx_regime():
    # C1 >> e^{2r} >> e^{-2r}, Delta = 0, gamma << kappa
    p0 = presets.system_params("fig3")
    for r in (1.0, 1.3, 1.569, 1.8, 2.0):
        p = p0.replace(G2=p0.G1 / np.tanh(r))
        C1 = rwa.cooperativity(p.G1, p.kappa, p.gamma1)
        nu = 2 * gs.symplectic_eigenvalues(gs.partial_transpose(rwa.steady_state(p)[2:, 2:])).min()
        assert abs(nu - rwa.nu_approx(r, C1, p.nbar1, p.nbar2)) / nu < 0.15


def test_log_time_grid():
    t = rwa.log_time_grid(2.0, 50)
    assert t[0] == 0 and t[-1] == pytest.approx(2.0) and len(t) == 50
    assert np.all(np.diff(t) > 0)
