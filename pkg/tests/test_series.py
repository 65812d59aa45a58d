import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mechent.series import DegenerateDenominatorError, ExponentialSeries, Rates, TermCapError

RATES = Rates(omega_plus=3.0, z=complex(1.0, 0.4), w1=complex(0.05, 2.0), w2=complex(0.05, 4.1))
T = np.linspace(0.0, 4.0, 41)


def _source():
    return ExponentialSeries.harmonic(RATES, {-1: 1.0 - 2j, 1: 0.5j, 3: -0.25})


def test_harmonic_evaluation():
    s = _source()
    ref = (1 - 2j) * np.exp(-3j * T) + 0.5j * np.exp(3j * T) - 0.25 * np.exp(9j * T)
    assert np.allclose(s(T), ref, atol=1e-14)
    assert s.harmonics() == {-1: 1 - 2j, 1: 0.5j, 3: -0.25}
    assert s.max_frequency() == pytest.approx(9.0)


def test_product_and_conj_pointwise():
    a = _source()
    b = ExponentialSeries.harmonic(RATES, {2: 0.3, -2: 1j}).integrate("w1", True)
    assert np.allclose((a * b)(T), a(T) * b(T), atol=1e-13)
    assert np.allclose(a.conj()(T), np.conj(a(T)), atol=1e-14)
    assert np.allclose(b.real()(T), b(T).real, atol=1e-14)
    assert np.allclose((a + b)(T), a(T) + b(T), atol=1e-14)


@pytest.mark.parametrize("kernel,lam", [("z", RATES.z), ("w1", RATES.w1), ("w2", RATES.w2)])
@pytest.mark.parametrize("transient", [False, True])
def test_integrate_solves_ode(kernel, lam, transient):
    src = _source() * _source().conj().integrate("w2", True)
    x = src.integrate(kernel, transient)
    resid = x.derivative()(T) + lam * x(T) - src(T)
    assert np.max(np.abs(resid)) < 1e-12 * max(1.0, np.max(np.abs(src(T))))
    if transient:
        assert abs(x(np.array([0.0]))[0]) < 1e-14


def test_resonant_transient_gives_secular_term():
    # x' = -z x + e^{-z t} has x = t e^{-z t}
    e = ExponentialSeries.harmonic(RATES, {0: 1.0}).integrate("z", True)  # (1 - e^{-zt})/z
    decay = ExponentialSeries.harmonic(RATES, {0: 1.0}) + e.scale(-RATES.z)
    assert np.allclose(decay(T), np.exp(-RATES.z * T), atol=1e-13)
    x = decay.integrate("z", True)
    assert np.allclose(x(T), T * np.exp(-RATES.z * T), atol=1e-13)


def test_degenerate_denominator_rejected_in_steady_mode():
    # undamped w1 = 2i and a source at e^{-2 i t}: w1 + zeta = 0
    rates = Rates(omega_plus=2.0, z=complex(1.0, 0.0), w1=complex(0.0, 2.0), w2=complex(0.05, 4.1))
    src = ExponentialSeries.harmonic(rates, {-1: 1.0})
    with pytest.raises(DegenerateDenominatorError, match="order 3"):
        src.integrate("w1", False, label=3)
    # transient mode takes the exact secular limit instead
    x = src.integrate("w1", True)
    t = np.linspace(0, 3, 7)
    assert np.allclose(x(t), t * np.exp(-2j * t), atol=1e-13)


def test_term_cap():
    s = ExponentialSeries.harmonic(RATES, {n: 1.0 for n in range(-3, 4)}, cap=10)
    with pytest.raises(TermCapError):
        s * s.integrate("z", True)


@given(st.dictionaries(st.integers(-4, 4), st.complex_numbers(max_magnitude=10, allow_nan=False), max_size=5),
       st.dictionaries(st.integers(-4, 4), st.complex_numbers(max_magnitude=10, allow_nan=False), max_size=5))
def test_product_is_pointwise(c1, c2):
    a = ExponentialSeries.harmonic(RATES, c1)
    b = ExponentialSeries.harmonic(RATES, c2).integrate("z", True)
    assert np.allclose((a * b)(T), a(T) * b(T), atol=1e-10)
