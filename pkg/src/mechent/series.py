"""Finite sums of terms chi * t^k * exp(zeta t) with symbolic exponents.

An exponent is stored as an integer key so that merging is exact:

    key = (k, n, c_z, c_zc, c_w1, c_w1c, c_w2, c_w2c)
    zeta = i n w_+ - (c_z z + c_zc z^* + c_w1 w1 + c_w1c w1^* + c_w2 w2 + c_w2c w2^*)

Terms with every c = 0 are purely oscillating and survive at long times;
the rest are transients.  Powers t^k only appear in transient mode, when a source term is
resonant with the kernel it is integrated against; in steady mode such a
resonance has no bounded solution and is rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

DEFAULT_TERM_CAP = 200_000
DEGENERACY_TOL = 1e-12

# kernels an ODE can be integrated against; index of the matching c entry
KERNELS = {"z": 0, "w1": 2, "w2": 4}


class DegenerateDenominatorError(ArithmeticError):
    pass


class TermCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class Rates:
    omega_plus: float
    z: complex
    w1: complex
    w2: complex

    def basis(self) -> np.ndarray:
        return np.array([self.z, np.conj(self.z), self.w1, np.conj(self.w1),
                         self.w2, np.conj(self.w2)])


class ExponentialSeries:
    __slots__ = ("rates", "terms", "cap")

    def __init__(self, rates: Rates, terms: dict | None = None, cap: int = DEFAULT_TERM_CAP):
        self.rates = rates
        self.terms = {} if terms is None else dict(terms)
        self.cap = cap
        if len(self.terms) > cap:
            raise TermCapError(f"series has {len(self.terms)} terms (cap {cap})")

    # -- construction
    @classmethod
    def harmonic(cls, rates, coeffs: dict, cap=DEFAULT_TERM_CAP):
        """sum_n coeffs[n] exp(i n w_+ t)."""
        return cls(rates, {(0, int(n), 0, 0, 0, 0, 0, 0): complex(c) for n, c in coeffs.items() if c != 0}, cap)

    @classmethod
    def zero(cls, rates, cap=DEFAULT_TERM_CAP):
        return cls(rates, {}, cap)

    def _new(self, terms):
        return ExponentialSeries(self.rates, terms, self.cap)

    # -- exponents
    def zeta_of(self, key) -> complex:
        c = np.array(key[2:], dtype=float)
        return 1j * key[1] * self.rates.omega_plus - complex(c @ self.rates.basis())

    def arrays(self):
        """(chi, zeta, k) arrays for numeric evaluation."""
        keys = list(self.terms)
        chi = np.array([self.terms[k] for k in keys], dtype=complex)
        zeta = np.array([self.zeta_of(k) for k in keys], dtype=complex)
        deg = np.array([k[0] for k in keys], dtype=np.int64)
        return chi, zeta, deg

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        chi, zeta, deg = self.arrays()
        if chi.size == 0:
            return np.zeros(t.shape, complex)
        tt = t[..., None]
        return np.sum(chi * tt**deg * np.exp(zeta * tt), axis=-1)

    def __len__(self):
        return len(self.terms)

    # -- algebra
    def __add__(self, other: "ExponentialSeries") -> "ExponentialSeries":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0j) + v
        return self._new({k: v for k, v in out.items() if v != 0})

    def scale(self, s: complex) -> "ExponentialSeries":
        if s == 0:
            return self._new({})
        return self._new({k: s * v for k, v in self.terms.items()})

    def __mul__(self, other: "ExponentialSeries") -> "ExponentialSeries":
        out: dict = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                key = tuple(a + b for a, b in zip(ka, kb))
                out[key] = out.get(key, 0j) + va * vb
        if len(out) > self.cap:
            raise TermCapError(f"product has {len(out)} terms (cap {self.cap})")
        return self._new({k: v for k, v in out.items() if v != 0})

    def conj(self) -> "ExponentialSeries":
        out = {}
        for k, v in self.terms.items():
            deg, n, cz, czc, c1, c1c, c2, c2c = k
            out[(deg, -n, czc, cz, c1c, c1, c2c, c2)] = np.conj(v)
        return self._new(out)

    def real(self) -> "ExponentialSeries":
        return (self + self.conj()).scale(0.5)

    def steady_part(self) -> "ExponentialSeries":
        return self._new({k: v for k, v in self.terms.items() if not any(k[2:])})

    def harmonics(self) -> dict:
        """n -> coefficient of exp(i n w_+ t), for a steady (purely oscillating) series."""
        out = {}
        for k, v in self.terms.items():
            if any(k[2:]) or k[0] != 0:
                raise ValueError("series is not a pure harmonic sum")
            out[k[1]] = out.get(k[1], 0j) + v
        return out

    def max_frequency(self) -> float:
        if not self.terms:
            return 0.0
        return float(max(abs(self.zeta_of(k).imag) for k in self.terms))

    # -- ODE solution
    def integrate(self, kernel: str, transient: bool, label=None) -> "ExponentialSeries":
        """Solution of x' = -lam x + self with lam in {z, w1, w2}.

        transient=True imposes x(0) = 0; otherwise only the particular
        (long-time) solution is kept.
        """
        idx = KERNELS[kernel]
        lam = self.rates.basis()[idx]
        lam_key = [0] * 6
        lam_key[idx] = 1
        lam_key = tuple(lam_key)
        out: dict = {}

        def acc(key, val):
            out[key] = out.get(key, 0j) + val

        scale = abs(self.rates.omega_plus) or 1.0
        for key, chi in self.terms.items():
            deg, n = key[0], key[1]
            if n == 0 and key[2:] == lam_key:
                # exactly resonant: chi t^k e^{-lam t} -> chi t^{k+1}/(k+1) e^{-lam t}
                acc((deg + 1,) + key[1:], chi / (deg + 1))
                continue
            s = lam + self.zeta_of(key)
            if abs(s) < DEGENERACY_TOL * scale and transient:
                # numerically resonant although the keys differ (e.g. equal
                # damping rates): use the exact s -> 0 limit, a secular term
                acc((deg + 1,) + key[1:], chi / (deg + 1))
                continue
            if abs(s) < DEGENERACY_TOL * scale:
                raise DegenerateDenominatorError(
                    f"near-resonant denominator |{kernel} + zeta| = {abs(s):.3e} "
                    f"for harmonic n={n}" + ("" if label is None else f" at order {label}"))
            p0 = 0j
            for m in range(deg + 1):
                coeff = chi * (-1) ** m * factorial(deg) / factorial(deg - m) / s ** (m + 1)
                acc((deg - m,) + key[1:], coeff)
                if m == deg:
                    p0 = coeff
            if transient:
                acc((0, 0) + lam_key, -p0)
        if len(out) > self.cap:
            raise TermCapError(f"series has {len(out)} terms (cap {self.cap})")
        return self._new({k: v for k, v in out.items() if v != 0})

    def derivative(self) -> "ExponentialSeries":
        out: dict = {}
        for key, chi in self.terms.items():
            zeta = self.zeta_of(key)
            out[key] = out.get(key, 0j) + chi * zeta
            if key[0] > 0:
                k2 = (key[0] - 1,) + key[1:]
                out[k2] = out.get(k2, 0j) + chi * key[0]
        return self._new({k: v for k, v in out.items() if v != 0})
