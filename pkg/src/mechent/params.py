"""Physical parameters of one experiment (all rates in s^-1)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class SystemParams:
    omega1: float = 1.0
    omega2: float = 1.0
    kappa: float = 1.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    G1: float = 0.0
    G2: float = 0.0
    Delta: float = 0.0
    nbar1: float = 0.0
    nbar2: float = 0.0
    g: float = 0.0
    E1: float = 0.0
    E2: float = 0.0
    Delta0: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")
        for name in ("omega1", "omega2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        # kappa = 0 is allowed for the dissipationless limit
        for name in ("kappa", "gamma1", "gamma2", "G1", "G2", "nbar1", "nbar2", "g", "E1", "E2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def omega_plus(self) -> float:
        return 0.5 * (self.omega2 + self.omega1)

    @property
    def omega_minus(self) -> float:
        return 0.5 * (self.omega2 - self.omega1)

    @property
    def bare_detuning(self) -> float:
        return self.Delta if self.Delta0 is None else self.Delta0

    @property
    def calG(self) -> float:
        """sqrt(G2^2 - G1^2); nan when G1 > G2."""
        d = self.G2**2 - self.G1**2
        return math.sqrt(d) if d >= 0 else float("nan")

    @property
    def r(self) -> float:
        if self.G2 <= self.G1:
            return float("nan")
        return math.atanh(self.G1 / self.G2)

    def cooling_time(self) -> float:
        """t_s = (kappa^2 + Delta^2) / (calG^2 kappa)."""
        return (self.kappa**2 + self.Delta**2) / ((self.G2**2 - self.G1**2) * self.kappa)

    def replace(self, **kw) -> "SystemParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)
