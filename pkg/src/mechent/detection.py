"""Probe-mode homodyne readout and covariance reconstruction.

Each resonator is read by a weak probe whose output is an amplified copy of
one mechanical quadrature plus vacuum noise.  Referred back to the
mechanical quadrature, a record is q_j(phi_j) + noise with noise variance
kappa / (2 Gp_j^2).  Only one quadrature per resonator is measured at a
time, so the 10 second moments are recovered from several LO settings.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import gaussian as gs

MOMENT_NAMES = ("x1x1", "x1p1", "p1p1", "x2x2", "x2p2", "p2p2", "x1x2", "x1p2", "p1x2", "p1p2")
# (row, col) position of each moment in the 4x4 covariance
_MOMENT_IDX = ((0, 0), (0, 1), (1, 1), (2, 2), (2, 3), (3, 3), (0, 2), (0, 3), (1, 2), (1, 3))
BACKACTION_RATIO = 0.01
N_BOOT = 200
N_BATCHES = 50


class PhaseCoverageError(ValueError):
    pass


class UnphysicalEstimateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ProbeConfig:
    Gp1: float
    Gp2: float
    kappa: float
    n_samples: int
    phase_grid: tuple = (0.0, np.pi / 4, np.pi / 2)
    G1: float | None = None
    G2: float | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("probe kappa must be > 0")
        if self.Gp1 < 0 or self.Gp2 < 0:
            raise ValueError("probe couplings must be >= 0")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        object.__setattr__(self, "phase_grid", tuple(float(x) for x in self.phase_grid))

    @property
    def shot_noise_variance(self) -> np.ndarray:
        """Input-referred noise variance per mode (inf when Gp = 0)."""
        with np.errstate(divide="ignore"):
            return self.kappa / (2 * np.array([self.Gp1, self.Gp2], float) ** 2)

    @property
    def backaction_negligible(self) -> bool | None:
        if self.G1 is None or self.G2 is None:
            return None
        return self.Gp1 < BACKACTION_RATIO * self.G1 and self.Gp2 < BACKACTION_RATIO * self.G2

    def settings(self) -> np.ndarray:
        return np.array(list(product(self.phase_grid, repeat=2)))


@dataclass
class HomodyneRecords:
    phases: np.ndarray  # (n_settings, 2)
    values: np.ndarray  # (n_settings, n_samples, 2)
    noise_variance: np.ndarray  # (2,)
    config: ProbeConfig | None = field(default=None, repr=False)


@dataclass
class Reconstruction:
    cm_est: np.ndarray
    stderr: np.ndarray
    EN_est: float
    EN_stderr: float
    clamped: bool
    cm_raw: np.ndarray = field(repr=False, default=None)


def probe_output_snr(cfg: ProbeConfig) -> np.ndarray:
    """Signal-to-shot-noise variance ratio per unit mechanical variance."""
    return np.array([cfg.Gp1, cfg.Gp2], float) ** 2 / cfg.kappa


def _readout_rows(phases):
    c, s = np.cos(phases), np.sin(phases)
    R = np.zeros((2, 4))
    R[0, 0:2] = c[0], s[0]
    R[1, 2:4] = c[1], s[1]
    return R


def simulate_homodyne(cm_mech: np.ndarray, cfg: ProbeConfig, seed: int | None = None) -> HomodyneRecords:
    cm = gs.check_physical(cm_mech)
    if cm.shape != (4, 4):
        raise ValueError("simulate_homodyne expects a two-mode covariance")
    rng = np.random.default_rng(seed)
    noise = cfg.shot_noise_variance
    if not np.all(np.isfinite(noise)):
        raise ValueError("probe coupling Gp = 0 gives no signal")
    settings = cfg.settings()
    vals = np.empty((len(settings), cfg.n_samples, 2))
    for i, ph in enumerate(settings):
        R = _readout_rows(ph)
        cov = R @ cm @ R.T + np.diag(noise)
        Lc = np.linalg.cholesky(cov)
        vals[i] = rng.standard_normal((cfg.n_samples, 2)) @ Lc.T
    return HomodyneRecords(settings, vals, noise, cfg)


def _design(phases) -> np.ndarray:
    """Rows map the 10 moments to <q1^2>, <q2^2>, <q1 q2> of each setting."""
    rows = []
    for ph in phases:
        c1, s1 = np.cos(ph[0]), np.sin(ph[0])
        c2, s2 = np.cos(ph[1]), np.sin(ph[1])
        rows.append([c1 * c1, 2 * c1 * s1, s1 * s1, 0, 0, 0, 0, 0, 0, 0])
        rows.append([0, 0, 0, c2 * c2, 2 * c2 * s2, s2 * s2, 0, 0, 0, 0])
        rows.append([0, 0, 0, 0, 0, 0, c1 * c2, c1 * s2, s1 * c2, s1 * s2])
    return np.array(rows)


def _moments_to_cm(m) -> np.ndarray:
    cm = np.zeros((4, 4))
    for v, (i, j) in zip(m, _MOMENT_IDX):
        cm[i, j] = cm[j, i] = v
    return cm


def check_coverage(phases) -> None:
    M = _design(np.asarray(phases))
    _, sv, vt = np.linalg.svd(M)
    tol = 1e-10 * max(sv[0], 1.0)
    null = vt[np.sum(sv > tol):]
    if len(null):
        missing = [MOMENT_NAMES[k] for k in range(10) if np.any(np.abs(null[:, k]) > 1e-8)]
        raise PhaseCoverageError(f"phase settings do not determine moments: {', '.join(missing)}")


def _batch_stats(values, n_batches):
    n = values.shape[1]
    nb = max(1, min(n_batches, n))
    edges = np.linspace(0, n, nb + 1).astype(int)
    q1, q2 = values[..., 0], values[..., 1]
    prods = np.stack([q1 * q1, q2 * q2, q1 * q2], axis=-1)  # (S, n, 3)
    sums = np.add.reduceat(prods, edges[:-1], axis=1)  # (S, nb, 3)
    counts = np.diff(edges)
    return sums, counts


def _solve(M, sums, counts, noise):
    obs = sums.sum(axis=1) / counts.sum()  # (S, 3)
    obs = obs - np.array([noise[0], noise[1], 0.0])
    m, *_ = np.linalg.lstsq(M, obs.reshape(-1), rcond=None)
    return _moments_to_cm(m)


def reconstruct_cm(records: HomodyneRecords, n_boot: int = N_BOOT, n_batches: int = N_BATCHES,
                   seed: int | None = 0) -> Reconstruction:
    phases = np.asarray(records.phases, float)
    check_coverage(phases)
    M = _design(phases)
    sums, counts = _batch_stats(records.values, n_batches)
    cm_raw = _solve(M, sums, counts, records.noise_variance)
    clamped = not gs.is_physical(cm_raw)
    if clamped:
        warnings.warn("reconstructed covariance violates the uncertainty relation; "
                      "clamped to the nearest physical matrix", UnphysicalEstimateWarning, stacklevel=2)
        cm_est = gs.nearest_physical(cm_raw)
    else:
        cm_est = cm_raw
    en = gs.log_negativity(cm_est, tol=1e-6)
    rng = np.random.default_rng(seed)
    nb = sums.shape[1]
    boot_cm = np.empty((n_boot, 4, 4))
    boot_en = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, nb, size=(sums.shape[0], nb))
        s_b = np.take_along_axis(sums, idx[..., None], axis=1)
        c_b = counts[idx].sum(axis=1)[:, None]
        obs = s_b.sum(axis=1) / c_b - np.array([records.noise_variance[0], records.noise_variance[1], 0.0])
        m, *_ = np.linalg.lstsq(M, obs.reshape(-1), rcond=None)
        cm_b = _moments_to_cm(m)
        boot_cm[b] = cm_b
        if not gs.is_physical(cm_b):
            cm_b = gs.nearest_physical(cm_b)
        boot_en[b] = gs.log_negativity(cm_b, tol=1e-6)
    return Reconstruction(cm_est, boot_cm.std(axis=0, ddof=1), float(en), float(boot_en.std(ddof=1)),
                          clamped, cm_raw)


# ------------------------------------------------------------------- CSV


def write_records_csv(records: HomodyneRecords, path, header: dict | None = None) -> None:
    """Rows (mode, phase_rad, sample_index, value); both modes of one shot share sample_index."""
    S, n, _ = records.values.shape
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        fh.write(f"# noise_variance: {float(records.noise_variance[0])!r} {float(records.noise_variance[1])!r}\n")
        w = csv.writer(fh)
        w.writerow(["mode", "phase_rad", "sample_index", "value"])
        for s in range(S):
            for k in range(n):
                idx = s * n + k
                for mode in (0, 1):
                    w.writerow([mode + 1, repr(float(records.phases[s, mode])), idx,
                                repr(float(records.values[s, k, mode]))])


def read_records_csv(path) -> HomodyneRecords:
    noise = None
    rows = []
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# noise_variance:"):
                    noise = np.array([float(x) for x in line.split(":", 1)[1].split()])
                continue
            lines.append(line)
        reader = csv.DictReader(lines)
        for r in reader:
            rows.append((int(r["mode"]), float(r["phase_rad"]), int(r["sample_index"]), float(r["value"])))
    if noise is None:
        raise ValueError("record file lacks the noise_variance header")
    shots: dict = {}
    for mode, ph, idx, val in rows:
        shots.setdefault(idx, [None, None, None, None])
        shots[idx][mode - 1] = ph
        shots[idx][mode + 1] = val
    settings: dict = {}
    for idx in sorted(shots):
        ph1, ph2, v1, v2 = shots[idx]
        settings.setdefault((ph1, ph2), []).append((v1, v2))
    n = min(len(v) for v in settings.values())
    phases = np.array(list(settings))
    values = np.array([np.array(v[:n]) for v in settings.values()])
    return HomodyneRecords(phases, values, noise)
