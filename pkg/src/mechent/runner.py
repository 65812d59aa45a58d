"""Execute a RunConfig and return table columns plus notes for the CSV header."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import closed_form as cf
from . import detection as det
from . import full_model as fm
from . import gaussian as gs
from . import rwa
from .config import RATE_KEYS, RunConfig


def time_grid(cfg: RunConfig) -> np.ndarray:
    g = cfg.grid
    if g is None:
        raise ValueError("run needs a grid section")
    if g["spacing"] == "log":
        return rwa.log_time_grid(g["t_end"], g["n"], g["t_first"])
    t0 = 0.0 if g["t_first"] is None else g["t_first"]
    return np.linspace(t0, g["t_end"], g["n"])


def _backend(cfg):
    b = cfg.full["backend"]
    return None if b == "auto" else b


def _trajectory_columns(traj: rwa.EntanglementTrajectory) -> dict:
    return traj.columns()


def run_steady(cfg: RunConfig):
    """Raises rwa.UnstableError when the drift is unstable."""
    if cfg.model != "rwa":
        raise ValueError("steady task needs model: rwa")
    cm = rwa.steady_state(cfg.params)
    rep = rwa.stability_check(cfg.params)
    occ = gs.occupancies(cm)
    corr = gs.cm_to_correlations(cm[2:, 2:])
    cols = {
        "EN": [rwa.mechanical_logneg(cm)],
        "photon_number": [occ[0]],
        "n_b1": [occ[1]],
        "n_b2": [occ[2]],
        "m_b_re": [corr.m_b.real],
        "m_b_im": [corr.m_b.imag],
        "max_re_eig": [rep.max_re_eig],
    }
    return cols, {}


def _closedform_trajectory(cfg: RunConfig, t):
    p = cfg.params
    cm0 = rwa.initial_state(p)
    if p.G1 == p.G2:
        maps = [cf.equal_coupling_map(ti, p.G1, p.Delta) for ti in t]
    else:
        if p.G1 > p.G2:
            raise ValueError("closed-form maps need G2 >= G1")
        maps = [cf.hamiltonian_map(ti, p.r, p.calG, p.Delta) for ti in t]
    cms = np.array([m.apply(cm0) for m in maps])
    return rwa.trajectory_from_covariances(t, cms)


def run_evolve(cfg: RunConfig):
    t = time_grid(cfg)
    notes = {}
    if cfg.model == "rwa":
        traj = rwa.evolve(None, cfg.params, t)
    elif cfg.model == "closedform":
        traj = _closedform_trajectory(cfg, t)
        notes["note"] = "dissipationless maps; kappa, gamma and nbar baths ignored"
    else:
        traj = fm.evolve_full(None, cfg.params, t, order_max=cfg.full["order"], mode=cfg.full["mode"],
                              backend=_backend(cfg), steps_per_period=cfg.full["steps_per_period"])
    cols = _trajectory_columns(traj)
    cols["t"] = np.asarray(cols["t"]) / cfg.time_unit
    return cols, notes


# ------------------------------------------------------------------ sweep


def _apply_axis(p, name, v):
    if name == "r":
        if v <= 0:
            raise ValueError("r must be > 0")
        return p.replace(G2=p.G1 / math.tanh(v))
    if name == "G1_over_G2":
        return p.replace(G1=v * p.G2)
    return p.replace(**{name: float(v)})


def _sweep_point(cfg: RunConfig, values):
    p = cfg.params
    try:
        for (name, _), v in zip(cfg.sweep["axes"], values):
            p = _apply_axis(p, name, v)
        if cfg.model == "rwa":
            rep = rwa.stability_check(p)
            if not rep.stable:
                return True, rep.max_re_eig, None, "unstable"
            if cfg.sweep["quantity"] == "steady":
                return False, rep.max_re_eig, rwa.steady_logneg(p), ""
            traj = rwa.evolve(None, p, time_grid(cfg))
            return False, rep.max_re_eig, float(traj.EN[-1]), ""
        traj = fm.evolve_full(None, p, time_grid(cfg), order_max=cfg.full["order"], mode=cfg.full["mode"],
                              backend=_backend(cfg), steps_per_period=cfg.full["steps_per_period"])
        return False, None, float(traj.EN[-1]), ""
    except rwa.NumericalError as exc:
        return False, None, None, f"numeric failure: {exc}"
    except ValueError as exc:
        return False, None, None, f"invalid: {exc}"


def run_sweep(cfg: RunConfig):
    axes = cfg.sweep["axes"]
    if len(axes) == 1:
        points = [(v,) for v in axes[0][1]]
    else:
        points = [(a, b) for a in axes[0][1] for b in axes[1][1]]
    jobs = cfg.sweep["jobs"]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(lambda pt: _sweep_point(cfg, pt), points))
    else:
        results = [_sweep_point(cfg, pt) for pt in points]
    cols = {}
    for i, (name, _) in enumerate(axes):
        unit = cfg.kappa_scale if (cfg.units == "kappa" and name in RATE_KEYS) else 1.0
        cols[name] = [pt[i] / unit for pt in points]
    cols["unstable"] = [r[0] for r in results]
    cols["max_re_eig"] = [r[1] for r in results]
    cols["EN"] = [r[2] for r in results]
    cols["status"] = [r[3] for r in results]
    return cols, {"points": len(points)}


# ---------------------------------------------------------------- floquet


def run_floquet(cfg: RunConfig):
    res = fm.floquet_exponents(cfg.params, order_max=cfg.full["order"], backend=_backend(cfg),
                               steps_per_period=cfg.full["steps_per_period"])
    order = np.argsort(-res.exponents.real)
    ex = res.exponents[order] / cfg.kappa_scale if cfg.units == "kappa" else res.exponents[order]
    rep = rwa.stability_check(cfg.params)
    cols = {"index": list(range(len(ex))), "re": ex.real, "im": ex.imag}
    notes = {
        "period": res.period / cfg.time_unit,
        "max_re": float(ex.real.max()),
        "rwa_max_re_eig": rep.max_re_eig / (cfg.kappa_scale if cfg.units == "kappa" else 1.0),
        "unstable": bool(ex.real.max() > 0),
    }
    return cols, notes


# ----------------------------------------------------------------- detect


def run_detect(cfg: RunConfig):
    d = cfg.detect
    cm = rwa.steady_state(cfg.params)[2:, 2:]
    if d["Gp1"] is None:
        gp = math.sqrt(d["snr_factor"] * float(np.max(np.diag(cm))) * d["probe_kappa"])
        gp1 = gp2 = gp
    else:
        gp1, gp2 = d["Gp1"], d["Gp2"]
    pc = det.ProbeConfig(gp1, gp2, d["probe_kappa"], d["n_samples"], tuple(d["phase_grid"]),
                         cfg.params.G1, cfg.params.G2)
    rec = det.simulate_homodyne(cm, pc, cfg.seed)
    if d["records"]:
        det.write_records_csv(rec, d["records"], {"seed": cfg.seed})
    out = det.reconstruct_cm(rec, n_boot=d["n_boot"], n_batches=d["n_batches"], seed=cfg.seed)
    names = det.MOMENT_NAMES
    cols = {
        "moment": list(names),
        "true": [cm[i, j] for i, j in det._MOMENT_IDX],
        "estimate": [out.cm_est[i, j] for i, j in det._MOMENT_IDX],
        "stderr": [out.stderr[i, j] for i, j in det._MOMENT_IDX],
    }
    notes = {
        "EN_true": gs.log_negativity(cm),
        "EN_est": out.EN_est,
        "EN_stderr": out.EN_stderr,
        "clamped": out.clamped,
        "backaction_negligible": pc.backaction_negligible,
        "Gp1": gp1, "Gp2": gp2,
    }
    return cols, notes


TASK_RUNNERS = {
    "steady": run_steady,
    "evolve": run_evolve,
    "sweep": run_sweep,
    "floquet": run_floquet,
    "detect": run_detect,
}


def run(cfg: RunConfig):
    return TASK_RUNNERS[cfg.task](cfg)
