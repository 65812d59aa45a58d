"""Named parameter sets for the figure-reproduction commands.

``FIGURE_PARAMS`` is the frozen table of caption values; ``figure_curves``
turns a figure name into one run configuration (or custom curve) per
output file.
"""
from __future__ import annotations

import copy

import numpy as np

from . import gaussian as gs
from . import rwa
from .params import SystemParams

KAPPA_SCALE = 1e5

_FIG2_COMMON = {"gamma1": 10.0, "gamma2": 10.0, "kappa": 1e5, "G2": 1e5, "Delta": 1e3}
_FIG4_COMMON = {"kappa": 1.0, "G2": 1.0, "Delta": 0.01, "gamma1": 1e-4, "gamma2": 1e-4, "g": 1e-4}
_FIG5_COMMON = {"kappa": 1.0, "G1": 1.0, "G2": 1.0, "g": 1e-4}

FIGURE_PARAMS = {
    "fig2": {
        "units": "s^-1",
        "cases": {
            "i": {**_FIG2_COMMON, "nbar1": 0.0, "nbar2": 0.0, "G1": 0.995e5},
            "ii": {**_FIG2_COMMON, "nbar1": 200.0, "nbar2": 100.0, "G1": 0.918e5},
            "iii": {**_FIG2_COMMON, "nbar1": 1000.0, "nbar2": 500.0, "G1": 0.82e5},
            "iv": {**_FIG2_COMMON, "nbar1": 2000.0, "nbar2": 1000.0, "G1": 0.75e5},
        },
    },
    "fig3": {
        "units": "s^-1",
        "cases": {
            "main": {"gamma1": 10.0, "gamma2": 10.0, "kappa": 1e5, "G1": 1e5, "Delta": 0.0,
                     "nbar1": 200.0, "nbar2": 100.0},
        },
    },
    "fig4a": {"units": "kappa", "cases": {"main": {**_FIG4_COMMON, "G1": 0.918, "nbar1": 200.0, "nbar2": 100.0}}},
    "fig4b": {"units": "kappa", "cases": {"main": {**_FIG4_COMMON, "G1": 0.82, "nbar1": 1000.0, "nbar2": 500.0}}},
    "fig4c": {"units": "kappa", "cases": {"main": {**_FIG4_COMMON, "G1": 0.75, "nbar1": 2000.0, "nbar2": 1000.0}}},
    "fig5a": {"units": "kappa", "cases": {"main": {**_FIG5_COMMON, "gamma1": 0.03, "gamma2": 0.03,
                                                    "omega1": 58.0, "omega2": 100.0, "nbar1": 2.0, "nbar2": 1.0}}},
    "fig5b": {"units": "kappa", "cases": {"main": {**_FIG5_COMMON, "gamma1": 0.01, "gamma2": 0.01,
                                                    "omega1": 58.0, "omega2": 100.0, "nbar1": 2.0, "nbar2": 1.0}}},
    "fig5c": {"units": "kappa", "cases": {"main": {**_FIG5_COMMON, "gamma1": 0.001, "gamma2": 0.001,
                                                    "omega1": 51.0, "omega2": 100.0, "nbar1": 20.0, "nbar2": 10.0}}},
}

# line styles of the comparison figures
FIG4_FREQS = {"solid": (50.0, 100.0), "dashed": (25.0, 50.0)}
FIG5_DETUNINGS = {"solid": 0.01, "dashed": 5.0}
# full-model variants: (order, mean-field mode)
FULL_VARIANTS = {"green": (1, "steady"), "blue": (6, "transient")}

FIG3_R = (0.05, 3.0, 100)
FIG5_T_END = 50.0  # in 1/kappa; the caption gives no time axis
GRID_N = 200

FIGURES = tuple(FIGURE_PARAMS)


def _config(task, model, units, params, grid=None, full=None, sweep=None):
    cfg = {"task": task, "model": model, "units": units}
    if units == "kappa":
        cfg["kappa_scale"] = KAPPA_SCALE
    cfg["params"] = dict(params)
    if grid is not None:
        cfg["grid"] = grid
    if full is not None:
        cfg["full"] = full
    if sweep is not None:
        cfg["sweep"] = sweep
    return cfg


def system_params(fig: str, case: str = "main", **extra) -> SystemParams:
    """Caption parameters converted to s^-1."""
    spec = FIGURE_PARAMS[fig]
    p = dict(spec["cases"][case])
    p.update(extra)
    if spec["units"] == "kappa":
        p = {k: (v * KAPPA_SCALE if k not in ("nbar1", "nbar2") else v) for k, v in p.items()}
    return SystemParams(**p)


def fig3_extra_curves(r: np.ndarray) -> dict:
    """Decoupled and approximate nu curves of the r dependence figure."""
    p = system_params("fig3")
    C1 = rwa.cooperativity(p.G1, p.kappa, p.gamma1)
    dec = [max(0.0, -float(np.log(rwa.nu_exact_decoupled(x, C1, p)))) for x in r]
    app = [max(0.0, -float(np.log(rwa.nu_approx(x, C1, p.nbar1, p.nbar2)))) for x in r]
    return {"decoupled": {"r": r, "EN": np.array(dec)}, "approx": {"r": r, "EN": np.array(app)}}


def figure_curves(name: str) -> list[tuple[str, dict | None, dict | None]]:
    """(curve name, run config, precomputed columns) for each CSV of a figure.

    Exactly one of config and columns is set.
    """
    if name not in FIGURE_PARAMS:
        raise KeyError(f"unknown figure '{name}' (choose from {', '.join(FIGURES)})")
    spec = FIGURE_PARAMS[name]
    units = spec["units"]
    out = []
    if name == "fig2":
        for case, p in spec["cases"].items():
            out.append((f"case_{case}", _config("evolve", "rwa", units, p,
                                                grid={"t_end_ts": 10.0, "n": GRID_N, "spacing": "log"}), None))
    elif name == "fig3":
        p = spec["cases"]["main"]
        lo, hi, n = FIG3_R
        out.append(("exact", _config("sweep", "rwa", units, {**p, "G2": float(p["G1"] / np.tanh(lo))},
                                     sweep={"axes": [{"name": "r", "start": lo, "stop": hi, "num": n}],
                                            "quantity": "steady"}), None))
        r = np.linspace(lo, hi, n)
        for k, cols in fig3_extra_curves(r).items():
            out.append((k, None, cols))
    elif name.startswith("fig4"):
        p = spec["cases"]["main"]
        grid = {"t_end_ts": 10.0, "n": GRID_N, "spacing": "log"}
        out.append(("red", _config("evolve", "rwa", units, {k: v for k, v in p.items() if k != "g"},
                                   grid=grid), None))
        for style, (w1, w2) in FIG4_FREQS.items():
            for color, (order, mode) in FULL_VARIANTS.items():
                q = {**p, "omega1": w1, "omega2": w2}
                out.append((f"{color}_{style}", _config(
                    "evolve", "full", units, q, grid=grid,
                    full={"order": order, "mode": mode, "steps_per_period": 50, "backend": "auto"}), None))
    else:
        p = spec["cases"]["main"]
        grid = {"t_end": FIG5_T_END, "n": GRID_N, "spacing": "linear"}
        for style, D in FIG5_DETUNINGS.items():
            q = {**p, "Delta": D}
            out.append((f"red_{style}", _config("evolve", "rwa", units,
                                                {k: v for k, v in q.items() if k not in ("g", "omega1", "omega2")},
                                                grid=grid), None))
            for color, (order, mode) in FULL_VARIANTS.items():
                out.append((f"{color}_{style}", _config(
                    "evolve", "full", units, q, grid=grid,
                    full={"order": order, "mode": mode, "steps_per_period": 50, "backend": "auto"}), None))
    return [(n, copy.deepcopy(c), cols) for n, c, cols in out]


def fig2_steady_values() -> dict:
    return {c: gs.log_negativity(rwa.steady_state(system_params("fig2", c))[2:, 2:])
            for c in FIGURE_PARAMS["fig2"]["cases"]}
