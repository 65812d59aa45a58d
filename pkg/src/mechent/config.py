"""YAML run configuration.

Example::

    task: steady
    model: rwa
    units: s^-1
    params: {kappa: 1.0e5, gamma1: 10, gamma2: 10, G1: 0.918e5, G2: 1.0e5,
             Delta: 1.0e3, nbar1: 200, nbar2: 100}

Rates are given either in s^-1 or, with ``units: kappa``, as multiples of
kappa; in the latter case they are scaled by ``kappa_scale`` (default 1e5)
and times are divided by it.  Internally everything is in s^-1.
"""
from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from . import csvio
from .params import SystemParams

TASKS = ("steady", "evolve", "sweep", "floquet", "detect")
MODELS = ("rwa", "full", "closedform")
UNITS = ("s^-1", "kappa")
DEFAULT_KAPPA_SCALE = 1e5

PARAM_KEYS = tuple(f.name for f in fields(SystemParams))
RATE_KEYS = ("omega1", "omega2", "kappa", "gamma1", "gamma2", "G1", "G2", "Delta", "Delta0", "g", "E1", "E2")
SWEEP_EXTRA = ("r", "G1_over_G2")

TOP_KEYS = ("task", "model", "units", "kappa_scale", "seed", "output", "params", "grid", "full",
            "sweep", "detect")
GRID_DEFAULTS = {"t_end": None, "t_end_ts": None, "n": 200, "spacing": "log", "t_first": None}
FULL_DEFAULTS = {"order": 1, "mode": "steady", "steps_per_period": 50, "backend": "auto"}
SWEEP_DEFAULTS = {"axes": None, "quantity": "steady", "jobs": 1}
AXIS_KEYS = ("name", "start", "stop", "num", "spacing")
DETECT_DEFAULTS = {"Gp1": None, "Gp2": None, "snr_factor": 10.0, "probe_kappa": None,
                   "n_samples": 100000, "phase_grid": [0.0, math.pi / 4, math.pi / 2],
                   "n_boot": 200, "n_batches": 50, "records": None}


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads 1e5 and 1.0e5 as floats (YAML 1.2 style)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


class ConfigError(ValueError):
    def __init__(self, msg, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if line is not None:
            where = f"line {line}: "
        if key is not None:
            where += f"[{key}] "
        super().__init__(where + msg)


@dataclass
class RunConfig:
    task: str
    model: str
    units: str
    kappa_scale: float
    seed: int
    output: str | None
    params: SystemParams  # s^-1
    grid: dict  # times in s
    full: dict
    sweep: dict | None
    detect: dict | None  # rates in s^-1
    resolved: dict = field(repr=False)  # declared units, defaults filled in

    @property
    def time_unit(self) -> float:
        """Seconds per configured time unit."""
        return 1.0 / self.kappa_scale if self.units == "kappa" else 1.0

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.resolved, sort_keys=False)


# ---------------------------------------------------------------- line marks


def _marks(node, prefix="", out=None):
    """Map dotted key paths to 1-based line numbers."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}{k.value}"
            out[key] = k.start_mark.line + 1
            _marks(v, key + ".", out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            key = f"{prefix}{i}"
            out[key] = v.start_mark.line + 1
            _marks(v, key + ".", out)
    return out


class _Ctx:
    def __init__(self, marks):
        self.marks = marks

    def err(self, msg, key=None):
        line = None
        if key is not None:
            k = key
            while k and k not in self.marks:
                k = k.rpartition(".")[0]
            line = self.marks.get(k)
        return ConfigError(msg, key, line)

    def section(self, raw, name, defaults, required=False):
        if raw.get(name) is None:
            if required:
                raise self.err("missing required section", name)
            return None
        sec = raw[name]
        if not isinstance(sec, dict):
            raise self.err("expected a mapping", name)
        for k in sec:
            if k not in defaults:
                raise self.err(f"unknown key '{k}' (allowed: {', '.join(defaults)})", f"{name}.{k}")
        out = dict(defaults)
        out.update(sec)
        return out

    def number(self, v, key, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.err(f"expected a number, got {v!r}", key)
        if integer:
            if int(v) != v:
                raise self.err(f"expected an integer, got {v!r}", key)
            return int(v)
        if not math.isfinite(v):
            raise self.err("must be finite", key)
        return float(v)


# ----------------------------------------------------------------- parsing


def load_text(text: str) -> str:
    embedded = csvio.extract_config(text)
    return text if embedded is None else embedded


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Validate a YAML document (or a CSV with an embedded config header).

    ``overrides`` may set task, model, seed, output and full.order, as the
    CLI flags do.
    """
    text = load_text(text)
    try:
        node = yaml.compose(text, Loader=_Loader)
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level", line=1)
    ctx = _Ctx(_marks(node))
    raw = copy.deepcopy(raw)
    for k in raw:
        if k not in TOP_KEYS:
            raise ctx.err(f"unknown key '{k}'", str(k))
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "order":
            raw.setdefault("full", {})
            if raw["full"] is None:
                raw["full"] = {}
            raw["full"]["order"] = v
        elif k == "task":
            if raw.get("task") not in (None, v):
                raise ctx.err(f"config task '{raw['task']}' does not match command '{v}'", "task")
            raw["task"] = v
        else:
            raw[k] = v

    task = raw.get("task")
    if task is None:
        raise ctx.err("missing required key", "task")
    if task not in TASKS:
        raise ctx.err(f"task must be one of {TASKS}, got {task!r}", "task")
    model = raw.get("model", "rwa")
    if model not in MODELS:
        raise ctx.err(f"model must be one of {MODELS}, got {model!r}", "model")
    units = raw.get("units")
    if units is None:
        raise ctx.err("missing required key (declare 's^-1' or 'kappa')", "units")
    if units not in UNITS:
        raise ctx.err(f"units must be one of {UNITS}, got {units!r}", "units")
    if units == "s^-1" and "kappa_scale" in raw:
        raise ctx.err("unit mismatch: kappa_scale only applies to units: kappa", "kappa_scale")
    scale = ctx.number(raw.get("kappa_scale", DEFAULT_KAPPA_SCALE), "kappa_scale")
    if scale <= 0:
        raise ctx.err("must be > 0", "kappa_scale")
    seed = ctx.number(raw.get("seed", 0), "seed", integer=True)
    if seed < 0:
        raise ctx.err("must be >= 0", "seed")
    output = raw.get("output")

    # params
    praw = raw.get("params")
    if not isinstance(praw, dict):
        raise ctx.err("missing required section", "params")
    for k in praw:
        if k not in PARAM_KEYS:
            raise ctx.err(f"unknown parameter '{k}'", f"params.{k}")
    pvals = {k: (None if v is None else ctx.number(v, f"params.{k}")) for k, v in praw.items()}
    if "kappa" not in pvals:
        raise ctx.err("missing required key", "params.kappa")
    if units == "kappa" and pvals["kappa"] != 1.0:
        raise ctx.err(f"unit mismatch: with units: kappa the kappa parameter must be 1, got {pvals['kappa']}",
                      "params.kappa")
    has_G = any(k in pvals for k in ("G1", "G2"))
    has_E = any(k in pvals for k in ("E1", "E2"))
    if has_G and has_E:
        k = "params.E1" if "E1" in pvals else "params.E2"
        raise ctx.err("give exactly one coupling specification: either G1/G2 or E1/E2, not both", k)
    if not has_G and not has_E:
        raise ctx.err("missing coupling specification: give G1/G2 (or E1/E2 with g for the full model)",
                      "params")
    if has_E and (model != "full" or not pvals.get("g")):
        raise ctx.err("drive amplitudes E1/E2 need model: full and g > 0", "params.E1" if "E1" in pvals else "params.E2")
    if model == "full":
        for k in ("omega1", "omega2", "g"):
            if k not in pvals:
                raise ctx.err("missing required key for model: full", f"params.{k}")
    presolved = {k: getattr(SystemParams(), k) for k in PARAM_KEYS}
    presolved.update(pvals)
    if has_G:
        presolved.pop("E1"), presolved.pop("E2")
    else:
        presolved.pop("G1"), presolved.pop("G2")
    f = scale if units == "kappa" else 1.0
    sp = {k: (v if v is None or k not in RATE_KEYS else v * f) for k, v in presolved.items()}
    try:
        params = SystemParams(**sp)
    except ValueError as exc:
        name = str(exc).split()[0]
        raise ctx.err(str(exc), f"params.{name}") from None

    tf = 1.0 / scale if units == "kappa" else 1.0

    # grid
    grid = ctx.section(raw, "grid", GRID_DEFAULTS, required=task == "evolve")
    grid_s = None
    if grid is not None:
        if (grid["t_end"] is None) == (grid["t_end_ts"] is None):
            raise ctx.err("give exactly one of t_end or t_end_ts", "grid")
        n = ctx.number(grid["n"], "grid.n", integer=True)
        if n < 2:
            raise ctx.err("must be >= 2", "grid.n")
        if grid["spacing"] not in ("log", "linear"):
            raise ctx.err("spacing must be 'log' or 'linear'", "grid.spacing")
        if grid["t_end"] is not None:
            t_end = ctx.number(grid["t_end"], "grid.t_end") * tf
        else:
            ts = params.cooling_time()
            if not (ts > 0 and math.isfinite(ts)):
                raise ctx.err("t_end_ts needs G2 > G1 so that the cooling time is defined", "grid.t_end_ts")
            t_end = ctx.number(grid["t_end_ts"], "grid.t_end_ts") * ts
        if not t_end > 0:
            raise ctx.err("end time must be > 0", "grid")
        t_first = None if grid["t_first"] is None else ctx.number(grid["t_first"], "grid.t_first") * tf
        grid_s = {"t_end": t_end, "n": n, "spacing": grid["spacing"], "t_first": t_first}

    full = ctx.section(raw, "full", FULL_DEFAULTS) or dict(FULL_DEFAULTS)
    full["order"] = ctx.number(full["order"], "full.order", integer=True)
    if not 0 <= full["order"] <= 8:
        raise ctx.err("order must be in 0..8", "full.order")
    if full["mode"] not in ("steady", "transient"):
        raise ctx.err("mode must be 'steady' or 'transient'", "full.mode")
    if full["backend"] not in ("auto", "numba", "numpy"):
        raise ctx.err("backend must be auto, numba or numpy", "full.backend")
    full["steps_per_period"] = ctx.number(full["steps_per_period"], "full.steps_per_period", integer=True)
    if "full" in raw and model != "full":
        raise ctx.err("section 'full' only applies to model: full", "full")

    sweep = ctx.section(raw, "sweep", SWEEP_DEFAULTS, required=task == "sweep")
    sweep_s = None
    if sweep is not None:
        if task != "sweep":
            raise ctx.err("section 'sweep' only applies to task: sweep", "sweep")
        axes = sweep["axes"]
        if not isinstance(axes, list) or not 1 <= len(axes) <= 2:
            raise ctx.err("axes must be a list of one or two axes", "sweep.axes")
        axes_s = []
        for i, ax in enumerate(axes):
            key = f"sweep.axes.{i}"
            if not isinstance(ax, dict):
                raise ctx.err("axis must be a mapping", key)
            for k in ax:
                if k not in AXIS_KEYS:
                    raise ctx.err(f"unknown key '{k}'", f"{key}.{k}")
            for k in ("name", "start", "stop", "num"):
                if k not in ax:
                    raise ctx.err("missing required key", f"{key}.{k}")
            ax.setdefault("spacing", "linear")
            name = ax["name"]
            if name not in PARAM_KEYS + SWEEP_EXTRA or name in ("E1", "E2", "Delta0"):
                raise ctx.err(f"cannot sweep '{name}'", f"{key}.name")
            if ax["spacing"] not in ("log", "linear"):
                raise ctx.err("spacing must be 'log' or 'linear'", f"{key}.spacing")
            num = ctx.number(ax["num"], f"{key}.num", integer=True)
            lo = ctx.number(ax["start"], f"{key}.start")
            hi = ctx.number(ax["stop"], f"{key}.stop")
            if num < 1:
                raise ctx.err("must be >= 1", f"{key}.num")
            if ax["spacing"] == "log" and (lo <= 0 or hi <= 0):
                raise ctx.err("log spacing needs positive bounds", key)
            vals = np.geomspace(lo, hi, num) if ax["spacing"] == "log" else np.linspace(lo, hi, num)
            if name in RATE_KEYS:
                vals = vals * f
            axes_s.append((name, vals))
        if sweep["quantity"] not in ("steady", "final"):
            raise ctx.err("quantity must be 'steady' or 'final'", "sweep.quantity")
        if sweep["quantity"] == "final" and grid_s is None:
            raise ctx.err("quantity: final needs a grid section", "sweep.quantity")
        if sweep["quantity"] == "steady" and model != "rwa":
            raise ctx.err("steady-state sweeps need model: rwa", "sweep.quantity")
        jobs = ctx.number(sweep["jobs"], "sweep.jobs", integer=True)
        sweep_s = {"axes": axes_s, "quantity": sweep["quantity"], "jobs": max(1, jobs)}

    detect = ctx.section(raw, "detect", DETECT_DEFAULTS, required=False)
    detect_s = None
    if detect is not None or task == "detect":
        if task != "detect":
            raise ctx.err("section 'detect' only applies to task: detect", "detect")
        detect = detect or dict(DETECT_DEFAULTS)
        if detect["probe_kappa"] is None:
            raise ctx.err("missing required key", "detect.probe_kappa")
        pk = ctx.number(detect["probe_kappa"], "detect.probe_kappa") * f
        gp = []
        for k in ("Gp1", "Gp2"):
            gp.append(None if detect[k] is None else ctx.number(detect[k], f"detect.{k}") * f)
        if (gp[0] is None) != (gp[1] is None):
            raise ctx.err("give both Gp1 and Gp2 or neither (then snr_factor sets them)", "detect")
        detect_s = {
            "Gp1": gp[0], "Gp2": gp[1], "probe_kappa": pk,
            "snr_factor": ctx.number(detect["snr_factor"], "detect.snr_factor"),
            "n_samples": ctx.number(detect["n_samples"], "detect.n_samples", integer=True),
            "phase_grid": [ctx.number(x, f"detect.phase_grid.{i}") for i, x in enumerate(detect["phase_grid"])],
            "n_boot": ctx.number(detect["n_boot"], "detect.n_boot", integer=True),
            "n_batches": ctx.number(detect["n_batches"], "detect.n_batches", integer=True),
            "records": detect["records"],
        }
    if task == "floquet" and model != "full":
        raise ctx.err("task floquet needs model: full", "model")
    if task == "sweep" and model == "closedform":
        raise ctx.err("sweeps support models rwa and full", "model")
    if model == "closedform" and task != "evolve":
        raise ctx.err("model closedform only supports task: evolve", "model")

    resolved = {"task": task, "model": model, "units": units}
    if units == "kappa":
        resolved["kappa_scale"] = scale
    resolved["seed"] = seed
    resolved["output"] = output
    resolved["params"] = {k: v for k, v in presolved.items()}
    if grid is not None:
        resolved["grid"] = grid
    if model == "full":
        resolved["full"] = full
    if sweep is not None:
        resolved["sweep"] = {"axes": sweep["axes"], "quantity": sweep["quantity"], "jobs": sweep["jobs"]}
    if detect is not None:
        resolved["detect"] = dict(detect)
    return RunConfig(task, model, units, scale, seed, output, params, grid_s, full, sweep_s, detect_s,
                     _plain(resolved))


def _plain(obj):
    """Convert numpy scalars so yaml.safe_dump accepts the structure."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def load_config(path, overrides: dict | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
