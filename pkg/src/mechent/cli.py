"""Command line entry point.

    mechent steady  --config run.yaml --out results/
    mechent evolve  --config run.yaml --model full --order 6
    mechent sweep   --config sweep.yaml
    mechent floquet --config fl.yaml
    mechent detect  --config det.yaml --seed 3
    mechent figure fig2 --out figs/

Exit codes: 0 ok, 2 configuration error, 3 steady state requested for an
unstable system, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import __version__, csvio, full_model, presets, rwa, runner, series
from .config import TASKS, ConfigError, load_config, parse_config

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("mechent")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mechent", description="Mechanical entanglement simulations.")
    ap.add_argument("--version", action="version", version=f"mechent {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for task in TASKS:
        sp = sub.add_parser(task, help=f"run a '{task}' configuration")
        sp.add_argument("--config", required=True, help="YAML config, or a CSV produced by an earlier run")
        _common(sp)
        sp.add_argument("--model", choices=("rwa", "full", "closedform"))
        sp.add_argument("--order", type=int, help="mean-field expansion order (model full)")
    fp = sub.add_parser("figure", help="reproduce a figure as CSV files")
    fp.add_argument("name", choices=presets.FIGURES)
    _common(fp)
    return ap


def _common(sp):
    sp.add_argument("--out", default=".", help="output directory (default: current)")
    sp.add_argument("--seed", type=int, help="RNG seed (u64)")


def _write(out_dir: Path, stem: str, cfg, cols, notes) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.csv"
    notes = {"mechent_version": __version__, **notes}
    csvio.write_table(path, cols, None if cfg is None else cfg.resolved, notes)
    return path


def _run_task(args) -> int:
    overrides = {"task": args.command, "model": args.model, "order": args.order, "seed": args.seed}
    cfg = load_config(args.config, overrides)
    cols, notes = runner.run(cfg)
    stem = Path(cfg.output).stem if cfg.output else f"{cfg.task}_{cfg.model}"
    path = _write(Path(args.out), stem, cfg, cols, notes)
    print(path)
    return EXIT_OK


def _run_figure(args) -> int:
    out = Path(args.out) / args.name
    for curve, cfg_dict, cols in presets.figure_curves(args.name):
        if cfg_dict is not None:
            if args.seed is not None:
                cfg_dict["seed"] = args.seed
            cfg = parse_config(yaml.safe_dump(cfg_dict, sort_keys=False))
            log.info("%s %s", args.name, curve)
            try:
                cols, notes = runner.run(cfg)
            except rwa.NumericalError as exc:
                part = getattr(exc, "partial", None)
                if part is None:
                    raise
                # keep the finite part of a diverging trajectory
                cols = part.columns()
                cols["t"] = cols["t"] / cfg.time_unit
                notes = {"truncated_at": exc.time / cfg.time_unit, "reason": str(exc)}
            print(_write(out, curve, cfg, cols, notes))
        else:
            print(_write(out, curve, None, cols, {"figure": args.name, "curve": curve}))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "figure":
            return _run_figure(args)
        return _run_task(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except rwa.UnstableError as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (rwa.NumericalError, series.DegenerateDenominatorError, series.TermCapError,
            full_model.IncommensurateError, full_model.ExpansionStructureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
