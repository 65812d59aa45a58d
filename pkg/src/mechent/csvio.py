"""Self-describing CSV output.

A file starts with a '#'-prefixed block holding the YAML of the resolved run
configuration, followed by an RFC-4180 table.  Feeding the file back to the
config parser reproduces the run.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
import yaml

HEADER_START = "# --- config"
HEADER_END = "# --- end"


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def header_lines(config: dict | None, notes: dict | None = None) -> list[str]:
    lines = []
    if config is not None:
        lines.append(HEADER_START)
        body = yaml.safe_dump(config, sort_keys=False, default_flow_style=False)
        lines += ["# " + ln for ln in body.rstrip("\n").split("\n")]
        lines.append(HEADER_END)
    for k, v in (notes or {}).items():
        lines.append(f"# {k}: {v}")
    return lines


def write_table(path, columns: dict, config: dict | None = None, notes: dict | None = None) -> Path:
    """Write equal-length columns; None and NaN entries become empty fields."""
    names = list(columns)
    data = [list(columns[n]) for n in names]
    n = len(data[0]) if data else 0
    if any(len(c) != n for c in data):
        raise ValueError("columns must have equal lengths")
    path = Path(path)
    buf = io.StringIO()
    for ln in header_lines(config, notes):
        buf.write(ln + "\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(names)
    for i in range(n):
        row = []
        for c in data:
            v = c[i]
            if isinstance(v, (float, np.floating)) and np.isnan(v):
                v = None
            row.append(format_value(v))
        w.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def extract_config(text: str) -> str | None:
    """YAML text embedded in a CSV header, or None if absent."""
    lines = text.splitlines()
    try:
        i0 = lines.index(HEADER_START)
        i1 = lines.index(HEADER_END, i0)
    except ValueError:
        return None
    return "\n".join(ln[2:] if ln.startswith("# ") else ln[1:] for ln in lines[i0 + 1:i1]) + "\n"


def read_table(path) -> tuple[dict, dict]:
    """(columns as lists of strings, '# key: value' notes)."""
    text = Path(path).read_text(encoding="utf-8")
    notes = {}
    body = []
    in_cfg = False
    for ln in text.splitlines():
        if ln == HEADER_START:
            in_cfg = True
            continue
        if ln == HEADER_END:
            in_cfg = False
            continue
        if ln.startswith("#"):
            if not in_cfg and ":" in ln:
                k, v = ln[1:].split(":", 1)
                notes[k.strip()] = v.strip()
            continue
        body.append(ln)
    rows = list(csv.reader(body))
    if not rows:
        return {}, notes
    names = rows[0]
    cols = {n: [r[i] for r in rows[1:]] for i, n in enumerate(names)}
    return cols, notes
