"""Flat-file table output (CSV or JSON) with binary64 round-trip precision."""
from __future__ import annotations

import json
import sys

TRAJECTORY_COLUMNS = ("t", "qx", "qy", "qz", "Px", "Py", "Pz", "vx", "vy", "vz",
                      "drx", "dry", "drz", "dPx", "dPy", "dPz")
PACKET_COLUMNS = ("t", "qx", "qy", "qz", "Qx", "Qy", "Qz")


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def render_csv(rows, columns) -> str:
    lines = [",".join(columns)]
    for i, row in enumerate(rows):
        if tuple(row) != tuple(columns):
            raise ValueError(f"row {i} keys {list(row)} do not match header {list(columns)}")
        lines.append(",".join(format_value(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def render_json(rows, columns) -> str:
    for i, row in enumerate(rows):
        if tuple(row) != tuple(columns):
            raise ValueError(f"row {i} keys {list(row)} do not match header {list(columns)}")
    # json emits the shortest repr that round-trips a binary64 value
    return json.dumps([dict(r) for r in rows], indent=1, allow_nan=False) + "\n"


def write_table(rows, fmt, path, columns=None):
    """Write homogeneous ``rows`` (dicts) as CSV or JSON.

    ``columns`` fixes the header when ``rows`` is empty; otherwise it defaults
    to the keys of the first row. ``path`` of ``None`` or ``"-"`` writes to stdout.
    """
    rows = list(rows)
    if columns is None:
        if not rows:
            raise ValueError("columns are required for an empty table")
        columns = tuple(rows[0])
    columns = tuple(columns)
    if fmt == "csv":
        text = render_csv(rows, columns)
    elif fmt == "json":
        text = render_json(rows, columns)
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
        return text
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def read_csv(path):
    """Inverse of the CSV writer: list of dicts with float values."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, map(float, ln.split(",")))) for ln in lines[1:]]
