"""Tab-separated result tables with '#' header lines.

Resonance tables hold one row per geometry (``label R1_Hz R2_Hz ...
n_elements``), formant tables one row per vowel (``label F1_Hz ... S1_Hz
...``, with signed spreads). Discrepancy tables are written by
:func:`format_report_tsv`.
"""

from __future__ import annotations

import math
import re


class TableError(ValueError):
    pass


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def write_wide(path_or_fh, prefix: str, rows, extra_cols=(), comments=()):
    """rows: list of (label, values, extras) with extras keyed by ``extra_cols``."""
    n = max((len(v) for _, v, _ in rows), default=0)
    head = ["label"] + [f"{prefix}{i}_Hz" for i in range(1, n + 1)] + list(extra_cols)
    lines = [f"# {c}" for c in comments]
    lines.append("# " + "\t".join(head))
    for label, values, extras in rows:
        cells = [label] + [_fmt(v) for v in values] + ["nan"] * (n - len(values))
        cells += [str(extras.get(c, "nan")) for c in extra_cols]
        lines.append("\t".join(cells))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_fh, "write"):
        path_or_fh.write(text)
    else:
        with open(path_or_fh, "w") as fh:
            fh.write(text)
    return text


_COL = re.compile(r"^([A-Za-z]+)(\d+)(?:_Hz)?$")


def read_wide(path, prefix: str):
    """Read a wide table; returns {label: {"values": [...], "<other>": [...]}}.

    Columns named ``<prefix><i>[_Hz]`` become ``values``; other numbered
    columns are grouped by their letter prefix (e.g. S1, S2 -> "S").
    Trailing nan values are dropped.
    """
    header = None
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                cells = line[1:].strip().split("\t")
                if cells and cells[0] == "label":
                    header = cells
                continue
            cells = line.split("\t") if "\t" in line else line.split()
            if header is None:
                header = ["label"] + [f"{prefix}{i}" for i in range(1, len(cells))]
            if len(cells) != len(header):
                raise TableError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
            rec = {}
            for name, cell in zip(header[1:], cells[1:]):
                m = _COL.match(name)
                key = "values" if m and m.group(1) == prefix else (m.group(1) if m else name)
                try:
                    v = float(cell)
                except ValueError:
                    raise TableError(f"{path}:{lineno}: non-numeric value {cell!r} in column {name}") from None
                rec.setdefault(key, []).append(v)
            vals = rec.get("values", [])
            while vals and math.isnan(vals[-1]):
                vals.pop()
            if not vals:
                raise TableError(f"{path}:{lineno}: row {cells[0]!r} has no {prefix} values")
            if any(math.isnan(v) for v in vals):
                raise TableError(f"{path}:{lineno}: row {cells[0]!r} has a missing {prefix} value")
            out[cells[0]] = rec
    if not out:
        raise TableError(f"{path}: table is empty")
    return out


def format_report_tsv(reports) -> str:
    n = max((len(r.rows) for r in reports), default=0)
    head = ["label"] + [f"D{i}_st" for i in range(1, n + 1)] + ["mean_abs_st", "flags"]
    lines = ["# " + "\t".join(head)]
    for r in reports:
        cells = [r.name] + [_fmt(row.D) for row in r.rows] + ["nan"] * (n - len(r.rows))
        cells += [_fmt(r.mean_abs_discrepancy), "; ".join(r.flags) or "-"]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def format_report_text(reports) -> str:
    """Aligned one-decimal table in the layout of a vowel-by-formant discrepancy table."""
    n = max((len(r.rows) for r in reports), default=0)
    head = ["Vowel"] + [f"D{i}" for i in range(1, n + 1)] + ["mean discr."]
    body = []
    for r in reports:
        cells = [r.name] + [f"{row.D:.1f}" for row in r.rows] + [""] * (n - len(r.rows))
        cells.append(f"{r.mean_abs_discrepancy:.1f}")
        body.append(cells)
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    fmt = lambda row: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
    lines = [fmt(head)] + [fmt(row) for row in body]
    for r in reports:
        for f in r.flags:
            lines.append(f"warning: {r.name}: {f}")
    return "\n".join(lines) + "\n"
