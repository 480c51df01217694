"""Whitespace-delimited ``.dat`` tables.

Two comment lines (column names, provenance stamp) followed by one row per
window.  Numbers use 17 significant digits so that reading a table back
reproduces every double exactly.
"""
import numpy as np

FORMAT = "%.17g"


def emit_dat(columns, path, names, stamp=""):
    """Write equal-length ``columns`` to ``path``; returns the path."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(names) != len(cols):
        raise ValueError(f"{len(names)} names for {len(cols)} columns")
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns must have equal length")
    if any(" " in n for n in names):
        raise ValueError("column names must not contain spaces")
    lines = ["# " + " ".join(names), "# " + stamp]
    for row in zip(*cols):
        lines.append(" ".join(FORMAT % v for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_dat(path):
    """Inverse of :func:`emit_dat`: ``(names, stamp, array of shape (rows, cols))``."""
    with open(path, encoding="ascii") as fh:
        head = fh.readline()
        stamp = fh.readline()
        rows = [[float(tok) for tok in line.split()] for line in fh if line.strip()]
    names = head[1:].split()
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return names, stamp[1:].strip(), data
