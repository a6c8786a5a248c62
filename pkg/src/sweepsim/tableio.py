"""Deterministic CSV writing: shortest round-trip float formatting, LF endings."""

from __future__ import annotations

import os


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    try:
        import numpy as np
        if isinstance(value, np.floating):
            return repr(float(value))
        if isinstance(value, (np.integer, np.bool_)):
            return str(int(value))
    except ImportError:  # pragma: no cover
        pass
    return str(value)


def write_csv(path, header, rows) -> str:
    """Write rows of mixed scalars; returns the path written."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path
