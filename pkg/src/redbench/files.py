"""Whitespace-separated .dat tables with comment headers.

Every table starts with `# columns: <names>` and one or more `# <key>=value`
configuration lines, so a file alone tells you how it was produced.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError

__all__ = ["format_config", "format_dat", "parse_dat"]


def format_config(config: dict) -> str:
    """One deterministic comment line holding the resolved configuration."""
    parts = []
    for k, v in config.items():
        if isinstance(v, float):
            parts.append(f"{k}={v!r}")
        else:
            parts.append(f"{k}={v}")
    return "# config: " + " ".join(parts)


def format_dat(columns: list[str], data: np.ndarray, config: dict) -> str:
    """Render a (rows, len(columns)) array as a .dat table."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError(
            f"data shape {data.shape} does not match {len(columns)} columns"
        )
    lines = ["# columns: " + " ".join(columns), format_config(config)]
    for row in data:
        lines.append(" ".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


def parse_dat(text: str) -> tuple[list[str], np.ndarray]:
    """Read a .dat table back: (column names, data array).

    The `# columns:` line is required; other comments are skipped.
    """
    columns: list[str] | None = None
    rows: list[list[float]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("columns:"):
                columns = body[len("columns:") :].split()
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError:
            raise ParseError(f"line {ln}: malformed data row {line!r}") from None
    if columns is None:
        raise ParseError("line 1: missing '# columns:' header")
    data = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(columns)))
    if data.size and data.shape[1] != len(columns):
        raise ParseError(
            f"data has {data.shape[1]} columns, header names {len(columns)}"
        )
    return columns, data
