"""Deterministic serialization helpers shared by the export paths."""
from __future__ import annotations

import json
from pathlib import Path


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def write_csv(path: str | Path, header: list[str], rows, provenance: list[str] = ()) -> None:
    """Write rows of pre-formatted strings as CSV with Unix newlines.

    ``provenance`` lines are echoed as leading ``#`` comments so a file
    is self-describing; floats must already be strings (use fmt17).
    """
    lines = [f"# {line}" for line in provenance]
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_json(path: str | Path, obj) -> None:
    """Write a JSON document with stable key order and Unix newlines."""
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", newline="\n")
