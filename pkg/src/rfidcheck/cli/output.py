"""CSV files and plain-text tables written by the commands."""

import csv
import math

from pathlib import Path
from typing import Any, Iterable, List, Sequence

__all__ = ("format_table", "format_value", "write_csv")


def format_value(value: Any) -> str:
    """Formats a cell so that equal values always give identical text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    try:
        # numpy scalars
        return format_value(value.item())
    except AttributeError:
        return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Writes a CSV file with a header row and ``\\n`` line endings,
    creating the parent directory if needed.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(cell) for cell in row])
    return path


def format_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Formats rows as a left-aligned plain-text table."""
    cells: List[List[str]] = [list(header)]
    for row in rows:
        cells.append(
            [cell if isinstance(cell, str) else format_value(cell) for cell in row]
        )
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in cells
    ]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)
