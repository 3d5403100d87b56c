"""Deterministic CSV/JSON emission with round-trip-exact float formatting.

Floats are printed with 17 significant digits, which is enough for
``float(text)`` to reproduce the original IEEE-754 double bit-for-bit, so
repeated runs of the same computation produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from .errors import TwoStrokeError

__all__ = ["format_float", "dumps_json", "write_text", "rows_to_csv", "read_csv_rows"]


def format_float(x: float) -> str:
    """17-significant-digit decimal text; parses back to the same double."""
    text = format(float(x), ".17g")
    # Keep JSON type stability: integral values still get a decimal point.
    if "." not in text and "e" not in text and "n" not in text and "f" not in text:
        text += ".0"
    return text


def _json_fragment(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {_json_fragment(v, indent, level + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + closing + "}"
    if isinstance(value, (list, tuple)):
        if not len(value):
            return "[]"
        items = [f"{pad}{_json_fragment(v, indent, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + closing + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def dumps_json(payload: Any, indent: int = 2) -> str:
    """JSON text with deterministic key order and 17-digit floats."""
    return _json_fragment(payload, indent, 0) + "\n"


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    text = str(value)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def rows_to_csv(
    columns: Sequence[str], rows: Sequence[Mapping[str, Any] | Sequence[Any]]
) -> str:
    """Comma-separated text with a header row and trailing newline.

    Rows may be mappings keyed by column name or plain sequences in
    column order.
    """
    lines = [",".join(columns)]
    for row in rows:
        if isinstance(row, Mapping):
            cells = [row.get(c) for c in columns]
        else:
            cells = list(row)
            if len(cells) != len(columns):
                raise TwoStrokeError(
                    f"row has {len(cells)} cells for {len(columns)} columns"
                )
        lines.append(",".join(_format_cell(c) for c in cells))
    return "\n".join(lines) + "\n"


def _split_csv_line(line: str) -> list[str]:
    cells: list[str] = []
    cell = []
    quoted = False
    i = 0
    while i < len(line):
        ch = line[i]
        if quoted:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    cell.append('"')
                    i += 1
                else:
                    quoted = False
            else:
                cell.append(ch)
        elif ch == '"':
            quoted = True
        elif ch == ",":
            cells.append("".join(cell))
            cell = []
        else:
            cell.append(ch)
        i += 1
    cells.append("".join(cell))
    return cells


def read_csv_rows(text: str) -> list[dict[str, str]]:
    lines = [ln for ln in text.split("\n") if ln != ""]
    header = _split_csv_line(lines[0])
    return [dict(zip(header, _split_csv_line(ln))) for ln in lines[1:]]


def write_text(path: str, text: str) -> None:
    """UTF-8 write with explicit newlines; failures carry the path."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise TwoStrokeError(f"cannot write {path}: {exc}") from exc
