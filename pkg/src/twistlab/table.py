"""Result tables and their CSV / JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__

__all__ = ["Column", "ResultTable", "emit", "render", "EmitError"]


class EmitError(OSError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = "1"

    @property
    def header(self) -> str:
        return f"{self.name} [{self.unit}]"


def _clean(value):
    # undefined values travel as None, never as NaN/inf
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class ResultTable:
    columns: list[Column]
    rows: list[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        width = len(self.columns)
        cleaned = []
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} values, expected {width}")
            cleaned.append([_clean(v) for v in row])
        self.rows = cleaned

    @classmethod
    def from_records(cls, columns: list[Column], records: list[dict], metadata: dict | None = None):
        return cls(columns, [[rec.get(c.name) for c in columns] for rec in records], dict(metadata or {}))

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> list:
        i = self.names.index(name)
        return [row[i] for row in self.rows]


def _csv_field(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header_metadata(table: ResultTable, timestamp: str | None) -> dict:
    meta = {"artifact": "twistlab", "version": __version__}
    meta.update(table.metadata)
    if timestamp is not None:
        meta["timestamp"] = timestamp
    return meta


def render(table: ResultTable, fmt: str, timestamp: str | None = None) -> str:
    """Serialise a table. CSV carries metadata as leading ``#`` lines, one key per line."""
    meta = _header_metadata(table, timestamp)
    if fmt == "csv":
        buf = io.StringIO()
        for key, value in meta.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([c.header for c in table.columns])
        for row in table.rows:
            writer.writerow([_csv_field(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "metadata": meta,
            "columns": [{"name": c.name, "unit": c.unit} for c in table.columns],
            "data": {c.name: table.column(c.name) for c in table.columns},
        }
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(table: ResultTable, fmt: str, path: str, timestamp: str | None = None) -> None:
    """Write a table to ``path`` (``-`` for stdout)."""
    text = render(table, fmt, timestamp)
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc
