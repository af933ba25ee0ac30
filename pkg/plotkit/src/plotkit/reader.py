"""Reading and validating experiment result CSVs.

The upstream simulator publishes one fixed 12-column schema (see COLUMNS)
and nothing else; this module is the only place that schema is spelled out.
Validation is deliberately strict and loud -- a figure silently built from a
misread column is worse than no figure -- so every failure names the row
and column it came from.
"""

import csv
from dataclasses import dataclass


class SchemaError(ValueError):
    """Result file does not match the published CSV contract."""


# (name, converter) in exact header order.
COLUMNS = (
    ("study", str),
    ("scheme", str),
    ("csit", str),
    ("snr_db", float),
    ("weight_near", float),
    ("weight_edge", float),
    ("mean_rate_near", float),
    ("mean_rate_edge", float),
    ("mean_wsr", float),
    ("trials", int),
    ("converged_fraction", float),
    ("seed_base", int),
)

COLUMN_NAMES = tuple(name for name, _ in COLUMNS)


@dataclass(frozen=True)
class ResultRow:
    """One aggregated sweep point, typed per the contract."""

    study: str
    scheme: str
    csit: str
    snr_db: float
    weight_near: float
    weight_edge: float
    mean_rate_near: float
    mean_rate_edge: float
    mean_wsr: float
    trials: int
    converged_fraction: float
    seed_base: int


def read_rows(path):
    """Parse a result CSV into ResultRow objects, validating as we go.

    Raises SchemaError naming the offending row/column for a wrong header,
    unparseable cell, short row, or a file with no data rows.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("%s: empty file, expected header %s"
                              % (path, ",".join(COLUMN_NAMES))) from None
        if tuple(header) != COLUMN_NAMES:
            missing = [c for c in COLUMN_NAMES if c not in header]
            extra = [c for c in header if c not in COLUMN_NAMES]
            parts = []
            if missing:
                parts.append("missing columns: %s" % ", ".join(missing))
            if extra:
                parts.append("unexpected columns: %s" % ", ".join(extra))
            if not parts:
                parts.append("columns out of order: got %s" % ",".join(header))
            raise SchemaError("%s: bad header (%s)" % (path, "; ".join(parts)))

        rows = []
        for lineno, record in enumerate(reader, 2):
            if not record:
                continue
            if len(record) != len(COLUMNS):
                raise SchemaError("%s: row %d has %d fields, expected %d"
                                  % (path, lineno, len(record), len(COLUMNS)))
            vals = {}
            for (name, conv), cell in zip(COLUMNS, record):
                try:
                    vals[name] = conv(cell)
                except ValueError:
                    raise SchemaError(
                        "%s: row %d, column %s: cannot parse %r as %s"
                        % (path, lineno, name, cell, conv.__name__)) from None
            rows.append(ResultRow(**vals))

    if not rows:
        raise SchemaError("%s: no data rows" % path)
    return rows
