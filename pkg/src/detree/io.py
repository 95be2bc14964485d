"""CSV ingestion and grid sampling.

CSV is the only data interchange: comma separator, '.' decimal, header
row required, UTF-8.  Floats are written with shortest round-trip
precision so identical inputs reproduce identical output bytes.
"""

from __future__ import annotations

import csv
import math
import os
from typing import Optional, Sequence

import numpy as np

from .datatable import DataTable
from .errors import ConfigError, DataError
from .kde import grid_points
from .tree import Box


def load_csv(path, columns: Optional[Sequence[str]] = None) -> DataTable:
    """Parse the named columns of a CSV file into a table.

    Every selected cell must be a finite number; errors report the file
    line and column of the first offending cell.
    """
    if not os.path.exists(path):
        raise DataError(f"input file does not exist: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"input file is empty: {path}") from None
        header = [h.strip() for h in header]
        if columns is None:
            columns = header
        idx = []
        for name in columns:
            if name not in header:
                raise DataError(f"missing column '{name}' in {path}")
            idx.append(header.index(name))
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            values = []
            for j in idx:
                cell = row[j].strip() if j < len(row) else ""
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataError(
                        f"non-numeric cell {cell!r} at line {line_no}, "
                        f"column '{header[j]}' of {path}"
                    )
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"no data rows in {path}")
    return DataTable(rows, list(columns))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(path_or_file, columns: Sequence[str], rows: np.ndarray) -> None:
    """Write a numeric table; floats keep full round-trip precision."""
    rows = np.asarray(rows, dtype=np.float64)

    def emit(fh):
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            emit(fh)


def write_table_csv(path_or_file, table: DataTable) -> None:
    write_csv(path_or_file, table.columns, table.data)


def sample_grid(model, box: Box, bins, columns: Optional[Sequence[str]] = None):
    """Evaluate a density model at bin midpoints over a box.

    Returns ``(columns, rows)`` where rows hold one midpoint coordinate
    per dimension plus the density; row count is the product of the bin
    counts.  Grid output is limited to 1 to 3 dimensions.
    """
    if not 1 <= box.ndim <= 3:
        raise ConfigError(
            f"grid sampling supports 1 to 3 dimensions, box has {box.ndim}"
        )
    points, _ = grid_points(box, bins)
    dens = np.asarray(model(points), dtype=np.float64)
    if columns is None:
        columns = [f"x{k}" for k in range(box.ndim)]
    out_cols = list(columns) + ["density"]
    rows = np.column_stack([points, dens])
    return out_cols, rows
