"""Immutable numeric sample with named columns."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError


class DataTable:
    """An N x d matrix of finite reals with unique column names.

    The array is copied on construction and frozen; a table can be
    shared freely between threads and models.
    """

    def __init__(self, rows, columns: Sequence[str]):
        data = np.array(rows, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2:
            raise DataError(f"expected a 2-D sample, got ndim={data.ndim}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DataError(f"sample must be at least 1x1, got shape {data.shape}")
        columns = tuple(str(c) for c in columns)
        if len(columns) != data.shape[1]:
            raise DataError(
                f"{len(columns)} column names for {data.shape[1]} columns"
            )
        if len(set(columns)) != len(columns):
            raise DataError(f"column names are not unique: {columns}")
        if not np.isfinite(data).all():
            i, j = np.argwhere(~np.isfinite(data))[0]
            raise DataError(
                f"non-finite value in row {i}, column '{columns[j]}'"
            )
        data.setflags(write=False)
        self._data = data
        self._columns = columns

    @property
    def data(self) -> np.ndarray:
        """Read-only (N, d) float64 array."""
        return self._data

    @property
    def columns(self) -> tuple[str, ...]:
        return self._columns

    @property
    def n_tot(self) -> int:
        return self._data.shape[0]

    @property
    def ndim(self) -> int:
        return self._data.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self._columns.index(name)
        except ValueError:
            raise ConfigError(f"no column named '{name}'") from None
        return self._data[:, j]

    def select(self, names: Iterable[str]) -> "DataTable":
        """A new table holding the named columns, in the given order."""
        names = list(names)
        idx = []
        for name in names:
            if name not in self._columns:
                raise ConfigError(f"no column named '{name}'")
            idx.append(self._columns.index(name))
        return DataTable(self._data[:, idx], names)

    def __len__(self) -> int:
        return self.n_tot

    def __repr__(self) -> str:
        return f"DataTable(n_tot={self.n_tot}, columns={list(self._columns)})"
