"""Brute-force product triangular-kernel density estimate.

This is deliberately the naive comparator: every evaluation touches
every entry, with no spatial index or truncation, so its cost per query
is O(n_entries * d).  It doubles as the reference density for
cross-validation checks and as the timing baseline.
"""

from __future__ import annotations

import numpy as np

from .crossval import Bandwidths, _check_bandwidths
from .datatable import DataTable
from .errors import ConfigError
from .tree import Box


class TriangularKde:
    """Kernel density estimate with a normalized product triangle kernel."""

    def __init__(self, data: DataTable, bw: Bandwidths):
        self.data = data
        self.bw = bw
        self._h = _check_bandwidths(bw, data.ndim)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.ndim:
            raise ConfigError(f"point has dimension {x.size}, model has {self.ndim}")
        return float(self.evaluate_many(x.reshape(1, -1))[0])

    def evaluate_many(self, X, chunk: int = 128) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.ndim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.ndim:
            raise ConfigError(
                f"points have dimension {X.shape[1]}, model has {self.ndim}"
            )
        pts = self.data.data
        n = pts.shape[0]
        h = self._h
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], chunk):
            stop = min(start + chunk, X.shape[0])
            prod = None
            for k in range(self.ndim):
                w = X[start:stop, k : k + 1] - pts[:, k]
                np.abs(w, out=w)
                w /= h[k]
                np.subtract(1.0, w, out=w)
                np.clip(w, 0.0, None, out=w)
                w /= h[k]
                prod = w if prod is None else prod * w
            out[start:stop] = prod.sum(axis=1)
        out /= n
        return out

    def __call__(self, X) -> np.ndarray:
        return self.evaluate_many(X)


def grid_points(box: Box, bins) -> tuple[np.ndarray, float]:
    """Midpoint grid over a box: (points, cell volume).

    ``bins`` is an int (same count per dimension) or one count per
    dimension; every count must be positive.
    """
    if np.isscalar(bins):
        bins = [int(bins)] * box.ndim
    bins = [int(b) for b in bins]
    if len(bins) != box.ndim:
        raise ConfigError(f"{len(bins)} bin counts for {box.ndim} dimensions")
    if any(b < 1 for b in bins):
        raise ConfigError(f"bin counts must be positive, got {bins}")
    axes = []
    cell = 1.0
    for k, b in enumerate(bins):
        step = (box.hi[k] - box.lo[k]) / b
        axes.append(box.lo[k] + step * (np.arange(b) + 0.5))
        cell *= step
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    return points, cell


def ise_against(f, g, box: Box, bins) -> float:
    """Midpoint-rule estimate of the integrated squared difference of
    two density evaluators over a box.

    A fixed midpoint grid is an unbiased comparator for the piecewise
    constant estimators used here, where adaptive quadrature misjudges
    the discontinuities.
    """
    points, cell = grid_points(box, bins)
    diff = np.asarray(f(points), dtype=np.float64) - np.asarray(
        g(points), dtype=np.float64
    )
    return float(np.sum(diff * diff) * cell)
