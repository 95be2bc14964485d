"""Timing harness comparing self-optimized trees against brute-force KDE.

For each sample size the harness grows a tree, runs the pruning and
kernel cross-validation pipeline, and samples both the selected tree
and the naive kernel estimate on the same grid.  The 'loose' stop keeps
leaf counts proportional to the sample size, so the cross-validation
cost (nodes x entries) approaches quadratic scaling; the 'tight' stop
caps leaf widths at a resolution-like scale and deflects from it.

Everything runs in a single process; wall times are the minimum over
``reps`` repetitions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .crossval import quality_kernel, select_alpha, silverman_bandwidths
from .errors import ConfigError
from .growth import StopCondition, grow
from .kde import TriangularKde, grid_points
from .pruning import apply_alpha, prune_sequence
from .synthetic import d0_demo_spec, generate_synthetic
from .tree import bounding_box

BENCH_COLUMNS = ("n_tot", "n_leaves", "t_train", "t_cv", "t_grid_det", "t_grid_kde")

# leaf-width stops as a fraction of each dimension's span
TIGHT_WIDTH_FRACTION = 1 / 32
LOOSE_WIDTH_FRACTION = 1 / 10000
BENCH_MIN_COUNT = 2


@dataclass(frozen=True)
class BenchRow:
    n_tot: int
    n_leaves: int
    t_train: float
    t_cv: float
    t_grid_det: float
    t_grid_kde: float

    def astuple(self):
        return (
            self.n_tot,
            self.n_leaves,
            self.t_train,
            self.t_cv,
            self.t_grid_det,
            self.t_grid_kde,
        )


def _timed(fn, reps: int):
    best = None
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return result, best


def benchmark(
    sizes,
    stop_variant: str = "tight",
    grid_bins=(200, 200),
    reps: int = 3,
    seed: int = 0,
) -> list[BenchRow]:
    """One row of timings per sample size; sizes must be ascending."""
    sizes = [int(s) for s in sizes]
    if any(s < 2 for s in sizes):
        raise ConfigError(f"benchmark sizes must be >= 2, got {sizes}")
    if sizes != sorted(sizes):
        raise ConfigError(f"benchmark sizes must be ascending, got {sizes}")
    if stop_variant not in ("tight", "loose"):
        raise ConfigError(f"stop variant must be tight or loose, got {stop_variant!r}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    fraction = TIGHT_WIDTH_FRACTION if stop_variant == "tight" else LOOSE_WIDTH_FRACTION

    rows = []
    for n in sizes:
        data = generate_synthetic(d0_demo_spec(n, seed=seed))
        box = bounding_box(data)
        widths = (box.hi - box.lo) * fraction
        stop = StopCondition(min_count=BENCH_MIN_COUNT, min_widths=tuple(widths))
        bw = silverman_bandwidths(data)

        tree, t_train = _timed(lambda: grow(data, stop, box=box), reps)

        def optimize():
            profile = prune_sequence(tree, "leaves")
            curve = quality_kernel(tree, profile, data, bw)
            alpha = select_alpha(curve)
            return apply_alpha(tree, profile, alpha)

        pruned, t_cv = _timed(optimize, reps)

        points, _ = grid_points(box, grid_bins)
        _, t_grid_det = _timed(lambda: pruned.evaluate_many(points), reps)
        kde = TriangularKde(data, bw)
        _, t_grid_kde = _timed(lambda: kde.evaluate_many(points), reps)

        rows.append(
            BenchRow(n, pruned.n_leaves, t_train, t_cv, t_grid_det, t_grid_kde)
        )
    return rows
