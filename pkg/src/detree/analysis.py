"""Rectangular selection optimization and tree-based likelihood ratios.

The leaf-wise structure makes integrals over axis-aligned rectangles
exact and cheap, so a selection can be optimized by scanning candidate
thresholds instead of re-counting entries.  Log-likelihood ratios
combine several density models, with each density clamped to a small
positive floor so the statistic stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .crossval import _overlap_block
from .errors import ConfigError
from .smoothing import SmearedTree
from .tree import DensityTree


class SelectionRegion:
    """Axis-aligned selection: closed intervals per named dimension.

    Dimensions not mentioned are unconstrained (they span whatever box
    the region is applied to).
    """

    def __init__(self, intervals: Mapping[str, tuple[float, float]]):
        clean = {}
        for name, (a, b) in intervals.items():
            a = float(a)
            b = float(b)
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ConfigError(
                    f"bad interval [{a}, {b}] for dimension '{name}'"
                )
            clean[str(name)] = (a, b)
        self.intervals = clean

    def bounds_for(self, columns: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) arrays aligned to ``columns``; unconstrained
        dimensions get infinite bounds."""
        lo = np.full(len(columns), -np.inf)
        hi = np.full(len(columns), np.inf)
        for name, (a, b) in self.intervals.items():
            if name in columns:
                j = list(columns).index(name)
                lo[j] = a
                hi[j] = b
        return lo, hi

    def __repr__(self) -> str:
        parts = [f"{n}:[{a:g},{b:g}]" for n, (a, b) in sorted(self.intervals.items())]
        return "SelectionRegion(" + "; ".join(parts) + ")"

    def __eq__(self, other):
        return (
            isinstance(other, SelectionRegion) and self.intervals == other.intervals
        )


@dataclass(frozen=True)
class YieldConfig:
    """Expected signal and background yields in the mixed sample."""

    s_infinity: float
    b_infinity: float

    def __post_init__(self):
        for name, v in (("s_infinity", self.s_infinity), ("b_infinity", self.b_infinity)):
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and non-negative, got {v}")


def _require_tree(model, op: str) -> DensityTree:
    if isinstance(model, SmearedTree):
        raise ConfigError(
            f"{op} requires a plain density tree; the leaf-wise integral "
            "does not apply to smeared models"
        )
    if not isinstance(model, DensityTree):
        raise ConfigError(f"{op} expects a DensityTree, got {type(model).__name__}")
    return model


def integrate_region(tree: DensityTree, region: SelectionRegion) -> float:
    """Exact integral of the estimator over the region.

    Leaf by leaf: count times the overlapping volume fraction, summed;
    an empty intersection contributes 0.
    """
    tree = _require_tree(tree, "integrate_region")
    lo_r, hi_r = region.bounds_for(tree.columns)
    lo, hi, counts, _ = tree.leaf_arrays()
    widths = np.clip(np.minimum(hi, hi_r) - np.maximum(lo, lo_r), 0.0, None)
    overlap = np.prod(widths, axis=1)
    vols = np.prod(hi - lo, axis=1)
    return float(np.sum(counts * overlap / vols) / tree.n_tot)


def selection_metric(
    region: SelectionRegion,
    signal: DensityTree,
    background: DensityTree,
    yields: YieldConfig,
) -> float:
    """S / (1 + S + B) with S, B the expected yields inside the region."""
    s = yields.s_infinity * integrate_region(signal, region)
    b = yields.b_infinity * integrate_region(background, region)
    return s / (1.0 + s + b)


def _boundary_values(signal: DensityTree, background: DensityTree, name: str):
    vals = []
    for tree in (signal, background):
        if name not in tree.columns:
            raise ConfigError(f"no column named '{name}' in {tree!r}")
        j = list(tree.columns).index(name)
        lo, hi, _, _ = tree.leaf_arrays()
        vals.append(lo[:, j])
        vals.append(hi[:, j])
    return np.unique(np.concatenate(vals))


class _RegionScanner:
    """Per-dimension exhaustive interval sweeps for one tree.

    For a fixed setting of the other dimensions, the integral over
    (a, b) candidates in one dimension is a matrix product between the
    per-pair overlap widths and the per-leaf base weights.
    """

    def __init__(self, tree: DensityTree, dims: Sequence[str]):
        self.tree = tree
        lo, hi, counts, _ = tree.leaf_arrays()
        self.lo = lo
        self.hi = hi
        self.base = counts / (np.prod(hi - lo, axis=1) * tree.n_tot)
        self.cols = list(tree.columns)
        self.dim_idx = {name: self.cols.index(name) for name in dims if name in self.cols}

    def fixed_weights(self, intervals: dict, skip: str) -> np.ndarray:
        w = self.base.copy()
        for name, (a, b) in intervals.items():
            if name == skip:
                continue
            j = self.dim_idx[name]
            w *= np.clip(
                np.minimum(self.hi[:, j], b) - np.maximum(self.lo[:, j], a), 0.0, None
            )
        return w

    def pair_integrals(self, name: str, pairs_a, pairs_b, weights) -> np.ndarray:
        j = self.dim_idx[name]
        widths = np.clip(
            np.minimum(self.hi[None, :, j], pairs_b[:, None])
            - np.maximum(self.lo[None, :, j], pairs_a[:, None]),
            0.0,
            None,
        )
        return widths @ weights

    def integral(self, intervals: dict) -> float:
        return float(np.sum(self.fixed_weights(intervals, skip=None)))


def optimize_selection(
    signal: DensityTree,
    background: DensityTree,
    yields: YieldConfig,
    dims: Sequence[str],
    max_passes: int = 50,
) -> tuple[SelectionRegion, float]:
    """Best rectangular selection over the given dimensions.

    Candidate thresholds are the union of both trees' leaf boundaries
    (the metric is monotone between consecutive boundaries, so this
    lattice contains a maximizer).  Eight deterministic starting regions
    are refined by coordinate-wise exhaustive interval sweeps to a fixed
    point; the result is never worse than the best single-dimension
    interval, which seeds the starts.  Ties prefer the larger region.
    """
    signal = _require_tree(signal, "optimize_selection")
    background = _require_tree(background, "optimize_selection")
    dims = list(dims)
    if not dims:
        raise ConfigError("optimize_selection needs at least one dimension")
    bounds = {name: _boundary_values(signal, background, name) for name in dims}
    scan_s = _RegionScanner(signal, dims)
    scan_b = _RegionScanner(background, dims)
    s_inf = yields.s_infinity
    b_inf = yields.b_infinity

    pair_arrays = {}
    for name, vals in bounds.items():
        ia, ib = np.triu_indices(vals.size, k=0)
        pair_arrays[name] = (vals[ia], vals[ib])

    def metric_of(intervals: dict) -> float:
        s = s_inf * scan_s.integral(intervals)
        b = b_inf * scan_b.integral(intervals)
        return s / (1.0 + s + b)

    def volume_of(intervals: dict) -> float:
        return float(np.prod([b - a for a, b in intervals.values()]))

    def sweep_dim(intervals: dict, name: str):
        """Best (a, b) for one dimension, everything else fixed."""
        pa, pb = pair_arrays[name]
        s_int = scan_s.pair_integrals(name, pa, pb, scan_s.fixed_weights(intervals, name))
        b_int = scan_b.pair_integrals(name, pa, pb, scan_b.fixed_weights(intervals, name))
        s = s_inf * s_int
        b = b_inf * b_int
        metric = s / (1.0 + s + b)
        best = metric.max()
        tied = np.flatnonzero(metric == best)
        widths = pb[tied] - pa[tied]
        k = tied[np.argmax(widths)]
        return float(pa[k]), float(pb[k]), float(best)

    def ascend(start: dict) -> tuple[dict, float]:
        intervals = dict(start)
        current = metric_of(intervals)
        for _ in range(max_passes):
            improved = False
            for name in dims:
                a, b, m = sweep_dim(intervals, name)
                if m > current or (
                    m == current
                    and (b - a) > intervals[name][1] - intervals[name][0]
                ):
                    if (a, b) != intervals[name]:
                        improved = True
                    intervals[name] = (a, b)
                    current = m
            if not improved:
                break
        return intervals, current

    full = {name: (float(vals[0]), float(vals[-1])) for name, vals in bounds.items()}

    # seed starts: full box, each dimension's solo optimum, their
    # combination, then central slices, up to eight
    starts = [full]
    solo_best = {}
    for name in dims:
        a, b, _ = sweep_dim(full, name)
        solo_best[name] = (a, b)
        start = dict(full)
        start[name] = (a, b)
        starts.append(start)
    starts.append(dict(solo_best) | {n: full[n] for n in dims if n not in solo_best})

    def central(frac: float) -> dict:
        out = {}
        for name, vals in bounds.items():
            k = vals.size
            span = max(int(round(k * frac)), 1)
            i0 = (k - span) // 2
            i1 = min(i0 + span, k - 1)
            out[name] = (float(vals[i0]), float(vals[max(i1, i0 + 1) if i0 + 1 < k else i1]))
        return out

    for frac in (0.5, 0.8, 0.3, 0.9, 0.6, 0.4):
        if len(starts) >= 8:
            break
        starts.append(central(frac))
    starts = starts[:8]

    best_intervals = None
    best_metric = -1.0
    for start in starts:
        intervals, metric = ascend(start)
        if metric > best_metric or (
            metric == best_metric
            and volume_of(intervals) > volume_of(best_intervals)
        ):
            best_intervals = intervals
            best_metric = metric
    return SelectionRegion(best_intervals), best_metric


# -- likelihood statistics --------------------------------------------------


def _model_density(model, x) -> float:
    if isinstance(model, (DensityTree, SmearedTree)):
        return model.evaluate(x)
    raise ConfigError(f"unsupported model type {type(model).__name__}")


def delta_log_likelihood(signal, background, x) -> float:
    """log of the signal/background density ratio at x.

    Each density is clamped from below at its model's floor (one
    notional entry over the whole box), so the result is always finite.
    """
    f_s = max(_model_density(signal, x), signal.density_floor)
    f_b = max(_model_density(background, x), background.density_floor)
    return math.log(f_s) - math.log(f_b)


def conditional_line_integral(tree: DensityTree, dim: str, x) -> float:
    """Integral of the estimator along one axis at fixed coordinates.

    ``x`` supplies every coordinate (the ``dim`` component is ignored);
    the integral runs over the root box extent in ``dim``.  Returns 0
    when the fixed coordinates fall outside the root box.
    """
    if dim not in tree.columns:
        raise ConfigError(f"no column named '{dim}' in {tree!r}")
    j = list(tree.columns).index(dim)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != tree.ndim:
        raise ConfigError(f"point has dimension {x.size}, model has {tree.ndim}")
    box = tree.root.box
    lo, hi, counts, _ = tree.leaf_arrays()
    inside = np.ones(lo.shape[0], dtype=bool)
    for m in range(tree.ndim):
        if m == j:
            continue
        if not (box.lo[m] <= x[m] <= box.hi[m]):
            return 0.0
        # half-open leaf intervals; the top root boundary is closed
        upper_ok = (x[m] < hi[:, m]) | (hi[:, m] == box.hi[m])
        inside &= (lo[:, m] <= x[m]) & upper_ok
    vols = np.prod(hi - lo, axis=1)
    dens = counts / (tree.n_tot * vols)
    return float(np.sum(dens[inside] * (hi[inside, j] - lo[inside, j])))


def _smeared_line_integral(model: SmearedTree, dim_index: int, x) -> float:
    """Exact axis integral of the smeared estimator over the whole line:
    the kernel factor along the integration axis integrates out to the
    leaf extent."""
    lo, hi, counts, _ = model.tree.leaf_arrays()
    vols = np.prod(hi - lo, axis=1)
    dens = counts / (model.tree.n_tot * vols)
    h = model.bw.h
    total = dens * (hi[:, dim_index] - lo[:, dim_index])
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    for k in range(model.ndim):
        if k == dim_index:
            continue
        ov = _overlap_block(lo[:, k], hi[:, k], np.float64(x[k]), h[k])
        total *= ov / h[k]
    return float(total.sum())


@dataclass(frozen=True)
class LikelihoodFactor:
    """One multiplicative term of a composite likelihood ratio.

    ``mapping`` renames model columns to record columns (model column ->
    record column); unmapped columns are looked up under their own name.
    When ``conditional_dim`` is set, the factor is normalized into a
    conditional density by the line integral along that model column.
    """

    model: object
    role: str = "numerator"
    mapping: Mapping[str, str] = field(default_factory=dict)
    conditional_dim: Optional[str] = None

    def __post_init__(self):
        if self.role not in ("numerator", "denominator"):
            raise ConfigError(
                f"factor role must be numerator or denominator, got {self.role!r}"
            )
        if not isinstance(self.model, (DensityTree, SmearedTree)):
            raise ConfigError(
                f"factor model must be a density tree or smeared tree, "
                f"got {type(self.model).__name__}"
            )
        columns = self.model_columns
        for col in self.mapping:
            if col not in columns:
                raise ConfigError(f"mapping references unknown model column '{col}'")
        if self.conditional_dim is not None and self.conditional_dim not in columns:
            raise ConfigError(
                f"conditional_dim '{self.conditional_dim}' is not a model column"
            )

    @property
    def model_columns(self) -> tuple[str, ...]:
        model = self.model
        return model.tree.columns if isinstance(model, SmearedTree) else model.columns

    def record_columns(self) -> list[str]:
        return [self.mapping.get(c, c) for c in self.model_columns]


@dataclass(frozen=True)
class LikelihoodSpec:
    """Ordered factors of a composite log-likelihood statistic."""

    factors: tuple[LikelihoodFactor, ...]

    def __init__(self, factors: Sequence[LikelihoodFactor]):
        factors = tuple(factors)
        if not factors:
            raise ConfigError("likelihood spec needs at least one factor")
        object.__setattr__(self, "factors", factors)

    def record_columns(self) -> list[str]:
        seen = []
        for f in self.factors:
            for c in f.record_columns():
                if c not in seen:
                    seen.append(c)
        return seen


def _factor_log_value(factor: LikelihoodFactor, record: Mapping[str, float]) -> float:
    coords = []
    for col in factor.model_columns:
        rec_col = factor.mapping.get(col, col)
        if rec_col not in record:
            raise ConfigError(f"record is missing column '{rec_col}'")
        coords.append(float(record[rec_col]))
    model = factor.model
    floor = model.density_floor
    dens = max(_model_density(model, coords), floor)
    if factor.conditional_dim is None:
        return math.log(dens)
    tree = model.tree if isinstance(model, SmearedTree) else model
    j = list(tree.columns).index(factor.conditional_dim)
    extent = tree.root.box.width(j)
    if isinstance(model, SmearedTree):
        line = _smeared_line_integral(model, j, coords)
    else:
        line = conditional_line_integral(model, factor.conditional_dim, coords)
    line = max(line, floor * extent)
    return math.log(dens) - math.log(line)


def composite_log_likelihood(spec: LikelihoodSpec, record: Mapping[str, float]) -> float:
    """Sum of numerator log factors minus denominator log factors.

    Densities are floor-clamped exactly as in delta_log_likelihood, so
    the statistic is finite for every record.
    """
    total = 0.0
    for factor in spec.factors:
        value = _factor_log_value(factor, record)
        total += value if factor.role == "numerator" else -value
    return total
