"""Greedy tree growth by residual-gain maximization.

Each leaf is split on the candidate cut maximizing the decrease of the
summed replacement error, until no admissible positive-gain cut exists
or a stop condition fires.  Candidate cuts are the midpoints between
consecutive distinct coordinate values per dimension, so a cut never
coincides with a data point.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .datatable import DataTable
from .errors import ConfigError, DataError
from .tree import Box, DensityTree, TreeNode, bounding_box


@dataclass(frozen=True)
class StopCondition:
    """Growth limits: minimum child count, minimal leaf widths, leaf cap.

    A cut is rejected when either child would hold fewer than
    ``min_count`` entries, or would be narrower than ``min_widths[m]``
    along the cut dimension.  A branch stops when no admissible cut
    remains.  ``max_leaves`` is a global safety cap: growth proceeds
    best-first (largest gain next), so the cap keeps the most valuable
    splits.
    """

    min_count: int = 1
    min_widths: Optional[Sequence[float]] = None
    max_leaves: Optional[int] = None

    def __post_init__(self):
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        if self.min_widths is not None:
            widths = tuple(float(w) for w in self.min_widths)
            if any(w <= 0 for w in widths):
                raise ConfigError(f"min_widths must be positive, got {widths}")
            object.__setattr__(self, "min_widths", widths)
        if self.max_leaves is not None and self.max_leaves < 1:
            raise ConfigError(f"max_leaves must be >= 1, got {self.max_leaves}")

    def widths_array(self, ndim: int) -> Optional[np.ndarray]:
        if self.min_widths is None:
            return None
        if len(self.min_widths) != ndim:
            raise ConfigError(
                f"{len(self.min_widths)} leaf-width limits for {ndim} dimensions"
            )
        return np.asarray(self.min_widths, dtype=np.float64)


@dataclass
class GrowthReport:
    """Diagnostics from one growth run."""

    n_leaves: int = 0
    gains: dict = field(default_factory=dict)  # node_id -> applied gain
    stop_reasons: dict = field(default_factory=dict)  # reason -> leaf count


def replacement_error(count: int, volume: float, n_tot: int) -> float:
    """Per-leaf ISE surrogate, -count^2 / (n_tot^2 * volume)."""
    if volume <= 0:
        raise ConfigError(f"volume must be positive, got {volume}")
    if count == 0:
        return 0.0
    return -(count * count) / (n_tot * n_tot * volume)


def _scan_splits(X: np.ndarray, box: Box, stop: StopCondition, n_tot: int,
                 widths: Optional[np.ndarray]):
    """Best admissible positive-gain cut of the entries in ``box``.

    Returns ``((dim, cut, gain) | None, reason)`` where ``reason``
    names the condition that blocked splitting when no cut is returned.
    """
    n = X.shape[0]
    ndim = box.ndim
    volume = box.volume
    r_parent = replacement_error(n, volume, n_tot)
    best = None
    had_candidates = False
    blocked_count = False
    blocked_width = False
    for m in range(ndim):
        uv, uc = np.unique(X[:, m], return_counts=True)
        if uv.size < 2:
            continue
        had_candidates = True
        cuts = 0.5 * (uv[:-1] + uv[1:])
        nl = np.cumsum(uc[:-1])
        nr = n - nl
        ok = (nl >= stop.min_count) & (nr >= stop.min_count)
        if not ok.all():
            blocked_count = True
        if widths is not None:
            lo_m = box.lo[m]
            hi_m = box.hi[m]
            wide = ((cuts - lo_m) >= widths[m]) & ((hi_m - cuts) >= widths[m])
            if not wide.all():
                blocked_width = True
            ok &= wide
        if not ok.any():
            continue
        w = box.hi[m] - box.lo[m]
        v_left = volume * (cuts - box.lo[m]) / w
        v_right = volume * (box.hi[m] - cuts) / w
        gains = (
            r_parent
            + (nl / n_tot) ** 2 / v_left
            + (nr / n_tot) ** 2 / v_right
        )
        gains[~ok] = -np.inf
        i = int(np.argmax(gains))  # first max: smallest cut wins ties
        if gains[i] > 0 and (best is None or gains[i] > best[2]):
            best = (m, float(cuts[i]), float(gains[i]))
    if best is not None:
        return best, None
    if not had_candidates:
        return None, "no_candidates"
    if blocked_count and blocked_width:
        return None, "min_count+min_width"
    if blocked_count:
        return None, "min_count"
    if blocked_width:
        return None, "min_width"
    return None, "no_positive_gain"


def best_split(points, box: Box, stop: StopCondition, n_tot: int):
    """Optimal cut for one leaf, or None when no admissible cut gains.

    ``points`` holds the coordinates of the entries inside ``box``,
    shape (n, d).  Ties are broken toward the lowest dimension index,
    then the smallest cut value.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    split, _ = _scan_splits(X, box, stop, n_tot, stop.widths_array(box.ndim))
    return split


def grow(
    data: DataTable,
    stop: StopCondition,
    box: Optional[Box] = None,
    return_report: bool = False,
):
    """Grow a density tree over ``data``.

    The root box defaults to the padded data bounding box.  Growth is
    deterministic given data and configuration.  Sibling subtrees never
    share mutable state, so disjoint branches could be grown
    concurrently; this implementation is sequential.
    """
    if data.n_tot < 1:
        raise DataError("cannot grow a tree on an empty sample")
    if box is None:
        box = bounding_box(data)
    if box.ndim != data.ndim:
        raise ConfigError(
            f"box has {box.ndim} dimensions, data has {data.ndim}"
        )
    X = data.data
    if not ((X >= box.lo).all() and (X <= box.hi).all()):
        raise DataError("some entries lie outside the root box")
    widths = stop.widths_array(box.ndim)
    if widths is not None:
        too_wide = 2.0 * widths > (box.hi - box.lo)
        if too_wide.any():
            m = int(np.argmax(too_wide))
            raise ConfigError(
                f"min_widths[{m}]={widths[m]} exceeds half the root box "
                f"width {box.width(m)}; dimension {m} could never split"
            )
    n_tot = data.n_tot

    root = TreeNode(box, n_tot)
    report = GrowthReport()
    gains_by_node: dict[int, float] = {}
    reasons: dict[str, int] = {}

    # frontier: (-gain, insertion seq, node, entry indices, cut)
    heap: list = []
    seq = 0

    def push(node: TreeNode, idx: np.ndarray):
        nonlocal seq
        split, reason = _scan_splits(X[idx], node.box, stop, n_tot, widths)
        if split is None:
            reasons[reason] = reasons.get(reason, 0) + 1
            return
        heapq.heappush(heap, (-split[2], seq, node, idx, split))
        seq += 1

    push(root, np.arange(n_tot))
    n_leaves = 1
    while heap:
        if stop.max_leaves is not None and n_leaves >= stop.max_leaves:
            reasons["max_leaves"] = reasons.get("max_leaves", 0) + len(heap)
            break
        neg_gain, _, node, idx, (dim, cut, gain) = heapq.heappop(heap)
        left_box, right_box = node.box.split(dim, cut)
        mask = X[idx, dim] < cut
        left_idx = idx[mask]
        right_idx = idx[~mask]
        node.split_dim = dim
        node.split_value = cut
        node.left = TreeNode(left_box, left_idx.size)
        node.right = TreeNode(right_box, right_idx.size)
        gains_by_node[id(node)] = gain
        n_leaves += 1
        push(node.left, left_idx)
        push(node.right, right_idx)

    tree = DensityTree(
        root,
        data.columns,
        n_tot,
        meta={
            "min_count": stop.min_count,
            "min_widths": list(stop.min_widths) if stop.min_widths else None,
            "max_leaves": stop.max_leaves,
        },
    )
    if not return_report:
        return tree
    report.n_leaves = n_leaves
    report.stop_reasons = reasons
    report.gains = {
        node.node_id: gains_by_node[id(node)]
        for node in tree.nodes()
        if id(node) in gains_by_node
    }
    return tree, report
