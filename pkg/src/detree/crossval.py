"""Regularization selection by triangular-kernel quality, with LOO backup.

The fast path compares the pruned tree against a triangular-kernel
density estimate without ever evaluating the kernel estimate on a grid:
with a product triangular kernel, the integral of the kernel estimate
over a box has a closed form, so the quality

    Q(alpha) = (1/N^2) * sum_leaves (N_j / V_j) * (2*KM_j - N_j)

(dropping a constant independent of alpha) equals the negative squared
L2 distance between the tree and the kernel estimate up to that
constant.  KM_j, the expected kernel mass in leaf j, depends only on
the leaf box, so it is computed once per node of the unpruned tree and
reused for every candidate alpha.

Leave-one-out cross-validation retrains one tree per entry and is kept
as a small-sample reference; it is capped because it is O(N) tree
builds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .datatable import DataTable
from .errors import ConfigError, NumericError
from .growth import StopCondition, grow
from .pruning import Complexity, PruneProfile, _as_complexity, prune_sequence
from .tree import Box, DensityTree, bounding_box

LOO_DEFAULT_CAP = 500


@dataclass(frozen=True)
class Bandwidths:
    """Per-dimension triangular kernel widths, all positive."""

    h: np.ndarray

    def __init__(self, h):
        h = np.asarray(h, dtype=np.float64).reshape(-1).copy()
        if h.size < 1 or not np.isfinite(h).all() or (h <= 0).any():
            raise ConfigError(f"bandwidths must be positive and finite, got {h}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def ndim(self) -> int:
        return self.h.size


def silverman_bandwidths(data: DataTable, factor: float = 2.0) -> Bandwidths:
    """Rule-of-thumb widths h_k = factor * sigma_k * N^(-1/(d+4)).

    sigma_k is the sample standard deviation; degenerate dimensions fall
    back to a small absolute scale so the result is always valid.
    """
    if factor <= 0:
        raise ConfigError(f"bandwidth factor must be positive, got {factor}")
    X = data.data
    n, d = X.shape
    sigma = X.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    span = X.max(axis=0) - X.min(axis=0)
    fallback = np.where(span > 0, span / math.sqrt(12.0), 1e-3 * np.maximum(np.abs(X[0]), 1.0))
    sigma = np.where(sigma > 0, sigma, fallback)
    return Bandwidths(factor * sigma * n ** (-1.0 / (d + 4)))


def overlap_integral(lo: float, hi: float, x: float, h: float) -> float:
    """Integral over [lo, hi] of the triangle max(0, 1 - |z - x| / h).

    Closed form with u = min(hi, x + h), l = max(lo, x - h); zero when
    the kernel support misses the interval.  The result lies in
    [0, min(h, hi - lo)].
    """
    if h <= 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    if not lo < hi:
        raise ConfigError(f"empty interval [{lo}, {hi}]")
    u = min(hi, x + h)
    l = max(lo, x - h)
    if u <= l:
        return 0.0
    t_u = u - x
    t_l = l - x
    val = (u - l) - (t_u * abs(t_u) - t_l * abs(t_l)) / (2.0 * h)
    return max(val, 0.0)


def _overlap_block(lo, hi, x, h: float) -> np.ndarray:
    """Vectorized overlap_integral; inputs broadcast, h scalar."""
    u = np.minimum(hi, x + h)
    l = np.maximum(lo, x - h)
    t_u = u - x
    t_l = l - x
    out = (u - l) - (t_u * np.abs(t_u) - t_l * np.abs(t_l)) / (2.0 * h)
    np.clip(out, 0.0, None, out=out)
    out[u <= l] = 0.0
    return out


def _check_bandwidths(bw: Bandwidths, ndim: int) -> np.ndarray:
    if bw.ndim != ndim:
        raise ConfigError(
            f"{bw.ndim} bandwidths for a {ndim}-dimensional model"
        )
    return bw.h


def expected_kernel_count(leaf: Box, data: DataTable, bw: Bandwidths) -> float:
    """Expected kernel mass in a box: each entry deposits the product
    over dimensions of its normalized kernel overlap with the box."""
    h = _check_bandwidths(bw, leaf.ndim)
    if data.ndim != leaf.ndim:
        raise ConfigError(f"{data.ndim}-dimensional data for a {leaf.ndim}-d box")
    X = data.data
    prod = np.ones(X.shape[0])
    for k in range(leaf.ndim):
        prod *= _overlap_block(leaf.lo[k], leaf.hi[k], X[:, k], h[k]) / h[k]
    return float(prod.sum())


def node_kernel_masses(
    tree: DensityTree, data: DataTable, bw: Bandwidths, block: int = 32
) -> np.ndarray:
    """Expected kernel mass for every node of the tree, indexed by id.

    One vectorized pass per block of nodes over all entries: the cost is
    deliberately n_nodes x n_entries, the complexity class this
    cross-validation is designed around.  Parent masses equal the sum of
    their children's (kernel mass is additive over a partition).
    """
    h = _check_bandwidths(bw, tree.ndim)
    if data.ndim != tree.ndim:
        raise ConfigError(f"{data.ndim}-dimensional data for a {tree.ndim}-d model")
    nodes = tree.node_list()
    lo = np.array([n.box.lo for n in nodes])
    hi = np.array([n.box.hi for n in nodes])
    X = data.data
    n_nodes = len(nodes)
    out = np.empty(n_nodes)
    for start in range(0, n_nodes, block):
        stop = min(start + block, n_nodes)
        prod = None
        for k in range(tree.ndim):
            ov = _overlap_block(
                lo[start:stop, k : k + 1], hi[start:stop, k : k + 1], X[:, k], h[k]
            )
            ov /= h[k]
            prod = ov if prod is None else prod * ov
        out[start:stop] = prod.sum(axis=1)
    return out


@dataclass(frozen=True)
class QualityCurve:
    """Quality values over candidate regularization strengths.

    ``alphas`` holds zero plus every distinct profile threshold,
    ascending; ``q`` the quality at each.
    """

    alphas: np.ndarray
    q: np.ndarray

    @property
    def argmax(self) -> int:
        best = self.q.max()
        return int(np.flatnonzero(self.q == best).max())

    @property
    def best_alpha(self) -> float:
        return float(self.alphas[self.argmax])

    def __len__(self) -> int:
        return self.alphas.size


def _leaf_sum_curve(
    profile: PruneProfile, alphas: np.ndarray, contrib: Callable[[int], float]
) -> np.ndarray:
    """Sum of a per-node contribution over the leaves of the pruned tree,
    for each candidate alpha, in one incremental sweep.

    Profile steps collapse children before parents, so replacing the two
    child contributions by the collapsing node's keeps the running total
    equal to the current leaf sum.
    """
    tree = profile.tree
    nodes = tree.node_list()
    cur = {}
    total = 0.0
    for node in nodes:
        if node.is_leaf:
            val = contrib(node.node_id)
            cur[node.node_id] = val
            total += val
    alphas = np.asarray(alphas, dtype=np.float64)
    order = np.argsort(alphas, kind="stable")
    out = np.empty(alphas.size)
    step_i = 0
    steps = profile.steps
    for j in order:
        alpha = alphas[j]
        while step_i < len(steps) and steps[step_i].threshold <= alpha:
            node = nodes[steps[step_i].node_id]
            val = contrib(node.node_id)
            total += val - cur.pop(node.left.node_id) - cur.pop(node.right.node_id)
            cur[node.node_id] = val
            step_i += 1
        out[j] = total
    return out


def _candidate_alphas(profile: PruneProfile) -> np.ndarray:
    if len(profile) == 0:
        return np.array([0.0])
    return np.unique(np.concatenate([[0.0], profile.thresholds]))


def quality_kernel(
    tree: DensityTree,
    profile: PruneProfile,
    data: DataTable,
    bw: Bandwidths,
) -> QualityCurve:
    """Kernel-comparison quality at zero and every profile threshold."""
    if profile.tree is not tree:
        raise ConfigError("profile was built from a different tree")
    if data.n_tot != tree.n_tot:
        raise ConfigError(
            f"data has {data.n_tot} entries, the tree was trained on {tree.n_tot}"
        )
    masses = node_kernel_masses(tree, data, bw)
    nodes = tree.node_list()
    n_tot = tree.n_tot
    n_sq = float(n_tot) * n_tot

    def contrib(node_id: int) -> float:
        node = nodes[node_id]
        return (
            node.count / node.box.volume * (2.0 * masses[node_id] - node.count) / n_sq
        )

    alphas = _candidate_alphas(profile)
    return QualityCurve(alphas, _leaf_sum_curve(profile, alphas, contrib))


def integral_squared_curve(profile: PruneProfile, alphas: np.ndarray) -> np.ndarray:
    """Exact integral of the squared estimator per candidate alpha."""
    nodes = profile.tree.node_list()
    n_sq = float(profile.tree.n_tot) * profile.tree.n_tot

    def contrib(node_id: int) -> float:
        node = nodes[node_id]
        return node.count * node.count / (n_sq * node.box.volume)

    return _leaf_sum_curve(profile, alphas, contrib)


def select_alpha(curve: QualityCurve) -> float:
    """The alpha maximizing the quality; ties go to the larger alpha."""
    if len(curve) == 0:
        raise NumericError("cannot select alpha from an empty quality curve")
    return curve.best_alpha


# -- leave-one-out reference ---------------------------------------------


def _path_density_fn(tree: DensityTree, profile: PruneProfile, x: np.ndarray):
    """Density of x under the tree pruned at alpha, as a function of alpha.

    Returns (thresholds, densities): the effective leaf of x at alpha is
    the shallowest node on x's root-to-leaf path whose collapse
    threshold is attained; thresholds along the path are non-increasing.
    """
    eff = {s.node_id: s.threshold for s in profile.steps}
    node = tree.locate(x)
    if node is None:
        return np.array([math.inf]), np.array([0.0])
    path = []
    parents = tree.parent_ids()
    nodes = tree.node_list()
    nid = node.node_id
    chain = []
    while nid != -1:
        chain.append(nodes[nid])
        nid = parents[nid]
    chain.reverse()  # root .. leaf
    thresholds = []
    densities = []
    for n in chain[:-1]:
        thresholds.append(eff[n.node_id])
        densities.append(n.density(tree.n_tot))
    thresholds.append(0.0)  # the original leaf applies below every threshold
    densities.append(chain[-1].density(tree.n_tot))
    return np.array(thresholds), np.array(densities)


def _eval_path(thresholds: np.ndarray, densities: np.ndarray, alpha: float) -> float:
    for t, d in zip(thresholds, densities):
        if t <= alpha:
            return float(d)
    return float(densities[-1])


def _heldout_density_curve(
    data: DataTable,
    box: Box,
    stop: StopCondition,
    kind: Complexity,
    alphas: np.ndarray,
) -> np.ndarray:
    """Mean over entries of the leave-one-out density at the held-out
    entry, per candidate alpha.  One tree build per entry."""
    X = data.data
    n = data.n_tot
    acc = np.zeros(alphas.size)
    for i in range(n):
        rest = DataTable(np.delete(X, i, axis=0), data.columns)
        tree_i = grow(rest, stop, box=box)
        profile_i = prune_sequence(tree_i, kind)
        thresholds, densities = _path_density_fn(tree_i, profile_i, X[i])
        for j, alpha in enumerate(alphas):
            acc[j] += _eval_path(thresholds, densities, alpha)
    return acc / n


def loo_risk(
    data: DataTable,
    stop: StopCondition,
    kind,
    alpha: float,
    box: Optional[Box] = None,
    cap: int = LOO_DEFAULT_CAP,
) -> float:
    """Leave-one-out risk at one alpha: integral of the squared pruned
    estimator minus twice the mean held-out density.

    Every leave-one-out tree is grown inside the same root box as the
    full sample, so the estimators share a common support.  Refuses
    samples above ``cap`` entries; use ``quality_kernel`` there.
    """
    curve = loo_quality_curve(data, stop, kind, box=box, cap=cap, alphas=[alpha])
    return -float(curve.q[0])


def loo_quality_curve(
    data: DataTable,
    stop: StopCondition,
    kind,
    box: Optional[Box] = None,
    alphas: Optional[Sequence[float]] = None,
    cap: int = LOO_DEFAULT_CAP,
) -> QualityCurve:
    """Quality -R_loo over candidate alphas (full-tree thresholds + 0).

    Shares the N leave-one-out tree builds across every candidate.
    """
    kind = _as_complexity(kind)
    if data.n_tot > cap:
        raise ConfigError(
            f"leave-one-out cross-validation is capped at {cap} entries "
            f"(got {data.n_tot}); use the kernel quality instead"
        )
    if box is None:
        box = bounding_box(data)
    tree = grow(data, stop, box=box)
    profile = prune_sequence(tree, kind)
    if alphas is None:
        alphas = _candidate_alphas(profile)
    else:
        alphas = np.asarray(alphas, dtype=np.float64)
    int_f2 = integral_squared_curve(profile, alphas)
    heldout = _heldout_density_curve(data, box, stop, kind, alphas)
    risk = int_f2 - 2.0 * heldout
    return QualityCurve(np.asarray(alphas, dtype=np.float64), -risk)
